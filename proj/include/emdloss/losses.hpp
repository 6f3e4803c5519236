#pragma once

#include "emdloss/matrix.hpp"
#include "emdloss/types.hpp"

namespace emdloss {

// All loss functions are pure and differentiate with respect to the
// post-softmax probabilities p; the net module composes the result with the
// softmax Jacobian. Gradients are exact, not numerical.

// value = -log(p[k] + eps); grad is zero except at the true class.
LossResult cross_entropy(const Vec& p, const Target& t, double eps);

// Numerically stable fused path straight from logits via log-sum-exp.
// Returns the loss and the gradient with respect to the logits. Agrees with
// cross_entropy composed through softmax; exists so training code can avoid
// log(softmax(...)) cancellation.
struct LogitLoss {
    double value = 0.0;
    Vec logit_grad;
};
LogitLoss cross_entropy_from_logits(const Vec& logits, const Target& t, double eps = 0.0);

// Squared error of a scalar regression head against the class index.
ScalarLoss l2_regression(double y, const Target& t);

// Squared EMD over ordered classes in closed form:
//   value  = sum_i (CDF_i(p) - CDF_i(t))^2
//   grad_n = 2 * sum_{m>=n} (CDF_m(p) - CDF_m(t))
LossResult emd2_ordered(const Vec& p, const Target& t);

// Exact EMD to a one-hot target: all mass goes to column k, so
// value = sum_i p_i * D(i,k) and grad_i = D(i,k). O(C).
LossResult emd_single_label(const Vec& p, const Target& t, const GroundMatrix& D);

// Cross-entropy plus the EMD^2-style regularizer with p^2 mass:
//   value = XE + lambda * sum_i p_i^2 * (D(i,k)^omega + mu)
// D is a constant: no gradient flows into it. lambda == 0 returns the
// cross-entropy result unchanged.
LossResult hybrid_loss(const Vec& p, const Target& t, const GroundMatrix& D,
                       const HybridParams& params);

// Entropically regularized transport loss (matrix-scaling baseline).
struct SinkhornResult {
    double value = 0.0;          // transport cost <D, plan>
    double reg_objective = 0.0;  // cost + reg * sum plan*(log plan - 1)
    Vec grad;                    // left dual potential, centered to sum 0
    Mat plan;
    Vec row_marginal;
    Vec col_marginal;
};

// One-hot targets are smoothed toward uniform (weight 1e-3) so both
// marginals stay strictly positive under multiplicative scaling. Runs a
// fixed number of alternating log-domain scaling rounds; non-convergence is
// not an error, NaN is.
SinkhornResult sinkhorn_transport(const Vec& p, const Target& t, const GroundMatrix& D,
                                  double entropic_reg, int iters);

LossResult sinkhorn_emd(const Vec& p, const Target& t, const GroundMatrix& D,
                        double entropic_reg, int iters);

inline constexpr double kSinkhornTargetSmoothing = 1e-3;

}  // namespace emdloss
