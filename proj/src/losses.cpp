#include "emdloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emdloss/errors.hpp"

namespace emdloss {
namespace {

void check_dims(const Vec& p, const Target& t, const char* who) {
    t.validate();
    if (p.size() != static_cast<std::size_t>(t.num_classes))
        throw invalid_input_error(std::string(who) + ": p has " + std::to_string(p.size()) +
                                  " entries, target expects " + std::to_string(t.num_classes));
    if (!all_finite(p)) throw invalid_input_error(std::string(who) + ": non-finite probability");
}

// log(sum exp(x_i)), tolerating -inf entries; returns -inf if all are.
double log_sum_exp(const Vec& x) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : x) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace

LossResult cross_entropy(const Vec& p, const Target& t, double eps) {
    check_dims(p, t, "cross_entropy");
    if (!(eps >= 0.0)) throw invalid_input_error("cross_entropy: eps must be >= 0");
    const std::size_t k = static_cast<std::size_t>(t.class_index);
    LossResult r;
    r.value = -std::log(p[k] + eps);
    r.grad.assign(p.size(), 0.0);
    r.grad[k] = -1.0 / (p[k] + eps);
    return r;
}

LogitLoss cross_entropy_from_logits(const Vec& logits, const Target& t, double eps) {
    check_dims(logits, t, "cross_entropy_from_logits");
    const std::size_t k = static_cast<std::size_t>(t.class_index);
    const double lse = log_sum_exp(logits);
    LogitLoss r;
    r.logit_grad.assign(logits.size(), 0.0);
    if (eps == 0.0) {
        r.value = lse - logits[k];
        for (std::size_t i = 0; i < logits.size(); ++i)
            r.logit_grad[i] = std::exp(logits[i] - lse);
        r.logit_grad[k] -= 1.0;
        return r;
    }
    // -log(softmax_k + eps) with the softmax Jacobian folded in
    const double pk = std::exp(logits[k] - lse);
    r.value = -std::log(pk + eps);
    const double coeff = -pk / (pk + eps);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double pi = std::exp(logits[i] - lse);
        r.logit_grad[i] = coeff * ((i == k ? 1.0 : 0.0) - pi);
    }
    return r;
}

ScalarLoss l2_regression(double y, const Target& t) {
    t.validate();
    if (!std::isfinite(y)) throw invalid_input_error("l2_regression: non-finite prediction");
    const double d = y - static_cast<double>(t.class_index);
    return ScalarLoss{d * d, 2.0 * d};
}

LossResult emd2_ordered(const Vec& p, const Target& t) {
    check_dims(p, t, "emd2_ordered");
    const std::size_t c = p.size();
    const std::size_t k = static_cast<std::size_t>(t.class_index);

    // cdf_diff[i] = CDF_i(p) - CDF_i(t); the target CDF is 1 from index k on
    Vec cdf_diff(c);
    double cum = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        cum += p[i];
        cdf_diff[i] = cum - (i >= k ? 1.0 : 0.0);
    }

    LossResult r;
    r.grad.assign(c, 0.0);
    double suffix = 0.0;
    for (std::size_t i = c; i-- > 0;) {
        r.value += cdf_diff[i] * cdf_diff[i];
        suffix += cdf_diff[i];
        r.grad[i] = 2.0 * suffix;
    }
    return r;
}

LossResult emd_single_label(const Vec& p, const Target& t, const GroundMatrix& D) {
    check_dims(p, t, "emd_single_label");
    if (D.entries.rows() != p.size())
        throw invalid_input_error("emd_single_label: D is " + std::to_string(D.entries.rows()) +
                                  "x" + std::to_string(D.entries.cols()) + ", p has " +
                                  std::to_string(p.size()) + " entries");
    const std::size_t k = static_cast<std::size_t>(t.class_index);
    LossResult r;
    r.grad.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        r.grad[i] = D.entries(i, k);
        r.value += p[i] * r.grad[i];
    }
    return r;
}

LossResult hybrid_loss(const Vec& p, const Target& t, const GroundMatrix& D,
                       const HybridParams& params) {
    params.validate();
    LossResult r = cross_entropy(p, t, params.log_epsilon);
    if (params.lambda == 0.0) return r;

    check_dims(p, t, "hybrid_loss");
    if (D.entries.rows() != p.size())
        throw invalid_input_error("hybrid_loss: D dimension mismatch");
    const std::size_t k = static_cast<std::size_t>(t.class_index);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double weight = std::pow(D.entries(i, k), params.omega) + params.mu;
        r.value += params.lambda * p[i] * p[i] * weight;
        r.grad[i] += 2.0 * params.lambda * p[i] * weight;
    }
    return r;
}

SinkhornResult sinkhorn_transport(const Vec& p, const Target& t, const GroundMatrix& D,
                                  double entropic_reg, int iters) {
    check_dims(p, t, "sinkhorn");
    const std::size_t c = p.size();
    if (D.entries.rows() != c || D.entries.cols() != c)
        throw invalid_input_error("sinkhorn: D dimension mismatch");
    if (!(entropic_reg > 0.0)) throw invalid_input_error("sinkhorn: entropic_reg must be > 0");
    if (iters < 1) throw invalid_input_error("sinkhorn: iters must be >= 1");
    for (double x : p)
        if (!(x > 0.0))
            throw invalid_input_error("sinkhorn: supply marginal must be strictly positive");

    // smooth the one-hot target so multiplicative scaling never divides by 0
    const std::size_t k = static_cast<std::size_t>(t.class_index);
    Vec b(c, kSinkhornTargetSmoothing / static_cast<double>(c));
    b[k] += 1.0 - kSinkhornTargetSmoothing;

    Vec log_a(c), log_b(c);
    for (std::size_t i = 0; i < c; ++i) {
        log_a[i] = std::log(p[i]);
        log_b[i] = std::log(b[i]);
    }

    const double reg = entropic_reg;
    Vec f(c, 0.0), g(c, 0.0), scratch(c);
    for (int it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < c; ++j)
                scratch[j] = (g[j] - D.entries(i, j)) / reg;
            f[i] = reg * (log_a[i] - log_sum_exp(scratch));
        }
        for (std::size_t j = 0; j < c; ++j) {
            for (std::size_t i = 0; i < c; ++i)
                scratch[i] = (f[i] - D.entries(i, j)) / reg;
            g[j] = reg * (log_b[j] - log_sum_exp(scratch));
        }
    }

    SinkhornResult r;
    r.plan = Mat(c, c);
    r.row_marginal.assign(c, 0.0);
    r.col_marginal.assign(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double pij = std::exp((f[i] + g[j] - D.entries(i, j)) / reg);
            if (std::isnan(pij)) throw numerical_error("sinkhorn: NaN in scaling");
            r.plan(i, j) = pij;
            r.value += D.entries(i, j) * pij;
            if (pij > 0.0) r.reg_objective += reg * pij * (std::log(pij) - 1.0);
            r.row_marginal[i] += pij;
            r.col_marginal[j] += pij;
        }
    }
    r.reg_objective += r.value;
    if (!std::isfinite(r.value)) throw numerical_error("sinkhorn: non-finite transport cost");

    double f_mean = vec_sum(f) / static_cast<double>(c);
    r.grad.assign(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) r.grad[i] = f[i] - f_mean;
    return r;
}

LossResult sinkhorn_emd(const Vec& p, const Target& t, const GroundMatrix& D,
                        double entropic_reg, int iters) {
    SinkhornResult s = sinkhorn_transport(p, t, D, entropic_reg, iters);
    return LossResult{s.value, std::move(s.grad)};
}

}  // namespace emdloss
