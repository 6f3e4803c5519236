#pragma once

#include <cmath>
#include <cstdlib>
#include <string>

#include "emdloss/errors.hpp"
#include "emdloss/matrix.hpp"

namespace emdloss {

// Probability vectors are plain Vec; this checks the simplex invariants
// (entries >= 0, sum 1 within 1e-9) where a caller needs them certified.
inline void validate_prob_dist(const Vec& p, const char* who = "prob dist") {
    if (p.empty()) throw invalid_input_error(std::string(who) + ": empty vector");
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0))
            throw invalid_input_error(std::string(who) + ": negative or NaN entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw invalid_input_error(std::string(who) + ": entries sum to " + std::to_string(sum));
}

// Single-label target: class k out of C, implied one-hot vector.
struct Target {
    int class_index = 0;
    int num_classes = 0;

    void validate() const {
        if (num_classes < 1 || class_index < 0 || class_index >= num_classes)
            throw invalid_input_error("target: class " + std::to_string(class_index) +
                                      " out of range [0, " + std::to_string(num_classes) + ")");
    }

    Vec one_hot() const {
        Vec t(static_cast<std::size_t>(num_classes), 0.0);
        t[static_cast<std::size_t>(class_index)] = 1.0;
        return t;
    }
};

// Loss value plus gradient with respect to the post-softmax probabilities.
struct LossResult {
    double value = 0.0;
    Vec grad;
};

// Scalar-output counterpart for the regression head.
struct ScalarLoss {
    double value = 0.0;
    double grad = 0.0;
};

// Hybrid-loss knobs: weight lambda, distance sensitivity omega, distance
// bias mu (negative mu rewards mass near the true class), and the epsilon
// added to probabilities before the logarithm.
struct HybridParams {
    double lambda = 0.0;
    double omega = 1.0;
    double mu = 0.0;
    double log_epsilon = 1e-6;

    void validate() const {
        if (!(lambda >= 0.0)) throw invalid_input_error("hybrid params: lambda must be >= 0");
        if (!(omega > 0.0)) throw invalid_input_error("hybrid params: omega must be > 0");
        if (!(log_epsilon > 0.0))
            throw invalid_input_error("hybrid params: log_epsilon must be > 0");
    }
};

// Pairwise class distances: symmetric, nonnegative, zero diagonal.
struct GroundMatrix {
    enum class Provenance { ordinal, learned, external };

    Mat entries;
    Provenance provenance = Provenance::external;

    std::size_t num_classes() const { return entries.rows(); }

    void validate() const {
        const std::size_t c = entries.rows();
        if (c < 2 || entries.cols() != c)
            throw invalid_input_error("ground matrix: must be square with C >= 2");
        for (std::size_t i = 0; i < c; ++i) {
            if (entries(i, i) != 0.0)
                throw invalid_input_error("ground matrix: nonzero diagonal at " + std::to_string(i));
            for (std::size_t j = 0; j < c; ++j) {
                const double v = entries(i, j);
                if (!(v >= 0.0) || !std::isfinite(v))
                    throw invalid_input_error("ground matrix: negative or non-finite entry");
                if (entries(i, j) != entries(j, i))
                    throw invalid_input_error("ground matrix: not symmetric");
                if (provenance == Provenance::learned && v > 1.0)
                    throw invalid_input_error("ground matrix: learned entry > 1");
            }
        }
    }
};

inline const char* provenance_name(GroundMatrix::Provenance p) {
    switch (p) {
        case GroundMatrix::Provenance::ordinal: return "ordinal";
        case GroundMatrix::Provenance::learned: return "learned";
        case GroundMatrix::Provenance::external: return "external";
    }
    return "external";
}

}  // namespace emdloss
