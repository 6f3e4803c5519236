#include "emdloss/ground_distance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emdloss/errors.hpp"

namespace emdloss {

CentroidAccumulator::CentroidAccumulator(int num_classes, int feature_dim)
    : num_classes_(num_classes), feature_dim_(feature_dim) {
    if (num_classes < 1 || feature_dim < 1)
        throw invalid_input_error("centroid accumulator: num_classes and feature_dim must be >= 1");
    sums_.assign(static_cast<std::size_t>(num_classes),
                 Vec(static_cast<std::size_t>(feature_dim), 0.0));
    counts_.assign(static_cast<std::size_t>(num_classes), 0);
}

void CentroidAccumulator::add(const Vec& features, int label) {
    if (features.size() != static_cast<std::size_t>(feature_dim_))
        throw invalid_input_error("centroid accumulator: feature vector has " +
                                  std::to_string(features.size()) + " entries, expected " +
                                  std::to_string(feature_dim_));
    if (label < 0 || label >= num_classes_)
        throw invalid_input_error("centroid accumulator: label out of range");
    double l1 = 0.0;
    for (double x : features) l1 += std::abs(x);
    if (l1 == 0.0) {
        ++skipped_;
        return;
    }
    Vec& sum = sums_[static_cast<std::size_t>(label)];
    for (std::size_t d = 0; d < features.size(); ++d) sum[d] += features[d] / l1;
    ++counts_[static_cast<std::size_t>(label)];
}

Vec CentroidAccumulator::centroid(int cls) const {
    const std::size_t c = static_cast<std::size_t>(cls);
    if (cls < 0 || cls >= num_classes_)
        throw invalid_input_error("centroid accumulator: class out of range");
    if (counts_[c] == 0)
        throw insufficient_data_error("no feature instances for class " + std::to_string(cls));
    Vec out = sums_[c];
    for (double& x : out) x /= static_cast<double>(counts_[c]);
    return out;
}

void CentroidAccumulator::reset() {
    for (auto& s : sums_) std::fill(s.begin(), s.end(), 0.0);
    std::fill(counts_.begin(), counts_.end(), 0);
    skipped_ = 0;
}

namespace {

double lnorm_distance(const Vec& a, const Vec& b, int order) {
    double acc = 0.0;
    if (order == 1) {
        for (std::size_t d = 0; d < a.size(); ++d) acc += std::abs(a[d] - b[d]);
        return acc;
    }
    if (order == 2) {
        for (std::size_t d = 0; d < a.size(); ++d) {
            const double diff = a[d] - b[d];
            acc += diff * diff;
        }
        return std::sqrt(acc);
    }
    for (std::size_t d = 0; d < a.size(); ++d)
        acc += std::pow(std::abs(a[d] - b[d]), static_cast<double>(order));
    return std::pow(acc, 1.0 / static_cast<double>(order));
}

}  // namespace

Mat raw_distance_matrix(const CentroidAccumulator& acc, int norm_order) {
    if (norm_order < 1) throw invalid_input_error("raw_distance_matrix: norm order must be >= 1");
    const int c = acc.num_classes();
    std::vector<Vec> centroids;
    centroids.reserve(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i) centroids.push_back(acc.centroid(i));

    Mat dbar(static_cast<std::size_t>(c), static_cast<std::size_t>(c), 0.0);
    for (int i = 0; i < c; ++i)
        for (int j = i + 1; j < c; ++j) {
            const double d = lnorm_distance(centroids[static_cast<std::size_t>(i)],
                                            centroids[static_cast<std::size_t>(j)], norm_order);
            dbar(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = d;
            dbar(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = d;
        }
    return dbar;
}

Mat percentile_transform(const Mat& dbar) {
    const std::size_t c = dbar.rows();
    if (c == 0 || dbar.cols() != c)
        throw invalid_input_error("percentile_transform: matrix must be square");
    Mat b(c, c, 0.0);
    Vec sorted(c);
    for (std::size_t i = 0; i < c; ++i) {
        std::copy(dbar.row(i), dbar.row(i) + c, sorted.begin());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t j = 0; j < c; ++j) {
            const auto smaller = std::lower_bound(sorted.begin(), sorted.end(), dbar(i, j)) -
                                 sorted.begin();
            b(i, j) = static_cast<double>(smaller) / static_cast<double>(c);
        }
    }
    return b;
}

GroundMatrix symmetrize(const Mat& b) {
    const std::size_t c = b.rows();
    if (c == 0 || b.cols() != c) throw invalid_input_error("symmetrize: matrix must be square");
    for (std::size_t i = 0; i < c; ++i)
        if (b(i, i) != 0.0)
            throw invalid_input_error("symmetrize: diagonal must be zero at " + std::to_string(i));
    GroundMatrix d;
    d.provenance = GroundMatrix::Provenance::learned;
    d.entries = Mat(c, c, 0.0);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) d.entries(i, j) = 0.5 * (b(i, j) + b(j, i));
    d.validate();
    return d;
}

GroundMatrix ordinal_matrix(int num_classes) {
    if (num_classes < 2) throw invalid_input_error("ordinal_matrix: need at least 2 classes");
    GroundMatrix d;
    d.provenance = GroundMatrix::Provenance::ordinal;
    const std::size_t c = static_cast<std::size_t>(num_classes);
    d.entries = Mat(c, c, 0.0);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j)
            d.entries(i, j) = std::abs(static_cast<double>(i) - static_cast<double>(j));
    return d;
}

GroundMatrix scaled(GroundMatrix d, double factor) {
    if (!(factor > 0.0)) throw invalid_input_error("scaled: factor must be > 0");
    for (double& x : d.entries.data()) x *= factor;
    return d;
}

double sdd(const Mat& dbar, bool include_diagonal) {
    const std::size_t c = dbar.rows();
    if (c == 0 || dbar.cols() != c) throw invalid_input_error("sdd: matrix must be square");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            if (!include_diagonal && i == j) continue;
            sum += dbar(i, j);
            ++n;
        }
    if (n == 0) return 0.0;
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            if (!include_diagonal && i == j) continue;
            const double d = dbar(i, j) - mean;
            sq += d * d;
        }
    return std::sqrt(sq / static_cast<double>(n));
}

GroundDistanceEstimator::GroundDistanceEstimator(int num_classes, int norm_order,
                                                 bool sdd_include_diagonal)
    : num_classes_(num_classes),
      norm_order_(norm_order),
      sdd_include_diagonal_(sdd_include_diagonal) {
    if (num_classes < 2)
        throw invalid_input_error("ground distance estimator: need at least 2 classes");
}

void GroundDistanceEstimator::add(const Vec& features, int label) {
    if (!acc_)
        acc_.emplace(num_classes_, static_cast<int>(features.size()));
    acc_->add(features, label);
}

GroundDistanceEstimate GroundDistanceEstimator::end_epoch() {
    if (!acc_) throw insufficient_data_error("ground distance estimator: no features accumulated");

    std::vector<int> missing;
    for (int i = 0; i < num_classes_; ++i)
        if (acc_->count(i) == 0) missing.push_back(i);

    if (!missing.empty() && !prev_dbar_)
        throw insufficient_data_error("no feature instances for class " +
                                      std::to_string(missing.front()) + " in the first epoch");

    GroundDistanceEstimate est;
    const std::size_t c = static_cast<std::size_t>(num_classes_);
    if (missing.empty()) {
        est.dbar = raw_distance_matrix(*acc_, norm_order_);
    } else {
        // patch the absent classes' rows/columns from the previous epoch
        std::vector<Vec> centroids(c);
        std::vector<char> have(c, 1);
        for (int i = 0; i < num_classes_; ++i) {
            if (acc_->count(i) > 0)
                centroids[static_cast<std::size_t>(i)] = acc_->centroid(i);
            else
                have[static_cast<std::size_t>(i)] = 0;
        }
        est.dbar = Mat(c, c, 0.0);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = i + 1; j < c; ++j) {
                const double d = (have[i] && have[j])
                                     ? lnorm_distance(centroids[i], centroids[j], norm_order_)
                                     : (*prev_dbar_)(i, j);
                est.dbar(i, j) = d;
                est.dbar(j, i) = d;
            }
        est.patched_classes = missing;
    }

    est.b = percentile_transform(est.dbar);
    est.d = symmetrize(est.b);
    est.sdd_value = sdd(est.dbar, sdd_include_diagonal_);
    prev_dbar_ = est.dbar;
    acc_->reset();
    return est;
}

}  // namespace emdloss
