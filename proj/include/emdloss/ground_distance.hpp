#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "emdloss/matrix.hpp"
#include "emdloss/types.hpp"

namespace emdloss {

// Per-class running sums of L1-normalized feature vectors. Features are
// stored during training forward passes; centroids are read out at epoch
// boundaries.
class CentroidAccumulator {
public:
    CentroidAccumulator() = default;
    CentroidAccumulator(int num_classes, int feature_dim);

    // L1-normalizes `features` and adds it to the class sum. Zero-norm
    // vectors are skipped and counted (dead activations early in training).
    void add(const Vec& features, int label);

    Vec centroid(int cls) const;  // throws insufficient_data_error on empty class

    int num_classes() const { return num_classes_; }
    int feature_dim() const { return feature_dim_; }
    std::int64_t count(int cls) const { return counts_.at(static_cast<std::size_t>(cls)); }
    std::int64_t skipped() const { return skipped_; }

    void reset();

private:
    int num_classes_ = 0;
    int feature_dim_ = 0;
    std::vector<Vec> sums_;
    std::vector<std::int64_t> counts_;
    std::int64_t skipped_ = 0;
};

// Pairwise l-norm distances between class centroids. Every class must have
// at least one accumulated instance.
Mat raw_distance_matrix(const CentroidAccumulator& acc, int norm_order = 2);

// Row-wise percentile ranks: B(i,j) = #{entries in row i strictly smaller
// than (i,j)} / C. Ties share the strictly-smaller count, so equal
// distances map to equal percentiles and the zero diagonal maps to 0.
Mat percentile_transform(const Mat& dbar);

// D = (B + B^T) / 2 with provenance `learned`. Requires a zero diagonal.
GroundMatrix symmetrize(const Mat& b);

// D(i,j) = |i - j|. Unnormalized; callers wanting entries in [0,1] divide
// by C-1 (see scaled()).
GroundMatrix ordinal_matrix(int num_classes);

GroundMatrix scaled(GroundMatrix d, double factor);

// Population standard deviation over the entries of the raw centroid
// distance matrix; the strength diagnostic for inter-class structure.
// The zero diagonal is part of the population unless excluded.
double sdd(const Mat& dbar, bool include_diagonal = true);

// Full pipeline from one pass of (features, label) pairs. Convenience for
// offline use (CLI gd-matrix, bindings).
struct GroundDistanceEstimate {
    Mat dbar;
    Mat b;
    GroundMatrix d;
    double sdd_value = 0.0;
    std::vector<int> patched_classes;  // classes carried over from the previous epoch
};

// Epoch-boundary driver used by training. Accumulates features during the
// epoch, recomputes D-bar/B/D at the boundary, and resets for the next
// epoch. Classes absent from an epoch fall back to the previous epoch's
// D-bar rows/columns (reported in patched_classes); absence in the first
// epoch is an error.
class GroundDistanceEstimator {
public:
    GroundDistanceEstimator(int num_classes, int norm_order = 2, bool sdd_include_diagonal = true);

    void add(const Vec& features, int label);
    GroundDistanceEstimate end_epoch();

    bool has_previous() const { return prev_dbar_.has_value(); }

private:
    int num_classes_;
    int norm_order_;
    bool sdd_include_diagonal_;
    std::optional<CentroidAccumulator> acc_;
    std::optional<Mat> prev_dbar_;
};

}  // namespace emdloss
