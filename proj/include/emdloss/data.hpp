#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "emdloss/matrix.hpp"

namespace emdloss {

struct Dataset {
    Mat features;             // N x d
    std::vector<int> labels;  // N entries in [0, num_classes)
    int num_classes = 0;
    std::string split_tag;    // "train" or "test"

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return features.cols(); }
    Vec feature_row(std::size_t i) const {
        return Vec(features.row(i), features.row(i) + features.cols());
    }
    void validate() const;
};

// Ordered-class Gaussian family: class i is centered at i * center_spacing
// along one fixed random direction, and labels flip to an adjacent class
// with probability neighbor_flip_prob (end classes flip inward). The flip
// noise is what separates EMD-aware losses from cross-entropy.
struct SyntheticOrdinalSpec {
    int num_classes = 5;
    int feature_dim = 8;
    int samples_per_class = 100;
    int test_samples_per_class = 0;  // 0: same as samples_per_class
    double center_spacing = 1.0;
    double noise_sigma = 0.5;
    double neighbor_flip_prob = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

std::pair<Dataset, Dataset> generate_ordinal(const SyntheticOrdinalSpec& spec);

// CSV rows are `feature_1,...,feature_d,label`.
struct CsvSchema {
    int num_classes = 0;
    bool has_header = false;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);
void save_csv(const std::string& path, const Dataset& dataset, bool write_header = false);

// Count-balancing discretization of real-valued scores into ordinal bins.
// Bin edges sit halfway between adjacent distinct values; a score equal to
// an edge goes to the lower bin.
struct Discretization {
    std::vector<int> labels;
    Vec bin_edges;    // B-1 thresholds
    Vec bin_centers;  // mean score per bin
};

Discretization discretize_scores(const Vec& scores, int num_bins);

// Bin index for a new score under an existing discretization.
int bin_for_score(double score, const Vec& bin_edges);

}  // namespace emdloss
