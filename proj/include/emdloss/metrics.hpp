#pragma once

#include <optional>
#include <vector>

#include "emdloss/matrix.hpp"

namespace emdloss {

struct EvalReport {
    double aem = 0.0;  // exact-match accuracy
    double aeo = 0.0;  // within-one-category accuracy
    std::optional<double> spearman_rho;
    std::optional<double> sdd;
    std::vector<std::vector<long>> per_class_confusion;  // [truth][prediction]
};

// (exact match, within-one match); classes are a line, no wraparound.
std::pair<double, double> aem_aeo(const std::vector<int>& predicted,
                                  const std::vector<int>& truth);

// argmax with ties broken toward the smaller index
int predict_class(const Vec& p);

double expected_score(const Vec& p, const Vec& bin_centers);

// Pearson correlation of rank vectors; ties get average ranks. Throws on
// constant input (correlation undefined).
double spearman_rho(const Vec& x, const Vec& y);

std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& predicted,
                                                const std::vector<int>& truth, int num_classes);

}  // namespace emdloss
