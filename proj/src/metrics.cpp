#include "emdloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "emdloss/errors.hpp"

namespace emdloss {

std::pair<double, double> aem_aeo(const std::vector<int>& predicted,
                                  const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw invalid_input_error("aem_aeo: length mismatch");
    if (predicted.empty())
        throw insufficient_data_error("aem_aeo: undefined on empty input");
    std::size_t exact = 0, within_one = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int d = std::abs(predicted[i] - truth[i]);
        if (d == 0) ++exact;
        if (d <= 1) ++within_one;
    }
    const double n = static_cast<double>(truth.size());
    return {static_cast<double>(exact) / n, static_cast<double>(within_one) / n};
}

int predict_class(const Vec& p) {
    if (p.empty()) throw invalid_input_error("predict_class: empty distribution");
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return static_cast<int>(best);
}

double expected_score(const Vec& p, const Vec& bin_centers) {
    if (p.size() != bin_centers.size())
        throw invalid_input_error("expected_score: length mismatch");
    return dot(p, bin_centers);
}

namespace {

// average (fractional) ranks, ties shared
Vec average_ranks(const Vec& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vec ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw invalid_input_error("spearman_rho: length mismatch");
    if (x.empty()) throw insufficient_data_error("spearman_rho: undefined on empty input");
    const Vec rx = average_ranks(x);
    const Vec ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = vec_sum(rx) / n, my = vec_sum(ry) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mx, dy = ry[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw invalid_input_error("spearman_rho: undefined correlation for constant input");
    return sxy / std::sqrt(sxx * syy);
}

std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& predicted,
                                                const std::vector<int>& truth, int num_classes) {
    if (predicted.size() != truth.size())
        throw invalid_input_error("confusion_matrix: length mismatch");
    std::vector<std::vector<long>> m(static_cast<std::size_t>(num_classes),
                                     std::vector<long>(static_cast<std::size_t>(num_classes), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 ||
            predicted[i] >= num_classes)
            throw invalid_input_error("confusion_matrix: class index out of range");
        ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return m;
}

}  // namespace emdloss
