#include "emdloss/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emdloss/errors.hpp"
#include "emdloss/rng.hpp"

namespace emdloss {

void Dataset::validate() const {
    if (labels.empty()) throw invalid_input_error("dataset: empty");
    if (features.rows() != labels.size())
        throw invalid_input_error("dataset: feature/label count mismatch");
    if (num_classes < 1) throw invalid_input_error("dataset: num_classes must be >= 1");
    for (int l : labels)
        if (l < 0 || l >= num_classes)
            throw invalid_input_error("dataset: label " + std::to_string(l) + " out of range");
    if (!all_finite(features)) throw invalid_input_error("dataset: NaN in features");
}

void SyntheticOrdinalSpec::validate() const {
    if (num_classes < 2) throw invalid_input_error("synthetic spec: num_classes must be >= 2");
    if (feature_dim < 1) throw invalid_input_error("synthetic spec: feature_dim must be >= 1");
    if (samples_per_class < 1)
        throw invalid_input_error("synthetic spec: samples_per_class must be >= 1");
    if (test_samples_per_class < 0)
        throw invalid_input_error("synthetic spec: test_samples_per_class must be >= 0");
    if (!(neighbor_flip_prob >= 0.0 && neighbor_flip_prob < 0.5))
        throw invalid_input_error("synthetic spec: neighbor_flip_prob must be in [0, 0.5)");
    if (!(center_spacing > 0.0) || !(noise_sigma >= 0.0))
        throw invalid_input_error("synthetic spec: bad spacing or sigma");
}

namespace {

Dataset draw_split(const SyntheticOrdinalSpec& spec, const Vec& direction, int per_class,
                   Rng& rng, const char* tag) {
    const std::size_t n = static_cast<std::size_t>(spec.num_classes) *
                          static_cast<std::size_t>(per_class);
    const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.split_tag = tag;
    ds.features = Mat(n, d);
    ds.labels.resize(n);

    std::size_t row = 0;
    for (int cls = 0; cls < spec.num_classes; ++cls) {
        const double center = static_cast<double>(cls) * spec.center_spacing;
        for (int s = 0; s < per_class; ++s, ++row) {
            for (std::size_t k = 0; k < d; ++k)
                ds.features(row, k) = center * direction[k] + spec.noise_sigma * rng.normal();
            int label = cls;
            if (rng.uniform01() < spec.neighbor_flip_prob) {
                // adjacent class, uniform over valid neighbors (ends flip inward)
                if (cls == 0)
                    label = 1;
                else if (cls == spec.num_classes - 1)
                    label = cls - 1;
                else
                    label = cls + (rng.uniform01() < 0.5 ? -1 : 1);
            }
            ds.labels[row] = label;
        }
    }
    return ds;
}

}  // namespace

std::pair<Dataset, Dataset> generate_ordinal(const SyntheticOrdinalSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    Vec direction(static_cast<std::size_t>(spec.feature_dim));
    double norm = 0.0;
    for (double& x : direction) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) direction[0] = norm = 1.0;
    for (double& x : direction) x /= norm;

    const int test_per_class =
        spec.test_samples_per_class > 0 ? spec.test_samples_per_class : spec.samples_per_class;
    Dataset train = draw_split(spec, direction, spec.samples_per_class, rng, "train");
    Dataset test = draw_split(spec, direction, test_per_class, rng, "test");
    return {std::move(train), std::move(test)};
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.num_classes < 1)
        throw invalid_input_error("csv schema: num_classes must be >= 1");
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open dataset file: " + path);

    Dataset ds;
    ds.num_classes = schema.num_classes;
    ds.split_tag = "train";
    std::vector<Vec> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && schema.has_header) continue;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 2)
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected features,label");
        if (width == 0)
            width = fields.size();
        else if (fields.size() != width)
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(width) + " fields, got " +
                              std::to_string(fields.size()));

        Vec row(width - 1);
        for (std::size_t i = 0; i + 1 < width; ++i) {
            try {
                std::size_t pos = 0;
                row[i] = std::stod(fields[i], &pos);
                if (pos != fields[i].size()) throw std::invalid_argument("trailing junk");
            } catch (const std::exception&) {
                throw parse_error(path + ":" + std::to_string(line_no) + ": bad feature value '" +
                                  fields[i] + "'");
            }
            if (!std::isfinite(row[i]))
                throw parse_error(path + ":" + std::to_string(line_no) + ": non-finite feature");
        }
        int label = 0;
        try {
            std::size_t pos = 0;
            label = std::stoi(fields[width - 1], &pos);
            if (pos != fields[width - 1].size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": bad label '" +
                              fields[width - 1] + "'");
        }
        if (label < 0 || label >= schema.num_classes)
            throw invalid_input_error(path + ":" + std::to_string(line_no) + ": label " +
                                      std::to_string(label) + " outside [0, " +
                                      std::to_string(schema.num_classes) + ")");
        rows.push_back(std::move(row));
        ds.labels.push_back(label);
    }
    if (rows.empty()) throw invalid_input_error("dataset file has no data rows: " + path);

    ds.features = Mat(rows.size(), width - 1);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), ds.features.row(i));
    ds.validate();
    return ds;
}

void save_csv(const std::string& path, const Dataset& dataset, bool write_header) {
    dataset.validate();
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot write dataset file: " + path);
    const std::size_t d = dataset.feature_dim();
    if (write_header) {
        for (std::size_t k = 0; k < d; ++k) out << "f" << k << ",";
        out << "label\n";
    }
    char buf[40];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", dataset.features(i, k));
            out << buf << ',';
        }
        out << dataset.labels[i] << '\n';
    }
}

Discretization discretize_scores(const Vec& scores, int num_bins) {
    if (num_bins < 2) throw invalid_input_error("discretize: need at least 2 bins");
    if (scores.empty()) throw invalid_input_error("discretize: empty score list");
    for (double s : scores)
        if (!std::isfinite(s)) throw invalid_input_error("discretize: non-finite score");

    Vec sorted = scores;
    std::sort(sorted.begin(), sorted.end());

    // distinct-value groups; a tie group can never be split across bins
    Vec group_value;
    std::vector<std::size_t> group_count;
    for (double s : sorted) {
        if (group_value.empty() || s != group_value.back()) {
            group_value.push_back(s);
            group_count.push_back(1);
        } else {
            ++group_count.back();
        }
    }
    const std::size_t g = group_value.size();
    if (g < static_cast<std::size_t>(num_bins))
        throw insufficient_data_error("discretize: only " + std::to_string(g) +
                                      " distinct scores for " + std::to_string(num_bins) +
                                      " bins");

    // cumulative counts at each group boundary
    std::vector<std::size_t> cum(g);
    std::size_t running = 0;
    for (std::size_t i = 0; i < g; ++i) {
        running += group_count[i];
        cum[i] = running;
    }
    const double n = static_cast<double>(sorted.size());
    const std::size_t b = static_cast<std::size_t>(num_bins);

    // pick the group boundary whose cumulative count is closest to the
    // balanced quantile, keeping enough groups for the remaining bins
    std::vector<std::size_t> cut_group(b - 1);  // bin k ends after group cut_group[k]
    std::size_t prev = 0;  // first group index available to the current bin
    for (std::size_t k = 0; k + 1 < b; ++k) {
        const double target = n * static_cast<double>(k + 1) / static_cast<double>(b);
        std::size_t best = prev;
        double best_err = std::abs(static_cast<double>(cum[prev]) - target);
        const std::size_t last_allowed = g - (b - k - 1) - 1;  // leave one group per later bin
        for (std::size_t i = prev; i <= last_allowed; ++i) {
            const double err = std::abs(static_cast<double>(cum[i]) - target);
            if (err < best_err) {
                best = i;
                best_err = err;
            }
        }
        cut_group[k] = best;
        prev = best + 1;
    }

    Discretization out;
    out.bin_edges.resize(b - 1);
    for (std::size_t k = 0; k + 1 < b; ++k)
        out.bin_edges[k] = 0.5 * (group_value[cut_group[k]] + group_value[cut_group[k] + 1]);

    out.labels.resize(scores.size());
    Vec bin_sum(b, 0.0);
    std::vector<std::size_t> bin_n(b, 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int lbl = bin_for_score(scores[i], out.bin_edges);
        out.labels[i] = lbl;
        bin_sum[static_cast<std::size_t>(lbl)] += scores[i];
        ++bin_n[static_cast<std::size_t>(lbl)];
    }
    out.bin_centers.resize(b);
    for (std::size_t k = 0; k < b; ++k)
        out.bin_centers[k] = bin_sum[k] / static_cast<double>(bin_n[k]);
    return out;
}

int bin_for_score(double score, const Vec& bin_edges) {
    int lbl = 0;
    for (double e : bin_edges)
        if (e < score) ++lbl;
    return lbl;
}

}  // namespace emdloss
