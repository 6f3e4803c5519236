#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emdloss/data.hpp"
#include "emdloss/metrics.hpp"
#include "emdloss/net.hpp"

namespace emdloss {

struct CsvDataSource {
    std::string train_path;
    std::string test_path;
    int num_classes = 0;
    bool has_header = false;
};

// A run is fully described by one JSON document. Every field has a default
// except the data source. `config-template` prints the whole schema.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "run_out";

    std::vector<int> hidden_sizes = {32};
    double weight_init_scale = 1.0;

    TrainConfig train;
    DSource d_source = DSource::learned;
    std::string external_d_path;

    std::optional<SyntheticOrdinalSpec> synthetic;
    std::optional<CsvDataSource> csv;

    void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);  // resolved, all defaults filled
std::string config_template_json();

// The raw "data" section, for cmd_compare's same-dataset check.
std::string data_section_fingerprint(const std::string& json_text);

std::pair<Dataset, Dataset> load_run_data(const RunConfig& cfg);

struct RunOutput {
    ModelState model;
    TrainHistory history;
    EvalReport final_report;
    std::string history_path;
    std::string checkpoint_path;
    std::string summary_path;
    std::string config_echo_path;
    std::string learned_d_path;  // empty when no learned matrix was produced
};

// Trains per config and, when `out_dir` is nonempty, writes history.csv,
// model.ckpt, summary.json, resolved_config.json, and d_learned.csv.
RunOutput run_training(const RunConfig& cfg, const std::string& out_dir);

EvalReport evaluate_model(const ModelState& model, const Dataset& data,
                          const Vec* bin_centers = nullptr);

}  // namespace emdloss
