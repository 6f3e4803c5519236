#include "emdloss/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emdloss/errors.hpp"
#include "emdloss/ground_distance.hpp"
#include "emdloss/io.hpp"

namespace emdloss {

using nlohmann::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
    train.validate();
    if (hidden_sizes.size() > 8)
        throw invalid_input_error("config: at most 8 hidden layers supported");
    for (int h : hidden_sizes)
        if (h < 1) throw invalid_input_error("config: hidden sizes must be >= 1");
    if (!synthetic && !csv)
        throw invalid_input_error("config: a data source (data.synthetic or data.csv) is required");
    if (synthetic && csv)
        throw invalid_input_error("config: choose one of data.synthetic, data.csv");
    if (synthetic) synthetic->validate();
    if (csv) {
        if (csv->num_classes < 2)
            throw invalid_input_error("config: data.csv.num_classes must be >= 2");
        if (!fs::exists(csv->train_path))
            throw invalid_input_error("config: train csv not found: " + csv->train_path);
        if (!fs::exists(csv->test_path))
            throw invalid_input_error("config: test csv not found: " + csv->test_path);
    }
    if (d_source == DSource::external) {
        if (external_d_path.empty())
            throw invalid_input_error("config: d_source external requires external_d_path");
        if (!fs::exists(external_d_path))
            throw invalid_input_error("config: external D file not found: " + external_d_path);
    }
}

namespace {

DSource d_source_from_name(const std::string& s) {
    if (s == "ordinal") return DSource::ordinal;
    if (s == "learned") return DSource::learned;
    if (s == "external") return DSource::external;
    throw invalid_input_error("config: unknown d_source '" + s + "'");
}

const char* d_source_name(DSource d) {
    switch (d) {
        case DSource::ordinal: return "ordinal";
        case DSource::learned: return "learned";
        case DSource::external: return "external";
    }
    return "learned";
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& ex) {
        throw parse_error(std::string("config: ") + ex.what());
    }

    RunConfig cfg;
    try {
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.out_dir = j.value("out_dir", std::string("run_out"));

        if (j.contains("net")) {
            const json& n = j["net"];
            cfg.hidden_sizes = n.value("hidden_sizes", std::vector<int>{32});
            cfg.weight_init_scale = n.value("weight_init_scale", 1.0);
        }

        const json t = j.value("train", json::object());
        cfg.train.loss_kind = loss_kind_from_name(t.value("loss", std::string("XE")));
        cfg.train.learning_rate = t.value("learning_rate", 1e-2);
        cfg.train.momentum = t.value("momentum", 0.98);
        cfg.train.epochs = t.value("epochs", 10);
        cfg.train.batch_size = t.value("batch_size", 32);
        const std::string lm = t.value("lambda_mode", std::string("auto_ratio"));
        if (lm == "fixed")
            cfg.train.lambda_mode = LambdaMode::fixed;
        else if (lm == "auto_ratio")
            cfg.train.lambda_mode = LambdaMode::auto_ratio;
        else
            throw invalid_input_error("config: unknown lambda_mode '" + lm + "'");
        cfg.train.lambda = t.value("lambda", 0.0);
        cfg.train.auto_ratio_target = t.value("auto_ratio_target", 3.5);
        cfg.train.jump_start_epochs = t.value("jump_start_epochs", 4);
        cfg.train.hybrid = hybrid_preset(cfg.train.loss_kind);
        cfg.train.hybrid.omega = t.value("omega", cfg.train.hybrid.omega);
        cfg.train.hybrid.mu = t.value("mu", cfg.train.hybrid.mu);
        cfg.train.hybrid.log_epsilon = t.value("log_epsilon", 1e-6);
        cfg.train.weight_decay = t.value("weight_decay", 0.0);
        cfg.train.sinkhorn_reg = t.value("sinkhorn_reg", 0.1);
        cfg.train.sinkhorn_iters = t.value("sinkhorn_iters", 100);
        cfg.train.normalize_ordinal_d = t.value("normalize_ordinal_d", true);
        cfg.train.sdd_include_diagonal = t.value("sdd_include_diagonal", true);
        cfg.d_source = d_source_from_name(t.value("d_source", std::string("learned")));
        cfg.external_d_path = t.value("external_d_path", std::string());

        if (j.contains("data")) {
            const json& d = j["data"];
            if (d.contains("synthetic")) {
                const json& s = d["synthetic"];
                SyntheticOrdinalSpec spec;
                spec.num_classes = s.value("num_classes", 5);
                spec.feature_dim = s.value("feature_dim", 8);
                spec.samples_per_class = s.value("samples_per_class", 100);
                spec.test_samples_per_class = s.value("test_samples_per_class", 0);
                spec.center_spacing = s.value("center_spacing", 1.0);
                spec.noise_sigma = s.value("noise_sigma", 0.5);
                spec.neighbor_flip_prob = s.value("neighbor_flip_prob", 0.0);
                spec.seed = s.value("seed", std::uint64_t{7});
                cfg.synthetic = spec;
            }
            if (d.contains("csv")) {
                const json& c = d["csv"];
                CsvDataSource src;
                src.train_path = c.value("train_path", std::string());
                src.test_path = c.value("test_path", std::string());
                src.num_classes = c.value("num_classes", 0);
                src.has_header = c.value("has_header", false);
                cfg.csv = src;
            }
        }
    } catch (const json::exception& ex) {
        throw parse_error(std::string("config: ") + ex.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["net"] = {{"hidden_sizes", cfg.hidden_sizes},
                {"weight_init_scale", cfg.weight_init_scale}};
    json t;
    t["loss"] = loss_kind_name(cfg.train.loss_kind);
    t["learning_rate"] = cfg.train.learning_rate;
    t["momentum"] = cfg.train.momentum;
    t["epochs"] = cfg.train.epochs;
    t["batch_size"] = cfg.train.batch_size;
    t["lambda_mode"] = cfg.train.lambda_mode == LambdaMode::fixed ? "fixed" : "auto_ratio";
    t["lambda"] = cfg.train.lambda;
    t["auto_ratio_target"] = cfg.train.auto_ratio_target;
    t["jump_start_epochs"] = cfg.train.jump_start_epochs;
    t["omega"] = cfg.train.hybrid.omega;
    t["mu"] = cfg.train.hybrid.mu;
    t["log_epsilon"] = cfg.train.hybrid.log_epsilon;
    t["weight_decay"] = cfg.train.weight_decay;
    t["sinkhorn_reg"] = cfg.train.sinkhorn_reg;
    t["sinkhorn_iters"] = cfg.train.sinkhorn_iters;
    t["normalize_ordinal_d"] = cfg.train.normalize_ordinal_d;
    t["sdd_include_diagonal"] = cfg.train.sdd_include_diagonal;
    t["d_source"] = d_source_name(cfg.d_source);
    t["external_d_path"] = cfg.external_d_path;
    j["train"] = t;

    json d = json::object();
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        d["synthetic"] = {{"num_classes", s.num_classes},
                          {"feature_dim", s.feature_dim},
                          {"samples_per_class", s.samples_per_class},
                          {"test_samples_per_class", s.test_samples_per_class},
                          {"center_spacing", s.center_spacing},
                          {"noise_sigma", s.noise_sigma},
                          {"neighbor_flip_prob", s.neighbor_flip_prob},
                          {"seed", s.seed}};
    }
    if (cfg.csv) {
        d["csv"] = {{"train_path", cfg.csv->train_path},
                    {"test_path", cfg.csv->test_path},
                    {"num_classes", cfg.csv->num_classes},
                    {"has_header", cfg.csv->has_header}};
    }
    j["data"] = d;
    return j.dump(2);
}

std::string config_template_json() {
    RunConfig cfg;
    SyntheticOrdinalSpec spec;
    cfg.synthetic = spec;  // data source has no default: this is an example value
    return run_config_to_json(cfg);
}

std::string data_section_fingerprint(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& ex) {
        throw parse_error(std::string("config: ") + ex.what());
    }
    return j.value("data", json::object()).dump();
}

std::pair<Dataset, Dataset> load_run_data(const RunConfig& cfg) {
    if (cfg.synthetic) return generate_ordinal(*cfg.synthetic);
    CsvSchema schema{cfg.csv->num_classes, cfg.csv->has_header};
    Dataset train = load_csv(cfg.csv->train_path, schema);
    train.split_tag = "train";
    Dataset test = load_csv(cfg.csv->test_path, schema);
    test.split_tag = "test";
    return {std::move(train), std::move(test)};
}

EvalReport evaluate_model(const ModelState& model, const Dataset& data, const Vec* bin_centers) {
    std::vector<int> pred = predict(model, data);
    EvalReport report;
    auto [aem, aeo] = aem_aeo(pred, data.labels);
    report.aem = aem;
    report.aeo = aeo;
    report.per_class_confusion = confusion_matrix(pred, data.labels, data.num_classes);
    Vec centers;
    if (bin_centers) {
        centers = *bin_centers;
    } else {
        centers.resize(static_cast<std::size_t>(data.num_classes));
        for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = static_cast<double>(i);
    }
    try {
        Vec scores = predict_scores(model, data, centers);
        Vec truth(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            truth[i] = static_cast<double>(data.labels[i]);
        report.spearman_rho = spearman_rho(scores, truth);
    } catch (const std::exception&) {
        // constant predictions or labels: rank correlation undefined
        report.spearman_rho.reset();
    }
    return report;
}

RunOutput run_training(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    auto [train_data, test_data] = load_run_data(cfg);

    NetConfig net_cfg;
    net_cfg.seed = cfg.seed;
    net_cfg.weight_init_scale = cfg.weight_init_scale;
    net_cfg.head = cfg.train.loss_kind == LossKind::REG ? Head::linear : Head::softmax;
    net_cfg.layer_sizes.push_back(static_cast<int>(train_data.feature_dim()));
    for (int h : cfg.hidden_sizes) net_cfg.layer_sizes.push_back(h);
    net_cfg.layer_sizes.push_back(net_cfg.head == Head::linear ? 1 : train_data.num_classes);

    RunOutput out;
    out.model = init_model(net_cfg);

    GroundMatrix external_d;
    const GroundMatrix* external_ptr = nullptr;
    if (cfg.d_source == DSource::external) {
        external_d.entries = parse_matrix_csv(cfg.external_d_path);
        external_d.provenance = GroundMatrix::Provenance::external;
        external_d.validate();
        external_ptr = &external_d;
    }

    out.history = train(out.model, train_data, test_data, cfg.train, cfg.d_source, external_ptr,
                        cfg.seed);
    out.final_report = evaluate_model(out.model, test_data);
    if (!out.history.epochs.empty()) out.final_report.sdd = out.history.epochs.back().sdd;

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const fs::path dir(out_dir);

        out.history_path = (dir / "history.csv").string();
        write_history_csv(out.history_path, out.history.epochs);

        out.checkpoint_path = (dir / "model.ckpt").string();
        save_checkpoint(out.checkpoint_path, out.model);

        out.config_echo_path = (dir / "resolved_config.json").string();
        {
            std::ofstream echo(out.config_echo_path);
            echo << run_config_to_json(cfg) << '\n';
        }

        if (out.model.current_d &&
            out.model.current_d->provenance == GroundMatrix::Provenance::learned) {
            out.learned_d_path = (dir / "d_learned.csv").string();
            write_matrix_csv(out.learned_d_path, out.model.current_d->entries);
        }

        out.summary_path = (dir / "summary.json").string();
        json s;
        s["loss"] = loss_kind_name(cfg.train.loss_kind);
        s["seed"] = cfg.seed;
        s["epochs"] = cfg.train.epochs;
        const auto& last = out.history.epochs.back();
        s["final"] = {{"train_aem", last.train_aem},
                      {"test_aem", last.test_aem},
                      {"test_aeo", last.test_aeo},
                      {"sdd", last.sdd}};
        if (out.final_report.spearman_rho)
            s["final"]["spearman_rho"] = *out.final_report.spearman_rho;
        json lam;
        lam["mode"] = cfg.train.lambda_mode == LambdaMode::fixed ? "fixed" : "auto_ratio";
        lam["value"] = out.history.lambda_fix_epoch > 0 ? out.history.lambda_value
                                                        : cfg.train.lambda;
        lam["fix_epoch"] = out.history.lambda_fix_epoch;
        lam["mean_xe_at_fix"] = out.history.mean_xe_at_fix;
        lam["mean_reg_unit_at_fix"] = out.history.mean_reg_unit_at_fix;
        s["lambda"] = lam;
        s["warnings"] = out.history.warnings;
        std::ofstream summary(out.summary_path);
        summary << s.dump(2) << '\n';
    }
    return out;
}

}  // namespace emdloss
