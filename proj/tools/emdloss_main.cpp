#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emdloss/data.hpp"
#include "emdloss/errors.hpp"
#include "emdloss/ground_distance.hpp"
#include "emdloss/io.hpp"
#include "emdloss/losses.hpp"
#include "emdloss/metrics.hpp"
#include "emdloss/net.hpp"
#include "emdloss/ot_oracle.hpp"
#include "emdloss/random_instances.hpp"
#include "emdloss/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emdloss;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

struct TrainOptions {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
};

RunConfig load_with_overrides(const TrainOptions& opt) {
    RunConfig cfg = load_run_config(opt.config_path);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
    return cfg;
}

int cmd_train(const TrainOptions& opt) {
    RunConfig cfg = load_with_overrides(opt);
    RunOutput out = run_training(cfg, cfg.out_dir);
    const auto& last = out.history.epochs.back();
    std::printf("trained %s for %d epochs: train AEM %.4f, test AEM %.4f, test AEO %.4f\n",
                loss_kind_name(cfg.train.loss_kind), cfg.train.epochs, last.train_aem,
                last.test_aem, last.test_aeo);
    std::printf("history: %s\n", out.history_path.c_str());
    std::printf("checkpoint: %s\n", out.checkpoint_path.c_str());
    if (!out.learned_d_path.empty()) std::printf("learned D: %s\n", out.learned_d_path.c_str());
    for (const auto& w : out.history.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return kExitOk;
}

struct EvalDataOptions {
    std::string data_path;
    int num_classes = 0;
    bool has_header = false;
    std::string config_path;
    std::string split = "test";
};

Dataset load_eval_data(const EvalDataOptions& opt, const ModelState& model) {
    if (!opt.data_path.empty()) {
        int c = opt.num_classes;
        if (c == 0) {
            if (model.config.head != Head::softmax)
                throw invalid_input_error("--num-classes is required with a linear-head checkpoint");
            c = model.config.output_size();
        }
        return load_csv(opt.data_path, CsvSchema{c, opt.has_header});
    }
    if (!opt.config_path.empty()) {
        RunConfig cfg = load_run_config(opt.config_path);
        cfg.validate();
        auto [train_data, test_data] = load_run_data(cfg);
        return opt.split == "train" ? train_data : test_data;
    }
    throw invalid_input_error("eval: provide --data CSV or --config RUNCFG");
}

void check_class_count(const ModelState& model, const Dataset& data) {
    if (model.config.head == Head::softmax && model.config.output_size() != data.num_classes)
        throw invalid_input_error("checkpoint expects " +
                                  std::to_string(model.config.output_size()) +
                                  " classes, dataset has " + std::to_string(data.num_classes));
}

int cmd_eval(const std::string& checkpoint, const EvalDataOptions& data_opt,
             const std::string& out_dir, const std::string& bins_path) {
    ModelState model = load_checkpoint(checkpoint);
    Dataset data = load_eval_data(data_opt, model);
    check_class_count(model, data);

    Vec centers;
    const Vec* centers_ptr = nullptr;
    if (!bins_path.empty()) {
        auto [edges, parsed_centers] = parse_bins_json(bins_path);
        (void)edges;
        centers = parsed_centers;
        centers_ptr = &centers;
    }
    EvalReport report = evaluate_model(model, data, centers_ptr);

    std::printf("AEM  %.4f\nAEO  %.4f\n", report.aem, report.aeo);
    if (report.spearman_rho) std::printf("rho  %.4f\n", *report.spearman_rho);
    std::printf("confusion (rows: truth, cols: prediction):\n");
    for (const auto& row : report.per_class_confusion) {
        for (long v : row) std::printf("%6ld", v);
        std::printf("\n");
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const std::string path = (fs::path(out_dir) / "eval.jsonl").string();
        append_eval_report(path, report);
        std::printf("report appended to %s\n", path.c_str());
    }
    return kExitOk;
}

int cmd_gd_matrix(const std::string& checkpoint, const EvalDataOptions& data_opt,
                  const std::string& out_dir) {
    ModelState model = load_checkpoint(checkpoint);
    if (model.config.head != Head::softmax)
        throw invalid_input_error("gd-matrix requires a softmax-head checkpoint");
    Dataset data = load_eval_data(data_opt, model);
    check_class_count(model, data);

    CentroidAccumulator acc(data.num_classes, model.config.feature_size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        ForwardResult fwd = forward(model, data.feature_row(i));
        acc.add(fwd.features, data.labels[i]);
    }
    Mat dbar = raw_distance_matrix(acc);
    Mat b = percentile_transform(dbar);
    GroundMatrix d = symmetrize(b);
    const double sdd_value = sdd(dbar);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_matrix_csv((dir / "dbar.csv").string(), dbar);
    write_matrix_csv((dir / "b_percentile.csv").string(), b);
    write_matrix_csv((dir / "d_learned.csv").string(), d.entries);
    {
        std::ofstream out(dir / "sdd.csv");
        out << "sdd\n" << format_double(sdd_value) << "\n";
    }
    std::printf("SDD = %.4g\n", sdd_value);
    std::printf("matrices written to %s\n", out_dir.c_str());
    return kExitOk;
}

// ---- oracle-check -------------------------------------------------------

struct IdentityStat {
    std::string name;
    std::string tol_text;
    long trials = 0;
    double max_err = 0.0;
    bool passed = true;
    std::string failure_dump;
};

json instance_json(const Vec& p, const Vec& t, const Mat& d) {
    json j;
    j["p"] = p;
    j["t"] = t;
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < d.rows(); ++i)
        rows.emplace_back(d.row(i), d.row(i) + d.cols());
    j["D"] = rows;
    return j;
}

void record(IdentityStat& stat, double err, double tol, const Vec& p, const Vec& t, const Mat& d) {
    ++stat.trials;
    stat.max_err = std::max(stat.max_err, err);
    if (err > tol && stat.passed) {
        stat.passed = false;
        json dump = instance_json(p, t, d);
        dump["error"] = err;
        dump["tolerance"] = tol;
        stat.failure_dump = dump.dump();
    }
}

int cmd_oracle_check(int c_min, int c_max, long trials, std::uint64_t seed, bool inject_failure) {
    if (c_min < 2 || c_max < c_min)
        throw invalid_input_error("oracle-check: need 2 <= c-min <= c-max");
    if (trials < 0) throw invalid_input_error("oracle-check: trials must be >= 0");

    if (trials == 0)
        std::fprintf(stderr, "warning: trials=0, all identities pass vacuously\n");

    Rng rng(seed);
    IdentityStat ordinal{"ordinal-cost-vs-cdf-l1", "1e-9"};
    IdentityStat single{"single-label-linear-form", "1e-9"};
    IdentityStat displacement{"one-hot-displacement", "1e-9"};
    IdentityStat sinkhorn{"sinkhorn-vs-oracle", "2% rel"};

    for (int c = c_min; c <= c_max; ++c) {
        const std::size_t cs = static_cast<std::size_t>(c);
        GroundMatrix ordinal_d = ordinal_matrix(c);
        for (long trial = 0; trial < trials; ++trial) {
            // exact oracle vs the 1-D closed form, cost |i-j|
            {
                Vec p = random_simplex(rng, cs);
                Vec t = random_simplex(rng, cs);
                double closed = 0.0, cp = 0.0, ct = 0.0;
                for (std::size_t i = 0; i < cs; ++i) {
                    cp += p[i];
                    ct += t[i];
                    closed += std::abs(cp - ct);
                }
                if (inject_failure) closed += 1e-3;
                const double exact = emd_exact(p, t, ordinal_d.entries);
                record(ordinal, std::abs(exact - closed), 1e-9, p, t, ordinal_d.entries);
            }
            // one-hot target: transport cost collapses to a dot product
            {
                Vec p = random_simplex(rng, cs);
                Target t{static_cast<int>(rng.below(cs)), c};
                GroundMatrix d = random_ground_matrix(rng, cs);
                const double fast = emd_single_label(p, t, d).value;
                const double exact = emd_exact(p, t.one_hot(), d.entries);
                record(single, std::abs(fast - exact), 1e-9, p, t.one_hot(), d.entries);
            }
            // squared-CDF loss equals |j-k| (and the oracle) on one-hots
            {
                const int cls_j = static_cast<int>(rng.below(cs));
                const int cls_k = static_cast<int>(rng.below(cs));
                Target tj{cls_j, c}, tk{cls_k, c};
                const Vec p = tj.one_hot();
                const double fast = emd2_ordered(p, tk).value;
                const double expected = std::abs(static_cast<double>(cls_j - cls_k));
                const double exact = emd_exact(p, tk.one_hot(), ordinal_d.entries);
                const double err = std::max(std::abs(fast - expected), std::abs(exact - expected));
                record(displacement, err, 1e-9, p, tk.one_hot(), ordinal_d.entries);
            }
            // entropic scaling approaches the exact value at small reg
            if (c <= 6) {
                Vec p = random_interior_simplex(rng, cs);
                Target t{static_cast<int>(rng.below(cs)), c};
                GroundMatrix d = random_ground_matrix(rng, cs);
                Vec t_smooth(cs, kSinkhornTargetSmoothing / static_cast<double>(c));
                t_smooth[static_cast<std::size_t>(t.class_index)] += 1.0 - kSinkhornTargetSmoothing;
                const double approx = sinkhorn_emd(p, t, d, 0.01, 2000).value;
                const double exact = emd_exact(p, t_smooth, d.entries);
                const double rel = std::abs(approx - exact) / std::max(std::abs(exact), 1e-12);
                record(sinkhorn, rel, 0.02, p, t_smooth, d.entries);
            }
        }
    }

    std::vector<IdentityStat*> stats{&ordinal, &single, &displacement, &sinkhorn};
    std::printf("%-28s %8s %12s %10s %s\n", "identity", "trials", "max_err", "tol", "result");
    bool all_pass = true;
    for (const auto* s : stats) {
        std::printf("%-28s %8ld %12.3e %10s %s\n", s->name.c_str(), s->trials, s->max_err,
                    s->tol_text.c_str(), s->passed ? "PASS" : "FAIL");
        all_pass = all_pass && s->passed;
    }
    for (const auto* s : stats)
        if (!s->passed)
            std::fprintf(stderr, "failing instance for %s:\n%s\n", s->name.c_str(),
                         s->failure_dump.c_str());
    return all_pass ? kExitOk : kExitCheckFailed;
}

// ---- compare ------------------------------------------------------------

int cmd_compare(const std::string& config_dir, const std::string& out_dir, bool reuse) {
    std::vector<fs::path> config_paths;
    if (!fs::is_directory(config_dir))
        throw invalid_input_error("compare: not a directory: " + config_dir);
    for (const auto& entry : fs::directory_iterator(config_dir))
        if (entry.path().extension() == ".json") config_paths.push_back(entry.path());
    std::sort(config_paths.begin(), config_paths.end());
    if (config_paths.empty())
        throw invalid_input_error("compare: no .json configs in " + config_dir);

    std::string fingerprint;
    struct MethodRun {
        std::string name;
        std::vector<EpochRecord> epochs;
        double rho = std::nan("");
    };
    std::vector<MethodRun> runs;

    fs::create_directories(out_dir);
    for (const auto& path : config_paths) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string text = ss.str();
        const std::string fp = data_section_fingerprint(text);
        if (fingerprint.empty())
            fingerprint = fp;
        else if (fp != fingerprint)
            throw invalid_input_error("compare: dataset differs in " + path.string());

        RunConfig cfg = parse_run_config(text);
        MethodRun run;
        run.name = loss_kind_name(cfg.train.loss_kind);
        const std::string run_dir = (fs::path(out_dir) / path.stem()).string();
        const std::string history_path = (fs::path(run_dir) / "history.csv").string();
        const std::string summary_path = (fs::path(run_dir) / "summary.json").string();

        if (reuse && fs::exists(history_path)) {
            run.epochs = parse_history_csv(history_path);
            if (fs::exists(summary_path)) {
                std::ifstream sin(summary_path);
                json s;
                sin >> s;
                if (s.contains("final") && s["final"].contains("spearman_rho"))
                    run.rho = s["final"]["spearman_rho"].get<double>();
            }
            std::printf("reusing %s\n", history_path.c_str());
        } else {
            RunOutput out = run_training(cfg, run_dir);
            run.epochs = out.history.epochs;
            if (out.final_report.spearman_rho) run.rho = *out.final_report.spearman_rho;
            std::printf("trained %s (%s)\n", run.name.c_str(), path.filename().string().c_str());
        }
        runs.push_back(std::move(run));
    }

    const std::string curves_path = (fs::path(out_dir) / "curves.csv").string();
    {
        std::ofstream out(curves_path);
        out << "method,epoch,train_AEM,test_AEM,test_AEO\n";
        for (const auto& run : runs)
            for (const auto& e : run.epochs)
                out << run.name << ',' << e.epoch << ',' << format_double(e.train_aem) << ','
                    << format_double(e.test_aem) << ',' << format_double(e.test_aeo) << '\n';
    }
    const std::string summary_path = (fs::path(out_dir) / "summary.csv").string();
    {
        std::ofstream out(summary_path);
        out << "method,final_test_AEM,final_test_AEO,spearman_rho\n";
        for (const auto& run : runs) {
            const auto& last = run.epochs.back();
            out << run.name << ',' << format_double(last.test_aem) << ','
                << format_double(last.test_aeo) << ','
                << (std::isnan(run.rho) ? std::string("nan") : format_double(run.rho)) << '\n';
        }
    }

    std::printf("\n%-8s %10s %10s %10s\n", "method", "AEM", "AEO", "rho");
    for (const auto& run : runs) {
        const auto& last = run.epochs.back();
        std::printf("%-8s %10.4f %10.4f %10.4f\n", run.name.c_str(), last.test_aem, last.test_aeo,
                    run.rho);
    }
    std::printf("\ncurves: %s\nsummary: %s\n", curves_path.c_str(), summary_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EMD^2 loss training toolkit: ordered-class losses, self-guided ground "
                 "distances, and an exact transport oracle"};
    app.require_subcommand(1);

    TrainOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "train a model from a run config");
    train_cmd->add_option("--config", train_opt.config_path, "run config JSON")->required();
    train_cmd->add_option("--out", train_opt.out_dir, "output directory (overrides config)");
    train_cmd->add_option("--seed", train_opt.seed, "seed override");

    std::string checkpoint, bins_path, out_dir;
    EvalDataOptions eval_data;
    auto add_data_options = [&](CLI::App* cmd) {
        cmd->add_option("--data", eval_data.data_path, "dataset CSV (features...,label)");
        cmd->add_option("--num-classes", eval_data.num_classes, "class count for --data");
        cmd->add_flag("--has-header", eval_data.has_header, "CSV has a header row");
        cmd->add_option("--config", eval_data.config_path, "run config providing the dataset");
        cmd->add_option("--split", eval_data.split, "train|test split when using --config");
    };

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    add_data_options(eval_cmd);
    eval_cmd->add_option("--out", out_dir, "directory for eval.jsonl");
    eval_cmd->add_option("--bins", bins_path, "bin sidecar JSON for expectation decoding");

    auto* gd_cmd = app.add_subcommand("gd-matrix",
                                      "export D-bar, B, learned D, and SDD for a checkpoint");
    gd_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    add_data_options(gd_cmd);
    gd_cmd->add_option("--out", out_dir, "output directory")->required();

    int c_min = 2, c_max = 8;
    long trials = 500;
    std::uint64_t oracle_seed = 20240915;
    bool inject_failure = false;
    auto* oracle_cmd = app.add_subcommand("oracle-check",
                                          "randomized identities: fast paths vs exact solver");
    oracle_cmd->add_option("--c-min", c_min, "smallest class count");
    oracle_cmd->add_option("--c-max", c_max, "largest class count");
    oracle_cmd->add_option("--trials", trials, "trials per class count");
    oracle_cmd->add_option("--seed", oracle_seed, "seed");
    oracle_cmd->add_flag("--inject-failure", inject_failure,
                         "perturb a closed form to verify the harness reports failures");

    std::string compare_dir;
    bool reuse = false;
    auto* compare_cmd = app.add_subcommand("compare",
                                           "train a directory of configs and emit AEM/AEO curves");
    compare_cmd->add_option("--configs", compare_dir, "directory of run configs")->required();
    compare_cmd->add_option("--out", out_dir, "output directory")->required();
    compare_cmd->add_flag("--reuse", reuse, "reuse existing histories instead of retraining");

    std::string template_out;
    auto* template_cmd = app.add_subcommand("config-template",
                                            "print a run config with every default filled in");
    template_cmd->add_option("--out", template_out, "write to file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitBadInput;
    }

    try {
        if (*train_cmd) return cmd_train(train_opt);
        if (*eval_cmd) return cmd_eval(checkpoint, eval_data, out_dir, bins_path);
        if (*gd_cmd) return cmd_gd_matrix(checkpoint, eval_data, out_dir);
        if (*oracle_cmd)
            return cmd_oracle_check(c_min, c_max, trials, oracle_seed, inject_failure);
        if (*compare_cmd) return cmd_compare(compare_dir, out_dir, reuse);
        if (*template_cmd) {
            if (template_out.empty()) {
                std::cout << config_template_json() << "\n";
            } else {
                std::ofstream out(template_out);
                if (!out) throw invalid_input_error("cannot write " + template_out);
                out << config_template_json() << "\n";
                std::printf("template written to %s\n", template_out.c_str());
            }
            return kExitOk;
        }
    } catch (const invalid_input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const parse_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const insufficient_data_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitBadInput;
}
