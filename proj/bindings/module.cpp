#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "emdloss/data.hpp"
#include "emdloss/errors.hpp"
#include "emdloss/ground_distance.hpp"
#include "emdloss/io.hpp"
#include "emdloss/losses.hpp"
#include "emdloss/metrics.hpp"
#include "emdloss/net.hpp"
#include "emdloss/ot_oracle.hpp"
#include "emdloss/run_config.hpp"

namespace py = pybind11;
using namespace emdloss;

namespace {

using NestedList = std::vector<Vec>;

Mat to_mat(const NestedList& rows, const char* who) {
    if (rows.empty()) throw invalid_input_error(std::string(who) + ": empty matrix");
    Mat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw invalid_input_error(std::string(who) + ": ragged matrix");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i));
    }
    return m;
}

NestedList from_mat(const Mat& m) {
    NestedList rows;
    rows.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        rows.emplace_back(m.row(i), m.row(i) + m.cols());
    return rows;
}

GroundMatrix to_ground(const NestedList& rows) {
    GroundMatrix d;
    d.entries = to_mat(rows, "ground matrix");
    d.provenance = GroundMatrix::Provenance::external;
    d.validate();
    return d;
}

Target make_target(int k, std::size_t c) { return Target{k, static_cast<int>(c)}; }

py::dict dataset_dict(const Dataset& ds) {
    py::dict d;
    d["features"] = from_mat(ds.features);
    d["labels"] = ds.labels;
    d["num_classes"] = ds.num_classes;
    return d;
}

py::dict history_dict(const TrainHistory& h) {
    py::list rows;
    for (const auto& e : h.epochs) {
        py::dict r;
        r["epoch"] = e.epoch;
        r["loss_primary"] = e.loss_primary;
        r["loss_reg"] = e.loss_reg;
        r["lambda"] = e.lambda;
        r["train_aem"] = e.train_aem;
        r["test_aem"] = e.test_aem;
        r["test_aeo"] = e.test_aeo;
        r["sdd"] = e.sdd;
        rows.append(r);
    }
    py::dict out;
    out["epochs"] = rows;
    out["lambda_fix_epoch"] = h.lambda_fix_epoch;
    out["lambda_value"] = h.lambda_value;
    out["warnings"] = h.warnings;
    return out;
}

}  // namespace

PYBIND11_MODULE(_emdloss, m) {
    m.doc() = "EMD^2 losses for ordered-class training, with an exact transport oracle";

    py::register_exception<invalid_input_error>(m, "InvalidInputError", PyExc_ValueError);
    py::register_exception<numerical_error>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<insufficient_data_error>(m, "InsufficientDataError", PyExc_ValueError);
    py::register_exception<parse_error>(m, "ParseError", PyExc_ValueError);

    py::class_<LossResult>(m, "LossResult")
        .def_readonly("value", &LossResult::value)
        .def_readonly("grad", &LossResult::grad)
        .def("__repr__", [](const LossResult& r) {
            return "LossResult(value=" + std::to_string(r.value) + ")";
        });

    m.def(
        "cross_entropy",
        [](const Vec& p, int k, double eps) {
            return cross_entropy(p, make_target(k, p.size()), eps);
        },
        py::arg("p"), py::arg("true_class"), py::arg("eps") = 1e-6);

    m.def(
        "emd2_ordered",
        [](const Vec& p, int k) { return emd2_ordered(p, make_target(k, p.size())); },
        py::arg("p"), py::arg("true_class"));

    m.def(
        "emd_single_label",
        [](const Vec& p, int k, const NestedList& d) {
            return emd_single_label(p, make_target(k, p.size()), to_ground(d));
        },
        py::arg("p"), py::arg("true_class"), py::arg("ground_matrix"));

    m.def(
        "hybrid_loss",
        [](const Vec& p, int k, const NestedList& d, double lambda, double omega, double mu,
           double log_epsilon) {
            HybridParams params{lambda, omega, mu, log_epsilon};
            return hybrid_loss(p, make_target(k, p.size()), to_ground(d), params);
        },
        py::arg("p"), py::arg("true_class"), py::arg("ground_matrix"), py::arg("lambda_") = 1.0,
        py::arg("omega") = 1.0, py::arg("mu") = -0.5, py::arg("log_epsilon") = 1e-6);

    m.def(
        "sinkhorn_emd",
        [](const Vec& p, int k, const NestedList& d, double reg, int iters) {
            return sinkhorn_emd(p, make_target(k, p.size()), to_ground(d), reg, iters);
        },
        py::arg("p"), py::arg("true_class"), py::arg("ground_matrix"),
        py::arg("entropic_reg") = 0.1, py::arg("iters") = 100);

    m.def(
        "emd_exact",
        [](const Vec& supply, const Vec& demand, const NestedList& cost) {
            return emd_exact(supply, demand, to_mat(cost, "cost"));
        },
        py::arg("supply"), py::arg("demand"), py::arg("cost"),
        "Exact EMD via the transportation simplex, normalized by total flow.");

    m.def(
        "solve_transport",
        [](const Vec& supply, const Vec& demand, const NestedList& cost) {
            TransportPlan plan = solve_transport({supply, demand, to_mat(cost, "cost")});
            py::dict out;
            out["flow"] = from_mat(plan.flow);
            out["total_cost"] = plan.total_cost;
            out["u"] = plan.u;
            out["v"] = plan.v;
            return out;
        },
        py::arg("supply"), py::arg("demand"), py::arg("cost"));

    m.def(
        "ordinal_matrix",
        [](int c, bool normalized) {
            GroundMatrix d = ordinal_matrix(c);
            if (normalized) d = scaled(std::move(d), 1.0 / static_cast<double>(c - 1));
            return from_mat(d.entries);
        },
        py::arg("num_classes"), py::arg("normalized") = false);

    m.def(
        "percentile_transform",
        [](const NestedList& dbar) { return from_mat(percentile_transform(to_mat(dbar, "dbar"))); },
        py::arg("dbar"));

    m.def(
        "symmetrize",
        [](const NestedList& b) { return from_mat(symmetrize(to_mat(b, "b")).entries); },
        py::arg("b"));

    m.def(
        "sdd", [](const NestedList& dbar, bool include_diagonal) {
            return sdd(to_mat(dbar, "dbar"), include_diagonal);
        },
        py::arg("dbar"), py::arg("include_diagonal") = true);

    m.def(
        "learn_ground_matrix",
        [](const NestedList& features, const std::vector<int>& labels, int num_classes) {
            if (features.size() != labels.size())
                throw invalid_input_error("learn_ground_matrix: feature/label count mismatch");
            CentroidAccumulator acc(num_classes, static_cast<int>(features.front().size()));
            for (std::size_t i = 0; i < features.size(); ++i) acc.add(features[i], labels[i]);
            Mat dbar = raw_distance_matrix(acc);
            Mat b = percentile_transform(dbar);
            GroundMatrix d = symmetrize(b);
            py::dict out;
            out["dbar"] = from_mat(dbar);
            out["b"] = from_mat(b);
            out["d"] = from_mat(d.entries);
            out["sdd"] = sdd(dbar);
            return out;
        },
        py::arg("features"), py::arg("labels"), py::arg("num_classes"),
        "Centroid -> percentile -> symmetrize pipeline over one feature pass.");

    m.def(
        "aem_aeo",
        [](const std::vector<int>& pred, const std::vector<int>& truth) {
            return aem_aeo(pred, truth);
        },
        py::arg("predicted"), py::arg("truth"));
    m.def("predict_class", &predict_class, py::arg("p"));
    m.def("expected_score", &expected_score, py::arg("p"), py::arg("bin_centers"));
    m.def("spearman_rho", &spearman_rho, py::arg("x"), py::arg("y"));

    m.def(
        "generate_ordinal",
        [](int num_classes, int feature_dim, int samples_per_class, double center_spacing,
           double noise_sigma, double neighbor_flip_prob, std::uint64_t seed) {
            SyntheticOrdinalSpec spec;
            spec.num_classes = num_classes;
            spec.feature_dim = feature_dim;
            spec.samples_per_class = samples_per_class;
            spec.center_spacing = center_spacing;
            spec.noise_sigma = noise_sigma;
            spec.neighbor_flip_prob = neighbor_flip_prob;
            spec.seed = seed;
            auto [train, test] = generate_ordinal(spec);
            return py::make_tuple(dataset_dict(train), dataset_dict(test));
        },
        py::arg("num_classes") = 5, py::arg("feature_dim") = 8,
        py::arg("samples_per_class") = 100, py::arg("center_spacing") = 1.0,
        py::arg("noise_sigma") = 0.5, py::arg("neighbor_flip_prob") = 0.0, py::arg("seed") = 0);

    m.def(
        "discretize_scores",
        [](const Vec& scores, int num_bins) {
            Discretization d = discretize_scores(scores, num_bins);
            return py::make_tuple(d.labels, d.bin_edges, d.bin_centers);
        },
        py::arg("scores"), py::arg("num_bins"));

    m.def(
        "train_run",
        [](const std::string& config_json, const std::string& out_dir) {
            RunConfig cfg = parse_run_config(config_json);
            RunOutput out = run_training(cfg, out_dir);
            py::dict result = history_dict(out.history);
            result["final_test_aem"] = out.final_report.aem;
            result["final_test_aeo"] = out.final_report.aeo;
            if (out.final_report.spearman_rho)
                result["final_spearman_rho"] = *out.final_report.spearman_rho;
            return result;
        },
        py::arg("config_json"), py::arg("out_dir") = std::string(),
        "Run a full training job from a JSON run config; artifacts are written when "
        "out_dir is nonempty.");

    m.def("config_template", &config_template_json);

    m.attr("__version__") = "0.1.0";
}
