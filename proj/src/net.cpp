#include "emdloss/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "emdloss/errors.hpp"
#include "emdloss/ground_distance.hpp"
#include "emdloss/losses.hpp"
#include "emdloss/metrics.hpp"
#include "emdloss/rng.hpp"

namespace emdloss {

void NetConfig::validate() const {
    if (layer_sizes.size() < 2)
        throw invalid_input_error("net config: need at least input and output layers");
    for (int s : layer_sizes)
        if (s < 1) throw invalid_input_error("net config: layer sizes must be >= 1");
    if (head == Head::linear && layer_sizes.back() != 1)
        throw invalid_input_error("net config: linear head requires output size 1");
    if (head == Head::softmax && layer_sizes.back() < 2)
        throw invalid_input_error("net config: softmax head requires at least 2 outputs");
    if (!(weight_init_scale > 0.0))
        throw invalid_input_error("net config: weight_init_scale must be > 0");
}

ModelState init_model(const NetConfig& config) {
    config.validate();
    ModelState m;
    m.config = config;
    Rng rng(config.seed);
    const std::size_t layers = config.layer_sizes.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t fan_in = static_cast<std::size_t>(config.layer_sizes[l]);
        const std::size_t fan_out = static_cast<std::size_t>(config.layer_sizes[l + 1]);
        const double sigma = config.weight_init_scale / std::sqrt(static_cast<double>(fan_in));
        Mat w(fan_out, fan_in);
        for (double& x : w.data()) x = sigma * rng.normal();
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
        m.weight_momentum.emplace_back(fan_out, fan_in, 0.0);
        m.bias_momentum.emplace_back(fan_out, 0.0);
    }
    return m;
}

ForwardResult forward(const ModelState& model, const Vec& input) {
    const auto& sizes = model.config.layer_sizes;
    if (input.size() != static_cast<std::size_t>(sizes.front()))
        throw invalid_input_error("forward: input has " + std::to_string(input.size()) +
                                  " entries, expected " + std::to_string(sizes.front()));

    ForwardResult r;
    const std::size_t layers = model.weights.size();
    r.layer_inputs.reserve(layers);
    r.pre_activations.reserve(layers);

    Vec a = input;
    for (std::size_t l = 0; l < layers; ++l) {
        const Mat& w = model.weights[l];
        const Vec& b = model.biases[l];
        Vec z(w.rows());
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double s = b[i];
            const double* wr = w.row(i);
            for (std::size_t j = 0; j < w.cols(); ++j) s += wr[j] * a[j];
            z[i] = s;
        }
        r.layer_inputs.push_back(std::move(a));
        if (l + 1 < layers) {
            a.resize(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
        }
        r.pre_activations.push_back(std::move(z));
    }

    r.features = r.layer_inputs.back();
    const Vec& logits = r.pre_activations.back();
    if (model.config.head == Head::softmax) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : logits) mx = std::max(mx, v);
        r.output.resize(logits.size());
        double denom = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            r.output[i] = std::exp(logits[i] - mx);
            denom += r.output[i];
        }
        for (double& v : r.output) v /= denom;
    } else {
        r.output = logits;  // single linear unit
    }
    return r;
}

void Gradients::accumulate(const Gradients& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Vec& w = weights[l].data();
        const Vec& ow = other.weights[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += ow[i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
}

void Gradients::scale(double s) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (double& x : weights[l].data()) x *= s;
        for (double& x : biases[l]) x *= s;
    }
}

Gradients zero_gradients(const ModelState& model) {
    Gradients g;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        g.weights.emplace_back(model.weights[l].rows(), model.weights[l].cols(), 0.0);
        g.biases.emplace_back(model.biases[l].size(), 0.0);
    }
    return g;
}

Gradients backward(const ModelState& model, const ForwardResult& fwd, const Vec& dloss_doutput,
                   double weight_decay) {
    const std::size_t layers = model.weights.size();
    if (fwd.layer_inputs.size() != layers)
        throw invalid_input_error("backward: forward result does not match model");
    if (dloss_doutput.size() != fwd.output.size())
        throw invalid_input_error("backward: loss gradient has wrong length");

    Gradients g = zero_gradients(model);

    Vec dz;
    if (model.config.head == Head::softmax) {
        // dL/dz_i = p_i * (g_i - <g, p>), the softmax Jacobian transpose
        const Vec& p = fwd.output;
        const double gp = dot(dloss_doutput, p);
        dz.resize(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) dz[i] = p[i] * (dloss_doutput[i] - gp);
    } else {
        dz = dloss_doutput;
    }

    for (std::size_t l = layers; l-- > 0;) {
        const Vec& a = fwd.layer_inputs[l];
        Mat& dw = g.weights[l];
        for (std::size_t i = 0; i < dw.rows(); ++i) {
            double* row = dw.row(i);
            for (std::size_t j = 0; j < dw.cols(); ++j) row[j] = dz[i] * a[j];
            g.biases[l][i] = dz[i];
        }
        if (l > 0) {
            const Mat& w = model.weights[l];
            const Vec& z_prev = fwd.pre_activations[l - 1];
            Vec da(w.cols(), 0.0);
            for (std::size_t i = 0; i < w.rows(); ++i) {
                const double* wr = w.row(i);
                for (std::size_t j = 0; j < w.cols(); ++j) da[j] += wr[j] * dz[i];
            }
            dz.resize(da.size());
            for (std::size_t j = 0; j < da.size(); ++j)
                dz[j] = z_prev[j] > 0.0 ? da[j] : 0.0;
        }
    }

    if (weight_decay != 0.0) {
        for (std::size_t l = 0; l < layers; ++l) {
            Vec& dw = g.weights[l].data();
            const Vec& w = model.weights[l].data();
            for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += 2.0 * weight_decay * w[i];
            for (std::size_t i = 0; i < g.biases[l].size(); ++i)
                g.biases[l][i] += 2.0 * weight_decay * model.biases[l][i];
        }
    }
    return g;
}

const char* loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::XE: return "XE";
        case LossKind::REG: return "REG";
        case LossKind::EMD: return "EMD";
        case LossKind::XEMD1: return "XEMD1";
        case LossKind::XEMD2: return "XEMD2";
        case LossKind::AEMD: return "AEMD";
    }
    return "XE";
}

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "XE") return LossKind::XE;
    if (name == "REG") return LossKind::REG;
    if (name == "EMD") return LossKind::EMD;
    if (name == "XEMD1") return LossKind::XEMD1;
    if (name == "XEMD2") return LossKind::XEMD2;
    if (name == "AEMD" || name == "A-EMD") return LossKind::AEMD;
    throw invalid_input_error("unknown loss kind: " + name);
}

bool loss_uses_ground_matrix(LossKind k) {
    return k == LossKind::XEMD1 || k == LossKind::XEMD2 || k == LossKind::AEMD;
}

HybridParams hybrid_preset(LossKind k) {
    HybridParams p;
    if (k == LossKind::XEMD1) {
        p.omega = 1.0;
        p.mu = -0.5;
    } else if (k == LossKind::XEMD2) {
        p.omega = 2.0;
        p.mu = -0.25;
    }
    return p;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw invalid_input_error("train config: learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw invalid_input_error("train config: momentum must be in [0, 1)");
    if (epochs < 1) throw invalid_input_error("train config: epochs must be >= 1");
    if (batch_size < 1) throw invalid_input_error("train config: batch_size must be >= 1");
    if (jump_start_epochs < 0)
        throw invalid_input_error("train config: jump_start_epochs must be >= 0");
    if (!(weight_decay >= 0.0)) throw invalid_input_error("train config: weight_decay must be >= 0");
    if (!(lambda >= 0.0)) throw invalid_input_error("train config: lambda must be >= 0");
    if (!(auto_ratio_target > 0.0))
        throw invalid_input_error("train config: auto_ratio_target must be > 0");
    if (!(sinkhorn_reg > 0.0)) throw invalid_input_error("train config: sinkhorn_reg must be > 0");
    if (sinkhorn_iters < 1) throw invalid_input_error("train config: sinkhorn_iters must be >= 1");
    HybridParams check = hybrid;
    check.lambda = lambda;
    check.validate();
}

namespace {

std::vector<int> decode_predictions(const ModelState& model, const Dataset& data) {
    std::vector<int> out(data.size());
    const int c_max = data.num_classes - 1;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ForwardResult fwd = forward(model, data.feature_row(i));
        if (model.config.head == Head::softmax) {
            out[i] = predict_class(fwd.output);
        } else {
            long r = std::lround(fwd.output[0]);
            out[i] = static_cast<int>(std::clamp<long>(r, 0, c_max));
        }
    }
    return out;
}

}  // namespace

std::vector<int> predict(const ModelState& model, const Dataset& data) {
    return decode_predictions(model, data);
}

Vec predict_scores(const ModelState& model, const Dataset& data, const Vec& bin_centers) {
    Vec out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        ForwardResult fwd = forward(model, data.feature_row(i));
        out[i] = model.config.head == Head::softmax ? expected_score(fwd.output, bin_centers)
                                                    : fwd.output[0];
    }
    return out;
}

TrainHistory train(ModelState& model, const Dataset& train_data, const Dataset& test_data,
                   const TrainConfig& cfg, DSource d_source, const GroundMatrix* external_d,
                   std::uint64_t seed) {
    cfg.validate();
    train_data.validate();
    test_data.validate();
    model.config.validate();

    const int num_classes = train_data.num_classes;
    if (test_data.num_classes != num_classes)
        throw invalid_input_error("train: train/test class count mismatch");
    if (train_data.feature_dim() != static_cast<std::size_t>(model.config.input_size()))
        throw invalid_input_error("train: dataset feature dim does not match net input");

    const bool regression = cfg.loss_kind == LossKind::REG;
    if (regression && model.config.head != Head::linear)
        throw invalid_input_error("train: REG requires a linear head");
    if (!regression && model.config.head != Head::softmax)
        throw invalid_input_error("train: classification losses require a softmax head");
    if (!regression && model.config.output_size() != num_classes)
        throw invalid_input_error("train: net output size does not match num_classes");

    TrainHistory history;

    if (d_source == DSource::external) {
        if (!external_d) throw invalid_input_error("train: external D source without a matrix");
        external_d->validate();
        if (external_d->entries.rows() != static_cast<std::size_t>(num_classes))
            throw invalid_input_error("train: external D has wrong size");
        model.current_d = *external_d;
    } else if (d_source == DSource::ordinal) {
        GroundMatrix d = ordinal_matrix(num_classes);
        if (cfg.normalize_ordinal_d)
            d = scaled(std::move(d), 1.0 / static_cast<double>(num_classes - 1));
        model.current_d = std::move(d);
    } else {
        model.current_d.reset();  // estimated at the first epoch boundary
    }

    GroundDistanceEstimator estimator(num_classes, 2, cfg.sdd_include_diagonal);
    Rng shuffle_rng(seed);

    const bool uses_lambda = cfg.loss_kind == LossKind::XEMD1 || cfg.loss_kind == LossKind::XEMD2;
    bool lambda_set = cfg.lambda_mode == LambdaMode::fixed;
    double lambda_value = cfg.lambda_mode == LambdaMode::fixed ? cfg.lambda : 0.0;
    if (uses_lambda && cfg.lambda_mode == LambdaMode::auto_ratio && cfg.jump_start_epochs == 0)
        history.warnings.push_back(
            "auto lambda with jump_start_epochs=0: no estimated D during epoch 1, "
            "lambda may stay 0");

    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const bool jump = epoch <= cfg.jump_start_epochs;
        double lambda_eff = 0.0;
        if (uses_lambda && !jump && model.current_d) lambda_eff = lambda_value;

        HybridParams hp = cfg.hybrid;
        hp.lambda = lambda_eff;

        shuffle_rng.shuffle(order);

        double sum_primary = 0.0, sum_reg = 0.0, sum_reg_unit = 0.0;
        const double n_samples = static_cast<double>(train_data.size());

        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double batch_n = static_cast<double>(batch_end - cursor);
            Gradients batch_grad = zero_gradients(model);

            for (std::size_t s = cursor; s < batch_end; ++s) {
                const std::size_t idx = order[s];
                const Vec x = train_data.feature_row(idx);
                const Target target{train_data.labels[idx], num_classes};
                ForwardResult fwd = forward(model, x);
                if (!all_finite(fwd.output))
                    throw numerical_error("train: non-finite network output at epoch " +
                                          std::to_string(epoch) + ", sample " +
                                          std::to_string(idx));

                Vec dloss;
                double primary = 0.0, reg_weighted = 0.0, reg_unit = 0.0;
                switch (cfg.loss_kind) {
                    case LossKind::XE: {
                        LossResult lr = cross_entropy(fwd.output, target, cfg.hybrid.log_epsilon);
                        primary = lr.value;
                        dloss = std::move(lr.grad);
                        break;
                    }
                    case LossKind::REG: {
                        ScalarLoss sl = l2_regression(fwd.output[0], target);
                        primary = sl.value;
                        dloss = Vec{sl.grad};
                        break;
                    }
                    case LossKind::EMD: {
                        LossResult lr = emd2_ordered(fwd.output, target);
                        primary = lr.value;
                        dloss = std::move(lr.grad);
                        break;
                    }
                    case LossKind::XEMD1:
                    case LossKind::XEMD2: {
                        if (model.current_d) {
                            LossResult lr = hybrid_loss(fwd.output, target, *model.current_d, hp);
                            const std::size_t k = static_cast<std::size_t>(target.class_index);
                            primary = -std::log(fwd.output[k] + hp.log_epsilon);
                            reg_weighted = lr.value - primary;
                            for (std::size_t i = 0; i < fwd.output.size(); ++i) {
                                const double w =
                                    std::pow(model.current_d->entries(i, k), hp.omega) + hp.mu;
                                reg_unit += fwd.output[i] * fwd.output[i] * w;
                            }
                            dloss = std::move(lr.grad);
                        } else {
                            LossResult lr =
                                cross_entropy(fwd.output, target, cfg.hybrid.log_epsilon);
                            primary = lr.value;
                            dloss = std::move(lr.grad);
                        }
                        break;
                    }
                    case LossKind::AEMD: {
                        if (!jump && model.current_d) {
                            LossResult lr = sinkhorn_emd(fwd.output, target, *model.current_d,
                                                         cfg.sinkhorn_reg, cfg.sinkhorn_iters);
                            primary = lr.value;
                            dloss = std::move(lr.grad);
                        } else {
                            // cross-entropy until a ground matrix exists
                            LossResult lr =
                                cross_entropy(fwd.output, target, cfg.hybrid.log_epsilon);
                            primary = lr.value;
                            dloss = std::move(lr.grad);
                        }
                        break;
                    }
                }
                if (!std::isfinite(primary + reg_weighted))
                    throw numerical_error("train: non-finite loss at epoch " +
                                          std::to_string(epoch) + ", sample " +
                                          std::to_string(idx));

                sum_primary += primary;
                sum_reg += reg_weighted;
                sum_reg_unit += reg_unit;

                estimator.add(fwd.features, target.class_index);
                batch_grad.accumulate(backward(model, fwd, dloss, cfg.weight_decay));
            }

            batch_grad.scale(1.0 / batch_n);
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                Vec& w = model.weights[l].data();
                Vec& vw = model.weight_momentum[l].data();
                const Vec& gw = batch_grad.weights[l].data();
                for (std::size_t i = 0; i < w.size(); ++i) {
                    vw[i] = cfg.momentum * vw[i] - cfg.learning_rate * gw[i];
                    w[i] += vw[i];
                }
                Vec& b = model.biases[l];
                Vec& vb = model.bias_momentum[l];
                const Vec& gb = batch_grad.biases[l];
                for (std::size_t i = 0; i < b.size(); ++i) {
                    vb[i] = cfg.momentum * vb[i] - cfg.learning_rate * gb[i];
                    b[i] += vb[i];
                }
            }
            cursor = batch_end;
        }

        GroundDistanceEstimate est = estimator.end_epoch();
        for (int cls : est.patched_classes)
            history.warnings.push_back("epoch " + std::to_string(epoch) + ": class " +
                                       std::to_string(cls) +
                                       " absent, reused previous ground distances");
        if (d_source == DSource::learned) model.current_d = est.d;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss_primary = sum_primary / n_samples;
        rec.loss_reg = sum_reg / n_samples;
        rec.lambda = lambda_eff;
        rec.mean_reg_unit = sum_reg_unit / n_samples;
        rec.sdd = est.sdd_value;

        {
            std::vector<int> train_pred = decode_predictions(model, train_data);
            auto [aem, aeo] = aem_aeo(train_pred, train_data.labels);
            (void)aeo;
            rec.train_aem = aem;
        }
        {
            std::vector<int> test_pred = decode_predictions(model, test_data);
            auto [aem, aeo] = aem_aeo(test_pred, test_data.labels);
            rec.test_aem = aem;
            rec.test_aeo = aeo;
        }
        history.epochs.push_back(rec);

        // lambda is selected once, from the completed epoch's running means
        if (uses_lambda && !lambda_set && epoch == std::max(cfg.jump_start_epochs, 1)) {
            const double denom = std::abs(rec.mean_reg_unit);
            if (denom > 1e-12) {
                lambda_value = rec.loss_primary / (cfg.auto_ratio_target * denom);
                history.lambda_fix_epoch = epoch;
                history.lambda_value = lambda_value;
                history.mean_xe_at_fix = rec.loss_primary;
                history.mean_reg_unit_at_fix = rec.mean_reg_unit;
            } else {
                history.warnings.push_back("auto lambda: regularizer mean is zero at epoch " +
                                           std::to_string(epoch) + ", lambda stays 0");
            }
            lambda_set = true;
        }

        model.epoch += 1;
    }
    return history;
}

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const std::string& path) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw parse_error("checkpoint truncated: " + path);
}

void write_u64(std::ofstream& out, std::uint64_t v) { write_bytes(out, &v, 8); }
void write_i32(std::ofstream& out, std::int32_t v) { write_bytes(out, &v, 4); }
void write_f64(std::ofstream& out, double v) { write_bytes(out, &v, 8); }
void write_vec(std::ofstream& out, const Vec& v) {
    write_u64(out, v.size());
    write_bytes(out, v.data(), v.size() * sizeof(double));
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t v;
    read_bytes(in, &v, 8, path);
    return v;
}
std::int32_t read_i32(std::ifstream& in, const std::string& path) {
    std::int32_t v;
    read_bytes(in, &v, 4, path);
    return v;
}
double read_f64(std::ifstream& in, const std::string& path) {
    double v;
    read_bytes(in, &v, 8, path);
    return v;
}
Vec read_vec(std::ifstream& in, const std::string& path) {
    const std::uint64_t n = read_u64(in, path);
    if (n > (1ull << 32)) throw parse_error("checkpoint vector too large: " + path);
    Vec v(n);
    read_bytes(in, v.data(), n * sizeof(double), path);
    return v;
}

constexpr char kCheckpointMagic[8] = {'E', 'M', 'D', 'L', 'C', 'K', 'P', 'T'};
constexpr std::int32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input_error("cannot write checkpoint: " + path);
    write_bytes(out, kCheckpointMagic, 8);
    write_i32(out, kCheckpointVersion);
    write_i32(out, model.config.head == Head::softmax ? 0 : 1);
    write_u64(out, model.config.seed);
    write_f64(out, model.config.weight_init_scale);
    write_i32(out, static_cast<std::int32_t>(model.config.layer_sizes.size()));
    for (int s : model.config.layer_sizes) write_i32(out, s);
    write_i32(out, model.epoch);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        write_vec(out, model.weights[l].data());
        write_vec(out, model.biases[l]);
        write_vec(out, model.weight_momentum[l].data());
        write_vec(out, model.bias_momentum[l]);
    }
    if (model.current_d) {
        write_i32(out, 1);
        write_i32(out, static_cast<std::int32_t>(model.current_d->provenance));
        write_u64(out, model.current_d->entries.rows());
        write_bytes(out, model.current_d->entries.data().data(),
                    model.current_d->entries.data().size() * sizeof(double));
    } else {
        write_i32(out, 0);
    }
    if (!out) throw invalid_input_error("checkpoint write failed: " + path);
}

ModelState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input_error("cannot open checkpoint: " + path);
    char magic[8];
    read_bytes(in, magic, 8, path);
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw parse_error("not a checkpoint file: " + path);
    if (read_i32(in, path) != kCheckpointVersion)
        throw parse_error("unsupported checkpoint version: " + path);

    ModelState m;
    m.config.head = read_i32(in, path) == 0 ? Head::softmax : Head::linear;
    m.config.seed = read_u64(in, path);
    m.config.weight_init_scale = read_f64(in, path);
    const std::int32_t n_sizes = read_i32(in, path);
    if (n_sizes < 2 || n_sizes > 64) throw parse_error("bad checkpoint layer count: " + path);
    m.config.layer_sizes.resize(static_cast<std::size_t>(n_sizes));
    for (auto& s : m.config.layer_sizes) s = read_i32(in, path);
    m.epoch = read_i32(in, path);
    m.config.validate();

    const std::size_t layers = m.config.layer_sizes.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t rows = static_cast<std::size_t>(m.config.layer_sizes[l + 1]);
        const std::size_t cols = static_cast<std::size_t>(m.config.layer_sizes[l]);
        Mat w(rows, cols);
        w.data() = read_vec(in, path);
        if (w.data().size() != rows * cols) throw parse_error("bad weight block: " + path);
        m.weights.push_back(std::move(w));
        m.biases.push_back(read_vec(in, path));
        if (m.biases.back().size() != rows) throw parse_error("bad bias block: " + path);
        Mat vw(rows, cols);
        vw.data() = read_vec(in, path);
        if (vw.data().size() != rows * cols) throw parse_error("bad momentum block: " + path);
        m.weight_momentum.push_back(std::move(vw));
        m.bias_momentum.push_back(read_vec(in, path));
        if (m.bias_momentum.back().size() != rows) throw parse_error("bad momentum block: " + path);
    }

    if (read_i32(in, path) == 1) {
        GroundMatrix d;
        d.provenance = static_cast<GroundMatrix::Provenance>(read_i32(in, path));
        const std::uint64_t c = read_u64(in, path);
        if (c < 2 || c > 4096) throw parse_error("bad ground matrix size: " + path);
        d.entries = Mat(c, c);
        read_bytes(in, d.entries.data().data(), c * c * sizeof(double), path);
        m.current_d = std::move(d);
    }
    return m;
}

}  // namespace emdloss
