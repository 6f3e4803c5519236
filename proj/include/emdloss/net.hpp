#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emdloss/data.hpp"
#include "emdloss/matrix.hpp"
#include "emdloss/types.hpp"

namespace emdloss {

enum class Head { softmax, linear };

struct NetConfig {
    std::vector<int> layer_sizes;  // input -> hidden... -> output
    Head head = Head::softmax;
    std::uint64_t seed = 0;
    double weight_init_scale = 1.0;  // multiplier on the 1/sqrt(fan-in) Gaussian init

    void validate() const;
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    int feature_size() const { return layer_sizes[layer_sizes.size() - 2]; }
};

struct ModelState {
    NetConfig config;
    std::vector<Mat> weights;  // layer l maps layer_sizes[l] -> layer_sizes[l+1]
    std::vector<Vec> biases;
    std::vector<Mat> weight_momentum;
    std::vector<Vec> bias_momentum;
    int epoch = 0;
    std::optional<GroundMatrix> current_d;

    int num_classes() const {
        return config.head == Head::softmax ? config.output_size() : 0;
    }
};

ModelState init_model(const NetConfig& config);

// Hidden layers are rectified; the head is softmax (max-subtracted) or a
// single linear unit. `features` is the input to the head layer — the
// second-to-last layer responses used for centroid estimation.
struct ForwardResult {
    Vec output;    // probabilities (C) or the single regression value
    Vec features;
    std::vector<Vec> layer_inputs;     // layer_inputs[l] feeds weights[l]
    std::vector<Vec> pre_activations;  // z_l = W_l * layer_inputs[l] + b_l
};

ForwardResult forward(const ModelState& model, const Vec& input);

struct Gradients {
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    void accumulate(const Gradients& other);
    void scale(double s);
};

Gradients zero_gradients(const ModelState& model);

// Chain rule from d(loss)/d(output). For the softmax head the caller passes
// the gradient with respect to the probabilities and the softmax Jacobian
// is applied here; for the linear head a single-entry gradient. weight_decay
// adds 2*wd*theta for every parameter.
Gradients backward(const ModelState& model, const ForwardResult& fwd, const Vec& dloss_doutput,
                   double weight_decay = 0.0);

enum class LossKind { XE, REG, EMD, XEMD1, XEMD2, AEMD };
enum class LambdaMode { fixed, auto_ratio };
enum class DSource { ordinal, learned, external };

const char* loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);
bool loss_uses_ground_matrix(LossKind k);

// Built-in presets: XEMD1 weights distances linearly, XEMD2 quadratically,
// both with a negative bias so mass near the true class is rewarded.
HybridParams hybrid_preset(LossKind k);

struct TrainConfig {
    double learning_rate = 1e-2;
    double momentum = 0.98;
    int epochs = 10;
    int batch_size = 32;
    LossKind loss_kind = LossKind::XE;
    LambdaMode lambda_mode = LambdaMode::auto_ratio;
    double lambda = 0.0;             // used in fixed mode
    double auto_ratio_target = 3.5;  // XE term / regularizer term at fixing time
    int jump_start_epochs = 4;
    HybridParams hybrid;             // omega, mu, log_epsilon (lambda applied per epoch)
    double weight_decay = 0.0;
    double sinkhorn_reg = 0.1;
    int sinkhorn_iters = 100;
    bool normalize_ordinal_d = true;  // divide |i-j| by C-1 for hybrid use
    bool sdd_include_diagonal = true;

    void validate() const;
};

// One row per epoch; the first eight fields are the history-CSV columns.
struct EpochRecord {
    int epoch = 0;
    double loss_primary = 0.0;  // mean XE (or EMD/L2/Sinkhorn) component
    double loss_reg = 0.0;      // mean lambda-weighted regularizer component
    double lambda = 0.0;        // effective lambda during the epoch
    double train_aem = 0.0;
    double test_aem = 0.0;
    double test_aeo = 0.0;
    double sdd = 0.0;
    double mean_reg_unit = 0.0;  // regularizer at lambda=1; drives auto selection
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int lambda_fix_epoch = 0;  // boundary where auto lambda was set; 0 if never
    double lambda_value = 0.0;
    double mean_xe_at_fix = 0.0;
    double mean_reg_unit_at_fix = 0.0;
    std::vector<std::string> warnings;
};

// Shuffled minibatch SGD with momentum (v <- m*v - lr*g; theta <- theta + v).
// Hybrid runs keep lambda at 0 through the jump-start epochs; in auto mode
// lambda is set once at the first post-jump-start boundary so the XE term is
// auto_ratio_target times the regularizer, then frozen. The ground distance
// matrix is re-estimated from the epoch's accumulated features at every
// epoch boundary when d_source is `learned`. Single-threaded and
// deterministic in (seed, config).
TrainHistory train(ModelState& model, const Dataset& train_data, const Dataset& test_data,
                   const TrainConfig& cfg, DSource d_source, const GroundMatrix* external_d,
                   std::uint64_t seed);

// argmax decoding for the softmax head; round-and-clamp for the linear head
std::vector<int> predict(const ModelState& model, const Dataset& data);

// expectation decoding for ranking metrics (linear head returns y directly)
Vec predict_scores(const ModelState& model, const Dataset& data, const Vec& bin_centers);

// Versioned binary checkpoint: config, parameters, momentum buffers, epoch
// counter, and the current ground matrix. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ModelState& model);
ModelState load_checkpoint(const std::string& path);

}  // namespace emdloss
