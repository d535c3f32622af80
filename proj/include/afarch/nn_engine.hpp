#pragma once

// Dense feed-forward classifier trained full-batch with Adam.

#include <afarch/af_zoo.hpp>
#include <afarch/random.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <span>
#include <vector>

namespace afarch {

inline constexpr int kHiddenWidth = 64;

/// y = W x + b, with W stored fan_out x fan_in.
struct LinearLayer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;

    int fan_in() const { return static_cast<int>(weight.cols()); }
    int fan_out() const { return static_cast<int>(weight.rows()); }
};

struct Network {
    int input_dim = 0;
    int hidden_dim = kHiddenWidth;
    int output_dim = 0;
    std::vector<LinearLayer> layers;
    Architecture afs;
    std::vector<ActivationState<double>> af_states;

    int n_layers() const { return static_cast<int>(layers.size()); }
    Eigen::Index n_parameters() const;
};

/// Weights and biases uniform on (-k, k), k = 1/sqrt(fan_in). Throws
/// std::invalid_argument for input_dim < 1, n_classes < 2, empty arch or
/// hidden < 1.
Network init_network(int input_dim, int n_classes, const Architecture& arch, Rng& rng,
                     int hidden = kHiddenWidth);

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;           // input to each linear layer
    std::vector<Eigen::MatrixXd> pre_activations;  // z = X W^T + b per layer
};

struct ForwardResult {
    ForwardCache cache;
    Eigen::MatrixXd outputs;  // n x C
};

/// Rows of X are samples. Sets every activation state to `mode`; stochastic
/// draws are cached in the network for the matching backward.
ForwardResult forward(Network& net, const Eigen::Ref<const Eigen::MatrixXd>& X, Mode mode,
                      Rng& rng);

struct LossResult {
    double loss = 0.0;
    Eigen::MatrixXd grad_outputs;
};

/// Mean softmax cross-entropy treating `outputs` as logits, whatever the
/// output activation was. Labels must lie in [0, outputs.cols()).
LossResult cross_entropy_loss(const Eigen::Ref<const Eigen::MatrixXd>& outputs,
                              std::span<const int> labels);

struct Gradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
    std::vector<double> prelu;  // per layer; zero where the layer is not PReLU
};

Gradients backward(const Network& net, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& grad_outputs);

// Flat parameter layout: for each layer, W (column-major) then b; then the
// PReLU slopes of the PReLU layers in layer order.
Eigen::VectorXd flatten_parameters(const Network& net);
void assign_parameters(Network& net, const Eigen::Ref<const Eigen::VectorXd>& flat);
Eigen::VectorXd flatten_gradients(const Network& net, const Gradients& grads);

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long t = 0;

    explicit AdamState(Eigen::Index n_params, AdamConfig cfg = {})
        : config(cfg), m(Eigen::VectorXd::Zero(n_params)), v(Eigen::VectorXd::Zero(n_params)) {}
};

void adam_step(AdamState& adam, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads);

struct TrainConfig {
    int max_epochs = 300;
    int patience = 10;
    double min_delta = 0.001;
};

/// Stops once the epoch-over-epoch accuracy gain has stayed below
/// min_delta for `patience` consecutive epochs.
class EarlyStopping {
public:
    explicit EarlyStopping(const TrainConfig& config);
    /// Feeds one epoch's accuracy; returns true when training should stop.
    bool update(double accuracy);
    int stalled_epochs() const { return stalled_; }

private:
    double min_delta_;
    int patience_;
    int stalled_ = 0;
    bool has_previous_ = false;
    double previous_ = 0.0;
};

struct EpochRecord {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    bool failed = false;
    bool early_stopped = false;
    int epochs() const { return static_cast<int>(history.size()); }
};

/// Full-batch training: the whole of X is one batch per epoch. A non-finite
/// loss or gradient stops training and sets `failed`.
TrainResult train(Network& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                  std::span<const int> y, const TrainConfig& config, Rng& rng);

/// Argmax per row, ties to the lowest class index.
std::vector<int> predict_labels(const Eigen::Ref<const Eigen::MatrixXd>& outputs);
double accuracy(const Eigen::Ref<const Eigen::MatrixXd>& outputs, std::span<const int> labels);

/// Eval-mode forward pass followed by `accuracy`.
double predict_accuracy(Network& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                        std::span<const int> y, Rng& rng);

/// Model dump. Field order: input_dim, hidden_dim, output_dim, architecture,
/// layers[{weight (row-major rows), bias, prelu_slope}].
nlohmann::ordered_json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

}  // namespace afarch
