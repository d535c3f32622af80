#include <afarch/nn_engine.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace afarch {

Eigen::Index Network::n_parameters() const {
    Eigen::Index n = 0;
    for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
    for (auto a : afs) n += info(a).n_trainable_params;
    return n;
}

Network init_network(int input_dim, int n_classes, const Architecture& arch, Rng& rng, int hidden) {
    if (input_dim < 1) throw std::invalid_argument("init_network: input_dim must be >= 1");
    if (n_classes < 2) throw std::invalid_argument("init_network: need at least 2 classes");
    if (arch.empty()) throw std::invalid_argument("init_network: architecture is empty");
    if (hidden < 1) throw std::invalid_argument("init_network: hidden width must be >= 1");

    Network net;
    net.input_dim = input_dim;
    net.hidden_dim = hidden;
    net.output_dim = n_classes;
    net.afs = arch;
    net.af_states.resize(arch.size());

    const int L = static_cast<int>(arch.size());
    for (int l = 0; l < L; ++l) {
        const int fan_in = l == 0 ? input_dim : hidden;
        const int fan_out = l == L - 1 ? n_classes : hidden;
        const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-k, k);
        LinearLayer layer;
        layer.weight.resize(fan_out, fan_in);
        layer.bias.resize(fan_out);
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = dist(rng);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

ForwardResult forward(Network& net, const Eigen::Ref<const Eigen::MatrixXd>& X, Mode mode,
                      Rng& rng) {
    if (X.cols() != net.input_dim)
        throw std::invalid_argument("forward: expected " + std::to_string(net.input_dim) +
                                    " input columns, got " + std::to_string(X.cols()));
    ForwardResult result;
    auto& cache = result.cache;
    cache.inputs.reserve(net.layers.size());
    cache.pre_activations.reserve(net.layers.size());

    Eigen::MatrixXd a = X;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        Eigen::MatrixXd z(a.rows(), layer.fan_out());
        z.noalias() = a * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        auto& state = net.af_states[l];
        state.mode = mode;
        Eigen::MatrixXd next = af_forward<double>(net.afs[l], state, z, rng);
        cache.inputs.push_back(std::move(a));
        cache.pre_activations.push_back(std::move(z));
        a = std::move(next);
    }
    result.outputs = std::move(a);
    return result;
}

LossResult cross_entropy_loss(const Eigen::Ref<const Eigen::MatrixXd>& outputs,
                              std::span<const int> labels) {
    const Eigen::Index n = outputs.rows();
    const Eigen::Index C = outputs.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::invalid_argument("cross_entropy_loss: label count does not match rows");
    if (n == 0) throw std::invalid_argument("cross_entropy_loss: no rows");

    LossResult result;
    result.grad_outputs.resize(n, C);
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= C)
            throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(label) +
                                        " out of range");
        const double m = outputs.row(r).maxCoeff();
        const auto shifted = (outputs.row(r).array() - m).exp();
        const double sum = shifted.sum();
        total += std::log(sum) + m - outputs(r, label);
        result.grad_outputs.row(r) = shifted / sum;
        result.grad_outputs(r, label) -= 1.0;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    result.loss = total * inv_n;
    result.grad_outputs *= inv_n;
    return result;
}

Gradients backward(const Network& net, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& grad_outputs) {
    const std::size_t L = net.layers.size();
    if (cache.inputs.size() != L || cache.pre_activations.size() != L)
        throw std::invalid_argument("backward: cache does not match network depth");
    if (grad_outputs.rows() != cache.pre_activations.back().rows() ||
        grad_outputs.cols() != cache.pre_activations.back().cols())
        throw std::invalid_argument("backward: grad_outputs shape mismatch");

    Gradients g;
    g.weight.resize(L);
    g.bias.resize(L);
    g.prelu.assign(L, 0.0);

    Eigen::MatrixXd delta = grad_outputs;
    for (std::size_t i = L; i-- > 0;) {
        const auto& layer = net.layers[i];
        auto af = af_backward<double>(net.afs[i], net.af_states[i], cache.pre_activations[i], delta);
        if (!af.grad_params.empty()) g.prelu[i] = af.grad_params.front();
        const Eigen::MatrixXd& dz = af.grad_x;
        g.weight[i].noalias() = dz.transpose() * cache.inputs[i];
        g.bias[i] = dz.colwise().sum().transpose();
        if (i > 0) {
            delta.resize(dz.rows(), layer.fan_in());
            delta.noalias() = dz * layer.weight;
        }
    }
    return g;
}

Eigen::VectorXd flatten_parameters(const Network& net) {
    Eigen::VectorXd flat(net.n_parameters());
    Eigen::Index pos = 0;
    for (const auto& layer : net.layers) {
        flat.segment(pos, layer.weight.size()) = layer.weight.reshaped();
        pos += layer.weight.size();
        flat.segment(pos, layer.bias.size()) = layer.bias;
        pos += layer.bias.size();
    }
    for (std::size_t l = 0; l < net.afs.size(); ++l)
        if (net.afs[l] == Activation::PReLU) flat(pos++) = net.af_states[l].prelu_slope;
    return flat;
}

void assign_parameters(Network& net, const Eigen::Ref<const Eigen::VectorXd>& flat) {
    if (flat.size() != net.n_parameters())
        throw std::invalid_argument("assign_parameters: size mismatch");
    Eigen::Index pos = 0;
    for (auto& layer : net.layers) {
        layer.weight.reshaped() = flat.segment(pos, layer.weight.size());
        pos += layer.weight.size();
        layer.bias = flat.segment(pos, layer.bias.size());
        pos += layer.bias.size();
    }
    for (std::size_t l = 0; l < net.afs.size(); ++l)
        if (net.afs[l] == Activation::PReLU) net.af_states[l].prelu_slope = flat(pos++);
}

Eigen::VectorXd flatten_gradients(const Network& net, const Gradients& grads) {
    Eigen::VectorXd flat(net.n_parameters());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        flat.segment(pos, grads.weight[l].size()) = grads.weight[l].reshaped();
        pos += grads.weight[l].size();
        flat.segment(pos, grads.bias[l].size()) = grads.bias[l];
        pos += grads.bias[l].size();
    }
    for (std::size_t l = 0; l < net.afs.size(); ++l)
        if (net.afs[l] == Activation::PReLU) flat(pos++) = grads.prelu[l];
    return flat;
}

void adam_step(AdamState& adam, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads) {
    if (params.size() != grads.size() || params.size() != adam.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    const auto& c = adam.config;
    adam.t += 1;
    adam.m = c.beta1 * adam.m + (1.0 - c.beta1) * grads;
    adam.v = c.beta2 * adam.v + (1.0 - c.beta2) * grads.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(adam.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(adam.t));
    params.array() -= c.lr * (adam.m.array() / bc1) / ((adam.v.array() / bc2).sqrt() + c.eps);
}

EarlyStopping::EarlyStopping(const TrainConfig& config)
    : min_delta_(config.min_delta), patience_(config.patience) {
    if (config.patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool EarlyStopping::update(double accuracy) {
    if (has_previous_) {
        if (accuracy - previous_ < min_delta_)
            ++stalled_;
        else
            stalled_ = 0;
    }
    has_previous_ = true;
    previous_ = accuracy;
    return stalled_ >= patience_;
}

TrainResult train(Network& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                  std::span<const int> y, const TrainConfig& config, Rng& rng) {
    if (config.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    TrainResult result;
    AdamState adam(net.n_parameters());
    Eigen::VectorXd params = flatten_parameters(net);
    EarlyStopping stopper(config);

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        auto fr = forward(net, X, Mode::train, rng);
        auto loss = cross_entropy_loss(fr.outputs, y);
        if (!std::isfinite(loss.loss)) {
            result.failed = true;
            break;
        }
        const double acc = accuracy(fr.outputs, y);
        result.history.push_back({loss.loss, acc});

        const Gradients grads = backward(net, fr.cache, loss.grad_outputs);
        const Eigen::VectorXd flat = flatten_gradients(net, grads);
        if (!flat.allFinite()) {
            result.failed = true;
            break;
        }
        adam_step(adam, params, flat);
        assign_parameters(net, params);

        if (stopper.update(acc)) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

std::vector<int> predict_labels(const Eigen::Ref<const Eigen::MatrixXd>& outputs) {
    std::vector<int> labels(static_cast<std::size_t>(outputs.rows()), 0);
    for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < outputs.cols(); ++c)
            if (outputs(r, c) > outputs(r, best)) best = c;
        labels[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return labels;
}

double accuracy(const Eigen::Ref<const Eigen::MatrixXd>& outputs, std::span<const int> labels) {
    if (static_cast<Eigen::Index>(labels.size()) != outputs.rows())
        throw std::invalid_argument("accuracy: label count does not match rows");
    if (labels.empty()) return 0.0;
    const auto predicted = predict_labels(outputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double predict_accuracy(Network& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                        std::span<const int> y, Rng& rng) {
    const auto fr = forward(net, X, Mode::eval, rng);
    return accuracy(fr.outputs, y);
}

nlohmann::ordered_json network_to_json(const Network& net) {
    nlohmann::ordered_json j;
    j["input_dim"] = net.input_dim;
    j["hidden_dim"] = net.hidden_dim;
    j["output_dim"] = net.output_dim;
    j["architecture"] = architecture_names(net.afs);
    auto layers = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        nlohmann::ordered_json lj;
        auto rows = nlohmann::ordered_json::array();
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            std::vector<double> row(layer.weight.cols());
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) row[c] = layer.weight(r, c);
            rows.push_back(row);
        }
        lj["weight"] = rows;
        lj["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
        lj["prelu_slope"] = net.af_states[l].prelu_slope;
        layers.push_back(lj);
    }
    j["layers"] = layers;
    return j;
}

Network network_from_json(const nlohmann::json& j) {
    Network net;
    net.input_dim = j.at("input_dim").get<int>();
    net.hidden_dim = j.at("hidden_dim").get<int>();
    net.output_dim = j.at("output_dim").get<int>();
    for (const auto& name : j.at("architecture")) net.afs.push_back(parse_af_name(name.get<std::string>()));
    net.af_states.resize(net.afs.size());
    const auto& layers = j.at("layers");
    if (layers.size() != net.afs.size())
        throw std::invalid_argument("model dump: layer count does not match architecture");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lj = layers[l];
        const auto& rows = lj.at("weight");
        LinearLayer layer;
        const auto n_rows = static_cast<Eigen::Index>(rows.size());
        const auto n_cols = n_rows ? static_cast<Eigen::Index>(rows[0].size()) : 0;
        layer.weight.resize(n_rows, n_cols);
        for (Eigen::Index r = 0; r < n_rows; ++r)
            for (Eigen::Index c = 0; c < n_cols; ++c) layer.weight(r, c) = rows[r].at(c).get<double>();
        const auto bias = lj.at("bias").get<std::vector<double>>();
        layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
        net.af_states[l].prelu_slope = lj.at("prelu_slope").get<double>();
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace afarch
