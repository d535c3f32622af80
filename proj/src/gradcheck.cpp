#include <afarch/gradcheck.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afarch {

bool is_step_like(Activation kind) {
    return kind == Activation::Ceil || kind == Activation::Floor || kind == Activation::Round ||
           kind == Activation::Trunc;
}

SafeDomain safe_domain(Activation kind) {
    using A = Activation;
    const double lam = af_constants::shrink_lambda;
    switch (kind) {
    case A::Hardshrink:
    case A::Softshrink: return {-3.0, 3.0, {-lam, lam}};
    case A::Hardtanh: return {-3.0, 3.0, {-1.0, 1.0}};
    case A::ReLU6: return {-3.0, 9.0, {0.0, 6.0}};
    case A::ELU:
    case A::LeakyReLU:
    case A::PReLU:
    case A::ReLU:
    case A::RReLU:
    case A::SELU:
    case A::CELU:
    case A::Abs:
    case A::Angle: return {-5.0, 5.0, {0.0}};
    case A::Acos:
    case A::Asin: return {-1.0 + 1e-3, 1.0 - 1e-3, {}};
    case A::Digamma: return {0.1, 8.0, {}};
    case A::Log:
    case A::Log10: return {0.05, 10.0, {}};
    case A::Tan: return {-1.4, 1.4, {}};
    case A::Frac: return {-5.0, 5.0, {0.0}, 1.0};
    case A::CLogLogM: return {-4.0, 3.0, {}};
    case A::Softmin:
    case A::Softmax:
    case A::LogSoftmax:
    case A::GumbelSoftmax: return {-3.0, 3.0, {}};
    default: return {-5.0, 5.0, {}};
    }
}

namespace {

bool near_kink(double x, const SafeDomain& d, double margin) {
    for (double k : d.kinks) {
        if (d.kink_period > 0.0) {
            const double r = std::remainder(x - k, d.kink_period);
            if (std::abs(r) < margin) return true;
        } else if (std::abs(x - k) < margin) {
            return true;
        }
    }
    return false;
}

double draw_point(const SafeDomain& d, double margin, Rng& rng) {
    std::uniform_real_distribution<double> dist(d.lo, d.hi);
    for (;;) {
        const double x = dist(rng);
        if (!near_kink(x, d, margin)) return x;
    }
}

struct Tally {
    const GradCheckOptions& opt;
    AfCheckResult& res;

    void add(double analytic, double numeric) {
        const double err = std::abs(analytic - numeric);
        const double scale = std::max(std::abs(analytic), std::abs(numeric));
        res.max_abs_error = std::max(res.max_abs_error, err);
        if (scale > 0.0) res.max_rel_error = std::max(res.max_rel_error, err / scale);
        if (!(err <= std::max(opt.abs_tol, opt.rel_tol * scale))) ++res.failures;
    }
};

}  // namespace

AfCheckResult check_activation(Activation kind, Rng& rng, const GradCheckOptions& opt) {
    const ActivationInfo& meta = info(kind);
    const SafeDomain dom = safe_domain(kind);
    AfCheckResult res;
    res.kind = kind;
    res.step_like = is_step_like(kind);

    const bool vectorwise = meta.arity == Arity::vectorwise;
    const Eigen::Index cols = vectorwise ? opt.row_width : opt.points;
    const Eigen::Index rows = vectorwise ? (opt.points + opt.row_width - 1) / opt.row_width : 1;
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = draw_point(dom, opt.kink_margin, rng);

    ActivationState<double> state;
    state.mode = Mode::train;
    if (kind == Activation::PReLU) state.prelu_slope = 0.1 + 0.4 * uniform01<double>(rng);
    const Eigen::MatrixXd y = af_forward<double>(kind, state, x, rng);

    Eigen::MatrixXd upstream(rows, cols);
    if (vectorwise) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = u(rng);
    } else {
        upstream.setOnes();
    }
    const AfGradient<double> grad = af_backward<double>(kind, state, x, upstream);
    res.points = static_cast<int>(x.size());

    if (res.step_like) {
        for (Eigen::Index i = 0; i < grad.grad_x.size(); ++i) {
            const double g = grad.grad_x.data()[i];
            res.max_abs_error = std::max(res.max_abs_error, std::abs(g));
            if (g != 0.0) ++res.failures;
        }
        res.passed = res.failures == 0;
        return res;
    }

    Tally tally{opt, res};
    const double h = opt.step;
    auto objective = [&](const Eigen::MatrixXd& xs, const ActivationState<double>& st) {
        return (af_forward_cached<double>(kind, st, xs).array() * upstream.array()).sum();
    };
    if (vectorwise) {
        Eigen::MatrixXd xp = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double orig = x.data()[i];
            xp.data()[i] = orig + h;
            const double fp = objective(xp, state);
            xp.data()[i] = orig - h;
            const double fm = objective(xp, state);
            xp.data()[i] = orig;
            tally.add(grad.grad_x.data()[i], (fp - fm) / (2.0 * h));
        }
    } else {
        // elementwise: one shifted evaluation covers all points
        const Eigen::MatrixXd fp = af_forward_cached<double>(kind, state, (x.array() + h).matrix());
        const Eigen::MatrixXd fm = af_forward_cached<double>(kind, state, (x.array() - h).matrix());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            tally.add(grad.grad_x.data()[i], (fp.data()[i] - fm.data()[i]) / (2.0 * h));
    }

    if (kind == Activation::PReLU) {
        ActivationState<double> plus = state, minus = state;
        plus.prelu_slope += h;
        minus.prelu_slope -= h;
        tally.add(grad.grad_params.at(0), (objective(x, plus) - objective(x, minus)) / (2.0 * h));
    }
    (void)y;
    res.passed = res.failures == 0;
    return res;
}

std::vector<AfCheckResult> check_all_activations(std::uint64_t seed, const GradCheckOptions& options) {
    std::vector<AfCheckResult> out;
    for (const auto& meta : af_registry()) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(meta.kind)));
        out.push_back(check_activation(meta.kind, rng, options));
    }
    return out;
}

NetworkCheckResult check_network(const Architecture& arch, std::uint64_t seed, int input_dim, int n_classes,
                                 int hidden, int n_samples) {
    for (auto kind : arch)
        if (info(kind).stochastic)
            throw std::invalid_argument("network gradient check needs deterministic activations");

    Rng rng(seed);
    Network net = init_network(input_dim, n_classes, arch, rng, hidden);
    Eigen::MatrixXd X(n_samples, input_dim);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
    std::vector<int> y(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) y[static_cast<std::size_t>(i)] = i % n_classes;

    auto loss_at = [&](const Eigen::VectorXd& params) {
        assign_parameters(net, params);
        const ForwardResult fr = forward(net, X, Mode::eval, rng);
        return cross_entropy_loss(fr.outputs, y).loss;
    };

    const Eigen::VectorXd theta = flatten_parameters(net);
    const ForwardResult fr = forward(net, X, Mode::eval, rng);
    const LossResult lr = cross_entropy_loss(fr.outputs, y);
    const Eigen::VectorXd analytic = flatten_gradients(net, backward(net, fr.cache, lr.grad_outputs));

    NetworkCheckResult res;
    res.n_parameters = theta.size();
    const double h = 1e-6;
    int within = 0;
    Eigen::VectorXd probe = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + h;
        const double fp = loss_at(probe);
        probe[i] = theta[i] - h;
        const double fm = loss_at(probe);
        probe[i] = theta[i];
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic[i] - numeric);
        // gradients below 1e-7 are compared absolutely
        const double rel = err / std::max({std::abs(analytic[i]), std::abs(numeric), 1e-7});
        res.max_rel_error = std::max(res.max_rel_error, rel);
        if (rel <= 1e-4) ++within;
    }
    assign_parameters(net, theta);
    res.fraction_within_1e4 = theta.size() > 0 ? static_cast<double>(within) / static_cast<double>(theta.size()) : 1.0;
    res.passed = res.fraction_within_1e4 >= 0.95 && res.max_rel_error <= 1e-3;
    return res;
}

}  // namespace afarch
