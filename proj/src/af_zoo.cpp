#include <afarch/af_zoo.hpp>
#include <afarch/special_functions.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afarch {

namespace {

constexpr ActivationInfo ew(Activation k, std::string_view n) {
    return {k, n, Arity::elementwise, false, 0};
}

constexpr std::array<ActivationInfo, kNumActivations> kRegistry = {{
    ew(Activation::ELU, "ELU"),
    ew(Activation::Hardshrink, "Hardshrink"),
    ew(Activation::Hardtanh, "Hardtanh"),
    ew(Activation::LeakyReLU, "LeakyReLU"),
    ew(Activation::LogSigmoid, "LogSigmoid"),
    {Activation::PReLU, "PReLU", Arity::elementwise, false, 1},
    ew(Activation::ReLU, "ReLU"),
    ew(Activation::ReLU6, "ReLU6"),
    {Activation::RReLU, "RReLU", Arity::elementwise, true, 0},
    ew(Activation::SELU, "SELU"),
    ew(Activation::CELU, "CELU"),
    ew(Activation::GELU, "GELU"),
    ew(Activation::Sigmoid, "Sigmoid"),
    ew(Activation::Softplus, "Softplus"),
    ew(Activation::Softshrink, "Softshrink"),
    ew(Activation::Softsign, "Softsign"),
    ew(Activation::Tanh, "Tanh"),
    ew(Activation::Tanhshrink, "Tanhshrink"),
    {Activation::Softmin, "Softmin", Arity::vectorwise, false, 0},
    {Activation::Softmax, "Softmax", Arity::vectorwise, false, 0},
    {Activation::LogSoftmax, "LogSoftmax", Arity::vectorwise, false, 0},
    ew(Activation::Abs, "Abs"),
    ew(Activation::Acos, "Acos"),
    ew(Activation::Angle, "Angle"),
    ew(Activation::Asin, "Asin"),
    ew(Activation::Atan, "Atan"),
    ew(Activation::Ceil, "Ceil"),
    ew(Activation::Cos, "Cos"),
    ew(Activation::Cosh, "Cosh"),
    ew(Activation::Digamma, "Digamma"),
    ew(Activation::Erf, "Erf"),
    ew(Activation::Erfc, "Erfc"),
    ew(Activation::Exp, "Exp"),
    ew(Activation::Floor, "Floor"),
    ew(Activation::Frac, "Frac"),
    {Activation::GumbelSoftmax, "GumbelSoftmax", Arity::vectorwise, true, 0},
    ew(Activation::Log, "Log"),
    ew(Activation::Log10, "Log10"),
    ew(Activation::Neg, "Neg"),
    ew(Activation::Round, "Round"),
    ew(Activation::Sin, "Sin"),
    ew(Activation::Sinh, "Sinh"),
    ew(Activation::Tan, "Tan"),
    ew(Activation::Trunc, "Trunc"),
    ew(Activation::Mish, "Mish"),
    ew(Activation::GeneralizedSwish, "GeneralizedSwish"),
    ew(Activation::SigmoidDerivative, "SigmoidDerivative"),
    ew(Activation::CLogLogM, "CLogLogM"),
}};

constexpr bool registry_is_ordered() {
    for (int i = 0; i < kNumActivations; ++i)
        if (static_cast<int>(kRegistry[i].kind) != i) return false;
    return true;
}
static_assert(registry_is_ordered());

template <typename Scalar>
using ConstRef = Eigen::Ref<const Matrix<Scalar>>;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar softplus(Scalar x) {
    const auto threshold = static_cast<Scalar>(af_constants::softplus_threshold);
    return x > threshold ? x : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar softplus_grad(Scalar x) {
    const auto threshold = static_cast<Scalar>(af_constants::softplus_threshold);
    return x > threshold ? Scalar(1) : sigmoid(x);
}

template <typename Scalar>
Matrix<Scalar> row_softmax(const Matrix<Scalar>& x) {
    const Vector<Scalar> row_max = x.rowwise().maxCoeff();
    Matrix<Scalar> e = (x.colwise() - row_max).array().exp().matrix();
    const Vector<Scalar> sums = e.rowwise().sum();
    for (Eigen::Index r = 0; r < e.rows(); ++r) e.row(r) /= sums(r);
    return e;
}

template <typename Scalar>
Matrix<Scalar> row_log_softmax(const Matrix<Scalar>& x) {
    const Vector<Scalar> row_max = x.rowwise().maxCoeff();
    Matrix<Scalar> shifted = x.colwise() - row_max;
    const Vector<Scalar> lse = shifted.array().exp().rowwise().sum().log().matrix();
    shifted.colwise() -= lse;
    return shifted;
}

// s (.) (u - (s . u) 1), row by row
template <typename Scalar>
Matrix<Scalar> softmax_vjp(const Matrix<Scalar>& s, const ConstRef<Scalar>& u) {
    const Vector<Scalar> dots = s.cwiseProduct(u).rowwise().sum();
    return s.cwiseProduct(u.colwise() - dots);
}

template <typename Scalar>
Matrix<Scalar> forward_impl(Activation kind, const ConstRef<Scalar>& x, Scalar prelu_slope,
                            const Matrix<Scalar>* rrelu_slopes, Mode mode,
                            const Matrix<Scalar>* gumbel_noise) {
    using std::abs;
    namespace c = af_constants;
    const auto lam = static_cast<Scalar>(c::shrink_lambda);
    auto map = [&x](auto f) -> Matrix<Scalar> { return x.unaryExpr(f); };

    switch (kind) {
    case Activation::ELU:
        return map([](Scalar v) {
            return v > 0 ? v : static_cast<Scalar>(c::elu_alpha) * std::expm1(v);
        });
    case Activation::Hardshrink:
        return map([lam](Scalar v) { return (v > lam || v < -lam || std::isnan(v)) ? v : Scalar(0); });
    case Activation::Hardtanh:
        return map([](Scalar v) {
            if (std::isnan(v)) return v;
            return std::clamp(v, Scalar(-1), Scalar(1));
        });
    case Activation::LeakyReLU:
        return map([](Scalar v) { return v > 0 ? v : static_cast<Scalar>(c::leaky_slope) * v; });
    case Activation::LogSigmoid:
        return map([](Scalar v) { return std::min(v, Scalar(0)) - std::log1p(std::exp(-abs(v))); });
    case Activation::PReLU:
        return map([a = prelu_slope](Scalar v) { return v >= 0 ? v : a * v; });
    case Activation::ReLU:
        return map([](Scalar v) { return v > 0 ? v : (std::isnan(v) ? v : Scalar(0)); });
    case Activation::ReLU6:
        return map([](Scalar v) {
            if (std::isnan(v)) return v;
            return std::min(std::max(v, Scalar(0)), Scalar(6));
        });
    case Activation::RReLU: {
        if (mode == Mode::eval || rrelu_slopes == nullptr) {
            const auto a = static_cast<Scalar>(c::rrelu_eval_slope);
            return map([a](Scalar v) { return v >= 0 ? v : a * v; });
        }
        Matrix<Scalar> out = x;
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            const Scalar v = out.data()[i];
            if (!(v >= 0)) out.data()[i] = rrelu_slopes->data()[i] * v;
        }
        return out;
    }
    case Activation::SELU:
        return map([](Scalar v) {
            const auto scale = static_cast<Scalar>(c::selu_scale);
            return scale * (v > 0 ? v : static_cast<Scalar>(c::selu_alpha) * std::expm1(v));
        });
    case Activation::CELU:
        return map([](Scalar v) {
            const auto a = static_cast<Scalar>(c::celu_alpha);
            return v > 0 ? v : a * std::expm1(v / a);
        });
    case Activation::GELU:
        return map([](Scalar v) {
            return Scalar(0.5) * v * (Scalar(1) + special::erf(v / std::numbers::sqrt2_v<Scalar>));
        });
    case Activation::Sigmoid:
        return map([](Scalar v) { return sigmoid(v); });
    case Activation::Softplus:
        return map([](Scalar v) { return softplus(v); });
    case Activation::Softshrink:
        return map([lam](Scalar v) {
            if (v > lam) return v - lam;
            if (v < -lam) return v + lam;
            return std::isnan(v) ? v : Scalar(0);
        });
    case Activation::Softsign:
        return map([](Scalar v) { return v / (Scalar(1) + abs(v)); });
    case Activation::Tanh:
        return map([](Scalar v) { return std::tanh(v); });
    case Activation::Tanhshrink:
        return map([](Scalar v) { return v - std::tanh(v); });
    case Activation::Softmin:
        return row_softmax<Scalar>(-x);
    case Activation::Softmax:
        return row_softmax<Scalar>(x);
    case Activation::LogSoftmax:
        return row_log_softmax<Scalar>(x);
    case Activation::Abs:
        return map([](Scalar v) { return abs(v); });
    case Activation::Acos:
        return map([](Scalar v) { return std::acos(v); });
    case Activation::Angle:
        return map([](Scalar v) {
            if (std::isnan(v)) return v;
            return v < 0 ? std::numbers::pi_v<Scalar> : Scalar(0);
        });
    case Activation::Asin:
        return map([](Scalar v) { return std::asin(v); });
    case Activation::Atan:
        return map([](Scalar v) { return std::atan(v); });
    case Activation::Ceil:
        return map([](Scalar v) { return std::ceil(v); });
    case Activation::Cos:
        return map([](Scalar v) { return std::cos(v); });
    case Activation::Cosh:
        return map([](Scalar v) { return std::cosh(v); });
    case Activation::Digamma:
        return map([](Scalar v) { return special::digamma(v); });
    case Activation::Erf:
        return map([](Scalar v) { return special::erf(v); });
    case Activation::Erfc:
        return map([](Scalar v) { return special::erfc(v); });
    case Activation::Exp:
        return map([](Scalar v) { return std::exp(v); });
    case Activation::Floor:
        return map([](Scalar v) { return std::floor(v); });
    case Activation::Frac:
        return map([](Scalar v) { return v - std::trunc(v); });
    case Activation::GumbelSoftmax: {
        const auto tau = static_cast<Scalar>(c::gumbel_tau);
        return row_softmax<Scalar>((x + *gumbel_noise) / tau);
    }
    case Activation::Log:
        return map([](Scalar v) { return std::log(v); });
    case Activation::Log10:
        return map([](Scalar v) { return std::log10(v); });
    case Activation::Neg:
        return -x;
    case Activation::Round:
        // half to even
        return map([](Scalar v) { return std::nearbyint(v); });
    case Activation::Sin:
        return map([](Scalar v) { return std::sin(v); });
    case Activation::Sinh:
        return map([](Scalar v) { return std::sinh(v); });
    case Activation::Tan:
        return map([](Scalar v) { return std::tan(v); });
    case Activation::Trunc:
        return map([](Scalar v) { return std::trunc(v); });
    case Activation::Mish:
        return map([](Scalar v) { return v * std::tanh(softplus(v)); });
    case Activation::GeneralizedSwish:
        return map([](Scalar v) { return v * sigmoid(std::exp(-v)); });
    case Activation::SigmoidDerivative:
        // e^{-x} sigmoid(x)^2 == sigmoid(x) sigmoid(-x); the right side does
        // not overflow for large negative x.
        return map([](Scalar v) { return sigmoid(v) * sigmoid(-v); });
    case Activation::CLogLogM:
        return map([](Scalar v) {
            return Scalar(1) - Scalar(2) * std::exp(-static_cast<Scalar>(c::cloglogm_rate) * std::exp(v));
        });
    }
    throw std::logic_error("unhandled activation");
}

template <typename Scalar>
void require_cache(Activation kind, const ActivationState<Scalar>& state, const ConstRef<Scalar>& x) {
    const bool needs_rrelu = kind == Activation::RReLU && state.mode == Mode::train;
    const bool needs_gumbel = kind == Activation::GumbelSoftmax;
    if (!needs_rrelu && !needs_gumbel) return;
    const Matrix<Scalar>& cached = needs_rrelu ? state.rrelu_slopes : state.gumbel_noise;
    if (!state.has_cache || cached.rows() != x.rows() || cached.cols() != x.cols()) {
        throw std::logic_error(std::string(name_of(kind)) +
                               ": no cached forward draws matching this input");
    }
}

}  // namespace

std::span<const ActivationInfo, kNumActivations> af_registry() { return kRegistry; }

const ActivationInfo& info(Activation kind) { return kRegistry.at(static_cast<std::size_t>(kind)); }

std::string_view name_of(Activation kind) { return info(kind).name; }

Activation activation_at(int index) {
    if (index < 0 || index >= kNumActivations)
        throw std::out_of_range("activation index " + std::to_string(index) + " out of range");
    return static_cast<Activation>(index);
}

Activation parse_af_name(std::string_view name) {
    for (const auto& entry : kRegistry)
        if (entry.name == name) return entry.kind;
    std::string msg = "unknown activation '" + std::string(name) + "'; valid names:";
    for (const auto& entry : kRegistry) {
        msg += ' ';
        msg += entry.name;
    }
    throw std::invalid_argument(msg);
}

Architecture standard_architecture(int n_layers) {
    if (n_layers < 2) throw std::invalid_argument("standard architecture needs at least 2 layers");
    Architecture arch(static_cast<std::size_t>(n_layers - 1), Activation::ReLU);
    arch.push_back(Activation::Softmax);
    return arch;
}

Architecture parse_architecture(std::string_view text) {
    constexpr std::string_view prefix = "standard:";
    if (text.starts_with(prefix)) {
        const auto digits = text.substr(prefix.size());
        int n = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (ec != std::errc{} || ptr != digits.data() + digits.size())
            throw std::invalid_argument("bad layer count in '" + std::string(text) + "'");
        return standard_architecture(n);
    }
    Architecture arch;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        auto token = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                        : comma - start);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        arch.push_back(parse_af_name(token));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return arch;
}

std::string format_architecture(const Architecture& arch) {
    std::string out;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        if (i) out += ',';
        out += name_of(arch[i]);
    }
    return out;
}

std::vector<std::string> architecture_names(const Architecture& arch) {
    std::vector<std::string> names;
    names.reserve(arch.size());
    for (auto a : arch) names.emplace_back(name_of(a));
    return names;
}

template <typename Scalar>
Matrix<Scalar> af_forward(Activation kind, ActivationState<Scalar>& state,
                          const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& x,
                          Rng& rng) {
    if (kind == Activation::RReLU && state.mode == Mode::train) {
        std::uniform_real_distribution<Scalar> slope(static_cast<Scalar>(af_constants::rrelu_lower),
                                                     static_cast<Scalar>(af_constants::rrelu_upper));
        state.rrelu_slopes.resize(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < state.rrelu_slopes.size(); ++i)
            state.rrelu_slopes.data()[i] = slope(rng);
        state.has_cache = true;
    } else if (kind == Activation::GumbelSoftmax) {
        state.gumbel_noise.resize(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < state.gumbel_noise.size(); ++i)
            state.gumbel_noise.data()[i] = special::sample_gumbel<Scalar>(rng);
        state.has_cache = true;
    }
    return forward_impl<Scalar>(kind, x, state.prelu_slope, &state.rrelu_slopes, state.mode,
                                &state.gumbel_noise);
}

template <typename Scalar>
Matrix<Scalar> af_forward_cached(Activation kind, const ActivationState<Scalar>& state,
                                 const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& x) {
    require_cache<Scalar>(kind, state, x);
    return forward_impl<Scalar>(kind, x, state.prelu_slope, &state.rrelu_slopes, state.mode,
                                &state.gumbel_noise);
}

template <typename Scalar>
AfGradient<Scalar> af_backward(Activation kind, const ActivationState<Scalar>& state,
                               const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& x,
                               const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& upstream) {
    using std::abs;
    namespace c = af_constants;
    if (x.rows() != upstream.rows() || x.cols() != upstream.cols())
        throw std::logic_error("af_backward: input and upstream shapes differ");
    require_cache<Scalar>(kind, state, x);

    AfGradient<Scalar> out;
    const auto lam = static_cast<Scalar>(c::shrink_lambda);
    // elementwise: grad = upstream * f'(x)
    auto chain = [&](auto deriv) {
        out.grad_x = upstream.cwiseProduct(x.unaryExpr(deriv));
    };
    auto zero = [&] { out.grad_x = Matrix<Scalar>::Zero(x.rows(), x.cols()); };

    switch (kind) {
    case Activation::ELU:
        chain([](Scalar v) { return v > 0 ? Scalar(1) : static_cast<Scalar>(c::elu_alpha) * std::exp(v); });
        break;
    case Activation::Hardshrink:
    case Activation::Softshrink:
        chain([lam](Scalar v) { return (v > lam || v < -lam) ? Scalar(1) : Scalar(0); });
        break;
    case Activation::Hardtanh:
        chain([](Scalar v) { return (v > Scalar(-1) && v < Scalar(1)) ? Scalar(1) : Scalar(0); });
        break;
    case Activation::LeakyReLU:
        chain([](Scalar v) { return v > 0 ? Scalar(1) : static_cast<Scalar>(c::leaky_slope); });
        break;
    case Activation::LogSigmoid:
        chain([](Scalar v) { return sigmoid(-v); });
        break;
    case Activation::PReLU: {
        const Scalar a = state.prelu_slope;
        chain([a](Scalar v) { return v >= 0 ? Scalar(1) : a; });
        const Scalar grad_a = upstream.cwiseProduct(x.cwiseMin(Scalar(0))).sum();
        out.grad_params.push_back(grad_a);
        break;
    }
    case Activation::ReLU:
        chain([](Scalar v) { return v > 0 ? Scalar(1) : Scalar(0); });
        break;
    case Activation::ReLU6:
        chain([](Scalar v) { return (v > 0 && v < Scalar(6)) ? Scalar(1) : Scalar(0); });
        break;
    case Activation::RReLU:
        if (state.mode == Mode::eval) {
            const auto a = static_cast<Scalar>(c::rrelu_eval_slope);
            chain([a](Scalar v) { return v >= 0 ? Scalar(1) : a; });
        } else {
            out.grad_x = upstream;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const Scalar v = x.data()[i];
                if (!(v >= 0)) out.grad_x.data()[i] *= state.rrelu_slopes.data()[i];
            }
        }
        break;
    case Activation::SELU:
        chain([](Scalar v) {
            const auto scale = static_cast<Scalar>(c::selu_scale);
            return scale * (v > 0 ? Scalar(1) : static_cast<Scalar>(c::selu_alpha) * std::exp(v));
        });
        break;
    case Activation::CELU:
        chain([](Scalar v) {
            return v > 0 ? Scalar(1) : std::exp(v / static_cast<Scalar>(c::celu_alpha));
        });
        break;
    case Activation::GELU:
        chain([](Scalar v) {
            const Scalar cdf = Scalar(0.5) * (Scalar(1) + special::erf(v / std::numbers::sqrt2_v<Scalar>));
            const Scalar pdf = std::exp(Scalar(-0.5) * v * v) * std::numbers::inv_sqrtpi_v<Scalar> /
                               std::numbers::sqrt2_v<Scalar>;
            return cdf + v * pdf;
        });
        break;
    case Activation::Sigmoid:
        chain([](Scalar v) {
            const Scalar s = sigmoid(v);
            return s * (Scalar(1) - s);
        });
        break;
    case Activation::Softplus:
        chain([](Scalar v) { return softplus_grad(v); });
        break;
    case Activation::Softsign:
        chain([](Scalar v) {
            const Scalar d = Scalar(1) + abs(v);
            return Scalar(1) / (d * d);
        });
        break;
    case Activation::Tanh:
        chain([](Scalar v) {
            const Scalar t = std::tanh(v);
            return Scalar(1) - t * t;
        });
        break;
    case Activation::Tanhshrink:
        chain([](Scalar v) {
            const Scalar t = std::tanh(v);
            return t * t;
        });
        break;
    case Activation::Softmin:
        out.grad_x = -softmax_vjp<Scalar>(row_softmax<Scalar>(-x), upstream);
        break;
    case Activation::Softmax:
        out.grad_x = softmax_vjp<Scalar>(row_softmax<Scalar>(x), upstream);
        break;
    case Activation::LogSoftmax: {
        const Matrix<Scalar> s = row_softmax<Scalar>(x);
        const Vector<Scalar> sums = upstream.rowwise().sum();
        out.grad_x = upstream - Matrix<Scalar>(s.array().colwise() * sums.array());
        break;
    }
    case Activation::Abs:
        chain([](Scalar v) { return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0)); });
        break;
    case Activation::Acos:
        chain([](Scalar v) { return Scalar(-1) / std::sqrt(Scalar(1) - v * v); });
        break;
    case Activation::Asin:
        chain([](Scalar v) { return Scalar(1) / std::sqrt(Scalar(1) - v * v); });
        break;
    case Activation::Atan:
        chain([](Scalar v) { return Scalar(1) / (Scalar(1) + v * v); });
        break;
    case Activation::Angle:
    case Activation::Ceil:
    case Activation::Floor:
    case Activation::Round:
    case Activation::Trunc:
        zero();
        break;
    case Activation::Cos:
        chain([](Scalar v) { return -std::sin(v); });
        break;
    case Activation::Cosh:
        chain([](Scalar v) { return std::sinh(v); });
        break;
    case Activation::Digamma:
        chain([](Scalar v) { return special::trigamma(v); });
        break;
    case Activation::Erf:
        chain([](Scalar v) { return Scalar(2) * std::numbers::inv_sqrtpi_v<Scalar> * std::exp(-v * v); });
        break;
    case Activation::Erfc:
        chain([](Scalar v) { return Scalar(-2) * std::numbers::inv_sqrtpi_v<Scalar> * std::exp(-v * v); });
        break;
    case Activation::Exp:
        chain([](Scalar v) { return std::exp(v); });
        break;
    case Activation::Frac:
        out.grad_x = upstream;
        break;
    case Activation::GumbelSoftmax: {
        const auto tau = static_cast<Scalar>(c::gumbel_tau);
        const Matrix<Scalar> s = row_softmax<Scalar>((x + state.gumbel_noise) / tau);
        out.grad_x = softmax_vjp<Scalar>(s, upstream) / tau;
        break;
    }
    case Activation::Log:
        chain([](Scalar v) { return Scalar(1) / v; });
        break;
    case Activation::Log10:
        chain([](Scalar v) { return Scalar(1) / (v * std::numbers::ln10_v<Scalar>); });
        break;
    case Activation::Neg:
        out.grad_x = -upstream;
        break;
    case Activation::Sin:
        chain([](Scalar v) { return std::cos(v); });
        break;
    case Activation::Sinh:
        chain([](Scalar v) { return std::cosh(v); });
        break;
    case Activation::Tan:
        chain([](Scalar v) {
            const Scalar t = std::tan(v);
            return Scalar(1) + t * t;
        });
        break;
    case Activation::Mish:
        chain([](Scalar v) {
            const Scalar t = std::tanh(softplus(v));
            return t + v * (Scalar(1) - t * t) * softplus_grad(v);
        });
        break;
    case Activation::GeneralizedSwish:
        chain([](Scalar v) {
            const Scalar e = std::exp(-v);
            const Scalar s = sigmoid(e);
            return s - v * e * s * (Scalar(1) - s);
        });
        break;
    case Activation::SigmoidDerivative:
        chain([](Scalar v) {
            const Scalar s = sigmoid(v);
            return s * sigmoid(-v) * (Scalar(1) - Scalar(2) * s);
        });
        break;
    case Activation::CLogLogM:
        chain([](Scalar v) {
            const auto rate = static_cast<Scalar>(c::cloglogm_rate);
            return Scalar(2) * rate * std::exp(v - rate * std::exp(v));
        });
        break;
    }
    return out;
}

template Matrix<double> af_forward(Activation, ActivationState<double>&,
                                   const Eigen::Ref<const Matrix<double>>&, Rng&);
template Matrix<float> af_forward(Activation, ActivationState<float>&,
                                  const Eigen::Ref<const Matrix<float>>&, Rng&);
template Matrix<double> af_forward_cached(Activation, const ActivationState<double>&,
                                          const Eigen::Ref<const Matrix<double>>&);
template Matrix<float> af_forward_cached(Activation, const ActivationState<float>&,
                                         const Eigen::Ref<const Matrix<float>>&);
template AfGradient<double> af_backward(Activation, const ActivationState<double>&,
                                        const Eigen::Ref<const Matrix<double>>&,
                                        const Eigen::Ref<const Matrix<double>>&);
template AfGradient<float> af_backward(Activation, const ActivationState<float>&,
                                       const Eigen::Ref<const Matrix<float>>&,
                                       const Eigen::Ref<const Matrix<float>>&);

Vector<double> af_forward(Activation kind, ActivationState<double>& state, const Vector<double>& x,
                          Rng& rng) {
    const Matrix<double> row = x.transpose();
    return af_forward<double>(kind, state, row, rng).transpose();
}

AfGradient<double> af_backward(Activation kind, const ActivationState<double>& state,
                               const Vector<double>& x, const Vector<double>& upstream) {
    const Matrix<double> xr = x.transpose();
    const Matrix<double> ur = upstream.transpose();
    auto g = af_backward<double>(kind, state, xr, ur);
    g.grad_x.transposeInPlace();
    return g;
}

}  // namespace afarch
