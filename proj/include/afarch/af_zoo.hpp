#pragma once

// The 48-function activation menu. Every function acts on a batch matrix
// whose rows are samples and whose columns are the nodes of one layer;
// vectorwise functions (Softmax family) normalize each row.

#include <afarch/random.hpp>

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace afarch {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Canonical order; the underlying value is the categorical index used by
/// every sampler.
enum class Activation : std::uint8_t {
    // framework activations
    ELU, Hardshrink, Hardtanh, LeakyReLU, LogSigmoid, PReLU, ReLU, ReLU6, RReLU,
    SELU, CELU, GELU, Sigmoid, Softplus, Softshrink, Softsign, Tanh, Tanhshrink,
    Softmin, Softmax, LogSoftmax,
    // math functions
    Abs, Acos, Angle, Asin, Atan, Ceil, Cos, Cosh, Digamma, Erf, Erfc, Exp, Floor,
    Frac, GumbelSoftmax, Log, Log10, Neg, Round, Sin, Sinh, Tan, Trunc,
    // literature additions
    Mish, GeneralizedSwish, SigmoidDerivative, CLogLogM,
};

inline constexpr int kNumActivations = 48;

enum class Arity : std::uint8_t { elementwise, vectorwise };

struct ActivationInfo {
    Activation kind;
    std::string_view name;
    Arity arity;
    bool stochastic;
    int n_trainable_params;
};

using Architecture = std::vector<Activation>;

std::span<const ActivationInfo, kNumActivations> af_registry();
const ActivationInfo& info(Activation kind);
std::string_view name_of(Activation kind);
inline int index_of(Activation kind) { return static_cast<int>(kind); }
Activation activation_at(int index);

/// Exact, case-sensitive lookup. Throws std::invalid_argument listing the
/// valid names on failure.
Activation parse_af_name(std::string_view name);

/// "Sinh,Abs,ReLU6" or the shorthands "standard:5" / "standard:10".
Architecture parse_architecture(std::string_view text);
std::string format_architecture(const Architecture& arch);
std::vector<std::string> architecture_names(const Architecture& arch);

/// Hidden layers ReLU, output Softmax.
Architecture standard_architecture(int n_layers);

// Fixed hyper-parameters of the parameterized functions.
namespace af_constants {
inline constexpr double shrink_lambda = 0.5;
inline constexpr double leaky_slope = 0.01;
inline constexpr double elu_alpha = 1.0;
inline constexpr double celu_alpha = 1.0;
inline constexpr double selu_alpha = 1.6732632423543772;
inline constexpr double selu_scale = 1.0507009873554805;
inline constexpr double softplus_threshold = 20.0;
inline constexpr double rrelu_lower = 1.0 / 8.0;
inline constexpr double rrelu_upper = 1.0 / 3.0;
inline constexpr double rrelu_eval_slope = (rrelu_lower + rrelu_upper) / 2.0;
inline constexpr double gumbel_tau = 1.0;
inline constexpr double prelu_init = 0.25;
inline constexpr double cloglogm_rate = 0.7;
}  // namespace af_constants

enum class Mode : std::uint8_t { train, eval };

/// Per-layer state: the trainable PReLU slope and the random draws cached
/// by the last forward pass of a stochastic function.
template <typename Scalar>
struct ActivationState {
    Scalar prelu_slope = static_cast<Scalar>(af_constants::prelu_init);
    Matrix<Scalar> rrelu_slopes;  // train mode only
    Matrix<Scalar> gumbel_noise;
    Mode mode = Mode::train;
    bool has_cache = false;
};

template <typename Scalar>
struct AfGradient {
    Matrix<Scalar> grad_x;
    std::vector<Scalar> grad_params;  // one entry for PReLU, else empty
};

/// Evaluates the activation. Stochastic kinds draw from `rng` (RReLU only in
/// train mode, GumbelSoftmax always) and cache the draws in `state`.
/// Domain violations yield NaN/inf; nothing is clamped.
template <typename Scalar>
Matrix<Scalar> af_forward(Activation kind, ActivationState<Scalar>& state,
                          const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& x,
                          Rng& rng);

/// Re-evaluates with the draws cached by the last af_forward. Used for
/// finite-difference checks of the stochastic kinds.
template <typename Scalar>
Matrix<Scalar> af_forward_cached(
    Activation kind, const ActivationState<Scalar>& state,
    const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& x);

/// Vector-Jacobian product J^T * upstream at `x`, reusing cached draws.
/// Throws std::logic_error for a stochastic kind without a cached forward.
template <typename Scalar>
AfGradient<Scalar> af_backward(
    Activation kind, const ActivationState<Scalar>& state,
    const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& x,
    const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& upstream);

extern template Matrix<double> af_forward(Activation, ActivationState<double>&,
                                          const Eigen::Ref<const Matrix<double>>&, Rng&);
extern template Matrix<float> af_forward(Activation, ActivationState<float>&,
                                         const Eigen::Ref<const Matrix<float>>&, Rng&);
extern template Matrix<double> af_forward_cached(Activation, const ActivationState<double>&,
                                                 const Eigen::Ref<const Matrix<double>>&);
extern template Matrix<float> af_forward_cached(Activation, const ActivationState<float>&,
                                                const Eigen::Ref<const Matrix<float>>&);
extern template AfGradient<double> af_backward(Activation, const ActivationState<double>&,
                                               const Eigen::Ref<const Matrix<double>>&,
                                               const Eigen::Ref<const Matrix<double>>&);
extern template AfGradient<float> af_backward(Activation, const ActivationState<float>&,
                                              const Eigen::Ref<const Matrix<float>>&,
                                              const Eigen::Ref<const Matrix<float>>&);

// Convenience overloads for a single vector (one sample).
Vector<double> af_forward(Activation kind, ActivationState<double>& state,
                          const Vector<double>& x, Rng& rng);
AfGradient<double> af_backward(Activation kind, const ActivationState<double>& state,
                               const Vector<double>& x, const Vector<double>& upstream);

}  // namespace afarch
