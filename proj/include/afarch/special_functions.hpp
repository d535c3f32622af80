#pragma once

// Scalar kernels used by the activation zoo: erf/erfc, digamma, trigamma and
// Gumbel noise. Templated on the floating-point type.

#include <afarch/random.hpp>

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>

namespace afarch::special {

/// Error function. Odd symmetry is exact and |x| > 6 saturates to +-1.
template <std::floating_point Scalar>
Scalar erf(Scalar x) {
    if (std::isnan(x)) return x;
    const Scalar ax = std::abs(x);
    const Scalar r = ax > Scalar(6) ? Scalar(1) : std::erf(ax);
    return std::signbit(x) ? -r : r;
}

/// Complementary error function, free of cancellation for large x.
template <std::floating_point Scalar>
Scalar erfc(Scalar x) {
    return std::erfc(x);
}

namespace detail {

template <std::floating_point Scalar>
bool is_nonpositive_integer(Scalar x) {
    return x <= Scalar(0) && x == std::floor(x);
}

template <std::floating_point Scalar>
Scalar cot_pi(Scalar x) {
    // reduce to (-1/2, 1/2] so tan keeps full precision near integers
    const Scalar r = x - std::round(x);
    return Scalar(1) / std::tan(std::numbers::pi_v<Scalar> * r);
}

template <std::floating_point Scalar>
Scalar sin_pi(Scalar x) {
    const Scalar n = std::round(x);
    const Scalar s = std::sin(std::numbers::pi_v<Scalar> * (x - n));
    return std::fmod(n, Scalar(2)) == Scalar(0) ? s : -s;
}

}  // namespace detail

/// Digamma psi(x). Poles (non-positive integers) give NaN.
template <std::floating_point Scalar>
Scalar digamma(Scalar x) {
    if (std::isnan(x)) return x;
    if (std::isinf(x)) return x > 0 ? x : std::numeric_limits<Scalar>::quiet_NaN();
    if (detail::is_nonpositive_integer(x)) return std::numeric_limits<Scalar>::quiet_NaN();
    if (x < Scalar(0)) {
        // psi(x) = psi(1 - x) - pi * cot(pi x)
        return digamma(Scalar(1) - x) - std::numbers::pi_v<Scalar> * detail::cot_pi(x);
    }
    Scalar acc = 0;
    while (x < Scalar(6)) {
        acc -= Scalar(1) / x;
        x += Scalar(1);
    }
    const Scalar inv = Scalar(1) / x;
    const Scalar inv2 = inv * inv;
    // Bernoulli tail: sum B_2k / (2k x^2k)
    const Scalar tail =
        inv2 * (Scalar(1) / 12 -
        inv2 * (Scalar(1) / 120 -
        inv2 * (Scalar(1) / 252 -
        inv2 * (Scalar(1) / 240 -
        inv2 * (Scalar(1) / 132 -
        inv2 * (Scalar(691) / 32760 -
        inv2 * (Scalar(1) / 12)))))));
    return acc + std::log(x) - Scalar(0.5) * inv - tail;
}

/// Trigamma psi'(x), the derivative of digamma. Poles give NaN.
template <std::floating_point Scalar>
Scalar trigamma(Scalar x) {
    if (std::isnan(x)) return x;
    if (std::isinf(x)) return x > 0 ? Scalar(0) : std::numeric_limits<Scalar>::quiet_NaN();
    if (detail::is_nonpositive_integer(x)) return std::numeric_limits<Scalar>::quiet_NaN();
    if (x < Scalar(0)) {
        const Scalar s = detail::sin_pi(x);
        const Scalar pi = std::numbers::pi_v<Scalar>;
        return pi * pi / (s * s) - trigamma(Scalar(1) - x);
    }
    Scalar acc = 0;
    while (x < Scalar(6)) {
        acc += Scalar(1) / (x * x);
        x += Scalar(1);
    }
    const Scalar inv = Scalar(1) / x;
    const Scalar inv2 = inv * inv;
    const Scalar series =
        inv + inv2 / 2 +
        inv * inv2 * (Scalar(1) / 6 -
        inv2 * (Scalar(1) / 30 -
        inv2 * (Scalar(1) / 42 -
        inv2 * (Scalar(1) / 30 -
        inv2 * (Scalar(5) / 66 -
        inv2 * (Scalar(691) / 2730 -
        inv2 * (Scalar(7) / 6)))))));
    return acc + series;
}

inline constexpr double kGumbelEps = 1e-12;

/// Maps a uniform variate to a standard Gumbel variate: -log(-log(u)),
/// with u clamped to [eps, 1 - eps] so the result is always finite.
template <std::floating_point Scalar>
Scalar gumbel_from_uniform(Scalar u) {
    const Scalar eps = static_cast<Scalar>(kGumbelEps);
    if (u < eps) u = eps;
    if (u > Scalar(1) - eps) u = Scalar(1) - eps;
    return -std::log(-std::log(u));
}

template <std::floating_point Scalar = double>
Scalar sample_gumbel(Rng& rng) {
    return gumbel_from_uniform(uniform01<Scalar>(rng));
}

}  // namespace afarch::special
