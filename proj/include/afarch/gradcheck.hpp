#pragma once

// Finite-difference checks of the analytic AF and network gradients.

#include <afarch/af_zoo.hpp>
#include <afarch/nn_engine.hpp>

#include <vector>

namespace afarch {

/// Sampling interval for gradient checks, with the points where the kind is
/// not differentiable (kinks, jumps, poles).
struct SafeDomain {
    double lo = -5.0;
    double hi = 5.0;
    std::vector<double> kinks;
    /// Period of the kink pattern (Frac: 1); 0 when `kinks` is exhaustive.
    double kink_period = 0.0;
};

SafeDomain safe_domain(Activation kind);
/// Ceil, Floor, Round, Trunc.
bool is_step_like(Activation kind);

struct GradCheckOptions {
    int points = 100;
    double step = 1e-5;
    double abs_tol = 1e-5;
    double rel_tol = 1e-4;
    double kink_margin = 1e-3;
    int row_width = 5;  // vectorwise kinds are checked on rows of this width
};

struct AfCheckResult {
    Activation kind{};
    int points = 0;
    int failures = 0;
    double max_abs_error = 0.0;
    /// max over points of error / max(|analytic|, |numeric|)
    double max_rel_error = 0.0;
    bool step_like = false;
    bool passed = false;
};

/// Step-like kinds: every analytic gradient must be exactly zero. Other
/// kinds: |analytic - central difference| <= max(abs_tol, rel_tol * scale)
/// at every point. Stochastic kinds reuse the draws of one forward pass;
/// PReLU's slope gradient is checked as well.
AfCheckResult check_activation(Activation kind, Rng& rng, const GradCheckOptions& options = {});
std::vector<AfCheckResult> check_all_activations(std::uint64_t seed, const GradCheckOptions& options = {});

struct NetworkCheckResult {
    Eigen::Index n_parameters = 0;
    double max_rel_error = 0.0;
    double fraction_within_1e4 = 0.0;
    bool passed = false;  // >= 95% within 1e-4 and all within 1e-3
};

/// Loss gradient of a small network (the given architecture, which must be
/// deterministic) against central differences over every parameter.
NetworkCheckResult check_network(const Architecture& arch, std::uint64_t seed, int input_dim = 4,
                                 int n_classes = 3, int hidden = 6, int n_samples = 8);

}  // namespace afarch
