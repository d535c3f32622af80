#pragma once

// Sampler benchmarks shared by the CLI selftest and the acceptance suite.

#include <afarch/samplers.hpp>

namespace afarch {

struct SphereRun {
    double best = 0.0;
    int evaluations = 0;
    bool reached = false;
};

/// Minimizes sum(x^2) from a mean drawn uniformly in [-5, 5]^dim with
/// sigma 2, stopping at `target` or after `max_evaluations`.
SphereRun cmaes_sphere(int dim, std::uint64_t seed, int max_evaluations = 5000, double target = 1e-10);

struct PlantedRun {
    Choice target;
    int best_matches = 0;  // positions of the best trial matching the target
    double best_objective = 0.0;
};

/// Objective = fraction of positions equal to a hidden target drawn from
/// `seed`; the sampler gets a seed derived from it, so runs with the same
/// seed and different samplers face the same target.
PlantedRun planted_categorical(SamplerKind sampler, int n_layers, int n_categories, int n_trials,
                               std::uint64_t seed);

}  // namespace afarch
