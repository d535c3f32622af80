#include <afarch/benchmarks.hpp>

#include <cmath>

namespace afarch {

SphereRun cmaes_sphere(int dim, std::uint64_t seed, int max_evaluations, double target) {
    Rng rng(seed);
    Eigen::VectorXd mean(dim);
    std::uniform_real_distribution<double> start(-5.0, 5.0);
    for (int i = 0; i < dim; ++i) mean[i] = start(rng);

    CmaEs es(mean, 2.0);
    SphereRun run;
    run.best = mean.squaredNorm();
    while (run.evaluations < max_evaluations) {
        const auto candidates = es.ask(rng);
        std::vector<double> objectives;
        objectives.reserve(candidates.size());
        for (const auto& x : candidates) {
            const double f = x.squaredNorm();
            ++run.evaluations;
            run.best = std::min(run.best, f);
            objectives.push_back(-f);
        }
        es.tell(candidates, objectives);
        if (run.best <= target) break;
    }
    run.reached = run.best <= target;
    return run;
}

PlantedRun planted_categorical(SamplerKind sampler, int n_layers, int n_categories, int n_trials,
                               std::uint64_t seed) {
    const SearchSpace space{n_layers, n_categories};
    Rng target_rng(derive_seed(seed, 0x7a12));
    PlantedRun run;
    run.target = random_suggest(space, target_rng);

    auto matches = [&](const Choice& c) {
        int m = 0;
        for (std::size_t i = 0; i < c.size(); ++i) m += c[i] == run.target[i];
        return m;
    };
    const Objective objective = [&](const Choice& c, int, std::uint64_t) {
        return TrialOutcome{static_cast<double>(matches(c)) / n_layers, false};
    };
    StudyOptions opts;
    opts.n_trials = n_trials;
    opts.seed = derive_seed(seed, 0x5a3b);
    const StudyResult study = study_run(objective, sampler, space, opts);
    run.best_matches = matches(study.best.choice);
    run.best_objective = study.best.objective;
    return run;
}

}  // namespace afarch
