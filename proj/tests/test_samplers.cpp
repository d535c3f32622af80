#include <afarch/benchmarks.hpp>
#include <afarch/samplers.hpp>

#include <doctest.h>

#include <atomic>
#include <cmath>

using namespace afarch;

namespace {

TrialRecord trial(int id, Choice c, double objective, bool failed = false) {
    TrialRecord t;
    t.trial_id = id;
    t.choice = std::move(c);
    t.objective = objective;
    t.failed = failed;
    return t;
}

// Every trial's objective in [0, 1), determined by the choice.
TrialOutcome hashed_objective(const Choice& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int v : c) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return {static_cast<double>(h >> 11) / 9007199254740992.0, false};
}

bool same_history(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].choice != b[i].choice || a[i].objective != b[i].objective || a[i].seed != b[i].seed ||
            a[i].trial_id != b[i].trial_id)
            return false;
    return true;
}

}  // namespace

TEST_SUITE("samplers") {

TEST_CASE("search space") {
    const SearchSpace s{5, 48};
    CHECK(s.size() == 254803968.0);
    CHECK_THROWS(SearchSpace{0, 48}.validate());
    CHECK_THROWS(SearchSpace{5, 1}.validate());
}

TEST_CASE("random suggestions are uniform") {
    const SearchSpace space{5, 48};
    Rng a(3), b(3);
    CHECK(random_suggest(space, a) == random_suggest(space, b));
    CHECK(random_suggest(space, a).size() == 5);

    Rng rng(12);
    std::vector<int> counts(48, 0);
    for (int i = 0; i < 48000; ++i) ++counts[static_cast<std::size_t>(random_suggest(space, rng)[0])];
    const double band = 3.0 * std::sqrt(1000.0 * 47.0 / 48.0);
    double chi2 = 0.0;
    for (int c : counts) {
        CHECK(std::abs(c - 1000) <= band);
        chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    }
    // 47 degrees of freedom, 99.9th percentile ~ 82.7
    CHECK(chi2 < 82.7);
}

TEST_CASE("good-set size rule") {
    CHECK(tpe_n_good(0) == 0);
    CHECK(tpe_n_good(1) == 1);
    CHECK(tpe_n_good(10) == 1);
    CHECK(tpe_n_good(11) == 2);
    CHECK(tpe_n_good(40) == 4);
    CHECK(tpe_n_good(250) == 25);
    CHECK(tpe_n_good(1000) == 25);
}

TEST_CASE("TPE is random search before the startup trials") {
    const SearchSpace space{5, 48};
    TpeSampler tpe(space);
    for (int i = 0; i < 9; ++i) tpe.observe(trial(i, {i, i, i, i, i}, 0.1 * i));
    for (int i = 0; i < 20; ++i) tpe.observe(trial(100 + i, {0, 0, 0, 0, 0}, 0.0, true));
    Rng a(5), b(5);
    for (int k = 0; k < 100; ++k) CHECK(tpe.suggest(a) == random_suggest(space, b));

    TpeSampler empty(space);
    Rng c(6), d(6);
    for (int k = 0; k < 100; ++k) CHECK(empty.suggest(c) == random_suggest(space, d));
}

TEST_CASE("TPE slot masses match the smoothed counts") {
    const SearchSpace space{2, 4};
    TpeSampler tpe(space);
    // 11 trials -> 2 good. Good: slot 0 = {3, 3}; bad: slot 0 = {0 x5, 1 x4}
    tpe.observe(trial(0, {3, 0}, 0.9));
    tpe.observe(trial(1, {3, 1}, 0.8));
    for (int i = 0; i < 5; ++i) tpe.observe(trial(2 + i, {0, 2}, 0.1));
    for (int i = 0; i < 4; ++i) tpe.observe(trial(7 + i, {1, 2}, 0.2));
    tpe.observe(trial(11, {2, 2}, 0.95, true));  // failed: ignored
    const auto m = tpe.slot_model(0);
    // l ∝ count_good + 1/4, g ∝ count_bad + 1/4
    CHECK(m.good[3] == doctest::Approx(2.25 / 3.0));
    CHECK(m.good[0] == doctest::Approx(0.25 / 3.0));
    CHECK(m.bad[0] == doctest::Approx(5.25 / 10.0));
    CHECK(m.bad[1] == doctest::Approx(4.25 / 10.0));
    CHECK(m.bad[3] == doctest::Approx(0.25 / 10.0));
}

TEST_CASE("TPE follows a planted good category") {
    const SearchSpace space{5, 48};
    TpeSampler tpe(space);
    Rng hist(1);
    int id = 0;
    // 40 trials: the 4 good ones have 7 in position 0, the bad ones never do
    for (int i = 0; i < 4; ++i) {
        Choice c = random_suggest(space, hist);
        c[0] = 7;
        tpe.observe(trial(id++, c, 1.0));
    }
    while (id < 40) {
        Choice c = random_suggest(space, hist);
        if (c[0] == 7) continue;
        tpe.observe(trial(id++, c, 0.5 * uniform01(hist)));
    }
    Rng rng(2);
    int hits = 0;
    for (int k = 0; k < 1000; ++k) hits += tpe.suggest(rng)[0] == 7;
    CHECK(hits > 500);
}

TEST_CASE("moving a category from bad to good raises its mass ratio") {
    const SearchSpace space{1, 6};
    auto ratio_of = [&](int n_good_with_c) {
        TpeSampler tpe(space);
        int id = 0;
        // 20 trials -> 2 good
        for (int i = 0; i < 2; ++i) tpe.observe(trial(id++, {i < n_good_with_c ? 2 : 4}, 1.0));
        for (int i = 0; i < 18; ++i) tpe.observe(trial(id++, {i < 2 - n_good_with_c ? 2 : i % 2}, 0.1));
        const auto m = tpe.slot_model(0);
        return m.good[2] / m.bad[2];
    };
    CHECK(ratio_of(1) > ratio_of(0));
    CHECK(ratio_of(2) > ratio_of(1));
}

TEST_CASE("CMA-ES default parameters") {
    const auto p = CmaEsParameters::defaults(5);
    CHECK(p.lambda == 8);
    CHECK(p.mu == 4);
    CHECK(p.weights.sum() == doctest::Approx(1.0));
    for (int i = 1; i < p.mu; ++i) CHECK(p.weights[i] < p.weights[i - 1]);
    CHECK(p.weights.minCoeff() > 0);
    CHECK(CmaEsParameters::defaults(10).lambda == 10);
    CHECK(CmaEsParameters::defaults(1).lambda == 4);
}

TEST_CASE("CMA-ES samples from N(mean, sigma^2 C)") {
    CmaEs es(Eigen::VectorXd::Zero(3), 1.0);
    Rng rng(31);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(3, 3);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
    long n = 0;
    while (n < 100000) {
        for (const auto& x : es.ask(rng)) {
            sum += x;
            sum_sq += x * x.transpose();
            ++n;
        }
    }
    const Eigen::VectorXd mean = sum / n;
    const Eigen::MatrixXd cov = sum_sq / n - mean * mean.transpose();
    CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 0.02);

    Rng a(4), b(4);
    CmaEs e1(Eigen::VectorXd::Constant(3, 2.0), 0.5), e2(Eigen::VectorXd::Constant(3, 2.0), 0.5);
    const auto c1 = e1.ask(a), c2 = e2.ask(b);
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);

    CmaEs tiny(Eigen::VectorXd::Constant(4, 1.0), 1e-12);
    for (const auto& x : tiny.ask(a)) CHECK((x.array() - 1.0).abs().maxCoeff() <= 1e-9 * 2.0);
}

TEST_CASE("CMA-ES equal objectives: mean becomes the weighted mean of the first mu candidates") {
    CmaEs es(Eigen::VectorXd::Zero(4), 1.0);
    Rng rng(8);
    const auto cands = es.ask(rng);
    const auto& p = es.params();
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < p.mu; ++i) expected += p.weights[i] * cands[static_cast<std::size_t>(i)];
    const double sigma_before = es.sigma();
    es.tell(cands, std::vector<double>(cands.size(), 0.5));
    CHECK((es.mean() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(es.sigma() != sigma_before);
}

TEST_CASE("CMA-ES invariants under random objectives") {
    CmaEs es(Eigen::VectorXd::Zero(5), 1.0);
    Rng rng(99);
    std::normal_distribution<double> noise;
    for (int g = 0; g < 10000; ++g) {
        const auto cands = es.ask(rng);
        std::vector<double> obj(cands.size());
        for (auto& o : obj) o = noise(rng);
        if (g % 500 == 0) obj[0] = std::nan("");
        es.tell(cands, obj);
        const auto& C = es.covariance();
        if (g % 100 == 0) {
            CHECK((C - C.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(es.eigenvalues().minCoeff() >= kEigenFloor);
        }
        REQUIRE(es.sigma() > 0.0);
        REQUIRE(std::isfinite(es.sigma()));
    }
}

TEST_CASE("CMA-ES minimizes the sphere") {
    int reached = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const SphereRun r = cmaes_sphere(10, s);
        CHECK(r.evaluations <= 5000);
        reached += r.reached;
    }
    CHECK(reached >= 9);
}

TEST_CASE("continuous decoding") {
    Eigen::VectorXd x(5);
    x << 0.2, 47.9, 23.5, 1.0, 46.99;
    CHECK(decode_continuous(x, 48) == Choice{0, 47, 23, 1, 46});
    Eigen::VectorXd edge(4);
    edge << -3.0, 48.0, 1e300, -std::numeric_limits<double>::infinity();
    CHECK(decode_continuous(edge, 48) == Choice{0, 47, 47, 0});
    Eigen::VectorXd nan(1);
    nan << std::nan("");
    CHECK(decode_continuous(nan, 48) == Choice{0});
}

TEST_CASE("study loop: counts, determinism and failures") {
    const SearchSpace space{5, 48};
    for (auto kind : {SamplerKind::random, SamplerKind::tpe, SamplerKind::cmaes}) {
        CAPTURE(sampler_name(kind));
        for (int n : {1, 23, 40}) {
            std::atomic<int> calls{0};
            const Objective obj = [&](const Choice& c, int, std::uint64_t) {
                ++calls;
                return hashed_objective(c);
            };
            StudyOptions opts;
            opts.n_trials = n;
            opts.seed = 5;
            const StudyResult r = study_run(obj, kind, space, opts);
            CHECK(calls.load() == n);
            REQUIRE(r.history.size() == static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) CHECK(r.history[static_cast<std::size_t>(i)].trial_id == i);
            const auto best = best_trial_index(r.history);
            REQUIRE(best);
            CHECK(r.best.trial_id == r.history[*best].trial_id);
            for (const auto& t : r.history) CHECK(t.objective <= r.best.objective);

            const StudyResult again = study_run(obj, kind, space, opts);
            CHECK(same_history(r.history, again.history));
            opts.jobs = 3;
            const StudyResult threaded = study_run(obj, kind, space, opts);
            CHECK(same_history(r.history, threaded.history));
        }
        const Objective failing = [](const Choice&, int, std::uint64_t) { return TrialOutcome{0.0, true}; };
        StudyOptions opts;
        opts.n_trials = 12;
        const StudyResult r = study_run(failing, kind, space, opts);
        CHECK(r.best.failed);
        CHECK(r.history.size() == 12);
    }
}

TEST_CASE("best trial ties go to the earliest") {
    std::vector<TrialRecord> h{trial(0, {1}, 0.5), trial(1, {2}, 0.7), trial(2, {3}, 0.7, false),
                               trial(3, {4}, 0.9, true)};
    CHECK(best_trial_index(h) == 1u);
}

TEST_CASE("should_stop truncates a study") {
    const SearchSpace space{3, 10};
    int calls = 0;
    const Objective obj = [&](const Choice& c, int, std::uint64_t) {
        ++calls;
        return hashed_objective(c);
    };
    StudyOptions opts;
    opts.n_trials = 50;
    opts.should_stop = [&] { return calls >= 7; };
    const StudyResult r = study_run(obj, SamplerKind::tpe, space, opts);
    CHECK(r.truncated);
    CHECK(r.history.size() == 7);
}

TEST_CASE("TPE beats random on a planted objective in most paired seeds") {
    int wins = 0;
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto t = planted_categorical(SamplerKind::tpe, 5, 10, 200, s);
        const auto r = planted_categorical(SamplerKind::random, 5, 10, 200, s);
        CHECK(t.target == r.target);
        wins += t.best_matches >= r.best_matches;
    }
    CHECK(wins >= 20);
}

}  // TEST_SUITE
