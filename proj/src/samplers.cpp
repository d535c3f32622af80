#include <afarch/samplers.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace afarch {

double SearchSpace::size() const {
    return std::pow(static_cast<double>(n_categories), static_cast<double>(n_layers));
}

void SearchSpace::validate() const {
    if (n_layers < 1) throw std::invalid_argument("search space needs at least one slot");
    if (n_categories < 2) throw std::invalid_argument("search space needs at least two categories");
}

std::string_view sampler_name(SamplerKind kind) {
    switch (kind) {
    case SamplerKind::random: return "random";
    case SamplerKind::tpe: return "tpe";
    case SamplerKind::cmaes: return "cmaes";
    }
    return "?";
}

SamplerKind parse_sampler(std::string_view name) {
    if (name == "random") return SamplerKind::random;
    if (name == "tpe") return SamplerKind::tpe;
    if (name == "cmaes") return SamplerKind::cmaes;
    throw std::invalid_argument("unknown sampler '" + std::string(name) +
                                "' (expected random, tpe or cmaes)");
}

Choice random_suggest(const SearchSpace& space, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, space.n_categories - 1);
    Choice choice(static_cast<std::size_t>(space.n_layers));
    for (auto& c : choice) c = pick(rng);
    return choice;
}

// ---------------------------------------------------------------------------
// TPE

int tpe_n_good(int n_completed, const TpeConfig& config) {
    if (n_completed <= 0) return 0;
    const int by_quantile = static_cast<int>(std::ceil(config.gamma * n_completed));
    return std::max(1, std::min(by_quantile, config.max_good));
}

TpeSampler::TpeSampler(SearchSpace space, TpeConfig config) : space_(space), config_(config) {
    space_.validate();
}

void TpeSampler::observe(const TrialRecord& trial) { history_.push_back(trial); }

int TpeSampler::n_completed() const {
    int n = 0;
    for (const auto& t : history_) n += (!t.failed && std::isfinite(t.objective));
    return n;
}

std::vector<const TrialRecord*> TpeSampler::ranked_completed() const {
    std::vector<const TrialRecord*> ranked;
    for (const auto& t : history_)
        if (!t.failed && std::isfinite(t.objective)) ranked.push_back(&t);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const TrialRecord* a, const TrialRecord* b) { return a->objective > b->objective; });
    return ranked;
}

TpeSampler::SlotModel TpeSampler::slot_model(int slot) const {
    const auto K = static_cast<std::size_t>(space_.n_categories);
    const auto ranked = ranked_completed();
    const auto n_good = static_cast<std::size_t>(tpe_n_good(static_cast<int>(ranked.size()), config_));
    const double prior = config_.prior_weight / static_cast<double>(K);

    SlotModel model{std::vector<double>(K, prior), std::vector<double>(K, prior)};
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto c = static_cast<std::size_t>(ranked[i]->choice.at(static_cast<std::size_t>(slot)));
        (i < n_good ? model.good : model.bad)[c] += 1.0;
    }
    for (auto* mass : {&model.good, &model.bad}) {
        const double total = std::accumulate(mass->begin(), mass->end(), 0.0);
        for (auto& m : *mass) m /= total;
    }
    return model;
}

Choice TpeSampler::suggest(Rng& rng) const {
    if (n_completed() < config_.n_startup) return random_suggest(space_, rng);

    Choice choice(static_cast<std::size_t>(space_.n_layers));
    for (int slot = 0; slot < space_.n_layers; ++slot) {
        const auto model = slot_model(slot);
        std::vector<double> cdf(model.good.size());
        std::partial_sum(model.good.begin(), model.good.end(), cdf.begin());

        int best = -1;
        double best_ratio = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < config_.n_ei_candidates; ++k) {
            const double u = uniform01(rng) * cdf.back();
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            if (it == cdf.end()) --it;
            const int c = static_cast<int>(it - cdf.begin());
            const double ratio = model.good[static_cast<std::size_t>(c)] / model.bad[static_cast<std::size_t>(c)];
            if (ratio > best_ratio || (ratio == best_ratio && c < best)) {
                best_ratio = ratio;
                best = c;
            }
        }
        choice[static_cast<std::size_t>(slot)] = best;
    }
    return choice;
}

// ---------------------------------------------------------------------------
// CMA-ES

CmaEsParameters CmaEsParameters::defaults(int dim) {
    if (dim < 1) throw std::invalid_argument("CMA-ES dimension must be >= 1");
    CmaEsParameters p;
    const double n = dim;
    p.dim = dim;
    p.lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
    p.mu = p.lambda / 2;
    p.weights.resize(p.mu);
    for (int i = 0; i < p.mu; ++i) p.weights(i) = std::log(p.mu + 0.5) - std::log(i + 1.0);
    p.weights /= p.weights.sum();
    p.mu_eff = 1.0 / p.weights.squaredNorm();
    p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
    p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
    p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
    p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
    p.c_mu = std::min(1.0 - p.c_1,
                      2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) / ((n + 2.0) * (n + 2.0) + p.mu_eff));
    p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    return p;
}

CmaEs::CmaEs(Eigen::VectorXd mean, double sigma)
    : CmaEs(mean, sigma, CmaEsParameters::defaults(static_cast<int>(mean.size()))) {}

CmaEs::CmaEs(Eigen::VectorXd mean, double sigma, CmaEsParameters params)
    : params_(std::move(params)), mean_(std::move(mean)), sigma_(sigma) {
    if (mean_.size() != params_.dim) throw std::invalid_argument("CMA-ES mean has wrong dimension");
    if (!(sigma_ > 0.0)) throw std::invalid_argument("CMA-ES sigma must be positive");
    const auto n = static_cast<Eigen::Index>(params_.dim);
    cov_ = Eigen::MatrixXd::Identity(n, n);
    p_sigma_ = Eigen::VectorXd::Zero(n);
    p_c_ = Eigen::VectorXd::Zero(n);
    decompose();
}

void CmaEs::set_covariance(const Eigen::MatrixXd& cov) {
    if (cov.rows() != params_.dim || cov.cols() != params_.dim)
        throw std::invalid_argument("covariance has wrong shape");
    cov_ = cov;
    decompose();
}

void CmaEs::decompose() {
    cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
    for (int attempt = 0; attempt < 2; ++attempt) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_);
        if (solver.info() == Eigen::Success && solver.eigenvalues().allFinite()) {
            basis_ = solver.eigenvectors();
            eigenvalues_ = solver.eigenvalues();
            if (eigenvalues_.minCoeff() < kEigenFloor) {
                eigenvalues_ = eigenvalues_.cwiseMax(kEigenFloor);
                cov_ = basis_ * eigenvalues_.asDiagonal() * basis_.transpose();
                cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
            }
            inv_sqrt_cov_ = basis_ * eigenvalues_.cwiseSqrt().cwiseInverse().asDiagonal() *
                            basis_.transpose();
            return;
        }
        // Non-finite entries cannot be projected; restart the shape.
        if (!cov_.allFinite()) {
            cov_.setIdentity();
            p_c_.setZero();
        } else {
            cov_ += kEigenFloor * Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols());
        }
    }
    throw std::runtime_error("CMA-ES covariance eigendecomposition failed twice");
}

std::vector<Eigen::VectorXd> CmaEs::ask(Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::VectorXd scale = eigenvalues_.cwiseSqrt();
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(params_.lambda));
    for (int k = 0; k < params_.lambda; ++k) {
        Eigen::VectorXd z(params_.dim);
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
        out.push_back(mean_ + sigma_ * (basis_ * scale.cwiseProduct(z)));
    }
    return out;
}

void CmaEs::tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& objectives) {
    const auto lambda = static_cast<std::size_t>(params_.lambda);
    if (candidates.size() != lambda || objectives.size() != lambda)
        throw std::invalid_argument("CMA-ES tell expects exactly lambda candidates");

    // Internally minimize -objective; non-finite values rank last.
    std::vector<double> cost(lambda);
    for (std::size_t i = 0; i < lambda; ++i)
        cost[i] = std::isfinite(objectives[i]) ? -objectives[i] : std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });

    const auto& p = params_;
    const double n = p.dim;
    const Eigen::VectorXd old_mean = mean_;

    Eigen::MatrixXd steps(p.dim, p.mu);
    for (int i = 0; i < p.mu; ++i)
        steps.col(i) = (candidates[order[static_cast<std::size_t>(i)]] - old_mean) / sigma_;
    const Eigen::VectorXd y_w = steps * p.weights;
    mean_ = old_mean + sigma_ * y_w;

    p_sigma_ = (1.0 - p.c_sigma) * p_sigma_ +
               std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff) * (inv_sqrt_cov_ * y_w);
    const double ps_norm = p_sigma_.norm();
    const double decay = 1.0 - std::pow(1.0 - p.c_sigma, 2.0 * (generation_ + 1));
    const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (n + 1.0)) * p.chi_n;
    const double h = h_sigma ? 1.0 : 0.0;
    p_c_ = (1.0 - p.c_c) * p_c_ + h * std::sqrt(p.c_c * (2.0 - p.c_c) * p.mu_eff) * y_w;

    const Eigen::MatrixXd rank_mu = steps * p.weights.asDiagonal() * steps.transpose();
    const double delta_h = (1.0 - h) * p.c_c * (2.0 - p.c_c);
    cov_ = (1.0 - p.c_1 - p.c_mu) * cov_ + p.c_1 * (p_c_ * p_c_.transpose() + delta_h * cov_) +
           p.c_mu * rank_mu;

    sigma_ *= std::exp((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0));
    ++generation_;
    decompose();
}

Choice decode_continuous(const Eigen::Ref<const Eigen::VectorXd>& x, int n_categories) {
    const double upper = static_cast<double>(n_categories) - 1e-9;
    Choice choice(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = x(i);
        if (std::isnan(v)) v = 0.0;
        v = std::clamp(v, 0.0, upper);
        choice[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(v));
    }
    return choice;
}

// ---------------------------------------------------------------------------
// Study loop

std::optional<std::size_t> best_trial_index(const std::vector<TrialRecord>& history) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& t = history[i];
        if (t.failed || !std::isfinite(t.objective)) continue;
        if (!best || t.objective > history[*best].objective) best = i;
    }
    return best;
}

namespace {

// Evaluates trials [first, first + count) into `out`, possibly on threads.
void evaluate_batch(const Objective& objective, const std::vector<Choice>& choices,
                    std::vector<TrialRecord>& out, int first_id, std::uint64_t study_seed, int jobs) {
    const std::size_t count = choices.size();
    out.resize(count);
    auto run_one = [&](std::size_t i) {
        TrialRecord rec;
        rec.trial_id = first_id + static_cast<int>(i);
        rec.choice = choices[i];
        rec.seed = derive_seed(study_seed, static_cast<std::uint64_t>(SeedStream::trial),
                               static_cast<std::uint64_t>(rec.trial_id));
        const auto outcome = objective(rec.choice, rec.trial_id, rec.seed);
        rec.objective = outcome.value;
        rec.failed = outcome.failed || !std::isfinite(outcome.value);
        out[i] = std::move(rec);
    };
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) run_one(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

StudyResult study_run(const Objective& objective, SamplerKind sampler, const SearchSpace& space,
                      const StudyOptions& options) {
    space.validate();
    if (options.n_trials < 1) throw std::invalid_argument("study needs at least one trial");

    StudyResult result;
    Rng rng(derive_seed(options.seed, SeedStream::sampler));
    auto stop_requested = [&] { return options.should_stop && options.should_stop(); };
    const int n_trials = options.n_trials;

    auto append = [&](std::vector<TrialRecord>& batch) {
        for (auto& t : batch) result.history.push_back(std::move(t));
    };

    switch (sampler) {
    case SamplerKind::random: {
        std::vector<Choice> all;
        all.reserve(static_cast<std::size_t>(n_trials));
        for (int i = 0; i < n_trials; ++i) all.push_back(random_suggest(space, rng));
        const int batch_size = std::max(1, options.jobs);
        for (int first = 0; first < n_trials; first += batch_size) {
            if (stop_requested()) {
                result.truncated = true;
                break;
            }
            const int count = std::min(batch_size, n_trials - first);
            std::vector<Choice> choices(all.begin() + first, all.begin() + first + count);
            std::vector<TrialRecord> batch;
            evaluate_batch(objective, choices, batch, first, options.seed, options.jobs);
            append(batch);
        }
        break;
    }
    case SamplerKind::tpe: {
        TpeSampler tpe(space, options.tpe);
        for (int id = 0; id < n_trials; ++id) {
            if (stop_requested()) {
                result.truncated = true;
                break;
            }
            std::vector<Choice> choices{tpe.suggest(rng)};
            std::vector<TrialRecord> batch;
            evaluate_batch(objective, choices, batch, id, options.seed, 1);
            tpe.observe(batch.front());
            append(batch);
        }
        break;
    }
    case SamplerKind::cmaes: {
        const double K = space.n_categories;
        CmaEs es(Eigen::VectorXd::Constant(space.n_layers, K / 2.0), K / 6.0);
        int id = 0;
        while (id < n_trials) {
            if (stop_requested()) {
                result.truncated = true;
                break;
            }
            const auto candidates = es.ask(rng);
            const int count = std::min(es.population(), n_trials - id);
            std::vector<Choice> choices;
            for (int k = 0; k < count; ++k)
                choices.push_back(decode_continuous(candidates[static_cast<std::size_t>(k)], space.n_categories));
            std::vector<TrialRecord> batch;
            evaluate_batch(objective, choices, batch, id, options.seed, options.jobs);
            if (count == es.population()) {
                std::vector<double> values;
                for (const auto& t : batch)
                    values.push_back(t.failed ? std::numeric_limits<double>::quiet_NaN() : t.objective);
                es.tell(candidates, values);
            }
            append(batch);
            id += count;
        }
        break;
    }
    }

    if (const auto best = best_trial_index(result.history)) {
        result.best = result.history[*best];
    } else if (!result.history.empty()) {
        result.best = result.history.front();
        result.best.failed = true;
    } else {
        result.best.failed = true;
    }
    return result;
}

}  // namespace afarch
