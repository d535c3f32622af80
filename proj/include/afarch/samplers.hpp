#pragma once

// Architecture search over an L-slot categorical space: uniform random,
// independent TPE and a CMA-ES over a floor-decoded continuous relaxation.

#include <afarch/random.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace afarch {

/// One category index per slot.
using Choice = std::vector<int>;

struct SearchSpace {
    int n_layers = 5;
    int n_categories = 48;

    /// K^L
    double size() const;
    void validate() const;
};

enum class SamplerKind { random, tpe, cmaes };

std::string_view sampler_name(SamplerKind kind);
SamplerKind parse_sampler(std::string_view name);

struct TrialRecord {
    int trial_id = 0;
    Choice choice;
    double objective = 0.0;  // maximized
    bool failed = false;
    std::uint64_t seed = 0;
};

Choice random_suggest(const SearchSpace& space, Rng& rng);

struct TpeConfig {
    int n_startup = 10;
    int n_ei_candidates = 24;
    int max_good = 25;
    double gamma = 0.1;
    double prior_weight = 1.0;
};

/// n_good = min(ceil(gamma * n), max_good), at least 1 once n >= 1.
int tpe_n_good(int n_completed, const TpeConfig& config = {});

class TpeSampler {
public:
    explicit TpeSampler(SearchSpace space, TpeConfig config = {});

    Choice suggest(Rng& rng) const;
    void observe(const TrialRecord& trial);

    /// Smoothed good/bad category masses for one slot (each sums to 1).
    struct SlotModel {
        std::vector<double> good;
        std::vector<double> bad;
    };
    SlotModel slot_model(int slot) const;

    int n_completed() const;
    const std::vector<TrialRecord>& history() const { return history_; }

private:
    std::vector<const TrialRecord*> ranked_completed() const;

    SearchSpace space_;
    TpeConfig config_;
    std::vector<TrialRecord> history_;
};

struct CmaEsParameters {
    int dim = 0;
    int lambda = 0;
    int mu = 0;
    Eigen::VectorXd weights;
    double mu_eff = 0.0;
    double c_sigma = 0.0;
    double d_sigma = 0.0;
    double c_c = 0.0;
    double c_1 = 0.0;
    double c_mu = 0.0;
    double chi_n = 0.0;

    static CmaEsParameters defaults(int dim);
};

inline constexpr double kEigenFloor = 1e-12;

/// Standard (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation
/// and rank-one plus rank-mu covariance updates. Objectives passed to tell
/// are maximized.
class CmaEs {
public:
    CmaEs(Eigen::VectorXd mean, double sigma);
    CmaEs(Eigen::VectorXd mean, double sigma, CmaEsParameters params);

    std::vector<Eigen::VectorXd> ask(Rng& rng);
    /// Non-finite objectives rank worst; ties keep candidate order.
    void tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& objectives);

    const Eigen::VectorXd& mean() const { return mean_; }
    double sigma() const { return sigma_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const CmaEsParameters& params() const { return params_; }
    int generation() const { return generation_; }
    int population() const { return params_.lambda; }

    void set_sigma(double sigma) { sigma_ = sigma; }
    void set_covariance(const Eigen::MatrixXd& cov);

private:
    void decompose();

    CmaEsParameters params_;
    Eigen::VectorXd mean_;
    double sigma_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd basis_;        // B
    Eigen::VectorXd eigenvalues_;  // diag(D^2)
    Eigen::MatrixXd inv_sqrt_cov_;
    Eigen::VectorXd p_sigma_;
    Eigen::VectorXd p_c_;
    int generation_ = 0;
};

/// Clip each coordinate to [0, K - 1e-9] and take the floor.
Choice decode_continuous(const Eigen::Ref<const Eigen::VectorXd>& x, int n_categories);

struct TrialOutcome {
    double value = 0.0;
    bool failed = false;
};

/// The objective gets the candidate and a per-trial seed derived from the
/// study seed and the trial id.
using Objective = std::function<TrialOutcome(const Choice&, int trial_id, std::uint64_t trial_seed)>;

struct StudyOptions {
    int n_trials = 100;
    std::uint64_t seed = 0;
    TpeConfig tpe{};
    /// Evaluate independent trials (random search, one CMA-ES generation)
    /// on this many threads. Results do not depend on it.
    int jobs = 1;
    /// Checked between trials; returning true ends the study early.
    std::function<bool()> should_stop{};
};

struct StudyResult {
    TrialRecord best;
    std::vector<TrialRecord> history;
    bool truncated = false;
};

StudyResult study_run(const Objective& objective, SamplerKind sampler, const SearchSpace& space,
                      const StudyOptions& options);

/// Highest objective among non-failed trials, ties to the earliest. Returns
/// nullopt when every trial failed.
std::optional<std::size_t> best_trial_index(const std::vector<TrialRecord>& history);

}  // namespace afarch
