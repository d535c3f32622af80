#pragma once

// One experiment = R replicates of: split, scale, then the standard network
// and the three searches, each scored on the held-out test rows.

#include <afarch/af_zoo.hpp>
#include <afarch/data_pipeline.hpp>
#include <afarch/nn_engine.hpp>
#include <afarch/samplers.hpp>

#include <json.hpp>

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace afarch {

enum class Method { standard = 0, random = 1, tpe = 2, cmaes = 3 };
inline constexpr std::array<Method, 4> kAllMethods = {Method::standard, Method::random, Method::tpe,
                                                      Method::cmaes};

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
/// Comma-separated method list, returned in canonical order without repeats.
std::vector<Method> parse_methods(std::string_view list);

struct ExperimentConfig {
    std::string dataset_path;
    std::optional<DataFormat> format;  // guessed from the suffix when unset
    std::optional<std::string> label_column;
    std::string dataset_name;  // overrides the file stem in reports
    int n_layers = 5;
    int n_replicates = 30;
    int n_trials = 1000;
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
    std::uint64_t seed = 0;
    std::string output = "experiment.jsonl";
    /// Select the random method's network by training accuracy instead of
    /// by test score.
    bool strict_random = false;
    int jobs = 1;
    /// Per-replicate wall-clock budget in seconds; 0 disables it.
    double max_seconds = 0.0;
    int hidden = kHiddenWidth;
    TrainConfig train{};

    void validate() const;
};

/// Flat `key = value` lines, '#' comments. Keys: dataset, format, label_col,
/// name, n_layers, n_replicates, n_trials, methods, seed, output,
/// strict_random, jobs, max_seconds, hidden, max_epochs, patience, min_delta.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Train/test matrices of one replicate, already standardized. Test-set
/// reads go through `test_accuracy` and are counted.
struct ScaledSplit {
    Eigen::MatrixXd X_train;
    std::vector<int> y_train;
    Eigen::MatrixXd X_test;
    std::vector<int> y_test;
    int n_classes = 0;
    std::uint64_t eval_seed = 0;
    std::vector<std::string> warnings;
    std::shared_ptr<std::atomic<long>> test_reads = std::make_shared<std::atomic<long>>(0);

    double test_accuracy(Network& net) const;
};

ScaledSplit prepare_split(const Dataset& ds, std::uint64_t replicate_seed);

struct TrainedModel {
    Network network;
    double train_accuracy = 0.0;
    bool failed = false;
    int epochs = 0;
};

/// Fresh network (init seed derived from `seed`), trained on the training
/// rows; train_accuracy is the eval-mode training accuracy.
TrainedModel train_architecture(const Architecture& arch, const ScaledSplit& split, std::uint64_t seed,
                                 const TrainConfig& config = {}, int hidden = kHiddenWidth);

struct Evaluation {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    bool failed = false;
};

Evaluation evaluate_architecture(const Architecture& arch, const ScaledSplit& split, std::uint64_t seed,
                                 const TrainConfig& config = {}, int hidden = kHiddenWidth);

struct MethodResult {
    Method method = Method::standard;
    double test_score = 0.0;
    double train_accuracy = 0.0;
    Architecture architecture;
    bool failed = false;
    int trials = 0;
    bool truncated = false;
    double wall_seconds = 0.0;  // not serialized into the replicate log
};

struct ReplicateRecord {
    std::string dataset;
    int n_samples = 0;
    int n_features = 0;
    int n_classes = 0;
    int n_layers = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    std::vector<MethodResult> methods;

    const MethodResult* find(Method m) const;
};

nlohmann::ordered_json to_json(const ReplicateRecord& record);
ReplicateRecord replicate_from_json(const nlohmann::json& j);

/// One line per trial: {replicate, trial_id, method, architecture,
/// objective, failed, seed}.
struct TrialLogEntry {
    int replicate = 0;
    Method method = Method::random;
    TrialRecord trial;
};
nlohmann::ordered_json to_json(const TrialLogEntry& entry, int n_categories = kNumActivations);

/// Optional observers; all may be empty.
struct ReplicateHooks {
    std::function<void(const TrialLogEntry&)> on_trial;
    /// Counts objective evaluations (one per trained network).
    std::atomic<long>* evaluations = nullptr;
    /// Receives the number of test-set evaluations made by the replicate.
    std::atomic<long>* test_reads = nullptr;
};

ReplicateRecord run_replicate(const Dataset& ds, const ExperimentConfig& config, int replicate,
                              std::uint64_t replicate_seed, const ReplicateHooks& hooks = {});

std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate);

struct ExperimentResult {
    std::vector<ReplicateRecord> records;
    /// Median test score per method present, in canonical method order.
    std::vector<std::pair<Method, double>> medians;
};

/// Runs every replicate, appending each record to `config.output` as it
/// completes (plus `<output>.trials.jsonl`, `<output>.timing.jsonl` and,
/// at the end, `<output>.summary.csv`). `log` receives progress lines.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);
ExperimentResult run_experiment(const Dataset& ds, const ExperimentConfig& config, std::ostream* log = nullptr);

std::vector<std::pair<Method, double>> method_medians(const std::vector<ReplicateRecord>& records);

}  // namespace afarch
