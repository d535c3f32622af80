#include <afarch/experiment.hpp>
#include <afarch/reports.hpp>
#include <afarch/stats.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace afarch {

std::string_view method_name(Method m) {
    switch (m) {
    case Method::standard: return "standard";
    case Method::random: return "random";
    case Method::tpe: return "tpe";
    case Method::cmaes: return "cmaes";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (auto m : kAllMethods)
        if (method_name(m) == name) return m;
    throw std::invalid_argument("unknown method '" + std::string(name) +
                                "' (expected standard, random, tpe or cmaes)");
}

std::vector<Method> parse_methods(std::string_view list) {
    std::array<bool, 4> wanted{};
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        std::string token(list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        token.erase(0, token.find_first_not_of(' '));
        token.erase(token.find_last_not_of(' ') + 1);
        if (!token.empty()) wanted[static_cast<std::size_t>(parse_method(token))] = true;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    std::vector<Method> out;
    for (auto m : kAllMethods)
        if (wanted[static_cast<std::size_t>(m)]) out.push_back(m);
    return out;
}

void ExperimentConfig::validate() const {
    if (n_layers < 2) throw std::invalid_argument("n_layers must be >= 2");
    if (n_replicates < 1) throw std::invalid_argument("n_replicates must be >= 1");
    if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    if (methods.empty()) throw std::invalid_argument("methods must not be empty");
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
    if (train.max_epochs < 1 || train.patience < 1) throw std::invalid_argument("bad training limits");
}

namespace {

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto strip = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        if (strip(line).empty()) continue;
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        try {
            if (key == "dataset") cfg.dataset_path = value;
            else if (key == "format") cfg.format = parse_data_format(value);
            else if (key == "label_col") cfg.label_column = value;
            else if (key == "name") cfg.dataset_name = value;
            else if (key == "n_layers") cfg.n_layers = std::stoi(value);
            else if (key == "n_replicates") cfg.n_replicates = std::stoi(value);
            else if (key == "n_trials") cfg.n_trials = std::stoi(value);
            else if (key == "methods") cfg.methods = parse_methods(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "output") cfg.output = value;
            else if (key == "strict_random") cfg.strict_random = parse_bool(value);
            else if (key == "jobs") cfg.jobs = std::stoi(value);
            else if (key == "max_seconds") cfg.max_seconds = std::stod(value);
            else if (key == "hidden") cfg.hidden = std::stoi(value);
            else if (key == "max_epochs") cfg.train.max_epochs = std::stoi(value);
            else if (key == "patience") cfg.train.patience = std::stoi(value);
            else if (key == "min_delta") cfg.train.min_delta = std::stod(value);
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(number) + ": " + e.what());
        } catch (const std::out_of_range&) {
            throw std::invalid_argument("config line " + std::to_string(number) + ": value out of range");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

double ScaledSplit::test_accuracy(Network& net) const {
    test_reads->fetch_add(1);
    Rng rng(eval_seed);
    return predict_accuracy(net, X_test, y_test, rng);
}

ScaledSplit prepare_split(const Dataset& ds, std::uint64_t replicate_seed) {
    Rng rng(derive_seed(replicate_seed, SeedStream::split));
    const Split split = train_test_split(ds, rng);
    const Scaler scaler = scaler_fit(ds.X, split.train);
    ScaledSplit out;
    out.X_train = scaler_transform(scaler, select_rows(ds.X, split.train));
    out.X_test = scaler_transform(scaler, select_rows(ds.X, split.test));
    out.y_train = select_labels(ds.y, split.train);
    out.y_test = select_labels(ds.y, split.test);
    out.n_classes = ds.meta.n_classes;
    out.eval_seed = derive_seed(replicate_seed, SeedStream::eval);
    out.warnings = split.warnings;
    return out;
}

TrainedModel train_architecture(const Architecture& arch, const ScaledSplit& split, std::uint64_t seed,
                                const TrainConfig& config, int hidden) {
    Rng init_rng(derive_seed(seed, SeedStream::init));
    Rng train_rng(derive_seed(seed, SeedStream::train));
    TrainedModel model;
    model.network = init_network(static_cast<int>(split.X_train.cols()), split.n_classes, arch, init_rng, hidden);
    const TrainResult tr = train(model.network, split.X_train, split.y_train, config, train_rng);
    model.epochs = tr.epochs();
    model.failed = tr.failed;
    if (!model.failed) {
        Rng eval_rng(split.eval_seed);
        model.train_accuracy = predict_accuracy(model.network, split.X_train, split.y_train, eval_rng);
    }
    return model;
}

Evaluation evaluate_architecture(const Architecture& arch, const ScaledSplit& split, std::uint64_t seed,
                                 const TrainConfig& config, int hidden) {
    TrainedModel model = train_architecture(arch, split, seed, config, hidden);
    Evaluation e;
    e.failed = model.failed;
    if (!model.failed) {
        e.train_accuracy = model.train_accuracy;
        e.test_accuracy = split.test_accuracy(model.network);
    }
    return e;
}

const MethodResult* ReplicateRecord::find(Method m) const {
    for (const auto& r : methods)
        if (r.method == m) return &r;
    return nullptr;
}

nlohmann::ordered_json to_json(const ReplicateRecord& record) {
    nlohmann::ordered_json j;
    j["dataset"] = record.dataset;
    j["n_samples"] = record.n_samples;
    j["n_features"] = record.n_features;
    j["n_classes"] = record.n_classes;
    j["n_layers"] = record.n_layers;
    j["replicate"] = record.replicate;
    j["seed"] = record.seed;
    nlohmann::ordered_json methods = nlohmann::ordered_json::object();
    for (const auto& m : record.methods) {
        nlohmann::ordered_json mj;
        mj["test_score"] = m.test_score;
        mj["train_accuracy"] = m.train_accuracy;
        mj["architecture"] = architecture_names(m.architecture);
        mj["failed"] = m.failed;
        mj["trials"] = m.trials;
        mj["truncated"] = m.truncated;
        methods[std::string(method_name(m.method))] = mj;
    }
    j["methods"] = methods;
    return j;
}

ReplicateRecord replicate_from_json(const nlohmann::json& j) {
    ReplicateRecord r;
    r.dataset = j.at("dataset").get<std::string>();
    r.n_samples = j.value("n_samples", 0);
    r.n_features = j.value("n_features", 0);
    r.n_classes = j.value("n_classes", 0);
    r.n_layers = j.at("n_layers").get<int>();
    r.replicate = j.value("replicate", 0);
    r.seed = j.value("seed", std::uint64_t{0});
    const auto& methods = j.at("methods");
    for (auto m : kAllMethods) {
        const std::string key(method_name(m));
        if (!methods.contains(key)) continue;
        const auto& mj = methods.at(key);
        MethodResult res;
        res.method = m;
        res.test_score = mj.at("test_score").get<double>();
        res.train_accuracy = mj.value("train_accuracy", 0.0);
        for (const auto& name : mj.at("architecture")) res.architecture.push_back(parse_af_name(name.get<std::string>()));
        res.failed = mj.value("failed", false);
        res.trials = mj.value("trials", 0);
        res.truncated = mj.value("truncated", false);
        r.methods.push_back(std::move(res));
    }
    return r;
}

nlohmann::ordered_json to_json(const TrialLogEntry& entry, int n_categories) {
    nlohmann::ordered_json j;
    j["replicate"] = entry.replicate;
    j["trial_id"] = entry.trial.trial_id;
    j["method"] = method_name(entry.method);
    if (n_categories == kNumActivations) {
        auto names = nlohmann::ordered_json::array();
        for (int c : entry.trial.choice) names.push_back(name_of(activation_at(c)));
        j["architecture"] = names;
    } else {
        j["architecture"] = entry.trial.choice;
    }
    j["objective"] = entry.trial.objective;
    j["failed"] = entry.trial.failed;
    j["seed"] = entry.trial.seed;
    return j;
}

std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(SeedStream::replicate),
                       static_cast<std::uint64_t>(replicate));
}

namespace {

Architecture to_architecture(const Choice& choice) {
    Architecture arch;
    arch.reserve(choice.size());
    for (int c : choice) arch.push_back(activation_at(c));
    return arch;
}

using Clock = std::chrono::steady_clock;

// Best-so-far trained network of a study, ordered by (objective, -trial id).
class BestModelCache {
public:
    void offer(int trial_id, TrainedModel&& model) {
        if (model.failed) return;
        std::lock_guard lock(mutex_);
        if (!best_ || model.train_accuracy > best_->train_accuracy ||
            (model.train_accuracy == best_->train_accuracy && trial_id < best_id_)) {
            best_ = std::move(model);
            best_id_ = trial_id;
        }
    }
    TrainedModel* get(int trial_id) { return best_ && best_id_ == trial_id ? &*best_ : nullptr; }

private:
    std::mutex mutex_;
    std::optional<TrainedModel> best_;
    int best_id_ = -1;
};

}  // namespace

ReplicateRecord run_replicate(const Dataset& ds, const ExperimentConfig& config, int replicate,
                              std::uint64_t rep_seed, const ReplicateHooks& hooks) {
    const ScaledSplit split = prepare_split(ds, rep_seed);
    const auto started = Clock::now();
    auto out_of_time = [&] {
        return config.max_seconds > 0.0 &&
               std::chrono::duration<double>(Clock::now() - started).count() > config.max_seconds;
    };
    auto count_evaluation = [&] {
        if (hooks.evaluations) hooks.evaluations->fetch_add(1);
    };

    ReplicateRecord record;
    record.dataset = config.dataset_name.empty() ? ds.meta.name : config.dataset_name;
    record.n_samples = ds.meta.n_samples;
    record.n_features = ds.meta.n_features;
    record.n_classes = ds.meta.n_classes;
    record.n_layers = config.n_layers;
    record.replicate = replicate;
    record.seed = rep_seed;

    const SearchSpace space{config.n_layers, kNumActivations};

    for (Method method : config.methods) {
        const auto method_started = Clock::now();
        const std::uint64_t method_seed =
            derive_seed(rep_seed, static_cast<std::uint64_t>(SeedStream::method), static_cast<std::uint64_t>(method));
        MethodResult res;
        res.method = method;

        if (method == Method::standard) {
            res.architecture = standard_architecture(config.n_layers);
            count_evaluation();
            const Evaluation e = evaluate_architecture(res.architecture, split, method_seed, config.train, config.hidden);
            res.test_score = e.test_accuracy;
            res.train_accuracy = e.train_accuracy;
            res.failed = e.failed;
            res.trials = 1;
        } else {
            const bool test_every_trial = method == Method::random && !config.strict_random;
            std::vector<double> test_scores(static_cast<std::size_t>(config.n_trials), 0.0);
            BestModelCache cache;

            Objective objective = [&](const Choice& choice, int trial_id, std::uint64_t trial_seed) {
                count_evaluation();
                TrainedModel model =
                    train_architecture(to_architecture(choice), split, trial_seed, config.train, config.hidden);
                if (model.failed) return TrialOutcome{0.0, true};
                const double value = model.train_accuracy;
                if (test_every_trial)
                    test_scores[static_cast<std::size_t>(trial_id)] = split.test_accuracy(model.network);
                else
                    cache.offer(trial_id, std::move(model));
                return TrialOutcome{value, false};
            };

            StudyOptions opts;
            opts.n_trials = config.n_trials;
            opts.seed = method_seed;
            opts.jobs = config.jobs;
            opts.should_stop = out_of_time;
            const SamplerKind sampler = method == Method::random ? SamplerKind::random
                                        : method == Method::tpe  ? SamplerKind::tpe
                                                                 : SamplerKind::cmaes;
            const StudyResult study = study_run(objective, sampler, space, opts);
            res.trials = static_cast<int>(study.history.size());
            res.truncated = study.truncated;

            if (hooks.on_trial)
                for (const auto& t : study.history) hooks.on_trial({replicate, method, t});

            if (test_every_trial) {
                // keep the top test score among the trained networks
                std::optional<std::size_t> pick;
                for (std::size_t i = 0; i < study.history.size(); ++i) {
                    if (study.history[i].failed) continue;
                    if (!pick || test_scores[i] > test_scores[*pick]) pick = i;
                }
                if (pick) {
                    res.test_score = test_scores[*pick];
                    res.train_accuracy = study.history[*pick].objective;
                    res.architecture = to_architecture(study.history[*pick].choice);
                } else {
                    res.failed = true;
                    res.architecture = to_architecture(study.best.choice);
                }
            } else if (study.best.failed) {
                res.failed = true;
                res.architecture = to_architecture(study.best.choice);
            } else {
                res.architecture = to_architecture(study.best.choice);
                res.train_accuracy = study.best.objective;
                TrainedModel* model = cache.get(study.best.trial_id);
                if (model == nullptr)
                    throw std::logic_error("best trial's trained network was not cached");
                res.test_score = split.test_accuracy(model->network);
            }
        }
        res.wall_seconds = std::chrono::duration<double>(Clock::now() - method_started).count();
        record.methods.push_back(std::move(res));
    }
    if (hooks.test_reads) hooks.test_reads->fetch_add(split.test_reads->load());
    return record;
}

std::vector<std::pair<Method, double>> method_medians(const std::vector<ReplicateRecord>& records) {
    std::vector<std::pair<Method, double>> out;
    for (auto m : kAllMethods) {
        std::vector<double> scores;
        for (const auto& r : records)
            if (const auto* res = r.find(m)) scores.push_back(res->test_score);
        if (!scores.empty()) out.emplace_back(m, median(scores));
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
    LoadOptions opts;
    opts.format = config.format.value_or(guess_data_format(config.dataset_path));
    opts.label_column = config.label_column;
    const Dataset ds = load_dataset(config.dataset_path, opts);
    return run_experiment(ds, config, log);
}

ExperimentResult run_experiment(const Dataset& ds, const ExperimentConfig& config, std::ostream* log) {
    config.validate();
    if (ds.meta.n_samples < 4) throw DataError("dataset too small for a train/test split");

    auto open = [](const std::string& path) {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write '" + path + "'");
        return f;
    };
    std::ofstream records_out = open(config.output);
    std::ofstream trials_out = open(config.output + ".trials.jsonl");
    std::ofstream timing_out = open(config.output + ".timing.jsonl");
    std::mutex trials_mutex;

    // Replicates run concurrently when there are several; otherwise the
    // jobs go to the studies.
    const bool parallel_replicates = config.jobs > 1 && config.n_replicates > 1;
    ExperimentConfig rep_config = config;
    if (parallel_replicates) rep_config.jobs = 1;

    std::vector<std::vector<TrialLogEntry>> pending_trials(static_cast<std::size_t>(config.n_replicates));
    auto run_one = [&](int r) {
        ReplicateHooks hooks;
        hooks.on_trial = [&, r](const TrialLogEntry& e) {
            std::lock_guard lock(trials_mutex);
            pending_trials[static_cast<std::size_t>(r)].push_back(e);
        };
        return run_replicate(ds, rep_config, r, replicate_seed(config.seed, r), hooks);
    };

    ExperimentResult result;
    auto persist = [&](ReplicateRecord&& rec) {
        records_out << to_json(rec).dump() << '\n';
        records_out.flush();
        {
            std::lock_guard lock(trials_mutex);
            for (const auto& e : pending_trials[static_cast<std::size_t>(rec.replicate)])
                trials_out << to_json(e).dump() << '\n';
            pending_trials[static_cast<std::size_t>(rec.replicate)].clear();
        }
        trials_out.flush();
        nlohmann::ordered_json timing;
        timing["replicate"] = rec.replicate;
        for (const auto& m : rec.methods) timing[std::string(method_name(m.method))] = m.wall_seconds;
        timing_out << timing.dump() << '\n';
        timing_out.flush();
        if (!records_out) throw DataError("write failed; partial results in '" + config.output + "'");
        if (log) {
            *log << "replicate " << rec.replicate + 1 << "/" << config.n_replicates;
            for (const auto& m : rec.methods)
                *log << "  " << method_name(m.method) << "=" << format_score(m.test_score);
            *log << '\n';
        }
        result.records.push_back(std::move(rec));
    };

    if (parallel_replicates) {
        for (int first = 0; first < config.n_replicates; first += config.jobs) {
            std::vector<std::future<ReplicateRecord>> batch;
            for (int r = first; r < std::min(first + config.jobs, config.n_replicates); ++r)
                batch.push_back(std::async(std::launch::async, run_one, r));
            for (auto& f : batch) persist(f.get());
        }
    } else {
        for (int r = 0; r < config.n_replicates; ++r) persist(run_one(r));
    }

    result.medians = method_medians(result.records);

    ReportOptions report;
    report.seed = config.seed;
    std::ofstream summary = open(config.output + ".summary.csv");
    summary << score_table_csv(score_rows(result.records, report));
    return result;
}

}  // namespace afarch
