// afarch: search per-layer activation functions for dense classifiers.

#include <afarch/benchmarks.hpp>
#include <afarch/experiment.hpp>
#include <afarch/gradcheck.hpp>
#include <afarch/reports.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace afarch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSelftest = 3;

struct DataFlags {
    std::string path;
    std::string format;
    std::string label_col;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--data", path, "Dataset file (.csv or .arff)")->required();
        cmd->add_option("--format", format, "csv or arff (default: from the suffix)");
        cmd->add_option("--label-col", label_col, "Label column name (default: last column)");
    }

    Dataset load() const {
        LoadOptions opts;
        opts.format = format.empty() ? guess_data_format(path) : parse_data_format(format);
        if (!label_col.empty()) opts.label_column = label_col;
        return load_dataset(path, opts);
    }
};

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string sci(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

int cmd_list_afs() {
    std::cout << "index  name               arity        stochastic  params\n";
    for (const auto& a : af_registry()) {
        char line[128];
        std::snprintf(line, sizeof line, "%5d  %-17s  %-11s  %-10s  %d\n", index_of(a.kind),
                      std::string(a.name).c_str(), a.arity == Arity::vectorwise ? "vectorwise" : "elementwise",
                      a.stochastic ? "yes" : "no", a.n_trainable_params);
        std::cout << line;
    }
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
    bool ok = true;
    int checked = 0, passed = 0;
    std::cout << "af                 points  max_abs_err  max_rel_err  result\n";
    for (const auto& r : check_all_activations(seed)) {
        char line[160];
        std::snprintf(line, sizeof line, "%-17s  %6d  %11s  %11s  %s\n", std::string(name_of(r.kind)).c_str(),
                      r.points, sci(r.max_abs_error).c_str(), r.step_like ? "-" : sci(r.max_rel_error).c_str(),
                      r.passed ? (r.step_like ? "zero" : "ok") : "FAIL");
        std::cout << line;
        ++checked;
        passed += r.passed;
        ok = ok && r.passed;
    }
    std::cout << passed << "/" << checked << " activation checks passed\n";

    const std::vector<Architecture> nets = {
        standard_architecture(5),
        parse_architecture("Tanh,GELU,Mish,Sigmoid,LogSoftmax"),
        parse_architecture("Softplus,PReLU,ELU,Erf,Softmin"),
        parse_architecture("Sinh,Atan,GeneralizedSwish,CLogLogM,Softsign"),
    };
    for (std::size_t i = 0; i < nets.size(); ++i) {
        const NetworkCheckResult r = check_network(nets[i], derive_seed(seed, 100 + i));
        std::cout << "network " << format_architecture(nets[i]) << ": params " << r.n_parameters
                  << ", within 1e-4 " << fixed(100.0 * r.fraction_within_1e4, 1) << "%, max_rel_err "
                  << sci(r.max_rel_error) << (r.passed ? " ok" : " FAIL") << '\n';
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitSelftest;
}

int cmd_train(const DataFlags& data, const std::string& arch_text, std::uint64_t seed, int hidden,
              const TrainConfig& train_cfg) {
    const Architecture arch = parse_architecture(arch_text);
    const Dataset ds = data.load();
    const ScaledSplit split = prepare_split(ds, seed);
    for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
    TrainedModel model = train_architecture(arch, split, derive_seed(seed, SeedStream::method), train_cfg, hidden);
    std::cout << "dataset " << ds.meta.name << " (" << ds.meta.n_samples << " samples, " << ds.meta.n_features
              << " features, " << ds.meta.n_classes << " classes)\n";
    std::cout << "architecture " << format_architecture(arch) << '\n';
    std::cout << "epochs " << model.epochs << '\n';
    if (model.failed) {
        std::cout << "training failed (non-finite loss or gradient)\n";
        return kExitOk;
    }
    std::cout << "train_accuracy " << fixed(model.train_accuracy, 4) << '\n';
    std::cout << "test_accuracy " << fixed(split.test_accuracy(model.network), 4) << '\n';
    return kExitOk;
}

int cmd_search(const DataFlags& data, const std::string& method_text, int trials, int layers, std::uint64_t seed,
               int jobs, int hidden, const TrainConfig& train_cfg) {
    const Method method = parse_method(method_text);
    if (method == Method::standard) throw CLI::ValidationError("--method", "expected random, tpe or cmaes");
    const Dataset ds = data.load();
    ExperimentConfig cfg;
    cfg.n_layers = layers;
    cfg.n_trials = trials;
    cfg.methods = {method};
    cfg.jobs = jobs;
    cfg.hidden = hidden;
    cfg.train = train_cfg;
    cfg.validate();
    const ReplicateRecord rec = run_replicate(ds, cfg, 0, seed);
    const MethodResult& res = rec.methods.front();
    std::cout << "method " << method_name(method) << ", trials " << res.trials << '\n';
    std::cout << "best " << format_architecture(res.architecture) << '\n';
    if (res.failed) {
        std::cout << "every trial failed\n";
        return kExitOk;
    }
    std::cout << "train_accuracy " << fixed(res.train_accuracy, 4) << '\n';
    std::cout << "test_accuracy " << fixed(res.test_score, 4) << '\n';
    return kExitOk;
}

int cmd_experiment(const std::string& config_path, std::optional<int> jobs, std::optional<std::uint64_t> seed,
                   const std::string& output) {
    ExperimentConfig cfg = load_config(config_path);
    if (jobs) cfg.jobs = *jobs;
    if (seed) cfg.seed = *seed;
    if (!output.empty()) cfg.output = output;
    cfg.validate();
    const ExperimentResult result = run_experiment(cfg, &std::cerr);
    std::cout << "replicates " << result.records.size() << '\n';
    for (const auto& [m, med] : result.medians) std::cout << "median " << method_name(m) << ' ' << format_score(med) << '\n';
    std::cout << "log " << cfg.output << '\n';
    return kExitOk;
}

int cmd_analyze(const std::string& log_path, const std::string& out_dir, const ReportOptions& opts) {
    const auto records = load_replicate_log(log_path);
    if (records.empty()) throw DataError(log_path + ": no replicate records");
    const std::string scores = score_table_csv(score_rows(records, opts));
    const std::string freqs = frequency_table_csv(records, opts);
    const std::string topmost = topmost_table_csv(records);
    if (out_dir.empty()) {
        std::cout << "# scores\n" << scores << "\n# frequencies\n" << freqs << "\n# topmost\n" << topmost;
        return kExitOk;
    }
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, text] : {std::pair{"scores.csv", &scores}, {"frequencies.csv", &freqs},
                                     {"topmost.csv", &topmost}}) {
        const auto path = std::filesystem::path(out_dir) / name;
        std::ofstream f(path, std::ios::binary);
        f << *text;
        if (!f) throw DataError("cannot write " + path.string());
        std::cout << "wrote " << path.string() << '\n';
    }
    return kExitOk;
}

int cmd_selftest(std::uint64_t seed) {
    bool ok = true;
    int reached = 0;
    for (int s = 0; s < 10; ++s) {
        const SphereRun r = cmaes_sphere(10, derive_seed(seed, 1, s));
        reached += r.reached;
    }
    const bool sphere_ok = reached >= 9;
    std::cout << "cmaes sphere (10-d, <= 5000 evaluations): " << reached << "/10 seeds reached 1e-10 "
              << (sphere_ok ? "ok" : "FAIL") << '\n';
    ok = ok && sphere_ok;

    int wins = 0;
    std::vector<double> tpe_best, random_best;
    for (int s = 0; s < 30; ++s) {
        const std::uint64_t run_seed = derive_seed(seed, 2, s);
        const int t = planted_categorical(SamplerKind::tpe, 5, 10, 200, run_seed).best_matches;
        const int r = planted_categorical(SamplerKind::random, 5, 10, 200, run_seed).best_matches;
        wins += t >= r;
        tpe_best.push_back(t);
        random_best.push_back(r);
    }
    const double tpe_med = median(tpe_best), rnd_med = median(random_best);
    const bool planted_ok = wins >= 20 && tpe_med - rnd_med >= 1.0;
    std::cout << "tpe planted (L=5, K=10, 200 trials): tpe >= random on " << wins << "/30 seeds, median matches "
              << fixed(tpe_med, 1) << " vs " << fixed(rnd_med, 1) << ' ' << (planted_ok ? "ok" : "FAIL") << '\n';
    ok = ok && planted_ok;
    return ok ? kExitOk : kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-layer activation-function architecture search for dense classifiers"};
    app.require_subcommand(1, 1);

    auto* list_afs = app.add_subcommand("list-afs", "Print the activation-function registry");

    std::uint64_t seed = 0;
    auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
    gradcheck->add_option("--seed", seed, "Seed for the sample points");

    DataFlags train_data;
    std::string arch = "standard:5";
    int hidden = kHiddenWidth;
    TrainConfig train_cfg;
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--hidden", hidden, "Hidden-layer width")->check(CLI::PositiveNumber);
        cmd->add_option("--max-epochs", train_cfg.max_epochs, "Epoch limit")->check(CLI::PositiveNumber);
        cmd->add_option("--patience", train_cfg.patience, "Early-stopping patience")->check(CLI::PositiveNumber);
    };
    auto* train_cmd = app.add_subcommand("train", "Train one architecture and report train/test accuracy");
    train_data.add_to(train_cmd);
    train_cmd->add_option("--arch", arch, "Comma-separated AF names or standard:N");
    train_cmd->add_option("--seed", seed, "Split and initialization seed");
    add_train_flags(train_cmd);

    DataFlags search_data;
    std::string method = "random";
    int trials = 100, layers = 5, jobs = 1;
    auto* search = app.add_subcommand("search", "Run one architecture search on one split");
    search_data.add_to(search);
    search->add_option("--method", method, "random, tpe or cmaes")->check(CLI::IsMember({"random", "tpe", "cmaes"}));
    search->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
    search->add_option("--layers", layers, "Number of layers")->check(CLI::Range(2, 64));
    search->add_option("--seed", seed, "Seed");
    search->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    add_train_flags(search);

    std::string config_path, output;
    std::optional<int> exp_jobs;
    std::optional<std::uint64_t> exp_seed;
    auto* experiment = app.add_subcommand("experiment", "Run replicated comparisons from a config file");
    experiment->add_option("--config", config_path, "Config file (key = value lines)")->required();
    experiment->add_option("--jobs", exp_jobs, "Worker threads (overrides the config)");
    experiment->add_option("--seed", exp_seed, "Master seed (overrides the config)");
    experiment->add_option("--output", output, "Replicate log path (overrides the config)");

    std::string log_path, out_dir;
    ReportOptions report;
    auto* analyze = app.add_subcommand("analyze", "Score, frequency and topmost-AF tables from a replicate log");
    analyze->add_option("--log", log_path, "Replicate log (JSON lines)")->required();
    analyze->add_option("--out-dir", out_dir, "Write scores.csv, frequencies.csv, topmost.csv here");
    analyze->add_option("--seed", report.seed, "Permutation-test seed");
    analyze->add_option("--rounds", report.rounds, "Permutation rounds")->check(CLI::PositiveNumber);
    analyze->add_option("--top", report.top_k, "Rows per frequency bucket")->check(CLI::PositiveNumber);

    auto* selftest = app.add_subcommand("selftest", "Run the sampler benchmarks");
    selftest->add_option("--seed", seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*list_afs) return cmd_list_afs();
        if (*gradcheck) return cmd_gradcheck(seed);
        if (*train_cmd) return cmd_train(train_data, arch, seed, hidden, train_cfg);
        if (*search) return cmd_search(search_data, method, trials, layers, seed, jobs, hidden, train_cfg);
        if (*experiment) return cmd_experiment(config_path, exp_jobs, exp_seed, output);
        if (*analyze) return cmd_analyze(log_path, out_dir, report);
        if (*selftest) return cmd_selftest(seed);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
