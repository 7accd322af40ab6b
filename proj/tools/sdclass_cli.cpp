// sdclass: generate datasets, train classifiers and run the sweeps from the command line.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sdclass/dataset.hpp"
#include "sdclass/experiment.hpp"
#include "sdclass/feature_selection.hpp"
#include "sdclass/mlp.hpp"

namespace fs = std::filesystem;
using namespace sdclass;

namespace {

// Raw flag values of one subcommand, keyed like the config file.
struct Flags {
    std::string preset, config, data, model, sigma, points, method, k, out;
    std::string seed, iters, lr, budget, report_every, threads;
    bool standardize{false};
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--preset", f.preset, "scenario preset");
    cmd->add_option("--config", f.config, "key=value config file");
    cmd->add_option("--seed", f.seed, "base random seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--threads", f.threads, "worker threads for data generation");
}

void add_training(CLI::App* cmd, Flags& f) {
    cmd->add_option("--iters", f.iters, "training iterations (default: per experiment)");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--budget", f.budget, "scale factor applied to the iteration count");
    cmd->add_option("--report-every", f.report_every, "validation logging interval");
    cmd->add_flag("--standardize", f.standardize, "z-score features using training-split statistics");
}

// preset < config file < flags
ExperimentConfig resolve(const Flags& f) {
    std::map<std::string, std::string> kv;
    if (!f.config.empty()) kv = read_key_values(f.config);
    auto put = [&](const char* key, const std::string& v) {
        if (!v.empty()) kv[key] = v;
    };
    put("preset", f.preset);
    put("seed", f.seed);
    put("iters", f.iters);
    put("lr", f.lr);
    put("budget", f.budget);
    put("sigma", f.sigma);
    put("points", f.points);
    put("method", f.method);
    put("k", f.k);
    put("report_every", f.report_every);
    put("threads", f.threads);
    put("out", f.out);
    if (f.standardize) kv["standardize"] = "true";
    ExperimentConfig cfg;
    apply_settings(cfg, kv, f.config.empty() ? "flags" : f.config);
    return cfg;
}

Dataset dataset_for(const ExperimentConfig& cfg, const std::string& data_dir) {
    if (!data_dir.empty()) {
        if (!fs::exists(fs::path(data_dir) / "meta.txt"))
            throw std::runtime_error("no dataset found in " + data_dir + " (missing meta.txt)");
        return load_dataset(data_dir);
    }
    std::cerr << "generating " << cfg.spec.name << " (seed " << cfg.seed << ")\n";
    return make_dataset(cfg);
}

std::string header(const ExperimentConfig& cfg, const std::string& extra = {}) {
    return cfg.describe() + (extra.empty() ? "" : " " + extra);
}

int cmd_generate(const Flags& f) {
    auto cfg = resolve(f);
    Dataset ds = make_dataset(cfg);
    double sigma = 0.0;
    if (!cfg.sigmas.empty()) {
        if (cfg.sigmas.size() != 1) throw std::invalid_argument("generate: --sigma takes a single value");
        sigma = cfg.sigmas.front();
        ds = inject_noise(ds, sigma, noise_seed_for_sigma(cfg.seed, sigma));
    }
    save_dataset(ds, cfg.out);
    std::cout << "wrote " << ds.spec.n_train << "/" << ds.spec.n_valid << "/" << ds.spec.n_test << " trajectories ("
              << ds.spec.name << ", sigma " << format_double(sigma) << ") to " << cfg.out.string() << "\n";
    return 0;
}

void print_accuracies(double train, double valid, double test) {
    std::printf("train_acc=%.2f valid_acc=%.2f test_acc=%.2f\n", train, valid, test);
}

int cmd_train(const Flags& f) {
    if (f.data.empty()) throw std::invalid_argument("train: --data is required");
    auto cfg = resolve(f);
    const Dataset ds = dataset_for(cfg, f.data);
    if (f.preset.empty()) {
        cfg.preset = ds.spec.name;
        cfg.spec = ds.spec;
    }
    if (ds.spec.n_points != cfg.spec.n_points)
        throw std::invalid_argument("train: dataset has " + std::to_string(ds.spec.n_points) +
                                    " time points but the configuration expects " +
                                    std::to_string(cfg.spec.n_points));
    const auto iters = resolve_iterations(cfg, Command::Train);
    const auto r = run_training(featurize(ds), iters, cfg);
    fs::create_directories(cfg.out);
    save_model(r.model, cfg.out / "model.txt");
    const std::string hdr = header(cfg, "data=" + f.data + " iterations=" + std::to_string(iters));
    write_train_log(r.report, cfg.out / "train_log.csv", hdr);
    CsvWriter m(cfg.out / "metrics.csv", hdr, "split,accuracy");
    m.row(std::string("train"), r.train_acc);
    m.row(std::string("valid"), r.valid_acc);
    m.row(std::string("test"), r.test_acc);
    m.commit();
    print_accuracies(r.train_acc, r.valid_acc, r.test_acc);
    return 0;
}

int cmd_evaluate(const Flags& f) {
    if (f.data.empty() || f.model.empty()) throw std::invalid_argument("evaluate: --data and --model are required");
    auto cfg = resolve(f);
    const Dataset ds = load_dataset(f.data);
    const auto model = load_model<TrainScalar>(f.model);
    const auto width = static_cast<Eigen::Index>(2 * ds.spec.n_points);
    if (model.inputs() != width)
        throw std::invalid_argument("evaluate: model expects " + std::to_string(model.inputs()) +
                                    " features but the dataset yields " + std::to_string(width));
    const auto feats = featurize(ds);
    std::array<double, 3> acc{};
    for (std::size_t s = 0; s < 3; ++s)
        acc[s] = feats.splits[s].size() ? accuracy(model, feats.splits[s].x, feats.splits[s].labels) : 0.0;
    fs::create_directories(cfg.out);
    CsvWriter w(cfg.out / "evaluation.csv", header(cfg, "data=" + f.data + " model=" + f.model), "split,accuracy");
    for (std::size_t s = 0; s < 3; ++s) w.row(std::string(kSplitNames[s]), acc[s]);
    w.commit();
    print_accuracies(acc[0], acc[1], acc[2]);
    return 0;
}

int cmd_sweep_noise(const Flags& f) {
    auto cfg = resolve(f);
    const Dataset clean = dataset_for(cfg, f.data);
    if (!f.data.empty() && f.preset.empty()) cfg.spec = clean.spec;
    const auto iters = resolve_iterations(cfg, Command::SweepNoise);
    fs::create_directories(cfg.out);
    CsvWriter w(cfg.out / "sweep_noise.csv", header(cfg, "iterations=" + std::to_string(iters)),
                "sigma,train_acc,test_acc");
    for (const auto& row : sweep_noise(clean, cfg, [](const NoiseRow& r) {
             std::fprintf(stderr, "sigma=%g train=%.2f test=%.2f\n", r.sigma, r.train_acc, r.test_acc);
         }))
        w.row(row.sigma, row.train_acc, row.test_acc);
    w.commit();
    return 0;
}

int cmd_sweep_interval(const Flags& f) {
    auto cfg = resolve(f);
    fs::create_directories(cfg.out);
    CsvWriter w(cfg.out / "sweep_interval.csv", header(cfg), "k,interval_length,train_acc,test_acc");
    for (const auto& row : sweep_interval(cfg, [](const IntervalRow& r) {
             std::fprintf(stderr, "k=%d train=%.2f test=%.2f\n", r.k, r.train_acc, r.test_acc);
         }))
        w.row(row.k, row.interval_length, row.train_acc, row.test_acc);
    w.commit();
    return 0;
}

int cmd_featsel_curve(const Flags& f) {
    Flags g = f;
    if (g.preset.empty() && g.data.empty() && g.config.empty()) g.preset = "ad-default";
    auto cfg = resolve(g);
    if (cfg.points.empty()) cfg.points = {400, 250, 100, 40, 20, 10, 5};
    const Dataset ds = dataset_for(cfg, f.data);
    if (!f.data.empty() && f.preset.empty()) cfg.spec = ds.spec;
    fs::create_directories(cfg.out);
    const auto& train = ds[Split::Train];
    const auto relevance = label_relevance(train);
    write_ranking(rank_features(pearson_matrix(train), relevance), ds, relevance, cfg.out / "ranking.csv",
                  header(cfg));
    const auto iters = resolve_iterations(cfg, Command::FeatselCurve);
    CsvWriter w(cfg.out / "featsel_curve.csv", header(cfg, "iterations=" + std::to_string(iters)),
                "k_points,method,train_acc,test_acc");
    for (const auto& row : featsel_curve(ds, cfg, [](const FeatselRow& r) {
             std::fprintf(stderr, "k=%zu %s train=%.2f test=%.2f\n", r.k_points, std::string(method_name(r.method)).c_str(),
                          r.train_acc, r.test_acc);
         }))
        w.row(row.k_points, std::string(method_name(row.method)), row.train_acc, row.test_acc);
    w.commit();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-density classification from open-system dynamics"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Flags gen, trn, evl, swn, swi, fsc;

    auto* c_gen = app.add_subcommand("generate", "generate a dataset and write it to --out");
    add_common(c_gen, gen);
    c_gen->add_option("--sigma", gen.sigma, "noise standard deviation added to every split");

    auto* c_trn = app.add_subcommand("train", "train a classifier on a stored dataset");
    add_common(c_trn, trn);
    add_training(c_trn, trn);
    c_trn->add_option("--data", trn.data, "dataset directory")->required();

    auto* c_evl = app.add_subcommand("evaluate", "report accuracies of a stored model on a stored dataset");
    add_common(c_evl, evl);
    c_evl->add_option("--data", evl.data, "dataset directory")->required();
    c_evl->add_option("--model", evl.model, "model file")->required();

    auto* c_swn = app.add_subcommand("sweep-noise", "accuracy against additive noise sigma");
    add_common(c_swn, swn);
    add_training(c_swn, swn);
    c_swn->add_option("--data", swn.data, "clean dataset directory (default: generate from the preset)");
    c_swn->add_option("--sigma", swn.sigma, "comma-separated sigma values");

    auto* c_swi = app.add_subcommand("sweep-interval", "accuracy against the eta / omega_c interval length");
    add_common(c_swi, swi);
    add_training(c_swi, swi);
    c_swi->add_option("--k", swi.k, "comma-separated interval indices (default 0..9)");

    auto* c_fsc = app.add_subcommand("featsel-curve", "accuracy against the number of retained time points");
    add_common(c_fsc, fsc);
    add_training(c_fsc, fsc);
    c_fsc->add_option("--data", fsc.data, "dataset directory (default: generate from the preset)");
    c_fsc->add_option("--points", fsc.points, "comma-separated point counts");
    c_fsc->add_option("--method", fsc.method, "comma-separated methods: correlation, uniform");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_gen->parsed()) return cmd_generate(gen);
        if (c_trn->parsed()) return cmd_train(trn);
        if (c_evl->parsed()) return cmd_evaluate(evl);
        if (c_swn->parsed()) return cmd_sweep_noise(swn);
        if (c_swi->parsed()) return cmd_sweep_interval(swi);
        if (c_fsc->parsed()) return cmd_featsel_curve(fsc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
