// experiment.hpp: featurization, training runs and parameter sweeps

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "sdclass/dataset.hpp"
#include "sdclass/feature_selection.hpp"
#include "sdclass/io.hpp"
#include "sdclass/mlp.hpp"

namespace sdclass {

// Training runs in single precision; feature extraction and physics stay in double.
using TrainScalar = float;

enum class SelectionMethod { Correlation, Uniform };

inline std::string_view method_name(SelectionMethod m) {
    return m == SelectionMethod::Correlation ? "correlation" : "uniform";
}

inline SelectionMethod parse_method(std::string_view s) {
    if (s == "correlation") return SelectionMethod::Correlation;
    if (s == "uniform") return SelectionMethod::Uniform;
    throw std::invalid_argument("unknown selection method '" + std::string(s) + "' (expected correlation or uniform)");
}

enum class Command { Generate, Train, Evaluate, SweepNoise, SweepInterval, FeatselCurve };

struct ExperimentConfig {
    std::string preset{"pd-separated"};
    ScenarioSpec spec{sdclass::preset("pd-separated")};
    std::uint64_t seed{1};
    std::optional<std::size_t> iterations;
    double budget{1.0};
    double lr{1e-4};
    std::vector<double> sigmas;
    std::vector<std::size_t> points;
    std::vector<SelectionMethod> methods{SelectionMethod::Correlation, SelectionMethod::Uniform};
    std::vector<int> interval_ks{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t report_every{100};
    bool standardize{false};
    std::vector<Eigen::Index> hidden{250, 80};
    unsigned threads{std::max(1u, std::thread::hardware_concurrency())};
    std::filesystem::path out{"."};

    // Resolved configuration as key=value lines, used for output headers.
    std::string describe() const {
        std::ostringstream o;
        o << "preset=" << preset << " model=" << model_name(spec.model) << " seed=" << seed
          << " lr=" << format_double(lr) << " budget=" << format_double(budget)
          << " standardize=" << (standardize ? "true" : "false");
        if (iterations) o << " iters=" << *iterations;
        return o.str();
    }
};

// Per-experiment iteration counts of the reference study.
inline std::size_t default_iterations(Command cmd, const ScenarioSpec& spec) {
    if (spec.model == ModelKind::Damping) return 10000;
    switch (cmd) {
    case Command::SweepInterval: return 20000;
    case Command::SweepNoise:
        if (spec.name == "pd-varying-0") return 10000;
        if (spec.name.starts_with("pd-varying-")) return 20000;
        return 1000;
    default: break;
    }
    if (spec.name == "pd-separated") return 80;
    if (spec.name == "pd-adjacent") return 5000;
    return 20000;
}

inline std::size_t resolve_iterations(const ExperimentConfig& cfg, Command cmd) {
    const std::size_t base = cfg.iterations ? *cfg.iterations : default_iterations(cmd, cfg.spec);
    if (base == 0) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(base) * cfg.budget)));
}

// Noise stream seed for a given sigma; depends on the value only, not on its position in a list.
inline std::uint64_t noise_seed_for_sigma(std::uint64_t seed, double sigma) {
    return noise_seed_for(seed, std::bit_cast<std::uint64_t>(sigma));
}

struct FeatureSet {
    std::array<LabeledMatrix<TrainScalar>, 3> splits;
    Eigen::Index width{0};

    const LabeledMatrix<TrainScalar>& train() const { return splits[0]; }
    const LabeledMatrix<TrainScalar>& valid() const { return splits[1]; }
    const LabeledMatrix<TrainScalar>& test() const { return splits[2]; }
};

inline LabeledMatrix<TrainScalar> featurize_split(std::span<const LabeledTrajectory> split,
                                                  std::span<const std::size_t> indices) {
    LabeledMatrix<TrainScalar> out;
    if (split.empty()) return out;
    const std::size_t n = split.front().values.size();
    const bool full = indices.empty();
    const auto width = static_cast<Eigen::Index>(2 * (full ? n : indices.size()));
    out.x.resize(static_cast<Eigen::Index>(split.size()), width);
    out.labels = label_vector(split);
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i].values.size() != n) throw std::invalid_argument("featurize: trajectories differ in length");
        const auto f = full ? full_features(split[i].values) : reduced_features(split[i].values, indices);
        for (Eigen::Index j = 0; j < width; ++j)
            out.x(static_cast<Eigen::Index>(i), j) = static_cast<TrainScalar>(f.values[static_cast<std::size_t>(j)]);
    }
    return out;
}

// Fourier features of every split; an empty index list means all time points.
inline FeatureSet featurize(const Dataset& ds, std::span<const std::size_t> indices = {}) {
    FeatureSet fs;
    for (std::size_t s = 0; s < 3; ++s) fs.splits[s] = featurize_split(ds.splits[s], indices);
    fs.width = fs.splits[0].x.cols();
    return fs;
}

// z-scoring fitted on one split; folded into the first layer after training.
struct Standardizer {
    Eigen::Matrix<TrainScalar, 1, Eigen::Dynamic> mean;
    Eigen::Matrix<TrainScalar, 1, Eigen::Dynamic> inv_std;

    static Standardizer fit(const MatrixX<TrainScalar>& x) {
        Standardizer s;
        const Eigen::RowVectorXd xd_mean = x.cast<double>().colwise().mean();
        const Eigen::RowVectorXd var =
            (x.cast<double>().rowwise() - xd_mean).array().square().colwise().mean();
        s.mean = xd_mean.cast<TrainScalar>();
        s.inv_std = var.unaryExpr([](double v) { return v > 1e-24 ? 1.0 / std::sqrt(v) : 1.0; }).cast<TrainScalar>();
        return s;
    }

    MatrixX<TrainScalar> apply(const MatrixX<TrainScalar>& x) const {
        return ((x.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
    }

    // W' = diag(inv_std) W, b' = b - (mean .* inv_std) W, so the model accepts raw features.
    void fold_into(Mlp<TrainScalar>& m) const {
        const Eigen::Matrix<TrainScalar, 1, Eigen::Dynamic> shift = mean.cwiseProduct(inv_std);
        m.biases[0] -= shift * m.weights[0];
        m.weights[0] = inv_std.asDiagonal() * m.weights[0];
    }
};

struct RunResult {
    TrainReport report;
    double train_acc{0.0};
    double valid_acc{0.0};
    double test_acc{0.0};
    Mlp<TrainScalar> model;
};

inline std::vector<Eigen::Index> network_dims(Eigen::Index width, const std::vector<Eigen::Index>& hidden) {
    std::vector<Eigen::Index> dims{width};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(kNumClasses);
    return dims;
}

inline RunResult run_training(const FeatureSet& fs, std::size_t iterations, const ExperimentConfig& cfg) {
    if (fs.train().size() == 0) throw std::invalid_argument("run_training: empty training split");
    RunResult r;
    r.model = init_model<TrainScalar>(network_dims(fs.width, cfg.hidden), cfg.seed);
    TrainOptions opt;
    opt.iterations = iterations;
    opt.report_every = cfg.report_every;
    opt.lr = cfg.lr;
    if (cfg.standardize) {
        const auto sc = Standardizer::fit(fs.train().x);
        const LabeledMatrix<TrainScalar> tr{sc.apply(fs.train().x), fs.train().labels};
        const LabeledMatrix<TrainScalar> va{sc.apply(fs.valid().x), fs.valid().labels};
        r.report = train(r.model, tr, &va, opt);
        sc.fold_into(r.model);
    } else {
        r.report = train(r.model, fs.train(), &fs.valid(), opt);
    }
    r.train_acc = r.report.final().train_acc;
    r.valid_acc = fs.valid().size() ? accuracy(r.model, fs.valid().x, fs.valid().labels) : 0.0;
    r.test_acc = fs.test().size() ? accuracy(r.model, fs.test().x, fs.test().labels) : 0.0;
    r.report.test_acc = r.test_acc;
    return r;
}

inline Dataset make_dataset(const ExperimentConfig& cfg) {
    ScenarioSpec spec = cfg.spec;
    spec.seed = cfg.seed;
    GenerateOptions g;
    g.threads = cfg.threads;
    return generate_dataset(spec, g);
}

struct NoiseRow {
    double sigma;
    double train_acc;
    double test_acc;
};

// One fresh model per sigma, trained on noisy copies of the same clean dataset. Rows ascend in sigma.
inline std::vector<NoiseRow> sweep_noise(const Dataset& clean, const ExperimentConfig& cfg,
                                         const std::function<void(const NoiseRow&)>& on_row = {}) {
    if (cfg.sigmas.empty()) throw std::invalid_argument("sweep-noise: no sigma values given");
    std::vector<double> sigmas = cfg.sigmas;
    std::sort(sigmas.begin(), sigmas.end());
    const auto iters = resolve_iterations(cfg, Command::SweepNoise);
    std::vector<NoiseRow> rows;
    for (double sigma : sigmas) {
        const Dataset noisy = inject_noise(clean, sigma, noise_seed_for_sigma(cfg.seed, sigma));
        const auto r = run_training(featurize(noisy), iters, cfg);
        rows.push_back({sigma, r.train_acc, r.test_acc});
        if (on_row) on_row(rows.back());
    }
    return rows;
}

struct IntervalRow {
    int k;
    double interval_length;
    double train_acc;
    double test_acc;
};

inline std::vector<IntervalRow> sweep_interval(const ExperimentConfig& cfg,
                                               const std::function<void(const IntervalRow&)>& on_row = {}) {
    std::vector<IntervalRow> rows;
    for (int k : cfg.interval_ks) {
        // the scenario comes from the preset; split sizes and the time grid come from cfg
        ExperimentConfig point = cfg;
        point.preset = "pd-varying-" + std::to_string(k);
        point.spec = preset(point.preset);
        point.spec.n_train = cfg.spec.n_train;
        point.spec.n_valid = cfg.spec.n_valid;
        point.spec.n_test = cfg.spec.n_test;
        point.spec.n_points = cfg.spec.n_points;
        point.spec.t_min = cfg.spec.t_min;
        point.spec.t_max = cfg.spec.t_max;
        const auto iters = resolve_iterations(point, Command::SweepInterval);
        const auto r = run_training(featurize(make_dataset(point)), iters, point);
        rows.push_back({k, point.spec.eta.hi - point.spec.eta.lo, r.train_acc, r.test_acc});
        if (on_row) on_row(rows.back());
    }
    return rows;
}

struct FeatselRow {
    std::size_t k_points;
    SelectionMethod method;
    double train_acc;
    double test_acc;
};

// Ranking from the training split exactly as it is fed to the classifier.
inline FeatureRanking correlation_ranking(const Dataset& ds) {
    const auto& train = ds[Split::Train];
    return rank_features(pearson_matrix(train), label_relevance(train));
}

inline std::vector<FeatselRow> featsel_curve(const Dataset& ds, const ExperimentConfig& cfg,
                                             const std::function<void(const FeatselRow&)>& on_row = {}) {
    if (cfg.points.empty()) throw std::invalid_argument("featsel-curve: no point counts given");
    const std::size_t n = ds.spec.n_points;
    const auto ranking = correlation_ranking(ds);
    const auto iters = resolve_iterations(cfg, Command::FeatselCurve);
    std::vector<FeatselRow> rows;
    for (std::size_t k : cfg.points) {
        for (auto method : cfg.methods) {
            const auto idx = method == SelectionMethod::Correlation ? ranking.retained(k) : select_uniform(n, k);
            const auto r = run_training(featurize(ds, idx), iters, cfg);
            rows.push_back({k, method, r.train_acc, r.test_acc});
            if (on_row) on_row(rows.back());
        }
    }
    return rows;
}

// CSV output with a '#' header naming the tool version and resolved config.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& config, const std::string& columns)
        : file_(path) {
        file_.stream() << "# " << kVersion << "\n# " << config << "\n" << columns << "\n";
    }

    template <class... T>
    void row(const T&... fields) {
        std::string line;
        bool first = true;
        auto put = [&](const auto& v) {
            if (!first) line += ',';
            first = false;
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_floating_point_v<V>)
                line += format_double(static_cast<double>(v));
            else if constexpr (std::is_arithmetic_v<V>)
                line += std::to_string(v);
            else
                line += std::string(v);
        };
        (put(fields), ...);
        file_.stream() << line << '\n';
    }

    void commit() { file_.commit(); }

private:
    AtomicFile file_;
};

inline void write_train_log(const TrainReport& report, const std::filesystem::path& path, const std::string& config) {
    CsvWriter w(path, config, "iteration,loss,train_acc,valid_acc");
    for (const auto& r : report.rows) w.row(r.iteration, r.loss, r.train_acc, r.valid_acc);
    w.commit();
}

inline void write_ranking(const FeatureRanking& ranking, const Dataset& ds, const Eigen::VectorXd& relevance,
                          const std::filesystem::path& path, const std::string& config) {
    CsvWriter w(path, config + "\n# rank 1 is removed first; the last rank is kept longest", "rank,time_index,time_value,R_score");
    for (std::size_t r = 0; r < ranking.removal_order.size(); ++r) {
        const auto idx = ranking.removal_order[r];
        w.row(r + 1, idx, ds.times[idx], relevance[static_cast<Eigen::Index>(idx)]);
    }
    w.commit();
}

namespace detail {

inline std::vector<std::string_view> list_items(std::string_view text) {
    std::vector<std::string_view> out;
    for (auto f : split_fields(text, ','))
        if (!trim(f).empty()) out.push_back(trim(f));
    return out;
}

} // namespace detail

inline std::vector<double> parse_double_list(std::string_view text, const std::string& what) {
    std::vector<double> out;
    for (auto f : detail::list_items(text)) out.push_back(parse_double(f, what));
    return out;
}

inline std::vector<std::size_t> parse_size_list(std::string_view text, const std::string& what) {
    std::vector<std::size_t> out;
    for (auto f : detail::list_items(text)) {
        const double v = parse_double(f, what);
        if (!(v >= 0.0) || v != std::floor(v)) throw std::invalid_argument(what + ": expected a nonnegative integer");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

// Applies key=value entries. Scenario keys override the preset chosen so far.
inline void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv,
                           const std::string& source) {
    if (auto it = kv.find("preset"); it != kv.end()) {
        cfg.preset = it->second;
        cfg.spec = preset(cfg.preset);
    }
    for (const auto& [key, value] : kv) {
        const std::string where = source + ": " + key;
        auto num = [&] { return parse_double(value, where); };
        auto count = [&] { return parse_size_list(value, where).at(0); };
        auto& s = cfg.spec;
        if (key == "preset") continue;
        if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "iters" || key == "iterations") cfg.iterations = count();
        else if (key == "budget") cfg.budget = num();
        else if (key == "lr") cfg.lr = num();
        else if (key == "sigma") cfg.sigmas = parse_double_list(value, where);
        else if (key == "points") cfg.points = parse_size_list(value, where);
        else if (key == "method") {
            cfg.methods.clear();
            for (auto m : detail::list_items(value)) cfg.methods.push_back(parse_method(m));
        } else if (key == "k") {
            cfg.interval_ks.clear();
            for (auto k : parse_size_list(value, where)) cfg.interval_ks.push_back(static_cast<int>(k));
        } else if (key == "report_every") cfg.report_every = count();
        else if (key == "standardize") cfg.standardize = value == "true" || value == "1";
        else if (key == "threads") cfg.threads = static_cast<unsigned>(count());
        else if (key == "out") cfg.out = value;
        else if (key == "model") s.model = parse_model(value);
        else if (key == "s_sub") s.s_sub = Interval::parse(value);
        else if (key == "s_super") s.s_super = Interval::parse(value);
        else if (key == "eta") s.eta = Interval::parse(value);
        else if (key == "omega_c") s.omega_c = Interval::parse(value);
        else if (key == "beta") s.beta = InverseTemperature::from_value(num());
        else if (key == "omega0") s.omega0 = num();
        else if (key == "n_train") s.n_train = count();
        else if (key == "n_valid") s.n_valid = count();
        else if (key == "n_test") s.n_test = count();
        else if (key == "n_points") s.n_points = count();
        else if (key == "t_min") s.t_min = num();
        else if (key == "t_max") s.t_max = num();
        else throw std::invalid_argument(source + ": unknown key '" + key + "'");
    }
    cfg.spec.validate();
}

} // namespace sdclass
