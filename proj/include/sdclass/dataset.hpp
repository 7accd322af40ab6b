// dataset.hpp: labeled trajectory datasets for the dephasing and damping scenarios

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sdclass/damping.hpp"
#include "sdclass/dephasing.hpp"
#include "sdclass/io.hpp"
#include "sdclass/rng.hpp"
#include "sdclass/spectral_density.hpp"

namespace sdclass {

enum class OhmicityClass : int { SubOhmic = 0, Ohmic = 1, SuperOhmic = 2 };

inline constexpr int kNumClasses = 3;

inline OhmicityClass classify_s(double s) {
    if (s < 1.0) return OhmicityClass::SubOhmic;
    if (s > 1.0) return OhmicityClass::SuperOhmic;
    return OhmicityClass::Ohmic;
}

inline std::string_view class_name(OhmicityClass c) {
    switch (c) {
    case OhmicityClass::SubOhmic: return "sub-ohmic";
    case OhmicityClass::Ohmic: return "ohmic";
    case OhmicityClass::SuperOhmic: return "super-ohmic";
    }
    return "?";
}

enum class ModelKind { Dephasing, Damping };

inline std::string_view model_name(ModelKind m) { return m == ModelKind::Dephasing ? "dephasing" : "damping"; }

inline ModelKind parse_model(std::string_view s) {
    if (s == "dephasing") return ModelKind::Dephasing;
    if (s == "damping") return ModelKind::Damping;
    throw std::invalid_argument("unknown model '" + std::string(s) + "' (expected dephasing or damping)");
}

// Real interval with per-end openness. Open ends are sampled with a small inset.
struct Interval {
    double lo{0.0};
    double hi{0.0};
    bool lo_open{false};
    bool hi_open{false};

    static constexpr double kInset = 1e-6;

    static Interval point(double v) { return {v, v, false, false}; }
    static Interval closed(double lo, double hi) { return {lo, hi, false, false}; }
    static Interval open(double lo, double hi) { return {lo, hi, true, true}; }
    static Interval left_open(double lo, double hi) { return {lo, hi, true, false}; }
    static Interval right_open(double lo, double hi) { return {lo, hi, false, true}; }

    double sample_lo() const { return lo_open ? lo + kInset : lo; }
    double sample_hi() const { return hi_open ? hi - kInset : hi; }
    bool degenerate() const { return lo == hi && !lo_open && !hi_open; }

    void validate(std::string_view name) const {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument(std::string(name) + ": interval bounds must be finite");
        if (degenerate()) return;
        if (!(sample_lo() <= sample_hi()))
            throw std::invalid_argument(std::string(name) + ": empty or inverted interval " + to_string());
    }

    bool contains(double x) const {
        const bool above = lo_open ? x > lo : x >= lo;
        const bool below = hi_open ? x < hi : x <= hi;
        return above && below;
    }

    double sample(Rng& rng) const {
        if (degenerate()) return lo;
        std::uniform_real_distribution<double> u(sample_lo(), sample_hi());
        return u(rng);
    }

    std::string to_string() const {
        return std::string(lo_open ? "(" : "[") + format_double(lo) + "," + format_double(hi) + (hi_open ? ")" : "]");
    }

    static Interval parse(std::string_view text) {
        text = trim(text);
        if (text.size() < 5) throw FormatError("bad interval '" + std::string(text) + "'");
        Interval iv;
        if (text.front() == '(')
            iv.lo_open = true;
        else if (text.front() != '[')
            throw FormatError("bad interval '" + std::string(text) + "'");
        if (text.back() == ')')
            iv.hi_open = true;
        else if (text.back() != ']')
            throw FormatError("bad interval '" + std::string(text) + "'");
        const auto inner = text.substr(1, text.size() - 2);
        const auto comma = inner.find(',');
        if (comma == std::string_view::npos) throw FormatError("bad interval '" + std::string(text) + "'");
        iv.lo = parse_double(trim(inner.substr(0, comma)), "interval");
        iv.hi = parse_double(trim(inner.substr(comma + 1)), "interval");
        return iv;
    }

    bool operator==(const Interval&) const = default;
};

struct ScenarioSpec {
    std::string name;
    ModelKind model{ModelKind::Dephasing};
    Interval s_sub;
    Interval s_super;
    Interval eta;
    Interval omega_c;
    InverseTemperature beta{InverseTemperature::infinite()};
    double omega0{std::numeric_limits<double>::quiet_NaN()}; // damping only
    std::size_t n_train{0};
    std::size_t n_valid{0};
    std::size_t n_test{0};
    double t_min{0.0};
    double t_max{10.0};
    std::size_t n_points{400};
    std::uint64_t seed{0};

    std::size_t count(std::size_t split) const { return split == 0 ? n_train : split == 1 ? n_valid : n_test; }

    void validate() const {
        s_sub.validate("s (sub-ohmic)");
        s_super.validate("s (super-ohmic)");
        eta.validate("eta");
        omega_c.validate("omega_c");
        if (!(s_sub.sample_lo() > 0.0 && s_sub.sample_hi() < 1.0))
            throw std::invalid_argument("sub-ohmic s interval must lie inside (0, 1), got " + s_sub.to_string());
        if (!(s_super.sample_lo() > 1.0))
            throw std::invalid_argument("super-ohmic s interval must lie above 1, got " + s_super.to_string());
        if (!(eta.sample_lo() >= 0.0)) throw std::invalid_argument("eta interval must be nonnegative");
        if (!(omega_c.sample_lo() > 0.0)) throw std::invalid_argument("omega_c interval must be positive");
        if (model == ModelKind::Damping) {
            if (!std::isfinite(omega0)) throw std::invalid_argument("damping scenario needs a finite omega0");
            if (beta.is_infinite())
                throw std::invalid_argument("damping scenario needs a finite beta");
        }
        for (std::size_t split = 0; split < 3; ++split)
            if (count(split) % kNumClasses != 0)
                throw std::invalid_argument("split sizes must be multiples of 3 for class balance");
        if (!(t_min >= 0.0 && t_min < t_max)) throw std::invalid_argument("need 0 <= t_min < t_max");
        if (n_points < 2) throw std::invalid_argument("n_points must be at least 2");
    }
};

namespace detail {

inline ScenarioSpec dephasing_base(std::string name) {
    ScenarioSpec s;
    s.name = std::move(name);
    s.model = ModelKind::Dephasing;
    s.eta = Interval::point(0.25);
    s.omega_c = Interval::point(0.5);
    s.beta = InverseTemperature::infinite();
    s.n_train = 4800;
    s.n_valid = 2400;
    s.n_test = 2400;
    return s;
}

} // namespace detail

inline std::vector<std::string> preset_names() {
    std::vector<std::string> names{"pd-separated", "pd-adjacent"};
    for (int k = 0; k <= 9; ++k) names.push_back("pd-varying-" + std::to_string(k));
    names.push_back("ad-default");
    return names;
}

inline ScenarioSpec preset(std::string_view name) {
    if (name == "pd-separated") {
        auto s = detail::dephasing_base("pd-separated");
        s.s_sub = Interval::left_open(0.0, 0.5);
        s.s_super = Interval::closed(1.5, 4.0);
        return s;
    }
    if (name == "pd-adjacent") {
        auto s = detail::dephasing_base("pd-adjacent");
        s.s_sub = Interval::open(0.0, 1.0);
        s.s_super = Interval::left_open(1.0, 4.0);
        return s;
    }
    if (name.starts_with("pd-varying-") && name.size() == 12 && name[11] >= '0' && name[11] <= '9') {
        const int k = name[11] - '0';
        auto s = detail::dephasing_base(std::string(name));
        s.s_sub = Interval::open(0.0, 1.0);
        s.s_super = Interval::left_open(1.0, 4.0);
        s.eta = Interval::closed(0.25, 0.25 + 0.2 * k);
        s.omega_c = Interval::closed(0.25, 0.25 + 0.2 * k);
        return s;
    }
    if (name == "ad-default") {
        ScenarioSpec s;
        s.name = "ad-default";
        s.model = ModelKind::Damping;
        s.s_sub = Interval::right_open(0.3, 1.0);
        s.s_super = Interval::left_open(1.0, 2.0);
        s.eta = Interval::left_open(0.0, 0.2);
        s.omega_c = Interval::closed(0.1, 2.0);
        s.beta = InverseTemperature::finite(0.1);
        s.omega0 = 1.0;
        s.n_train = 1500;
        s.n_valid = 300;
        s.n_test = 300;
        return s;
    }
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'; valid presets: " + known);
}

struct TrajectoryParams {
    double s{1.0};
    double eta{0.0};
    double omega_c{1.0};
    double beta{std::numeric_limits<double>::infinity()};
    double omega0{std::numeric_limits<double>::quiet_NaN()};

    bool operator==(const TrajectoryParams& o) const {
        auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
        return same(s, o.s) && same(eta, o.eta) && same(omega_c, o.omega_c) && same(beta, o.beta) &&
               same(omega0, o.omega0);
    }
};

struct SampledParams {
    double s;
    double eta;
    double omega_c;
};

inline SampledParams sample_parameters(const ScenarioSpec& spec, OhmicityClass c, Rng& rng) {
    spec.validate();
    SampledParams p{};
    switch (c) {
    case OhmicityClass::SubOhmic: p.s = spec.s_sub.sample(rng); break;
    case OhmicityClass::Ohmic: p.s = 1.0; break;
    case OhmicityClass::SuperOhmic: p.s = spec.s_super.sample(rng); break;
    }
    p.eta = spec.eta.sample(rng);
    p.omega_c = spec.omega_c.sample(rng);
    return p;
}

struct LabeledTrajectory {
    OhmicityClass label{OhmicityClass::Ohmic};
    TrajectoryParams params;
    std::vector<double> values;
};

enum class Split : std::size_t { Train = 0, Valid = 1, Test = 2 };

inline constexpr std::array<std::string_view, 3> kSplitNames{"train", "valid", "test"};

struct Dataset {
    ScenarioSpec spec;
    double sigma{0.0};
    std::uint64_t noise_seed{0};
    std::vector<double> times;
    std::array<std::vector<LabeledTrajectory>, 3> splits;

    std::vector<LabeledTrajectory>& operator[](Split s) { return splits[static_cast<std::size_t>(s)]; }
    const std::vector<LabeledTrajectory>& operator[](Split s) const { return splits[static_cast<std::size_t>(s)]; }
};

class DynamicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string describe(const TrajectoryParams& p) {
    return "s=" + format_double(p.s) + " eta=" + format_double(p.eta) + " omega_c=" + format_double(p.omega_c) +
           " beta=" + format_double(p.beta) + " omega0=" + format_double(p.omega0);
}

inline Stream split_stream(std::size_t split) {
    return split == 0 ? Stream::Train : split == 1 ? Stream::Valid : Stream::Test;
}

inline Stream noise_stream(std::size_t split) {
    return split == 0 ? Stream::NoiseTrain : split == 1 ? Stream::NoiseValid : Stream::NoiseTest;
}

inline LabeledTrajectory make_trajectory(const ScenarioSpec& spec, std::size_t split, std::size_t index,
                                         DecoherenceCache& cache) {
    const auto label = static_cast<OhmicityClass>(index % kNumClasses);
    Rng rng = make_stream(spec.seed, split_stream(split), index);
    const auto p = sample_parameters(spec, label, rng);

    LabeledTrajectory tr;
    tr.label = label;
    tr.params = {p.s, p.eta, p.omega_c, spec.beta.value(), spec.omega0};
    const SpectralDensity sd{p.eta, p.omega_c, p.s};
    double bound = 1.0;
    if (spec.model == ModelKind::Dephasing) {
        DephasingConfig cfg;
        cfg.sd = sd;
        cfg.beta = spec.beta;
        cfg.t_min = spec.t_min;
        cfg.t_max = spec.t_max;
        cfg.n_points = spec.n_points;
        tr.values = sigma_x_trajectory(cfg, &cache).values;
        bound += 1e-12;
    } else {
        DampingConfig cfg;
        cfg.sd = sd;
        cfg.beta = spec.beta;
        cfg.omega0 = spec.omega0;
        cfg.t_min = spec.t_min;
        cfg.t_max = spec.t_max;
        cfg.n_points = spec.n_points;
        tr.values = sigma_x_trajectory_damping(cfg).values;
        bound += 1e-6;
    }
    for (std::size_t i = 0; i < tr.values.size(); ++i) {
        const double v = tr.values[i];
        if (!std::isfinite(v) || std::abs(v) > bound)
            throw DynamicsError(std::string(kSplitNames[split]) + " trajectory " + std::to_string(index) +
                                ": <sigma_x> = " + format_double(v) + " at t = " +
                                format_double(spec.t_min + (spec.t_max - spec.t_min) * i / spec.n_points) +
                                " leaves the physical range (" + describe(tr.params) + ")");
    }
    return tr;
}

// Runs body(i) for i in [0, n) on `threads` workers; the first exception is rethrown.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    pool.clear();
    if (error) std::rethrow_exception(error);
}

} // namespace detail

struct GenerateOptions {
    unsigned threads{std::max(1u, std::thread::hardware_concurrency())};
    std::function<void(std::size_t done, std::size_t total)> progress{};
};

// Trajectory i of a split has label i mod 3 and its own generator keyed by (seed, split, i).
inline Dataset generate_dataset(const ScenarioSpec& spec, const GenerateOptions& options = {}) {
    spec.validate();
    Dataset ds;
    ds.spec = spec;
    ds.times = UniformGrid::half_open(spec.t_min, spec.t_max, spec.n_points).times();
    DecoherenceCache cache;
    const std::size_t total = spec.n_train + spec.n_valid + spec.n_test;
    std::atomic<std::size_t> done{0};
    for (std::size_t split = 0; split < 3; ++split) {
        auto& out = ds.splits[split];
        out.resize(spec.count(split));
        detail::parallel_for(out.size(), options.threads, [&](std::size_t i) {
            out[i] = detail::make_trajectory(spec, split, i, cache);
            const auto d = ++done;
            if (options.progress) options.progress(d, total);
        });
    }
    return ds;
}

// Noise seed for sweep point `index` derived from a base seed.
inline std::uint64_t noise_seed_for(std::uint64_t base_seed, std::uint64_t index) {
    return stream_seed(base_seed, Stream::NoiseSeed, index);
}

// Adds independent N(0, sigma^2) to every value in every split.
inline Dataset inject_noise(const Dataset& clean, double sigma, std::uint64_t noise_seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("inject_noise: sigma must be >= 0");
    Dataset ds = clean;
    if (sigma == 0.0) return ds;
    ds.sigma = std::hypot(clean.sigma, sigma);
    ds.noise_seed = noise_seed;
    for (std::size_t split = 0; split < 3; ++split) {
        auto& trs = ds.splits[split];
        for (std::size_t i = 0; i < trs.size(); ++i) {
            Rng rng = make_stream(noise_seed, detail::noise_stream(split), i);
            std::normal_distribution<double> gauss(0.0, sigma);
            for (double& v : trs[i].values) v += gauss(rng);
        }
    }
    return ds;
}

// On-disk layout: a directory with meta.txt and train.csv / valid.csv / test.csv.
inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline std::string meta_text(const Dataset& ds) {
    const auto& s = ds.spec;
    std::ostringstream o;
    o << "# sdclass dataset metadata\n"
      << "format=sdclass-dataset\n"
      << "version=" << kDatasetFormatVersion << "\n"
      << "scenario=" << s.name << "\n"
      << "model=" << model_name(s.model) << "\n"
      << "seed=" << s.seed << "\n"
      << "sigma=" << format_double(ds.sigma) << "\n"
      << "noise_seed=" << ds.noise_seed << "\n"
      << "n_points=" << s.n_points << "\n"
      << "t_min=" << format_double(s.t_min) << "\n"
      << "t_max=" << format_double(s.t_max) << "\n"
      << "n_train=" << s.n_train << "\n"
      << "n_valid=" << s.n_valid << "\n"
      << "n_test=" << s.n_test << "\n"
      << "s_sub=" << s.s_sub.to_string() << "\n"
      << "s_super=" << s.s_super.to_string() << "\n"
      << "eta=" << s.eta.to_string() << "\n"
      << "omega_c=" << s.omega_c.to_string() << "\n"
      << "beta=" << format_double(s.beta.value()) << "\n"
      << "omega0=" << format_double(s.omega0) << "\n";
    return o.str();
}

inline const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("dataset metadata: missing key '" + key + "'");
    return it->second;
}

inline std::uint64_t parse_uint(const std::string& text, const std::string& where) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw FormatError(where + ": cannot parse integer '" + text + "'");
    return v;
}

inline void write_split(const Dataset& ds, std::size_t split, const std::filesystem::path& path) {
    AtomicFile file(path);
    auto& o = file.stream();
    o << "# " << kVersion << " dataset scenario=" << ds.spec.name << " model=" << model_name(ds.spec.model)
      << " seed=" << ds.spec.seed << " sigma=" << format_double(ds.sigma) << " split=" << kSplitNames[split]
      << " n_points=" << ds.spec.n_points << "\n";
    o << "label,s,eta,omega_c,beta,omega0";
    for (std::size_t i = 0; i < ds.spec.n_points; ++i) o << ",x" << i;
    o << "\n";
    std::string line;
    for (const auto& tr : ds.splits[split]) {
        line.clear();
        line += std::to_string(static_cast<int>(tr.label));
        for (double v : {tr.params.s, tr.params.eta, tr.params.omega_c, tr.params.beta, tr.params.omega0}) {
            line += ',';
            line += format_double(v);
        }
        for (double v : tr.values) {
            line += ',';
            line += format_double(v);
        }
        line += '\n';
        o << line;
    }
    file.commit();
}

inline std::vector<LabeledTrajectory> read_split(const std::filesystem::path& path, std::size_t expected_rows,
                                                 std::size_t n_points) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::string name = path.filename().string();
    std::vector<LabeledTrajectory> out;
    out.reserve(expected_rows);
    std::string line;
    bool header_seen = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (!line.starts_with("label,")) throw FormatError(name + ": missing column header");
            continue;
        }
        ++row;
        const std::string where = name + ": row " + std::to_string(row);
        const auto fields = split_fields(line);
        if (fields.size() != 6 + n_points)
            throw FormatError(where + ": expected " + std::to_string(6 + n_points) + " fields, found " +
                              std::to_string(fields.size()));
        LabeledTrajectory tr;
        const auto label = parse_uint(std::string(fields[0]), where);
        if (label >= kNumClasses) throw FormatError(where + ": label out of range");
        tr.label = static_cast<OhmicityClass>(label);
        tr.params.s = parse_double(fields[1], where);
        tr.params.eta = parse_double(fields[2], where);
        tr.params.omega_c = parse_double(fields[3], where);
        tr.params.beta = parse_double(fields[4], where);
        tr.params.omega0 = parse_double(fields[5], where);
        if (classify_s(tr.params.s) != tr.label)
            throw FormatError(where + ": label " + std::to_string(label) + " inconsistent with s = " +
                              format_double(tr.params.s));
        tr.values.resize(n_points);
        for (std::size_t i = 0; i < n_points; ++i) tr.values[i] = parse_double(fields[6 + i], where);
        out.push_back(std::move(tr));
    }
    if (!header_seen) throw FormatError(name + ": empty file");
    if (out.size() != expected_rows)
        throw FormatError(name + ": expected " + std::to_string(expected_rows) + " rows, found " +
                          std::to_string(out.size()) + " (truncated after row " + std::to_string(out.size()) + ")");
    return out;
}

} // namespace detail

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t split = 0; split < 3; ++split)
        detail::write_split(ds, split, dir / (std::string(kSplitNames[split]) + ".csv"));
    AtomicFile meta(dir / "meta.txt");
    meta.stream() << detail::meta_text(ds);
    meta.commit();
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    const auto kv = read_key_values(dir / "meta.txt");
    if (detail::require(kv, "format") != "sdclass-dataset") throw FormatError("not an sdclass dataset: " + dir.string());
    const auto version = detail::parse_uint(detail::require(kv, "version"), "version");
    if (version != kDatasetFormatVersion)
        throw FormatError("dataset format version " + std::to_string(version) + ", expected " +
                          std::to_string(kDatasetFormatVersion));
    auto num = [&](const std::string& k) { return parse_double(detail::require(kv, k), "meta " + k); };
    auto uint = [&](const std::string& k) { return detail::parse_uint(detail::require(kv, k), "meta " + k); };

    Dataset ds;
    auto& s = ds.spec;
    s.name = detail::require(kv, "scenario");
    s.model = parse_model(detail::require(kv, "model"));
    s.seed = uint("seed");
    s.n_points = uint("n_points");
    s.t_min = num("t_min");
    s.t_max = num("t_max");
    s.n_train = uint("n_train");
    s.n_valid = uint("n_valid");
    s.n_test = uint("n_test");
    s.s_sub = Interval::parse(detail::require(kv, "s_sub"));
    s.s_super = Interval::parse(detail::require(kv, "s_super"));
    s.eta = Interval::parse(detail::require(kv, "eta"));
    s.omega_c = Interval::parse(detail::require(kv, "omega_c"));
    s.beta = InverseTemperature::from_value(num("beta"));
    s.omega0 = num("omega0");
    ds.sigma = num("sigma");
    ds.noise_seed = uint("noise_seed");
    s.validate();
    ds.times = UniformGrid::half_open(s.t_min, s.t_max, s.n_points).times();
    for (std::size_t split = 0; split < 3; ++split)
        ds.splits[split] =
            detail::read_split(dir / (std::string(kSplitNames[split]) + ".csv"), s.count(split), s.n_points);
    return ds;
}

} // namespace sdclass
