// mlp.hpp: dense feed-forward classifier with sigmoid hidden layers and a softmax output

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "sdclass/io.hpp"
#include "sdclass/rng.hpp"

namespace sdclass {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Samples are rows. Layer l maps a row a to sigma(a W_l + b_l).
template <class Scalar>
struct Mlp {
    std::vector<Eigen::Index> dims;
    std::vector<MatrixX<Scalar>> weights;
    std::vector<RowVectorX<Scalar>> biases;

    std::size_t layers() const { return weights.size(); }
    Eigen::Index inputs() const { return dims.front(); }
    Eigen::Index outputs() const { return dims.back(); }

    template <class Other>
    Mlp<Other> cast() const {
        Mlp<Other> m;
        m.dims = dims;
        for (const auto& w : weights) m.weights.push_back(w.template cast<Other>());
        for (const auto& b : biases) m.biases.push_back(b.template cast<Other>());
        return m;
    }

    bool all_finite() const {
        for (const auto& w : weights)
            if (!w.allFinite()) return false;
        for (const auto& b : biases)
            if (!b.allFinite()) return false;
        return true;
    }
};

inline void validate_dims(const std::vector<Eigen::Index>& dims) {
    if (dims.size() < 2) throw std::invalid_argument("mlp: need at least an input and an output layer");
    for (auto d : dims)
        if (d < 1) throw std::invalid_argument("mlp: layer sizes must be positive");
}

// Glorot-uniform weights drawn in row-major order from a double-precision stream, zero biases.
template <class Scalar = double>
Mlp<Scalar> init_model(const std::vector<Eigen::Index>& dims, std::uint64_t seed) {
    validate_dims(dims);
    Mlp<Scalar> m;
    m.dims = dims;
    Rng rng = make_stream(seed, Stream::ModelInit, 0);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        std::uniform_real_distribution<double> u(-limit, limit);
        MatrixX<Scalar> w(dims[l], dims[l + 1]);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(u(rng));
        m.weights.push_back(std::move(w));
        m.biases.push_back(RowVectorX<Scalar>::Zero(dims[l + 1]));
    }
    return m;
}

template <class Derived>
void softmax_rows_inplace(Eigen::MatrixBase<Derived>& z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        auto row = z.row(i);
        row.array() = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
    }
}

template <class Scalar>
MatrixX<Scalar> softmax_rows(MatrixX<Scalar> z) {
    softmax_rows_inplace(z);
    return z;
}

template <class Scalar>
void sigmoid_inplace(MatrixX<Scalar>& z) {
    z.array() = Scalar(1) / (Scalar(1) + (-z.array()).exp());
}

namespace detail {

template <class Scalar>
void check_input(const Mlp<Scalar>& m, const MatrixX<Scalar>& x) {
    if (m.layers() == 0) throw std::invalid_argument("mlp: model has no layers");
    if (x.cols() != m.inputs())
        throw std::invalid_argument("mlp: feature length " + std::to_string(x.cols()) + " does not match input layer " +
                                    std::to_string(m.inputs()));
}

// activations[0] = input, activations[L] = softmax output.
template <class Scalar>
std::vector<MatrixX<Scalar>> forward_all(const Mlp<Scalar>& m, const MatrixX<Scalar>& x) {
    check_input(m, x);
    std::vector<MatrixX<Scalar>> acts;
    acts.reserve(m.layers() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < m.layers(); ++l) {
        MatrixX<Scalar> z = acts.back() * m.weights[l];
        z.rowwise() += m.biases[l];
        if (l + 1 < m.layers())
            sigmoid_inplace(z);
        else
            softmax_rows_inplace(z);
        acts.push_back(std::move(z));
    }
    return acts;
}

inline void check_labels(Eigen::Index rows, const std::vector<int>& labels, Eigen::Index classes) {
    if (static_cast<std::size_t>(rows) != labels.size())
        throw std::invalid_argument("mlp: " + std::to_string(rows) + " samples but " + std::to_string(labels.size()) +
                                    " labels");
    for (int y : labels)
        if (y < 0 || y >= classes) throw std::invalid_argument("mlp: label out of range");
}

} // namespace detail

template <class Scalar>
MatrixX<Scalar> forward(const Mlp<Scalar>& m, const MatrixX<Scalar>& x) {
    return std::move(detail::forward_all(m, x).back());
}

inline constexpr double kLogClamp = 1e-15;

// -(1/N) sum_i sum_j y_ij log(max(p_ij, 1e-15))
template <class Scalar>
double cross_entropy(const MatrixX<Scalar>& p, const MatrixX<Scalar>& one_hot) {
    if (p.rows() != one_hot.rows() || p.cols() != one_hot.cols())
        throw std::invalid_argument("cross_entropy: prediction and label shapes differ");
    if (p.rows() == 0) throw std::invalid_argument("cross_entropy: empty batch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (one_hot(i, j) != Scalar(0))
                acc -= static_cast<double>(one_hot(i, j)) *
                       std::log(std::max(static_cast<double>(p(i, j)), kLogClamp));
    return acc / static_cast<double>(p.rows());
}

template <class Scalar>
double cross_entropy(const MatrixX<Scalar>& p, const std::vector<int>& labels) {
    detail::check_labels(p.rows(), labels, p.cols());
    if (p.rows() == 0) throw std::invalid_argument("cross_entropy: empty batch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        acc -= std::log(std::max(static_cast<double>(p(i, labels[i])), kLogClamp));
    return acc / static_cast<double>(p.rows());
}

template <class Scalar>
MatrixX<Scalar> one_hot(const std::vector<int>& labels, Eigen::Index classes) {
    detail::check_labels(static_cast<Eigen::Index>(labels.size()), labels, classes);
    MatrixX<Scalar> y = MatrixX<Scalar>::Zero(static_cast<Eigen::Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i), labels[i]) = Scalar(1);
    return y;
}

template <class Scalar>
struct Gradients {
    std::vector<MatrixX<Scalar>> weights;
    std::vector<RowVectorX<Scalar>> biases;
    double loss{0.0};
    MatrixX<Scalar> predictions;
};

// Reverse-mode gradient of the mean cross-entropy. The softmax/cross-entropy pair gives the
// output delta (p - y) / N directly.
template <class Scalar>
Gradients<Scalar> gradients(const Mlp<Scalar>& m, const MatrixX<Scalar>& x, const MatrixX<Scalar>& y) {
    auto acts = detail::forward_all(m, x);
    if (y.rows() != x.rows() || y.cols() != m.outputs())
        throw std::invalid_argument("gradients: label matrix shape does not match the batch");
    Gradients<Scalar> g;
    g.loss = cross_entropy(acts.back(), y);
    g.weights.resize(m.layers());
    g.biases.resize(m.layers());
    MatrixX<Scalar> delta = (acts.back() - y) / static_cast<Scalar>(x.rows());
    for (std::size_t l = m.layers(); l-- > 0;) {
        g.weights[l].noalias() = acts[l].transpose() * delta;
        g.biases[l] = delta.colwise().sum();
        if (l > 0) {
            MatrixX<Scalar> back = delta * m.weights[l].transpose();
            delta = back.array() * acts[l].array() * (Scalar(1) - acts[l].array());
        }
    }
    g.predictions = std::move(acts.back());
    return g;
}

template <class Scalar>
Gradients<Scalar> gradients(const Mlp<Scalar>& m, const MatrixX<Scalar>& x, const std::vector<int>& labels) {
    return gradients(m, x, one_hot<Scalar>(labels, m.outputs()));
}

template <class Scalar>
struct AdamState {
    std::vector<MatrixX<Scalar>> m_w, v_w;
    std::vector<RowVectorX<Scalar>> m_b, v_b;
    std::uint64_t step{0};
    double lr{1e-4};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};

    static AdamState zeros_like(const Mlp<Scalar>& m, double lr = 1e-4) {
        AdamState s;
        s.lr = lr;
        for (const auto& w : m.weights) {
            s.m_w.push_back(MatrixX<Scalar>::Zero(w.rows(), w.cols()));
            s.v_w.push_back(MatrixX<Scalar>::Zero(w.rows(), w.cols()));
        }
        for (const auto& b : m.biases) {
            s.m_b.push_back(RowVectorX<Scalar>::Zero(b.cols()));
            s.v_b.push_back(RowVectorX<Scalar>::Zero(b.cols()));
        }
        return s;
    }
};

namespace detail {

template <class Param, class Scalar>
void adam_update(Param& p, Param& m, Param& v, const Param& g, const AdamState<Scalar>& s, double c1, double c2) {
    if (p.rows() != g.rows() || p.cols() != g.cols() || m.rows() != g.rows() || m.cols() != g.cols())
        throw std::invalid_argument("adam_step: parameter, gradient and state shapes differ");
    const auto b1 = static_cast<Scalar>(s.beta1), b2 = static_cast<Scalar>(s.beta2);
    m = b1 * m + (Scalar(1) - b1) * g;
    v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
    const auto step = static_cast<Scalar>(s.lr / c1);
    const auto scale2 = static_cast<Scalar>(1.0 / c2);
    p.array() -= step * m.array() / ((v.array() * scale2).sqrt() + static_cast<Scalar>(s.epsilon));
}

} // namespace detail

// Adam with bias correction.
template <class Scalar>
void adam_step(Mlp<Scalar>& model, AdamState<Scalar>& state, const Gradients<Scalar>& g) {
    if (state.m_w.size() != model.layers() || g.weights.size() != model.layers())
        throw std::invalid_argument("adam_step: layer count mismatch");
    ++state.step;
    const auto t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t l = 0; l < model.layers(); ++l) {
        detail::adam_update(model.weights[l], state.m_w[l], state.v_w[l], g.weights[l], state, c1, c2);
        detail::adam_update(model.biases[l], state.m_b[l], state.v_b[l], g.biases[l], state, c1, c2);
    }
}

// Predicted class per row; ties resolve to the lowest index.
template <class Scalar>
std::vector<int> predict_labels(const MatrixX<Scalar>& p) {
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < p.cols(); ++j)
            if (p(i, j) > p(i, best)) best = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

// Percentage of rows whose argmax matches the label.
template <class Scalar>
double accuracy(const MatrixX<Scalar>& p, const std::vector<int>& labels) {
    if (p.rows() == 0) throw std::invalid_argument("accuracy: empty split");
    detail::check_labels(p.rows(), labels, p.cols());
    const auto pred = predict_labels(p);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
    return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

template <class Scalar>
double accuracy(const Mlp<Scalar>& m, const MatrixX<Scalar>& x, const std::vector<int>& labels) {
    return accuracy(forward(m, x), labels);
}

template <class Scalar>
struct LabeledMatrix {
    MatrixX<Scalar> x;
    std::vector<int> labels;

    Eigen::Index size() const { return x.rows(); }
};

struct ReportRow {
    std::size_t iteration{0};
    double loss{0.0};
    double train_acc{0.0};
    double valid_acc{std::numeric_limits<double>::quiet_NaN()}; // NaN when not evaluated
};

struct TrainReport {
    std::vector<ReportRow> rows;
    double test_acc{std::numeric_limits<double>::quiet_NaN()};

    const ReportRow& final() const { return rows.back(); }
};

namespace detail {

// Saturated sigmoids produce subnormal deltas in single precision, which are very slow on x86.
// Flushing them to zero changes nothing at the reported scales.
class FlushSubnormals {
public:
#if defined(__SSE__)
    FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~FlushSubnormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

} // namespace detail

struct TrainOptions {
    std::size_t iterations{1000};
    std::size_t report_every{100};
    double lr{1e-4};
};

// Full-batch Adam. Row i of the report describes the model after i updates; row 0 is the
// initial evaluation. Validation accuracy is logged every report_every rows and on the last row.
template <class Scalar>
TrainReport train(Mlp<Scalar>& model, const LabeledMatrix<Scalar>& train_set, const LabeledMatrix<Scalar>* valid_set,
                  const TrainOptions& opt) {
    if (train_set.size() == 0) throw std::invalid_argument("train: empty training split");
    const detail::FlushSubnormals ftz;
    const MatrixX<Scalar> y = one_hot<Scalar>(train_set.labels, model.outputs());
    auto state = AdamState<Scalar>::zeros_like(model, opt.lr);
    TrainReport report;
    report.rows.reserve(opt.iterations + 1);
    const std::size_t every = std::max<std::size_t>(opt.report_every, 1);
    for (std::size_t it = 0;; ++it) {
        const bool last = it == opt.iterations;
        auto g = gradients(model, train_set.x, y);
        ReportRow row;
        row.iteration = it;
        row.loss = g.loss;
        row.train_acc = accuracy(g.predictions, train_set.labels);
        if (valid_set && valid_set->size() > 0 && (it % every == 0 || last))
            row.valid_acc = accuracy(model, valid_set->x, valid_set->labels);
        report.rows.push_back(row);
        if (last) break;
        adam_step(model, state, g);
    }
    if (!model.all_finite()) throw std::runtime_error("train: parameters became non-finite");
    return report;
}

inline constexpr int kModelFormatVersion = 1;

// Text format: header, dims, then per layer the weight matrix row by row and the bias row.
template <class Scalar>
void save_model(const Mlp<Scalar>& m, const std::filesystem::path& path) {
    AtomicFile file(path);
    auto& o = file.stream();
    o << "sdclass-mlp " << kModelFormatVersion << "\n";
    o << "dims";
    for (auto d : m.dims) o << ' ' << d;
    o << "\n";
    std::string line;
    auto emit_row = [&](const auto& row) {
        line.clear();
        for (Eigen::Index j = 0; j < row.cols(); ++j) {
            if (j) line += ' ';
            line += format_double(static_cast<double>(row(0, j)));
        }
        line += '\n';
        o << line;
    };
    for (std::size_t l = 0; l < m.layers(); ++l) {
        for (Eigen::Index i = 0; i < m.weights[l].rows(); ++i) emit_row(m.weights[l].row(i));
        emit_row(m.biases[l]);
    }
    file.commit();
}

template <class Scalar>
Mlp<Scalar> load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::string name = path.filename().string();
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("sdclass-mlp "))
        throw FormatError(name + ": not an sdclass model file");
    const int version = std::stoi(line.substr(12));
    if (version != kModelFormatVersion)
        throw FormatError(name + ": model format version " + std::to_string(version) + ", expected " +
                          std::to_string(kModelFormatVersion));
    if (!std::getline(in, line) || !line.starts_with("dims ")) throw FormatError(name + ": missing dims line");
    std::vector<Eigen::Index> dims;
    {
        std::istringstream ds(line.substr(5));
        for (long long d; ds >> d;) dims.push_back(static_cast<Eigen::Index>(d));
    }
    validate_dims(dims);
    Mlp<Scalar> m;
    m.dims = dims;
    std::size_t lineno = 2;
    auto read_row = [&](auto& dst, Eigen::Index row, Eigen::Index cols) {
        ++lineno;
        if (!std::getline(in, line))
            throw FormatError(name + ": truncated at line " + std::to_string(lineno));
        const auto fields = split_fields(trim(line), ' ');
        if (static_cast<Eigen::Index>(fields.size()) != cols)
            throw FormatError(name + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                              " values, expected " + std::to_string(cols));
        for (Eigen::Index j = 0; j < cols; ++j)
            dst(row, j) = static_cast<Scalar>(parse_double(fields[j], name + ": line " + std::to_string(lineno)));
    };
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MatrixX<Scalar> w(dims[l], dims[l + 1]);
        for (Eigen::Index i = 0; i < w.rows(); ++i) read_row(w, i, w.cols());
        RowVectorX<Scalar> b(dims[l + 1]);
        read_row(b, 0, b.cols());
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

} // namespace sdclass
