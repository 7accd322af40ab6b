// feature_selection.hpp: correlation-driven time-point ranking and uniform subsampling

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdclass/dataset.hpp"
#include "sdclass/fourier.hpp"

namespace sdclass {

// Samples as rows, time points as columns.
inline Eigen::MatrixXd sample_matrix(std::span<const LabeledTrajectory> split) {
    if (split.empty()) return {};
    const auto n = static_cast<Eigen::Index>(split.front().values.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(split.size()), n);
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (static_cast<Eigen::Index>(split[i].values.size()) != n)
            throw std::invalid_argument("sample_matrix: trajectories differ in length");
        x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(split[i].values.data(), n);
    }
    return x;
}

inline std::vector<int> label_vector(std::span<const LabeledTrajectory> split) {
    std::vector<int> y(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) y[i] = static_cast<int>(split[i].label);
    return y;
}

// Pearson C_nm between columns. A column with zero spread gets C_nn = 1 and 0 elsewhere.
inline Eigen::MatrixXd pearson_matrix(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw std::invalid_argument("pearson_matrix: need at least 2 samples");
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd c = centered.transpose() * centered;
    const Eigen::VectorXd ss = c.diagonal();
    const Eigen::Index n = c.rows();
    std::vector<bool> degenerate(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = x.col(j).cwiseAbs().maxCoeff();
        degenerate[j] = !(ss[j] > 1e-28 * scale * scale * static_cast<double>(x.rows()));
    }
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == j)
                c(i, j) = 1.0;
            else if (degenerate[i] || degenerate[j])
                c(i, j) = 0.0;
            else
                c(i, j) = std::clamp(c(i, j) / (std::sqrt(ss[i]) * std::sqrt(ss[j])), -1.0, 1.0);
        }
    return c;
}

inline Eigen::MatrixXd pearson_matrix(std::span<const LabeledTrajectory> train_split) {
    return pearson_matrix(sample_matrix(train_split));
}

// R_j = Var(x_j) - mean_c Var(x_j | class c), population variances.
inline Eigen::VectorXd label_relevance(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes = 3) {
    if (static_cast<std::size_t>(x.rows()) != labels.size())
        throw std::invalid_argument("label_relevance: sample and label counts differ");
    auto variance = [](const Eigen::MatrixXd& m) -> Eigen::VectorXd {
        const Eigen::RowVectorXd mean = m.colwise().mean();
        return ((m.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(m.rows())).transpose();
    };
    Eigen::VectorXd within = Eigen::VectorXd::Zero(x.cols());
    for (int c = 0; c < classes; ++c) {
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
        if (rows.empty()) throw std::invalid_argument("label_relevance: class " + std::to_string(c) + " is missing");
        within += variance(x(rows, Eigen::all));
    }
    return variance(x) - within / static_cast<double>(classes);
}

inline Eigen::VectorXd label_relevance(std::span<const LabeledTrajectory> train_split) {
    return label_relevance(sample_matrix(train_split), label_vector(train_split));
}

struct FeatureRanking {
    std::vector<std::size_t> removal_order; // first entry is removed first; the last one is never removed

    // Indices kept at budget k, ascending.
    std::vector<std::size_t> retained(std::size_t k) const {
        if (k < 1 || k > removal_order.size())
            throw std::invalid_argument("retained: budget " + std::to_string(k) + " outside [1, " +
                                        std::to_string(removal_order.size()) + "]");
        std::vector<std::size_t> kept(removal_order.end() - static_cast<std::ptrdiff_t>(k), removal_order.end());
        std::sort(kept.begin(), kept.end());
        return kept;
    }
};

// Single pass over all pairs by descending |C_ij|. Whenever both ends are still active the one
// with the smaller relevance is dropped (equal relevance drops the larger index).
inline FeatureRanking rank_features(const Eigen::MatrixXd& c, const Eigen::VectorXd& relevance) {
    const Eigen::Index n = c.rows();
    if (c.cols() != n || relevance.size() != n)
        throw std::invalid_argument("rank_features: correlation is " + std::to_string(c.rows()) + "x" +
                                    std::to_string(c.cols()) + " but relevance has " +
                                    std::to_string(relevance.size()) + " entries");
    FeatureRanking r;
    if (n == 0) return r;
    struct Pair {
        double mag;
        Eigen::Index i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) pairs.push_back({std::abs(c(i, j)), i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.mag != b.mag) return a.mag > b.mag;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    std::vector<bool> active(static_cast<std::size_t>(n), true);
    std::size_t remaining = static_cast<std::size_t>(n);
    for (const auto& p : pairs) {
        if (remaining == 1) break;
        if (!active[p.i] || !active[p.j]) continue;
        Eigen::Index drop = p.j;
        if (relevance[p.i] < relevance[p.j]) drop = p.i;
        active[drop] = false;
        --remaining;
        r.removal_order.push_back(static_cast<std::size_t>(drop));
    }
    for (Eigen::Index i = 0; i < n; ++i)
        if (active[i]) r.removal_order.push_back(static_cast<std::size_t>(i));
    return r;
}

// {0, s, 2s, ...} with s = floor(n / k), first k entries.
inline std::vector<std::size_t> select_uniform(std::size_t n, std::size_t k) {
    if (k < 1 || k > n)
        throw std::invalid_argument("select_uniform: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    const std::size_t stride = n / k;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i * stride;
    return idx;
}

// Features of a trajectory restricted to grid indices of its half-open sampling grid.
inline FeatureVector reduced_features(std::span<const double> values, std::span<const std::size_t> indices) {
    std::vector<double> picked(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= values.size()) throw std::domain_error("reduced_features: index out of range");
        picked[i] = values[indices[i]];
    }
    return to_features(nudft_on_grid(picked, indices, values.size()));
}

inline FeatureVector full_features(std::span<const double> values) { return to_features(dft(values)); }

} // namespace sdclass
