#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sdclass/mlp.hpp"

using namespace sdclass;
using Md = MatrixX<double>;

namespace {

Mlp<double> zero_model(std::vector<Eigen::Index> dims) {
    auto m = init_model<double>(dims, 1);
    for (auto& w : m.weights) w.setZero();
    for (auto& b : m.biases) b.setZero();
    return m;
}

Md random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Md x(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) x(i, j) = g(rng);
    return x;
}

double loss_of(const Mlp<double>& m, const Md& x, const std::vector<int>& y) {
    return cross_entropy(forward(m, x), y);
}

// Three well-separated Gaussian blobs in 2-D.
LabeledMatrix<double> blobs(int per_class, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    const double cx[] = {-2.0, 2.0, 0.0}, cy[] = {-1.0, -1.0, 2.5};
    LabeledMatrix<double> d;
    d.x.resize(3 * per_class, 2);
    for (int i = 0; i < 3 * per_class; ++i) {
        const int c = i % 3;
        d.x(i, 0) = cx[c] + g(rng);
        d.x(i, 1) = cy[c] + g(rng);
        d.labels.push_back(c);
    }
    return d;
}

} // namespace

TEST(Forward, ZeroWeightsGiveUniformOutput) {
    const auto m = zero_model({4, 5, 3});
    const auto p = forward(m, random_matrix(6, 4, 2));
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(p(i, j), 1.0 / 3.0, 1e-15);
}

TEST(Forward, HandComputedNetwork) {
    Mlp<double> m;
    m.dims = {2, 2, 3};
    m.weights = {Md{{1.0, -1.0}, {0.5, 2.0}}, Md{{1.0, 0.0, -1.0}, {0.0, 2.0, 1.0}}};
    m.biases = {RowVectorX<double>{{0.0, 0.5}}, RowVectorX<double>{{0.1, 0.0, -0.1}}};
    const Md x{{1.0, 2.0}};
    // hidden pre-activations: [1 + 1, -1 + 4 + 0.5] = [2, 3.5]
    const double h0 = 1.0 / (1.0 + std::exp(-2.0)), h1 = 1.0 / (1.0 + std::exp(-3.5));
    const double z[] = {h0 + 0.1, 2.0 * h1, -h0 + h1 - 0.1};
    const double norm = std::exp(z[0]) + std::exp(z[1]) + std::exp(z[2]);
    const auto p = forward(m, x);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(p(0, j), std::exp(z[j]) / norm, 1e-15);
}

TEST(Softmax, ShiftInvariantAndStable) {
    Md z{{1.0, 2.0, 3.0}};
    Md shifted = z.array() + 1000.0;
    const auto a = softmax_rows(z), b = softmax_rows(shifted);
    EXPECT_TRUE(a.isApprox(b, 1e-14));
    const Md big{{1000.0, -1000.0, 0.0}};
    const auto p = softmax_rows(big);
    EXPECT_TRUE(p.allFinite());
    EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(CrossEntropy, ReferenceValues) {
    const Md uniform = Md::Constant(4, 3, 1.0 / 3.0);
    EXPECT_NEAR(cross_entropy(uniform, std::vector<int>{0, 1, 2, 0}), std::log(3.0), 1e-12);
    const Md half{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};
    EXPECT_NEAR(cross_entropy(half, std::vector<int>{0, 2}), std::log(2.0), 1e-12);
    const Md perfect{{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
    EXPECT_EQ(cross_entropy(perfect, std::vector<int>{0, 2}), 0.0);
    const Md wrong{{0.0, 1.0, 0.0}};
    EXPECT_NEAR(cross_entropy(wrong, std::vector<int>{0}), -std::log(1e-15), 1e-9);
    EXPECT_DOUBLE_EQ(cross_entropy(half, one_hot<double>({0, 2}, 3)), std::log(2.0));
}

TEST(Gradients, MatchFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto m = init_model<double>({4, 5, 3}, seed);
        for (auto& b : m.biases) b.setRandom();
        const Md x = random_matrix(7, 4, static_cast<unsigned>(seed));
        const std::vector<int> y{0, 1, 2, 2, 1, 0, 1};
        const auto g = gradients(m, x, y);
        const double h = 1e-6;
        double worst = 0.0;
        for (std::size_t l = 0; l < m.layers(); ++l) {
            for (Eigen::Index i = 0; i < m.weights[l].size(); ++i) {
                auto up = m, down = m;
                up.weights[l].data()[i] += h;
                down.weights[l].data()[i] -= h;
                const double fd = (loss_of(up, x, y) - loss_of(down, x, y)) / (2 * h);
                worst = std::max(worst, std::abs(fd - g.weights[l].data()[i]));
            }
            for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) {
                auto up = m, down = m;
                up.biases[l](i) += h;
                down.biases[l](i) -= h;
                const double fd = (loss_of(up, x, y) - loss_of(down, x, y)) / (2 * h);
                worst = std::max(worst, std::abs(fd - g.biases[l](i)));
            }
        }
        EXPECT_LT(worst, 1e-6) << "seed " << seed;
        EXPECT_NEAR(g.loss, loss_of(m, x, y), 1e-15);
    }
}

TEST(Gradients, VanishAtPerfectUniformTarget) {
    const auto m = zero_model({3, 4, 3});
    const Md x = random_matrix(3, 3, 9);
    const Md y = Md::Constant(3, 3, 1.0 / 3.0);
    const auto g = gradients(m, x, y);
    for (const auto& w : g.weights) EXPECT_LT(w.cwiseAbs().maxCoeff(), 1e-16);
    for (const auto& b : g.biases) EXPECT_LT(b.cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Gradients, DuplicatedBatchGivesSameMeanGradient) {
    const auto m = init_model<double>({4, 5, 3}, 3);
    const Md x = random_matrix(5, 4, 4);
    const std::vector<int> y{0, 1, 2, 0, 1};
    Md xx(10, 4);
    xx << x, x;
    std::vector<int> yy = y;
    yy.insert(yy.end(), y.begin(), y.end());
    const auto a = gradients(m, x, y), b = gradients(m, xx, yy);
    for (std::size_t l = 0; l < m.layers(); ++l) EXPECT_TRUE(a.weights[l].isApprox(b.weights[l], 1e-13));
    EXPECT_NEAR(a.loss, b.loss, 1e-15);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
    auto m = init_model<double>({3, 4, 3}, 2);
    const auto before = m;
    const Md x = random_matrix(6, 3, 1);
    const auto g = gradients(m, x, std::vector<int>{0, 1, 2, 0, 1, 2});
    auto state = AdamState<double>::zeros_like(m, 1e-3);
    adam_step(m, state, g);
    for (std::size_t l = 0; l < m.layers(); ++l)
        for (Eigen::Index i = 0; i < m.weights[l].size(); ++i) {
            const double gi = g.weights[l].data()[i];
            const double delta = m.weights[l].data()[i] - before.weights[l].data()[i];
            // bias-corrected moments reduce the step to lr g / (|g| + eps)
            EXPECT_NEAR(delta, -1e-3 * gi / (std::abs(gi) + 1e-8), 1e-12);
            if (std::abs(gi) > 1e-4) {
                EXPECT_NEAR(std::abs(delta), 1e-3, 1e-7);
            }
        }
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    auto m = init_model<double>({3, 4, 3}, 5);
    const auto before = m;
    Gradients<double> g;
    for (const auto& w : m.weights) g.weights.push_back(Md::Zero(w.rows(), w.cols()));
    for (const auto& b : m.biases) g.biases.push_back(RowVectorX<double>::Zero(b.cols()));
    auto state = AdamState<double>::zeros_like(m);
    for (int i = 0; i < 3; ++i) adam_step(m, state, g);
    for (std::size_t l = 0; l < m.layers(); ++l) EXPECT_EQ(m.weights[l], before.weights[l]);
}

TEST(Training, DeterministicForFixedSeed) {
    const auto data = blobs(20, 1);
    auto a = init_model<double>({2, 8, 3}, 17), b = init_model<double>({2, 8, 3}, 17);
    const TrainOptions opt{100, 10, 1e-2};
    const auto ra = train(a, data, &data, opt);
    const auto rb = train(b, data, &data, opt);
    for (std::size_t l = 0; l < a.layers(); ++l) EXPECT_EQ(a.weights[l], b.weights[l]);
    EXPECT_EQ(ra.final().loss, rb.final().loss);
}

TEST(Training, LearnsSeparableBlobs) {
    const auto data = blobs(50, 2);
    const auto valid = blobs(30, 3);
    auto m = init_model<double>({2, 16, 3}, 4);
    const auto r = train(m, data, &valid, {2000, 100, 1e-2});
    EXPECT_NEAR(r.rows.front().loss, std::log(3.0), 0.5);
    EXPECT_EQ(r.final().train_acc, 100.0);
    EXPECT_EQ(accuracy(m, valid.x, valid.labels), 100.0);
    EXPECT_LT(r.final().loss, r.rows.front().loss);
    ASSERT_EQ(r.rows.size(), 2001u);
    EXPECT_FALSE(std::isnan(r.rows[100].valid_acc));
    EXPECT_TRUE(std::isnan(r.rows[101].valid_acc));
}

TEST(Training, SinglePrecisionAlsoLearns) {
    const auto data = blobs(50, 5);
    LabeledMatrix<float> f{data.x.cast<float>(), data.labels};
    auto m = init_model<float>({2, 16, 3}, 4);
    const auto r = train(m, f, static_cast<const LabeledMatrix<float>*>(nullptr), {1500, 100, 1e-2});
    EXPECT_EQ(r.final().train_acc, 100.0);
}

TEST(Training, ZeroIterationsReportsInitialState) {
    const auto data = blobs(5, 1);
    auto m = init_model<double>({2, 4, 3}, 1);
    const auto before = m;
    const auto r = train(m, data, &data, {0, 100, 1e-3});
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].iteration, 0u);
    EXPECT_FALSE(std::isnan(r.rows[0].valid_acc));
    EXPECT_EQ(m.weights[0], before.weights[0]);
}

TEST(Accuracy, TiesAndPercentages) {
    const Md p{{0.5, 0.5, 0.0}, {0.2, 0.3, 0.5}, {0.4, 0.4, 0.2}};
    EXPECT_EQ(predict_labels(p), (std::vector<int>{0, 2, 0}));
    EXPECT_NEAR(accuracy(p, std::vector<int>{1, 2, 1}), 100.0 / 3.0, 1e-12);
    EXPECT_THROW(accuracy(Md(0, 3), std::vector<int>{}), std::invalid_argument);
    EXPECT_THROW(accuracy(p, std::vector<int>{0, 1, 3}), std::invalid_argument);
}

TEST(Accuracy, InvariantUnderRowPermutation) {
    const auto m = init_model<double>({4, 6, 3}, 8);
    const Md x = random_matrix(9, 4, 6);
    const std::vector<int> y{0, 1, 2, 0, 1, 2, 0, 1, 2};
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(9);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 9, std::mt19937(1));
    const Md xp = perm * x;
    std::vector<int> yp(9);
    for (int i = 0; i < 9; ++i) yp[perm.indices()(i)] = y[i];
    EXPECT_EQ(accuracy(m, x, y), accuracy(m, xp, yp));
    EXPECT_NEAR(loss_of(m, x, y), loss_of(m, xp, yp), 1e-15);
}

TEST(Init, GlorotBoundsAndZeroBiases) {
    const auto m = init_model<double>({800, 250, 80, 3}, 1);
    ASSERT_EQ(m.layers(), 3u);
    for (std::size_t l = 0; l < 3; ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(m.dims[l] + m.dims[l + 1]));
        EXPECT_LE(m.weights[l].cwiseAbs().maxCoeff(), bound);
        EXPECT_EQ(m.biases[l].cwiseAbs().maxCoeff(), 0.0);
    }
    EXPECT_EQ(init_model<double>({5, 3}, 9).weights[0], init_model<double>({5, 3}, 9).weights[0]);
    EXPECT_NE(init_model<double>({5, 3}, 9).weights[0], init_model<double>({5, 3}, 10).weights[0]);
    EXPECT_THROW(init_model<double>({5}, 1), std::invalid_argument);
}

TEST(ModelFile, RoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "sdclass_test_model.txt";
    auto m = init_model<float>({6, 4, 3}, 3);
    m.biases[0].setRandom();
    save_model(m, path);
    const auto back = load_model<float>(path);
    EXPECT_EQ(back.dims, m.dims);
    for (std::size_t l = 0; l < m.layers(); ++l) {
        EXPECT_EQ(back.weights[l], m.weights[l]);
        EXPECT_EQ(back.biases[l], m.biases[l]);
    }
    std::filesystem::remove(path);
}
