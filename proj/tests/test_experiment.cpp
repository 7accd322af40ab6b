#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "sdclass/experiment.hpp"

using namespace sdclass;

namespace {

ExperimentConfig tiny() {
    ExperimentConfig cfg;
    std::istringstream text(R"(# tiny run
preset = pd-separated
n_train = 30
n_valid = 9
n_test = 9
n_points = 40
iters = 20
threads = 2
)");
    apply_settings(cfg, parse_key_values(text, "tiny"), "tiny");
    cfg.hidden = {8, 4};
    cfg.lr = 1e-2;
    return cfg;
}

} // namespace

TEST(Config, PresetAppliesBeforeOverrides) {
    ExperimentConfig cfg;
    apply_settings(cfg, {{"n_train", "99"}, {"preset", "pd-adjacent"}, {"eta", "[0.1,0.2]"}}, "test");
    EXPECT_EQ(cfg.preset, "pd-adjacent");
    EXPECT_EQ(cfg.spec.n_train, 99u);
    EXPECT_EQ(cfg.spec.eta, Interval::closed(0.1, 0.2));
    EXPECT_EQ(cfg.spec.s_sub, Interval::open(0.0, 1.0));
}

TEST(Config, LaterSourcesOverrideEarlierOnes) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> file{{"seed", "3"}, {"lr", "0.01"}, {"sigma", "0.1,0.05"}};
    std::map<std::string, std::string> flags{{"seed", "9"}};
    auto merged = file;
    for (const auto& [k, v] : flags) merged[k] = v;
    apply_settings(cfg, merged, "merged");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.lr, 0.01);
    EXPECT_EQ(cfg.sigmas, (std::vector<double>{0.1, 0.05}));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    ExperimentConfig cfg;
    EXPECT_THROW(apply_settings(cfg, {{"learning_rate", "1"}}, "x"), std::invalid_argument);
    EXPECT_THROW(apply_settings(cfg, {{"lr", "fast"}}, "x"), FormatError);
    EXPECT_THROW(apply_settings(cfg, {{"method", "random"}}, "x"), std::invalid_argument);
    EXPECT_THROW(apply_settings(cfg, {{"preset", "nope"}}, "x"), std::invalid_argument);
    EXPECT_THROW(apply_settings(cfg, {{"n_train", "31"}}, "x"), std::invalid_argument);
}

TEST(Config, IterationBudget) {
    ExperimentConfig cfg;
    EXPECT_EQ(resolve_iterations(cfg, Command::Train), 80u);
    cfg.budget = 0.5;
    EXPECT_EQ(resolve_iterations(cfg, Command::Train), 40u);
    cfg.iterations = 1000;
    EXPECT_EQ(resolve_iterations(cfg, Command::Train), 500u);
    cfg.iterations = 0;
    EXPECT_EQ(resolve_iterations(cfg, Command::Train), 0u);
    cfg = ExperimentConfig{};
    cfg.spec = preset("ad-default");
    EXPECT_EQ(resolve_iterations(cfg, Command::FeatselCurve), 10000u);
    cfg.spec = preset("pd-varying-3");
    EXPECT_EQ(resolve_iterations(cfg, Command::SweepInterval), 20000u);
}

TEST(Pipeline, EndToEndIsDeterministic) {
    const auto cfg = tiny();
    const auto a = run_training(featurize(make_dataset(cfg)), 20, cfg);
    const auto b = run_training(featurize(make_dataset(cfg)), 20, cfg);
    EXPECT_EQ(a.test_acc, b.test_acc);
    EXPECT_EQ(a.report.final().loss, b.report.final().loss);
    EXPECT_EQ(a.model.weights[0], b.model.weights[0]);
    EXPECT_EQ(a.report.rows.size(), 21u);
    EXPECT_EQ(featurize(make_dataset(cfg)).width, 80);
}

TEST(Pipeline, NoiseSweepSortedAndZeroMatchesPlainRun) {
    auto cfg = tiny();
    cfg.sigmas = {0.1, 0.0, 0.02};
    const auto clean = make_dataset(cfg);
    const auto rows = sweep_noise(clean, cfg);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].sigma, 0.0);
    EXPECT_EQ(rows[1].sigma, 0.02);
    EXPECT_EQ(rows[2].sigma, 0.1);
    cfg.iterations = resolve_iterations(cfg, Command::SweepNoise);
    const auto plain = run_training(featurize(clean), *cfg.iterations, cfg);
    EXPECT_EQ(rows[0].test_acc, plain.test_acc);
    EXPECT_EQ(rows[0].train_acc, plain.train_acc);
    EXPECT_NE(noise_seed_for_sigma(1, 0.1), noise_seed_for_sigma(1, 0.02));
}

TEST(Pipeline, IntervalSweepKeepsSplitSizes) {
    auto cfg = tiny();
    cfg.interval_ks = {0, 9};
    const auto rows = sweep_interval(cfg);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].interval_length, 0.0);
    EXPECT_NEAR(rows[1].interval_length, 1.8, 1e-12);
}

TEST(Pipeline, FeatureSelectionAtFullBudgetIsIdentity) {
    auto cfg = tiny();
    const auto ds = make_dataset(cfg);
    const auto ranking = correlation_ranking(ds);
    EXPECT_EQ(ranking.retained(40).size(), 40u);
    const auto full = featurize(ds);
    const auto all = featurize(ds, ranking.retained(40));
    EXPECT_EQ(all.width, full.width);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_TRUE(all.splits[s].x.isApprox(full.splits[s].x, 1e-5f));
    cfg.points = {40, 5};
    const auto rows = featsel_curve(ds, cfg);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].k_points, 40u);
    EXPECT_EQ(rows[0].test_acc, rows[1].test_acc); // both methods keep every point at k = N
}

TEST(Pipeline, StandardizerFoldsIntoFirstLayer) {
    const auto cfg = tiny();
    const auto fs = featurize(make_dataset(cfg));
    auto m = init_model<TrainScalar>(network_dims(fs.width, cfg.hidden), 5);
    const auto sc = Standardizer::fit(fs.train().x);
    const auto z = forward(m, sc.apply(fs.test().x));
    sc.fold_into(m);
    const auto raw = forward(m, fs.test().x);
    EXPECT_LT((z - raw).cwiseAbs().maxCoeff(), 1e-4f);
    auto with = cfg;
    with.standardize = true;
    const auto r = run_training(fs, 20, with);
    EXPECT_EQ(r.test_acc, accuracy(r.model, fs.test().x, fs.test().labels));
}

TEST(Output, CsvWriterHeader) {
    const auto path = std::filesystem::temp_directory_path() / "sdclass_test_writer.csv";
    {
        CsvWriter w(path, "preset=pd-separated seed=1", "sigma,train_acc,test_acc");
        w.row(0.1, 99.5, 98.25);
        w.commit();
    }
    std::ifstream in(path);
    std::string l1, l2, l3, l4;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    std::getline(in, l4);
    EXPECT_EQ(l1, "# " + std::string(kVersion));
    EXPECT_EQ(l2, "# preset=pd-separated seed=1");
    EXPECT_EQ(l3, "sigma,train_acc,test_acc");
    EXPECT_EQ(l4, "0.1,99.5,98.25");
    std::filesystem::remove(path);
}
