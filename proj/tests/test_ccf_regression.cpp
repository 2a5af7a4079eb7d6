#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "mdporder/ccf_regression.hpp"
#include "mdporder/error.hpp"
#include "mdporder/regressors.hpp"
#include "mdporder/simulators.hpp"

using namespace mdporder;

namespace {

Dataset sim(Model model, std::size_t n, std::size_t length, std::size_t p, std::uint64_t seed) {
    SimSpec spec;
    spec.model = model;
    spec.n_traj = n;
    spec.length = length;
    spec.state_dim = p;
    spec.seed = seed;
    return simulate(spec);
}

// trajectory j, step t has S_t = (100 j + t) and A_t = t % 2
Dataset labelled(std::size_t n, std::size_t length) {
    std::vector<Trajectory> out;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::vector<double>> s;
        std::vector<double> a;
        for (std::size_t t = 1; t <= length; ++t) {
            s.push_back({static_cast<double>(100 * j + t)});
            a.push_back(static_cast<double>(t % 2));
        }
        out.emplace_back(s, a);
    }
    return Dataset(std::move(out));
}

BackendSpec backend(BackendKind kind) {
    BackendSpec spec;
    spec.kind = kind;
    spec.forest.trees = 20;
    return spec;
}

TrainingRows random_rows(std::mt19937_64& gen, std::size_t n, std::size_t d) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(-1, 1);
    TrainingRows rows;
    rows.features.rows = n;
    rows.features.cols = d;
    for (std::size_t i = 0; i < n * d; ++i) rows.features.values.push_back(normal(gen));
    for (std::size_t i = 0; i < n; ++i) rows.targets.push_back(unit(gen));
    return rows;
}

const CcfTask kTask{CcfComponent::g1, CcfPart::real, 1, 0, {}};

} // namespace

// =============================================================================
// Sample splitting
// =============================================================================

TEST(SplitSample, Sizes) {
    auto two = split_sample(2, 1);
    EXPECT_EQ(two.eval_ids.size(), 1u);
    EXPECT_EQ(two.train_ids.size(), 1u);
    EXPECT_EQ(split_sample(12, 1).eval_ids.size(), 6u);
    auto five = split_sample(5, 1);
    EXPECT_EQ(five.eval_ids.size(), 2u);
    EXPECT_EQ(five.train_ids.size(), 3u);
    EXPECT_THROW(split_sample(1, 1), ValidationError);
}

TEST(SplitSample, PartitionProperty) {
    for (std::size_t n = 2; n < 40; ++n)
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto s = split_sample(n, seed);
            std::vector<std::size_t> all = s.eval_ids;
            all.insert(all.end(), s.train_ids.begin(), s.train_ids.end());
            std::sort(all.begin(), all.end());
            std::vector<std::size_t> expected(n);
            std::iota(expected.begin(), expected.end(), 0);
            EXPECT_EQ(all, expected);
            EXPECT_EQ(s.eval_ids.size(), n / 2);
            EXPECT_TRUE(std::is_sorted(s.eval_ids.begin(), s.eval_ids.end()));
            EXPECT_TRUE(std::is_sorted(s.train_ids.begin(), s.train_ids.end()));
        }
}

TEST(SplitSample, SeedDetermined) {
    EXPECT_EQ(split_sample(20, 4).eval_ids, split_sample(20, 4).eval_ids);
    std::set<std::vector<std::size_t>> seen;
    for (std::uint64_t seed = 0; seed < 10; ++seed) seen.insert(split_sample(20, seed).eval_ids);
    EXPECT_GT(seen.size(), 1u);
}

// =============================================================================
// Directions
// =============================================================================

TEST(Directions, Shape) {
    const auto d = draw_directions(3, 4, 1);
    ASSERT_EQ(d.size(), 3u);
    for (const auto& dir : d) {
        EXPECT_EQ(dir.mu.size(), 4u);
        EXPECT_EQ(dir.nu.size(), 5u);
    }
    EXPECT_THROW(draw_directions(0, 4, 1), ValidationError);
}

TEST(Directions, StandardNormalMoments) {
    const auto d = draw_directions(10000, 1, 2);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& dir : d) {
        sum += dir.mu[0];
        sum2 += dir.mu[0] * dir.mu[0];
    }
    EXPECT_NEAR(sum / 1e4, 0.0, 0.05);
    EXPECT_NEAR(sum2 / 1e4, 1.0, 0.05);
}

TEST(Directions, Deterministic) {
    const auto a = draw_directions(5, 3, 9), b = draw_directions(5, 3, 9), c = draw_directions(5, 3, 10);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i].mu, b[i].mu);
        EXPECT_EQ(a[i].nu, b[i].nu);
    }
    EXPECT_NE(a[0].mu, c[0].mu);
}

TEST(Directions, PrefixStable) {
    const auto small = draw_directions(2, 3, 9), large = draw_directions(6, 3, 9);
    EXPECT_EQ(small[1].nu, large[1].nu);
}

// =============================================================================
// Training rows
// =============================================================================

TEST(TrainingRows, G2RowCount) {
    const auto d = labelled(2, 3);
    const SplitAssignment split{{0}, {1}};
    const auto rows = build_training_rows(d, split, {CcfComponent::g2, CcfPart::real, 1, 0, {{0.5}, {}}});
    ASSERT_EQ(rows.targets.size(), 2u);
    EXPECT_EQ(rows.features.cols, 2u);
    // window X_s, target cos(mu S_{s+1})
    EXPECT_EQ(rows.features(0, 0), 101.0);
    EXPECT_DOUBLE_EQ(rows.targets[0], std::cos(0.5 * 102));
    EXPECT_DOUBLE_EQ(rows.targets[1], std::cos(0.5 * 103));
}

TEST(TrainingRows, G1IndexRange) {
    const auto d = labelled(2, 6);
    const SplitAssignment split{{1}, {0}};
    const Direction dir{{0.3}, {0.2, -0.7}};
    const auto rows = build_training_rows(d, split, {CcfComponent::g1, CcfPart::imag, 2, 1, dir});
    ASSERT_EQ(rows.targets.size(), 2u);
    EXPECT_EQ(rows.features.cols, 6u);
    for (std::size_t i = 0; i < 2; ++i) {
        const double t = 2.0 + static_cast<double>(i);
        // W = X_t .. X_{t+2}, future S_{t+3}, past X_{t-1}
        EXPECT_EQ(rows.features(i, 0), t);
        EXPECT_EQ(rows.features(i, 4), t + 2);
        const double past = 0.2 * (t - 1) - 0.7 * std::fmod(t - 1, 2.0);
        EXPECT_DOUBLE_EQ(rows.targets[i], std::sin(0.3 * (t + 3) + past));
    }
}

TEST(TrainingRows, G3DropsFuture) {
    const auto d = labelled(2, 6);
    const SplitAssignment split{{1}, {0}};
    const Direction dir{{0.3}, {0.2, -0.7}};
    const auto rows = build_training_rows(d, split, {CcfComponent::g3, CcfPart::real, 1, 0, dir});
    ASSERT_EQ(rows.targets.size(), 4u);
    EXPECT_DOUBLE_EQ(rows.targets[0], std::cos(0.2 * 1 - 0.7 * 1));
}

TEST(TrainingRows, UsesOnlyTrainingTrajectories) {
    const auto d = labelled(4, 8);
    const SplitAssignment split{{0, 2}, {1, 3}};
    const auto rows = build_training_rows(d, split, {CcfComponent::g2, CcfPart::real, 2, 0, {{1.0}, {}}});
    for (std::size_t i = 0; i < rows.features.rows; ++i) {
        const int traj = static_cast<int>(rows.features(i, 0)) / 100;
        EXPECT_TRUE(traj == 1 || traj == 3);
    }
}

TEST(TrainingRows, TargetsBounded) {
    const auto d = sim(Model::model1, 4, 40, 3, 2);
    const auto split = split_sample(d, 1);
    for (const auto& dir : draw_directions(5, 3, 3))
        for (auto which : {CcfComponent::g1, CcfComponent::g2, CcfComponent::g3})
            for (auto part : {CcfPart::real, CcfPart::imag}) {
                const auto rows = build_training_rows(d, split, {which, part, 2, 1, dir});
                for (double y : rows.targets) {
                    EXPECT_LE(y, 1.0);
                    EXPECT_GE(y, -1.0);
                }
            }
}

TEST(TrainingRows, G2IgnoresLagAndNu) {
    const auto d = sim(Model::model1, 4, 40, 2, 2);
    const auto split = split_sample(d, 1);
    const auto dirs = draw_directions(2, 2, 5);
    const Direction other{dirs[0].mu, dirs[1].nu};
    const auto a = build_training_rows(d, split, {CcfComponent::g2, CcfPart::real, 2, 0, dirs[0]});
    const auto b = build_training_rows(d, split, {CcfComponent::g2, CcfPart::real, 2, 3, other});
    EXPECT_EQ(a.features.values, b.features.values);
    EXPECT_EQ(a.targets, b.targets);
}

TEST(TrainingRows, TooShort) {
    const auto d = labelled(2, 3);
    const SplitAssignment split{{0}, {1}};
    EXPECT_THROW(build_training_rows(d, split, {CcfComponent::g1, CcfPart::real, 1, 1, {{1}, {1, 1}}}),
                 ValidationError);
    EXPECT_THROW(build_training_rows(d, split, {CcfComponent::g2, CcfPart::real, 3, 0, {{1}, {}}}), ValidationError);
    EXPECT_THROW(build_training_rows(d, split, {CcfComponent::g1, CcfPart::real, 1, 0, {{1, 2}, {1, 1}}}),
                 ValidationError);
}

// =============================================================================
// Regressors
// =============================================================================

TEST(Regressors, KnnDefaultNeighbours) {
    EXPECT_EQ(default_knn_neighbors(1), 1u);
    EXPECT_EQ(default_knn_neighbors(8), 4u);
    EXPECT_EQ(default_knn_neighbors(27), 9u);
    EXPECT_EQ(default_knn_neighbors(590), 71u);
    for (std::size_t n = 1; n < 3000; ++n) {
        const std::size_t k = default_knn_neighbors(n);
        EXPECT_GE(k * k * k, n * n);
        EXPECT_LT((k - 1) * (k - 1) * (k - 1), n * n);
    }
}

TEST(Regressors, ConstantTargetGivesConstantPrediction) {
    std::mt19937_64 gen(1);
    auto rows = random_rows(gen, 60, 3);
    std::fill(rows.targets.begin(), rows.targets.end(), 0.375);
    for (auto kind : {BackendKind::forest, BackendKind::knn}) {
        const auto model = fit_ccf(rows, backend(kind), kTask, 7);
        for (std::size_t i = 0; i < rows.features.rows; ++i)
            EXPECT_DOUBLE_EQ(model->predict(rows.features.row(i)), 0.375);
        EXPECT_DOUBLE_EQ(model->predict(std::vector<double>{50, -50, 0}), 0.375);
    }
}

TEST(Regressors, IdenticalRowsGiveTargetMean) {
    TrainingRows rows;
    rows.features = {5, 2, std::vector<double>(10, 1.5)};
    rows.targets = {0.1, -0.4, 0.9, 0.3, 0.25};
    const double mean = (0.1 - 0.4 + 0.9 + 0.3 + 0.25) / 5;
    for (auto kind : {BackendKind::forest, BackendKind::knn}) {
        const auto model = fit_ccf(rows, backend(kind), kTask, 3);
        EXPECT_NEAR(model->predict(std::vector<double>{1.5, 1.5}), mean, 1e-15);
        EXPECT_NEAR(model->predict(std::vector<double>{0, 9}), mean, 1e-15);
    }
}

TEST(Regressors, SingleNeighbourInterpolates) {
    std::mt19937_64 gen(2);
    const auto rows = random_rows(gen, 40, 3);
    BackendSpec spec = backend(BackendKind::knn);
    spec.knn.neighbors = 1;
    const auto model = fit_ccf(rows, spec, kTask, 0);
    for (std::size_t i = 0; i < rows.features.rows; ++i)
        EXPECT_EQ(model->predict(rows.features.row(i)), rows.targets[i]);
}

TEST(Regressors, SingleRowKnn) {
    TrainingRows rows{{1, 2, {0.5, -1}}, {0.7}};
    const auto model = fit_ccf(rows, backend(BackendKind::knn), kTask, 0);
    EXPECT_EQ(model->predict(std::vector<double>{3, 3}), 0.7);
}

TEST(Regressors, KnnAveragesNearest) {
    TrainingRows rows{{4, 1, {0, 1, 2, 10}}, {0.0, 0.2, 0.4, 1.0}};
    BackendSpec spec = backend(BackendKind::knn);
    spec.knn.neighbors = 2;
    const auto model = fit_ccf(rows, spec, kTask, 0);
    EXPECT_NEAR(model->predict(std::vector<double>{0.4}), 0.1, 1e-15);
    EXPECT_NEAR(model->predict(std::vector<double>{9}), 0.7, 1e-15);
}

TEST(Regressors, PredictionsAreConvexCombinations) {
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 5; ++rep) {
        const auto rows = random_rows(gen, 80 + rep * 30, 2 + rep);
        const auto [lo, hi] = std::minmax_element(rows.targets.begin(), rows.targets.end());
        for (auto kind : {BackendKind::forest, BackendKind::knn}) {
            const auto model = fit_ccf(rows, backend(kind), kTask, rep);
            const auto probe = random_rows(gen, 50, 2 + rep);
            for (std::size_t i = 0; i < 50; ++i) {
                const double y = model->predict(probe.features.row(i));
                EXPECT_GE(y, *lo - 1e-12);
                EXPECT_LE(y, *hi + 1e-12);
            }
        }
    }
}

TEST(Regressors, ForestIsSeedDeterministic) {
    std::mt19937_64 gen(4);
    const auto rows = random_rows(gen, 120, 4);
    const auto a = fit_ccf(rows, backend(BackendKind::forest), kTask, 11);
    const auto b = fit_ccf(rows, backend(BackendKind::forest), kTask, 11);
    const auto c = fit_ccf(rows, backend(BackendKind::forest), kTask, 12);
    bool differs = false;
    for (std::size_t i = 0; i < rows.features.rows; ++i) {
        EXPECT_EQ(a->predict(rows.features.row(i)), b->predict(rows.features.row(i)));
        differs |= a->predict(rows.features.row(i)) != c->predict(rows.features.row(i));
    }
    EXPECT_TRUE(differs);
}

TEST(Regressors, ForestRecoversStepFunction) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> noise(0, 0.1);
    std::uniform_real_distribution<double> u(-1, 1);
    TrainingRows rows;
    rows.features.rows = 400;
    rows.features.cols = 2;
    for (std::size_t i = 0; i < 400; ++i) {
        const double x0 = u(gen), x1 = u(gen);
        rows.features.values.push_back(x0);
        rows.features.values.push_back(x1);
        rows.targets.push_back((x0 > 0 ? 0.5 : -0.5) + noise(gen));
    }
    const auto model = fit_ccf(rows, backend(BackendKind::forest), kTask, 1);
    EXPECT_NEAR(model->predict(std::vector<double>{0.6, 0.0}), 0.5, 0.1);
    EXPECT_NEAR(model->predict(std::vector<double>{-0.6, 0.3}), -0.5, 0.1);
}

TEST(Regressors, ForestRespectsMinimumLeaf) {
    std::mt19937_64 gen(6);
    const auto rows = random_rows(gen, 200, 3);
    BackendSpec spec = backend(BackendKind::forest);
    spec.forest.trees = 1;
    spec.forest.min_leaf = 50;
    const auto coarse = std::dynamic_pointer_cast<const RandomForest>(fit_ccf(rows, spec, kTask, 1));
    ASSERT_TRUE(coarse);
    spec.forest.min_leaf = 1;
    const auto fine = std::dynamic_pointer_cast<const RandomForest>(fit_ccf(rows, spec, kTask, 1));
    EXPECT_LE(coarse->node_count(), 7u);
    EXPECT_GT(fine->node_count(), coarse->node_count());
}

TEST(Regressors, DimensionMismatch) {
    std::mt19937_64 gen(7);
    const auto rows = random_rows(gen, 30, 3);
    for (auto kind : {BackendKind::forest, BackendKind::knn}) {
        const auto model = fit_ccf(rows, backend(kind), kTask, 0);
        EXPECT_EQ(model->input_dim(), 3u);
        EXPECT_THROW(predict_ccf(*model, std::vector<double>{1, 2}), ValidationError);
        EXPECT_NO_THROW(predict_ccf(*model, std::vector<double>{1, 2, 3}));
    }
}

TEST(Regressors, OracleIgnoresRows) {
    BackendSpec spec;
    spec.kind = BackendKind::oracle;
    spec.oracle = [](const CcfTask& task) -> CcfFunction {
        const double k = static_cast<double>(task.k);
        return [k](std::span<const double> x) { return k * x[0]; };
    };
    TrainingRows rows{{1, 2, {0, 0}}, {0.9}};
    CcfTask task = kTask;
    task.k = 3;
    const auto model = fit_ccf(rows, spec, task, 0);
    EXPECT_EQ(model->predict(std::vector<double>{0.25, 0}), 0.75);
    EXPECT_THROW(make_backend(BackendSpec{BackendKind::oracle, {}, {}, {}}), ValidationError);
}

TEST(Regressors, BackendNames) {
    EXPECT_EQ(parse_backend("forest"), BackendKind::forest);
    EXPECT_EQ(parse_backend("knn"), BackendKind::knn);
    EXPECT_FALSE(parse_backend("svm").has_value());
    EXPECT_EQ(to_string(BackendKind::knn), "knn");
}

// =============================================================================
// Model sets
// =============================================================================

TEST(CcfModels, ZeroDirectionIdentities) {
    const auto d = sim(Model::model1, 4, 60, 2, 3);
    const auto split = split_sample(d, 2);
    const Direction zero{{0, 0}, {0, 0, 0}};
    for (auto kind : {BackendKind::forest, BackendKind::knn}) {
        const auto set = fit_ccf_models(d, split, 2, 1, zero, backend(kind), 5);
        const auto probe = stack_windows(d, split.eval_ids, 3, 2, 10);
        const auto suffix = stack_windows(d, split.eval_ids, 2, 3, 11);
        for (std::size_t i = 0; i < probe.rows; ++i) {
            EXPECT_EQ(set.g1_re->predict(probe.row(i)), 1.0);
            EXPECT_EQ(set.g1_im->predict(probe.row(i)), 0.0);
            EXPECT_EQ(set.g3_re->predict(probe.row(i)), 1.0);
            EXPECT_EQ(set.g3_im->predict(probe.row(i)), 0.0);
            EXPECT_EQ(set.g2_re->predict(suffix.row(i)), 1.0);
            EXPECT_EQ(set.g2_im->predict(suffix.row(i)), 0.0);
        }
    }
}

TEST(CcfModels, InputDimensions) {
    const auto d = sim(Model::model1, 4, 60, 3, 3);
    const auto split = split_sample(d, 2);
    const auto set = fit_ccf_models(d, split, 2, 3, draw_directions(1, 3, 1)[0], backend(BackendKind::knn), 5);
    EXPECT_EQ(set.g1_re->input_dim(), 20u);
    EXPECT_EQ(set.g3_im->input_dim(), 20u);
    EXPECT_EQ(set.g2_re->input_dim(), 8u);
    EXPECT_EQ(set.training_rows, 2u * (60 - 3 - 2 - 1));
    EXPECT_EQ(set.backend, "knn");
}

TEST(CcfModels, EvaluationTrajectoriesNeverEnterFits) {
    const auto d = sim(Model::model1, 6, 50, 2, 4);
    const auto split = split_sample(d, 3);
    // permute the evaluation trajectories among their own slots
    std::vector<Trajectory> trajs(d.begin(), d.end());
    const auto& e = split.eval_ids;
    const Trajectory first = trajs[e[0]];
    for (std::size_t i = 0; i + 1 < e.size(); ++i) trajs[e[i]] = trajs[e[i + 1]];
    trajs[e.back()] = first;
    const Dataset permuted(std::move(trajs));
    ASSERT_NE(permuted, d);

    const auto dir = draw_directions(1, 2, 8)[0];
    for (auto kind : {BackendKind::forest, BackendKind::knn}) {
        const auto a = fit_ccf_models(d, split, 1, 1, dir, backend(kind), 9);
        const auto b = fit_ccf_models(permuted, split, 1, 1, dir, backend(kind), 9);
        const auto probe = stack_windows(d, split.eval_ids, 2, 2, 40);
        for (std::size_t i = 0; i < probe.rows; ++i) {
            EXPECT_EQ(a.g1_re->predict(probe.row(i)), b.g1_re->predict(probe.row(i)));
            EXPECT_EQ(a.g3_im->predict(probe.row(i)), b.g3_im->predict(probe.row(i)));
        }
    }
}

TEST(CcfModels, DescribeNamesTask) {
    EXPECT_EQ(describe({CcfComponent::g2, CcfPart::imag, 3, 1, {}}), "g2_im (k=3, q=1)");
}
