#include <gtest/gtest.h>

#include <map>
#include <random>

#include "defectflow/learn.hpp"
#include "helpers.hpp"

using namespace defectflow;

TEST(Forest, SingleTreeFitsDistinctInputsExactly) {
    std::mt19937_64 rng(50);
    std::uniform_int_distribution<int> cls(1, 6);
    for (int ds = 0; ds < 50; ++ds) {
        Matrix x = testing_support::random_matrix(rng, 30 + ds, 1 + ds % 4);
        Vector yc(x.rows()), yr(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            yc(i) = cls(rng);
            yr(i) = x.row(i).sum() * 10 + cls(rng);
        }
        learn::ForestConfig cfg;
        cfg.n_trees = 1;
        cfg.bootstrap = false;
        cfg.seed = static_cast<std::uint64_t>(ds);
        auto c = learn::forest_fit(x, yc, cfg);
        EXPECT_EQ(learn::forest_predict(c, x), yc);
        cfg.criterion = learn::Criterion::mse;
        auto r = learn::forest_fit(x, yr, cfg);
        EXPECT_EQ(learn::forest_predict(r, x), yr);
    }
}

TEST(Forest, ImportancesSumToOne) {
    std::mt19937_64 rng(51);
    for (int ds = 0; ds < 20; ++ds) {
        Matrix x = testing_support::random_matrix(rng, 60, 5);
        Vector y = (x.col(0).array() > 0.5).cast<double>() + (x.col(3).array() > 0.3).cast<double>();
        learn::ForestConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(ds);
        cfg.criterion = ds % 2 ? learn::Criterion::mse : learn::Criterion::gini;
        auto m = learn::forest_fit(x, y, cfg);
        EXPECT_NEAR(m.feature_importances.sum(), 1.0, 1e-9);
        EXPECT_GE(m.feature_importances.minCoeff(), 0.0);
    }
}

TEST(Forest, PureTargetHasZeroImportances) {
    Matrix x = Matrix::Random(10, 3);
    auto m = learn::forest_fit(x, Vector::Constant(10, 2.0), {});
    EXPECT_TRUE(m.all_zero_importances);
    EXPECT_EQ(m.feature_importances.sum(), 0.0);
}

namespace {

double gini(const std::map<double, double>& counts, double n) {
    double g = 1.0;
    for (const auto& [k, c] : counts) g -= (c / n) * (c / n);
    return g;
}

}  // namespace

TEST(Forest, RootSplitEqualsExhaustiveMidpointSearch) {
    std::mt19937_64 rng(52);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int ds = 0; ds < 30; ++ds) {
        Matrix x = testing_support::random_matrix(rng, 25, 3);
        Vector y(25);
        for (int i = 0; i < 25; ++i) y(i) = cls(rng);

        double best = -1;
        int best_f = -1;
        double best_t = 0;
        for (int f = 0; f < 3; ++f) {
            std::vector<double> v;
            for (Eigen::Index i = 0; i < x.rows(); ++i) v.push_back(x(i, f));
            std::sort(v.begin(), v.end());
            for (int k = 0; k + 1 < 25; ++k) {
                if (v[k] == v[k + 1]) continue;
                const double t = (v[k] + v[k + 1]) / 2;
                std::map<double, double> all, l, r;
                double nl = 0, nr = 0;
                for (int i = 0; i < 25; ++i) {
                    ++all[y(i)];
                    if (x(i, f) <= t) ++l[y(i)], ++nl;
                    else ++r[y(i)], ++nr;
                }
                const double gain = gini(all, 25) - nl / 25 * gini(l, nl) - nr / 25 * gini(r, nr);
                if (gain > best + 1e-12) best = gain, best_f = f, best_t = t;
            }
        }
        learn::ForestConfig cfg;
        cfg.n_trees = 1;
        cfg.bootstrap = false;
        cfg.max_depth = 1;
        auto m = learn::forest_fit(x, y, cfg);
        const auto& root = m.trees[0].nodes[0];
        EXPECT_EQ(root.feature, best_f);
        EXPECT_DOUBLE_EQ(root.threshold, best_t);
        EXPECT_EQ(m.trees[0].depth(), 1u);
    }
}

TEST(Forest, DeterministicAcrossThreads) {
    std::mt19937_64 rng(53);
    Matrix x = testing_support::random_matrix(rng, 50, 4);
    Vector y = x.col(1) * 3;
    learn::ForestConfig cfg;
    cfg.criterion = learn::Criterion::mse;
    cfg.seed = 5;
    auto a = learn::forest_fit(x, y, cfg, 1);
    auto b = learn::forest_fit(x, y, cfg, 4);
    EXPECT_EQ(learn::forest_predict(a, x), learn::forest_predict(b, x));
    EXPECT_EQ(a.feature_importances, b.feature_importances);
    EXPECT_EQ(learn::to_json(a).dump(), learn::to_json(b).dump());
}

TEST(Forest, ZeroColumnLeavesModelUnchanged) {
    std::mt19937_64 rng(54);
    Matrix x = testing_support::random_matrix(rng, 40, 3);
    Vector y = (x.col(0).array() > 0.4).cast<double>();
    Matrix wide(40, 4);
    wide << x.leftCols(1), Vector::Zero(40), x.rightCols(2);
    learn::ForestConfig cfg;
    cfg.seed = 3;
    auto a = learn::forest_fit(x, y, cfg);
    auto b = learn::forest_fit(wide, y, cfg);
    EXPECT_EQ(learn::forest_predict(a, x), learn::forest_predict(b, wide));
    EXPECT_EQ(b.feature_importances(1), 0.0);
}
