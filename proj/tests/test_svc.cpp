#include <gtest/gtest.h>

#include <random>

#include "defectflow/learn.hpp"
#include "helpers.hpp"

using namespace defectflow;

TEST(Svc, TwoPoints) {
    Matrix x(2, 2);
    x << 0, 0, 1, 1;
    Vector y(2);
    y << 1, 2;
    auto m = learn::svc_fit(x, y);
    EXPECT_EQ(learn::svc_predict(m, x), y);
}

TEST(Svc, ThreeBlobs) {
    std::mt19937_64 rng(60);
    std::normal_distribution<double> nd(0, 0.3);
    const double centers[3][2] = {{0, 0}, {4, 0}, {0, 4}};
    Matrix x(90, 2);
    Vector y(90);
    for (int i = 0; i < 90; ++i) {
        const int c = i % 3;
        x(i, 0) = centers[c][0] + nd(rng);
        x(i, 1) = centers[c][1] + nd(rng);
        y(i) = c + 1;
    }
    auto m = learn::svc_fit(x, y, {10.0});
    EXPECT_EQ(m.pairs.size(), 3u);
    EXPECT_EQ(learn::svc_predict(m, x), y);
}

TEST(Svc, DualFeasibilityAtTermination) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int ds = 0; ds < 20; ++ds) {
        const int n = 20 + 3 * ds;
        Matrix x(n, 3);
        Vector y(n);
        for (int i = 0; i < n; ++i) {
            y(i) = i % 2 ? 1 : 2;
            const double shift = i % 2 ? 2.0 : -2.0;
            for (int j = 0; j < 3; ++j) x(i, j) = u(rng) + (j == 0 ? shift : 0.0);
        }
        learn::SvcConfig cfg;
        cfg.c = 0.5 + ds;
        auto m = learn::svc_fit(x, y, cfg);
        for (const auto& pr : m.pairs) {
            EXPECT_TRUE(pr.converged);
            for (double a : pr.alpha) {
                EXPECT_GE(a, 0.0);
                EXPECT_LE(a, cfg.c);
            }
            EXPECT_LE(std::abs(pr.sum_alpha_y()), cfg.tol);
        }
        EXPECT_EQ(learn::svc_predict(m, x), y);
    }
}

TEST(Svc, GammaAndErrors) {
    Matrix x(2, 2);
    x << 0, 0, 2, 2;
    EXPECT_DOUBLE_EQ(learn::rbf_gamma(x), 1.0 / (2.0 * 1.0));
    EXPECT_DOUBLE_EQ(learn::rbf_gamma(Matrix::Ones(3, 2)), 1.0);
    EXPECT_THROW(learn::svc_fit(x, Vector::Ones(2)), learn::SingleClass);
    EXPECT_THROW(learn::svc_fit(x, Vector::Ones(3)), DimensionMismatch);
    Vector y(2);
    y << 1, 2;
    EXPECT_THROW(learn::svc_fit(x, y, {0.0}), ConfigError);
    auto m = learn::svc_fit(x, y);
    EXPECT_EQ(learn::svc_predict(m, Matrix(0, 2)).size(), 0);
    EXPECT_THROW(learn::svc_predict(m, Matrix::Zero(1, 3)), DimensionMismatch);
}
