#include <gtest/gtest.h>

#include <random>

#include "defectflow/learn.hpp"
#include "helpers.hpp"

using namespace defectflow;

namespace {

double soft(double z, double g) { return z > g ? z - g : z < -g ? z + g : 0.0; }

Vector standardized(const Vector& c) {
    const double m = c.mean();
    const double sd = std::sqrt((c.array() - m).square().mean());
    return (c.array() - m) / sd;
}

}  // namespace

TEST(Lasso, SingleColumnClosedForm) {
    std::mt19937_64 rng(40);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 20 + trial;
        Matrix x(n, 1);
        Vector y(n);
        const double slope = nd(rng) * 3;
        for (int i = 0; i < n; ++i) {
            x(i, 0) = nd(rng) * 2 + 1;
            y(i) = slope * x(i, 0) + nd(rng);
        }
        const double gamma = 0.05 * trial;
        auto m = learn::lasso_fit(x, y, {gamma, 10000, 1e-12});
        const Vector z = standardized(x.col(0));
        const double expect_std = soft(z.dot(y) / n, gamma);
        EXPECT_NEAR(m.standardized_coefficients(0), expect_std, 1e-6);
        const double sd = std::sqrt((x.col(0).array() - x.col(0).mean()).square().mean());
        EXPECT_NEAR(m.coefficients(0), expect_std / sd, 1e-6);
        EXPECT_NEAR(m.intercept, y.mean() - m.coefficients(0) * x.col(0).mean(), 1e-6);
    }
}

TEST(Lasso, OrthogonalColumnsClosedForm) {
    // Centered, mutually orthogonal columns with equal norms.
    Matrix x(8, 3);
    x << 1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, 1, 1, 1, -1, -1, 1, 1, 1, -1, 1, -1, -1, -1;
    Vector y(8);
    y << 3, -1, 2, 0.5, 1.5, -2, 0.25, 4;
    for (double gamma : {0.0, 0.1, 0.4, 0.9}) {
        auto m = learn::lasso_fit(x, y, {gamma, 10000, 1e-14});
        for (int j = 0; j < 3; ++j) {
            const Vector z = standardized(x.col(j));
            EXPECT_NEAR(m.standardized_coefficients(j), soft(z.dot(y) / 8.0, gamma), 1e-6) << gamma << " " << j;
        }
    }
}

TEST(Lasso, KillGammaZeroesEverything) {
    std::mt19937_64 rng(41);
    Matrix x = testing_support::random_matrix(rng, 30, 5);
    Vector y = x * Vector::LinSpaced(5, 1, 5);
    double zmax = 0;
    for (int j = 0; j < 5; ++j) zmax = std::max(zmax, std::abs(standardized(x.col(j)).dot(y) / 30.0));
    auto m = learn::lasso_fit(x, y, {zmax + 1e-9});
    EXPECT_EQ(m.standardized_coefficients.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(m.intercept, y.mean(), 1e-12);
}

TEST(Lasso, L1NormShrinksAlongGammaLadder) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> nd;
    for (int ds = 0; ds < 20; ++ds) {
        Matrix x = testing_support::random_matrix(rng, 40, 6, -1, 1);
        Vector y(40);
        for (int i = 0; i < 40; ++i) y(i) = x(i, 0) * 2 - x(i, 3) + 0.3 * nd(rng);
        double prev = 1e300;
        for (int step = 0; step < 10; ++step) {
            auto m = learn::lasso_fit(x, y, {0.02 * step * step, 20000, 1e-12});
            const double l1 = m.standardized_coefficients.cwiseAbs().sum();
            EXPECT_LE(l1, prev + 1e-9);
            prev = l1;
        }
    }
}

TEST(Lasso, ObjectiveNonIncreasing) {
    std::mt19937_64 rng(43);
    Matrix x = testing_support::random_matrix(rng, 50, 8);
    Vector y = x.col(2) * 3 + x.col(5);
    auto m = learn::lasso_fit(x, y, {0.01});
    EXPECT_TRUE(m.converged);
    for (std::size_t i = 1; i < m.objective_trace.size(); ++i) EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] + 1e-12);
}

TEST(Lasso, ConstantColumnsAndAblationIdentity) {
    std::mt19937_64 rng(44);
    Matrix x = testing_support::random_matrix(rng, 25, 3);
    Vector y = x.col(0) - 2 * x.col(1);
    Matrix wide(25, 4);
    wide << x.leftCols(2), Vector::Zero(25), x.col(2);
    auto a = learn::lasso_fit(x, y, {0.01});
    auto b = learn::lasso_fit(wide, y, {0.01});
    EXPECT_EQ(b.coefficients(2), 0.0);
    EXPECT_EQ(learn::lasso_predict(a, x), learn::lasso_predict(b, wide));
    auto c = learn::lasso_fit(Matrix::Ones(5, 2), Vector::LinSpaced(5, 0, 4), {0.0});
    EXPECT_TRUE(c.no_variance);
    EXPECT_DOUBLE_EQ(c.intercept, 2.0);
}

TEST(Lasso, Errors) {
    EXPECT_THROW(learn::lasso_fit(Matrix(0, 2), Vector(0)), EmptyInput);
    EXPECT_THROW(learn::lasso_fit(Matrix::Zero(3, 2), Vector::Zero(4)), DimensionMismatch);
    EXPECT_THROW(learn::lasso_fit(Matrix::Zero(3, 2), Vector::Zero(3), {-1.0}), ConfigError);
}

TEST(PairError, Norms) {
    Vector a(3), b(3);
    a << 1, 2, 3;
    b << 1, 0, 0;
    EXPECT_DOUBLE_EQ(learn::pair_error(a, b), std::sqrt(13.0));
    EXPECT_DOUBLE_EQ(learn::pair_error(a, b, learn::Norm::l1), 5.0);
    EXPECT_DOUBLE_EQ(learn::pair_error(2.5, 4.0), 1.5);
    EXPECT_THROW(learn::pair_error(a, Vector::Zero(2)), DimensionMismatch);
}
