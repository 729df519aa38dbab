#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "defectflow/core.hpp"

namespace defectflow::learn {

struct LassoConfig {
    double gamma = 1.0;  // l1 weight in the (1/2n)-scaled objective
    int max_sweeps = 1000;
    double tol = 1e-6;
};

struct LassoModel {
    double intercept = 0.0;
    Vector coefficients;               // raw column scale
    Vector standardized_coefficients;  // scale the penalty acts on
    Vector column_means;
    Vector column_scales;  // population std; 0 marks a constant column
    bool converged = false;
    bool no_variance = false;  // every column constant: theta = 0, intercept = mean(y)
    int sweeps_used = 0;
    std::vector<double> objective_trace;  // after each sweep, standardized problem
};

namespace detail {

// Left-to-right accumulation: zero terms never perturb the result, so adding
// or removing an all-zero column leaves predictions bit-identical.
inline double sequential_dot(const double* a, const double* b, Eigen::Index n) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (b[i] != 0.0) s += a[i] * b[i];
    return s;
}

}  // namespace detail

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

// Minimizes (1/2n)||y - b - X theta||^2 + gamma ||theta_std||_1 by cyclic
// coordinate descent on centered, unit-variance columns. Coefficients are
// mapped back to the raw scale and the intercept absorbs the means.
inline LassoModel lasso_fit(const Matrix& x, const Vector& y, const LassoConfig& cfg = {}) {
    if (x.rows() == 0) throw EmptyInput("lasso_fit");
    if (x.rows() != y.size()) throw DimensionMismatch(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.size()));
    if (cfg.gamma < 0.0) throw ConfigError("lasso gamma must be >= 0");
    require_finite(x);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (!std::isfinite(y(i))) throw NonFiniteValue(static_cast<std::size_t>(i), static_cast<std::size_t>(x.cols()));

    const auto n = x.rows();
    const auto p = x.cols();
    const double nd = static_cast<double>(n);
    LassoModel m;
    m.column_means = x.colwise().mean().transpose();
    m.column_scales = Vector::Zero(p);
    Eigen::MatrixXd z(n, p);  // column-major: contiguous columns for the descent
    for (Eigen::Index j = 0; j < p; ++j) {
        Vector c = x.col(j).array() - m.column_means(j);
        const double sd = std::sqrt(c.squaredNorm() / nd);
        if (sd > 0.0 && std::isfinite(sd)) {
            m.column_scales(j) = sd;
            z.col(j) = c / sd;
        } else {
            z.col(j).setZero();
        }
    }

    const double y_mean = y.mean();
    Vector beta = Vector::Zero(p);
    Vector r = y.array() - y_mean;
    auto objective = [&] { return r.squaredNorm() / (2.0 * nd) + cfg.gamma * beta.lpNorm<1>(); };

    bool any_variance = (m.column_scales.array() > 0.0).any();
    m.no_variance = !any_variance;
    m.converged = !any_variance;
    for (int sweep = 0; any_variance && sweep < cfg.max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (m.column_scales(j) == 0.0) continue;
            const double old = beta(j);
            // Unit-variance column: the coordinate minimizer is soft(z_j'r/n + old).
            const double rho = z.col(j).dot(r) / nd + old;
            const double next = soft_threshold(rho, cfg.gamma);
            if (next != old) {
                r -= (next - old) * z.col(j);
                beta(j) = next;
                max_delta = std::max(max_delta, std::abs(next - old));
            }
        }
        m.sweeps_used = sweep + 1;
        m.objective_trace.push_back(objective());
        if (max_delta < cfg.tol) {
            m.converged = true;
            break;
        }
    }

    m.standardized_coefficients = beta;
    m.coefficients = Vector::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j)
        if (m.column_scales(j) > 0.0) m.coefficients(j) = beta(j) / m.column_scales(j);
    m.intercept = y_mean - detail::sequential_dot(m.coefficients.data(), m.column_means.data(), p);
    return m;
}

inline Vector lasso_predict(const LassoModel& m, const Matrix& x) {
    if (x.cols() != m.coefficients.size())
        throw DimensionMismatch(static_cast<std::size_t>(m.coefficients.size()), static_cast<std::size_t>(x.cols()));
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        out(i) = detail::sequential_dot(x.row(i).data(), m.coefficients.data(), x.cols()) + m.intercept;
    return out;
}

inline nlohmann::json to_json(const LassoModel& m) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"intercept", m.intercept},
            {"coefficients", vec(m.coefficients)},
            {"standardized_coefficients", vec(m.standardized_coefficients)},
            {"converged", m.converged},
            {"sweeps_used", m.sweeps_used}};
}

}  // namespace defectflow::learn
