#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "defectflow/core.hpp"

namespace defectflow::learn {

struct SvcConfig {
    double c = 1.0;
    double tol = 1e-3;  // KKT violation gap
    int max_passes = 100;
    std::uint64_t seed = 0;
};

class SingleClass : public Error {
public:
    SingleClass() : Error("SingleClass", "svc needs at least two classes") {}
};

struct SvcPair {
    double positive = 0.0;  // label voted for when the decision value is > 0
    double negative = 0.0;
    std::vector<std::size_t> rows;  // training rows in this pair
    std::vector<double> y;          // +1 / -1 per row
    std::vector<double> alpha;      // per row, in [0, c]
    Matrix support_vectors;
    std::vector<double> dual_coef;  // alpha * y for each support vector
    double bias = 0.0;              // decision = sum dual_coef * K + bias
    int iterations = 0;
    bool converged = false;

    double sum_alpha_y() const {
        double s = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * y[i];
        return s;
    }
};

struct SvcModel {
    std::vector<double> classes;
    double gamma = 1.0;
    double c = 1.0;
    std::size_t n_features = 0;
    std::vector<SvcPair> pairs;  // (0,1), (0,2), ..., (1,2), ...
};

inline double rbf(const double* a, const double* b, Eigen::Index p, double gamma) {
    double d = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
    return std::exp(-gamma * d);
}

// 1 / (features * variance of all entries), 1 when the variance is 0.
inline double rbf_gamma(const Matrix& x) {
    const double n = static_cast<double>(x.size());
    const double mean = x.sum() / n;
    const double var = (x.array() - mean).square().sum() / n;
    return var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

namespace detail {

// SMO with maximal violating pair selection.
inline void smo_solve(SvcPair& pr, const Matrix& kernel, const SvcConfig& cfg) {
    const std::size_t n = pr.rows.size();
    const double c = cfg.c;
    auto K = [&](std::size_t a, std::size_t b) {
        return kernel(static_cast<Eigen::Index>(pr.rows[a]), static_cast<Eigen::Index>(pr.rows[b]));
    };
    auto Q = [&](std::size_t a, std::size_t b) { return pr.y[a] * pr.y[b] * K(a, b); };
    auto& alpha = pr.alpha;
    const auto& y = pr.y;
    alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);
    auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };

    const long cap = static_cast<long>(cfg.max_passes) * static_cast<long>(std::max<std::size_t>(n, 100));
    pr.converged = false;
    for (long it = 0; it < cap; ++it) {
        double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        pr.iterations = static_cast<int>(it);
        if (i == n || j == n || gmax - gmin < cfg.tol) {
            pr.converged = true;
            break;
        }

        const double ai = alpha[i], aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        const double di = alpha[i] - ai, dj = alpha[j] - aj;
        for (std::size_t t = 0; t < n; ++t) grad[t] += Q(t, i) * di + Q(t, j) * dj;
    }

    // Bias from free vectors, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
    int free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    const double rho = free_count > 0 ? free_sum / free_count : (ub + lb) / 2.0;
    pr.bias = -rho;
}

}  // namespace detail

// One-vs-one soft-margin SVC with an RBF kernel.
inline SvcModel svc_fit(const Matrix& x, const Vector& labels, const SvcConfig& cfg = {}, unsigned threads = 1) {
    if (x.rows() == 0) throw EmptyInput("svc_fit");
    if (x.rows() != labels.size())
        throw DimensionMismatch(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(labels.size()));
    if (!(cfg.c > 0.0)) throw ConfigError("svc c must be > 0");
    require_finite(x);

    SvcModel m;
    m.c = cfg.c;
    m.n_features = static_cast<std::size_t>(x.cols());
    m.classes.assign(labels.data(), labels.data() + labels.size());
    std::sort(m.classes.begin(), m.classes.end());
    m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
    if (m.classes.size() < 2) throw SingleClass();
    m.gamma = rbf_gamma(x);

    const auto n = x.rows();
    Matrix kernel(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b) kernel(a, b) = kernel(b, a) = rbf(x.row(a).data(), x.row(b).data(), x.cols(), m.gamma);

    for (std::size_t a = 0; a < m.classes.size(); ++a)
        for (std::size_t b = a + 1; b < m.classes.size(); ++b) {
            SvcPair pr;
            pr.positive = m.classes[a];
            pr.negative = m.classes[b];
            for (Eigen::Index r = 0; r < n; ++r)
                if (labels(r) == pr.positive || labels(r) == pr.negative) {
                    pr.rows.push_back(static_cast<std::size_t>(r));
                    pr.y.push_back(labels(r) == pr.positive ? 1.0 : -1.0);
                }
            m.pairs.push_back(std::move(pr));
        }

    parallel_for(m.pairs.size(), threads, [&](std::size_t k) {
        auto& pr = m.pairs[k];
        detail::smo_solve(pr, kernel, cfg);
        std::vector<std::size_t> sv;
        for (std::size_t t = 0; t < pr.rows.size(); ++t)
            if (pr.alpha[t] > 0.0) sv.push_back(t);
        pr.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
        pr.dual_coef.clear();
        for (std::size_t s = 0; s < sv.size(); ++s) {
            pr.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(static_cast<Eigen::Index>(pr.rows[sv[s]]));
            pr.dual_coef.push_back(pr.alpha[sv[s]] * pr.y[sv[s]]);
        }
    });
    return m;
}

inline double svc_decision(const SvcModel& m, const SvcPair& pr, const double* row) {
    double f = pr.bias;
    for (Eigen::Index s = 0; s < pr.support_vectors.rows(); ++s)
        f += pr.dual_coef[static_cast<std::size_t>(s)] *
             rbf(pr.support_vectors.row(s).data(), row, pr.support_vectors.cols(), m.gamma);
    return f;
}

// Per-pair votes for one row, indexed like `classes`.
inline std::vector<int> svc_votes(const SvcModel& m, const double* row) {
    std::vector<int> votes(m.classes.size(), 0);
    std::size_t k = 0;
    for (std::size_t a = 0; a < m.classes.size(); ++a)
        for (std::size_t b = a + 1; b < m.classes.size(); ++b, ++k) ++votes[svc_decision(m, m.pairs[k], row) > 0.0 ? a : b];
    return votes;
}

inline Vector svc_predict(const SvcModel& m, const Matrix& x) {
    if (x.rows() > 0 && static_cast<std::size_t>(x.cols()) != m.n_features)
        throw DimensionMismatch(m.n_features, static_cast<std::size_t>(x.cols()));
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto votes = svc_votes(m, x.row(i).data());
        out(i) = m.classes[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
    }
    return out;
}

inline nlohmann::json to_json(const SvcModel& m) {
    nlohmann::json j{{"classes", m.classes}, {"gamma", m.gamma}, {"c", m.c}};
    auto& pairs = j["pairs"] = nlohmann::json::array();
    for (const auto& pr : m.pairs) {
        auto sv = nlohmann::json::array();
        for (Eigen::Index s = 0; s < pr.support_vectors.rows(); ++s)
            sv.push_back(std::vector<double>(pr.support_vectors.row(s).data(),
                                             pr.support_vectors.row(s).data() + pr.support_vectors.cols()));
        pairs.push_back({{"positive", pr.positive},
                         {"negative", pr.negative},
                         {"bias", pr.bias},
                         {"dual_coef", pr.dual_coef},
                         {"support_vectors", std::move(sv)},
                         {"converged", pr.converged}});
    }
    return j;
}

}  // namespace defectflow::learn
