#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include "defectflow/core.hpp"

namespace defectflow::preprocess {

enum class ScalerKind { minmax, robust_v1, robust_v2, quantile_uniform, quantile_normal };

inline const char* to_string(ScalerKind k) {
    switch (k) {
        case ScalerKind::minmax: return "minmax";
        case ScalerKind::robust_v1: return "robust_v1";
        case ScalerKind::robust_v2: return "robust_v2";
        case ScalerKind::quantile_uniform: return "quantile_uniform";
        case ScalerKind::quantile_normal: return "quantile_normal";
    }
    return "?";
}

inline ScalerKind scaler_kind_from_string(const std::string& s) {
    for (auto k : {ScalerKind::minmax, ScalerKind::robust_v1, ScalerKind::robust_v2, ScalerKind::quantile_uniform,
                   ScalerKind::quantile_normal})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown scaler kind '" + s + "'");
}

inline constexpr ScalerKind kAllScalers[] = {ScalerKind::minmax, ScalerKind::robust_v1, ScalerKind::robust_v2,
                                             ScalerKind::quantile_uniform, ScalerKind::quantile_normal};

inline bool is_quantile(ScalerKind k) {
    return k == ScalerKind::quantile_uniform || k == ScalerKind::quantile_normal;
}

struct ScalerSpec {
    ScalerKind kind = ScalerKind::minmax;
    int quantile_landmarks = 1000;
};

// Rank clipping for the normal output.
inline constexpr double kQuantileClip = 1e-7;

class NotInvertible : public Error {
public:
    explicit NotInvertible(ScalerKind k)
        : Error("NotInvertible", std::string("scaler kind ") + to_string(k) + " has no inverse") {}
};

// Percentile with linear interpolation between closest ranks on a sorted
// sample; p in [0, 1].
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline double probit(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

struct ColumnParams {
    // minmax: a = min, b = max. robust: a = center, b = scale.
    double a = 0.0;
    double b = 0.0;
    bool constant = false;
    std::vector<double> landmarks;  // quantile kinds: input values at `ranks`
};

struct FittedScaler {
    ScalerSpec spec;
    std::vector<ColumnParams> columns;
    std::vector<double> ranks;  // quantile kinds: evenly spaced in [0, 1]

    std::size_t cols() const { return columns.size(); }
};

inline FittedScaler fit(const ScalerSpec& spec, const Matrix& x) {
    if (x.rows() == 0 || x.cols() == 0) throw EmptyInput("scaler fit");
    if (is_quantile(spec.kind) && spec.quantile_landmarks < 2) throw ConfigError("quantile_landmarks must be >= 2");
    require_finite(x);

    FittedScaler s;
    s.spec = spec;
    s.columns.resize(static_cast<std::size_t>(x.cols()));
    const auto n = static_cast<std::size_t>(x.rows());
    if (is_quantile(spec.kind)) {
        const std::size_t m = std::min<std::size_t>(n, static_cast<std::size_t>(spec.quantile_landmarks));
        s.ranks.resize(m);
        for (std::size_t i = 0; i < m; ++i)
            s.ranks[i] = m == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(m - 1);
    }

    std::vector<double> col(n);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = x(static_cast<Eigen::Index>(i), j);
        std::sort(col.begin(), col.end());
        auto& p = s.columns[static_cast<std::size_t>(j)];
        p.constant = col.front() == col.back();
        switch (spec.kind) {
            case ScalerKind::minmax:
                p.a = col.front();
                p.b = col.back();
                break;
            case ScalerKind::robust_v1:
            case ScalerKind::robust_v2: {
                const double lo_q = spec.kind == ScalerKind::robust_v1 ? 0.25 : 0.10;
                p.a = percentile_sorted(col, 0.5);
                p.b = percentile_sorted(col, 1.0 - lo_q) - percentile_sorted(col, lo_q);
                // A zero spread falls back to unit scale, which maps a
                // constant column to 0.
                if (p.b == 0.0) p.b = 1.0;
                break;
            }
            case ScalerKind::quantile_uniform:
            case ScalerKind::quantile_normal:
                p.landmarks.resize(s.ranks.size());
                for (std::size_t i = 0; i < s.ranks.size(); ++i) p.landmarks[i] = percentile_sorted(col, s.ranks[i]);
                break;
        }
    }
    return s;
}

// Empirical CDF by interpolation over the landmarks. An input equal to a run
// of tied landmarks maps to the midpoint of their ranks.
inline double quantile_uniform_value(const ColumnParams& p, const std::vector<double>& ranks, double v) {
    const auto& q = p.landmarks;
    if (v < q.front()) return 0.0;
    if (v > q.back()) return 1.0;
    auto lo = std::lower_bound(q.begin(), q.end(), v);
    auto hi = std::upper_bound(q.begin(), q.end(), v);
    const auto l = static_cast<std::size_t>(lo - q.begin());
    const auto u = static_cast<std::size_t>(hi - q.begin());
    if (l < u) return 0.5 * (ranks[l] + ranks[u - 1]);
    // q[l-1] < v < q[l]
    const double t = (v - q[l - 1]) / (q[l] - q[l - 1]);
    return std::clamp(ranks[l - 1] + t * (ranks[l] - ranks[l - 1]), 0.0, 1.0);
}

inline double transform_value(const FittedScaler& s, std::size_t j, double v) {
    const auto& p = s.columns[j];
    switch (s.spec.kind) {
        case ScalerKind::minmax:
            return p.constant ? 0.0 : (v - p.a) / (p.b - p.a);
        case ScalerKind::robust_v1:
        case ScalerKind::robust_v2:
            return (v - p.a) / p.b;
        case ScalerKind::quantile_uniform:
            return p.constant ? 0.0 : quantile_uniform_value(p, s.ranks, v);
        case ScalerKind::quantile_normal: {
            if (p.constant) return 0.0;
            const double u = std::clamp(quantile_uniform_value(p, s.ranks, v), kQuantileClip, 1.0 - kQuantileClip);
            return probit(u);
        }
    }
    return 0.0;
}

inline Matrix transform(const FittedScaler& s, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != s.cols()) throw DimensionMismatch(s.cols(), static_cast<std::size_t>(x.cols()));
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out(i, j) = transform_value(s, static_cast<std::size_t>(j), x(i, j));
    return out;
}

inline Matrix inverse_transform(const FittedScaler& s, const Matrix& x) {
    if (is_quantile(s.spec.kind)) throw NotInvertible(s.spec.kind);
    if (static_cast<std::size_t>(x.cols()) != s.cols()) throw DimensionMismatch(s.cols(), static_cast<std::size_t>(x.cols()));
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto& p = s.columns[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (s.spec.kind == ScalerKind::minmax)
                out(i, j) = p.constant ? p.a : x(i, j) * (p.b - p.a) + p.a;
            else
                out(i, j) = p.constant ? p.a : x(i, j) * p.b + p.a;
        }
    }
    return out;
}

inline Matrix fit_transform(const ScalerSpec& spec, const Matrix& x) { return transform(fit(spec, x), x); }

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const FittedScaler& s) {
    nlohmann::json j;
    j["kind"] = to_string(s.spec.kind);
    if (is_quantile(s.spec.kind)) {
        j["quantile_landmarks"] = s.spec.quantile_landmarks;
        j["ranks"] = s.ranks;
        auto& lm = j["landmarks"] = nlohmann::json::array();
        for (const auto& c : s.columns) lm.push_back(c.landmarks);
    } else {
        std::vector<double> a, b;
        for (const auto& c : s.columns) {
            a.push_back(c.a);
            b.push_back(c.b);
        }
        const bool mm = s.spec.kind == ScalerKind::minmax;
        j[mm ? "min" : "center"] = a;
        j[mm ? "max" : "scale"] = b;
    }
    std::vector<bool> constant;
    for (const auto& c : s.columns) constant.push_back(c.constant);
    j["constant"] = constant;
    return j;
}

inline FittedScaler from_json(const nlohmann::json& j) {
    FittedScaler s;
    s.spec.kind = scaler_kind_from_string(j.at("kind").get<std::string>());
    const auto constant = j.at("constant").get<std::vector<bool>>();
    s.columns.resize(constant.size());
    for (std::size_t i = 0; i < constant.size(); ++i) s.columns[i].constant = constant[i];
    if (is_quantile(s.spec.kind)) {
        s.spec.quantile_landmarks = j.at("quantile_landmarks").get<int>();
        s.ranks = j.at("ranks").get<std::vector<double>>();
        const auto& lm = j.at("landmarks");
        for (std::size_t i = 0; i < s.columns.size(); ++i) s.columns[i].landmarks = lm.at(i).get<std::vector<double>>();
    } else {
        const bool mm = s.spec.kind == ScalerKind::minmax;
        const auto a = j.at(mm ? "min" : "center").get<std::vector<double>>();
        const auto b = j.at(mm ? "max" : "scale").get<std::vector<double>>();
        for (std::size_t i = 0; i < s.columns.size(); ++i) {
            s.columns[i].a = a.at(i);
            s.columns[i].b = b.at(i);
        }
    }
    return s;
}

}  // namespace defectflow::preprocess
