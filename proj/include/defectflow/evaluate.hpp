#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "defectflow/core.hpp"
#include "defectflow/csv.hpp"
#include "defectflow/dataset.hpp"
#include "defectflow/learn.hpp"
#include "defectflow/preprocess.hpp"

namespace defectflow::evaluate {

class ZeroVariance : public Error {
public:
    ZeroVariance() : Error("ZeroVariance", "r2 undefined: target has zero variance") {}
};

class UnfittedModel : public Error {
public:
    explicit UnfittedModel(const std::string& what) : Error("UnfittedModel", what) {}
};

class UnknownCluster : public Error {
public:
    explicit UnknownCluster(int id) : Error("UnknownCluster", "no column for cluster " + std::to_string(id)), id(id) {}
    int id;
};

// ---------------------------------------------------------------------------
// Metrics

namespace detail {
inline void check_pair(const Vector& pred, const Vector& truth) {
    if (pred.size() != truth.size())
        throw DimensionMismatch(static_cast<std::size_t>(truth.size()), static_cast<std::size_t>(pred.size()));
    if (truth.size() == 0) throw EmptyInput("metric");
}
}  // namespace detail

inline double mae(const Vector& pred, const Vector& truth) {
    detail::check_pair(pred, truth);
    return (pred - truth).cwiseAbs().mean();
}

inline double mse(const Vector& pred, const Vector& truth) {
    detail::check_pair(pred, truth);
    return (pred - truth).squaredNorm() / static_cast<double>(truth.size());
}

inline double r2(const Vector& pred, const Vector& truth) {
    detail::check_pair(pred, truth);
    const double mean = truth.mean();
    const double ss_tot = (truth.array() - mean).square().sum();
    if (ss_tot == 0.0) throw ZeroVariance();
    return 1.0 - (pred - truth).squaredNorm() / ss_tot;
}

inline std::vector<int> default_label_set() { return {1, 2, 3, 4, 5, 6}; }

// Per-label f1 averaged with true-label support as weights. Undefined
// precision or recall counts as 0.
inline double f1_weighted(const Vector& pred, const Vector& truth, const std::vector<int>& label_set = default_label_set()) {
    if (pred.size() != truth.size())
        throw DimensionMismatch(static_cast<std::size_t>(truth.size()), static_cast<std::size_t>(pred.size()));
    if (truth.size() == 0) throw EmptyInput("f1_weighted");
    std::map<int, std::size_t> slot;
    for (std::size_t i = 0; i < label_set.size(); ++i) slot[label_set[i]] = i;
    auto index_of = [&](double v) {
        auto it = slot.find(static_cast<int>(v));
        if (it == slot.end() || static_cast<double>(it->first) != v)
            throw Error("LabelOutOfRange", "label " + std::to_string(v) + " is not in the label set");
        return it->second;
    };
    const std::size_t k = label_set.size();
    std::vector<double> tp(k, 0), fp(k, 0), fn(k, 0), support(k, 0);
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const auto t = index_of(truth(i)), p = index_of(pred(i));
        support[t] += 1;
        if (t == p) {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn[t] += 1;
        }
    }
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        if (support[c] == 0) continue;
        const double prec = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
        const double rec = tp[c] / support[c];
        const double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        total += f1 * support[c];
    }
    return total / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Feature importance

enum class Method { correlation, lasso, forest };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::correlation: return "correlation";
        case Method::lasso: return "lasso";
        case Method::forest: return "forest";
    }
    return "?";
}

struct ImportanceEntry {
    Method method = Method::correlation;
    std::string feature_name;
    int time_offset = 0;
    double importance = 0.0;
    int rank = 0;
};

namespace detail {
// Ranks by |importance| descending; ties keep column order.
inline std::vector<ImportanceEntry> ranked(Method m, const std::vector<dataset::ColumnLabel>& cols,
                                           const std::vector<double>& values) {
    std::vector<ImportanceEntry> out;
    for (std::size_t j = 0; j < cols.size(); ++j) out.push_back({m, cols[j].source, cols[j].offset, values[j], 0});
    std::stable_sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
        return std::abs(a.importance) > std::abs(b.importance);
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
    return out;
}
}  // namespace detail

inline double pearson(const Vector& a, const Vector& b) {
    const double n = static_cast<double>(a.size());
    const double ma = a.sum() / n, mb = b.sum() / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        sab += (a(i) - ma) * (b(i) - mb);
        saa += (a(i) - ma) * (a(i) - ma);
        sbb += (b(i) - mb) * (b(i) - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

inline std::vector<ImportanceEntry> correlation_importance(const dataset::SupervisedDataset& d) {
    if (d.rows() < 3) throw TooFewRows(3, d.rows());
    std::vector<double> r;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) r.push_back(pearson(d.x.col(j), d.y));
    return detail::ranked(Method::correlation, d.columns, r);
}

inline std::vector<ImportanceEntry> lasso_importance(const learn::LassoModel& m,
                                                     const std::vector<dataset::ColumnLabel>& cols) {
    if (m.standardized_coefficients.size() == 0 ||
        static_cast<std::size_t>(m.standardized_coefficients.size()) != cols.size())
        throw UnfittedModel("lasso model does not match the column labels");
    std::vector<double> v;
    for (Eigen::Index j = 0; j < m.standardized_coefficients.size(); ++j) v.push_back(std::abs(m.standardized_coefficients(j)));
    return detail::ranked(Method::lasso, cols, v);
}

inline std::vector<ImportanceEntry> forest_importance_report(const learn::ForestModel& m,
                                                             const std::vector<dataset::ColumnLabel>& cols) {
    if (m.trees.empty() || static_cast<std::size_t>(m.feature_importances.size()) != cols.size())
        throw UnfittedModel("forest model does not match the column labels");
    std::vector<double> v(m.feature_importances.data(), m.feature_importances.data() + m.feature_importances.size());
    double total = 0.0;
    for (double x : v) total += x;
    if (total > 0.0)
        for (double& x : v) x /= total;
    return detail::ranked(Method::forest, cols, v);
}

// ---------------------------------------------------------------------------
// Learner runs

enum class Learner { forest_classifier, forest_regressor, lasso, svc };

inline const char* to_string(Learner l) {
    switch (l) {
        case Learner::forest_classifier: return "forest_classifier";
        case Learner::forest_regressor: return "forest_regressor";
        case Learner::lasso: return "lasso";
        case Learner::svc: return "svc";
    }
    return "?";
}

inline bool is_classifier(Learner l) { return l == Learner::forest_classifier || l == Learner::svc; }

inline constexpr Learner kAllLearners[] = {Learner::forest_classifier, Learner::forest_regressor, Learner::lasso,
                                           Learner::svc};

struct ExperimentConfig {
    learn::LassoConfig lasso;
    learn::ForestConfig forest;  // criterion is set per learner
    learn::SvcConfig svc;
    double test_fraction = 0.2;
    unsigned threads = 1;
    std::vector<Learner> learners{std::begin(kAllLearners), std::end(kAllLearners)};
};

struct Metrics {
    std::size_t rows = 0;
    double mae = 0.0;
    double mse = 0.0;
    std::optional<double> r2;  // empty when the slice target is constant
    std::optional<double> f1;  // classifiers only
};

enum class Slice { full, test, train_only };

inline const char* to_string(Slice s) {
    switch (s) {
        case Slice::full: return "full";
        case Slice::test: return "test";
        case Slice::train_only: return "train_only";
    }
    return "?";
}

inline constexpr Slice kAllSlices[] = {Slice::full, Slice::test, Slice::train_only};

struct LearnerEval {
    Learner learner = Learner::lasso;
    Metrics full;        // train + test rows
    Metrics test;        // held-out tail
    Metrics train_only;  // training rows
    std::optional<learn::LassoModel> lasso;
    std::optional<learn::ForestModel> forest;
    std::optional<learn::SvcModel> svc;
    Vector predictions;  // full slice, on the evaluated target scale
    Vector targets;

    const Metrics& slice(Slice s) const {
        return s == Slice::full ? full : s == Slice::test ? test : train_only;
    }
};

struct EvalReport {
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::vector<std::string> test_periods;
    std::vector<dataset::ColumnLabel> columns;
    std::vector<LearnerEval> learners;

    const LearnerEval* find(Learner l) const {
        for (const auto& e : learners)
            if (e.learner == l) return &e;
        return nullptr;
    }
};

namespace detail {

inline Metrics score(const Vector& pred, const Vector& truth, bool classifier) {
    Metrics m;
    m.rows = static_cast<std::size_t>(truth.size());
    m.mae = mae(pred, truth);
    m.mse = mse(pred, truth);
    try {
        m.r2 = r2(pred, truth);
    } catch (const ZeroVariance&) {
    }
    if (classifier) m.f1 = f1_weighted(pred, truth);
    return m;
}

inline Vector column(const Matrix& m) { return m.col(0); }

}  // namespace detail

// Regressors run on `regression` with inputs and target MinMax-scaled on the
// training rows; metrics are on the scaled target. Classifiers run on
// `categorical` (labels 1..6) with MinMax-scaled inputs. Both datasets must
// share rows and columns.
inline EvalReport run_experiment(const dataset::SupervisedDataset& regression,
                                 const dataset::SupervisedDataset* categorical, const ExperimentConfig& cfg) {
    const auto split = dataset::chronological_split(regression, cfg.test_fraction);
    EvalReport report;
    report.train_rows = split.train.rows();
    report.test_rows = split.test.rows();
    report.test_periods = split.test.period_keys;
    report.columns = regression.columns;
    const auto n_train = static_cast<Eigen::Index>(report.train_rows);
    const auto n = static_cast<Eigen::Index>(regression.rows());

    const preprocess::ScalerSpec minmax{preprocess::ScalerKind::minmax};
    const auto x_scaler = preprocess::fit(minmax, split.train.x);
    const Matrix x_all = preprocess::transform(x_scaler, regression.x);
    const Matrix x_train = x_all.topRows(n_train);
    const auto y_scaler = preprocess::fit(minmax, Matrix(split.train.y));
    const Vector y_reg = detail::column(preprocess::transform(y_scaler, Matrix(regression.y)));

    if (categorical && (categorical->rows() != regression.rows() || categorical->columns != regression.columns))
        throw DimensionMismatch(regression.rows(), categorical->rows());

    report.learners.resize(cfg.learners.size());
    for (std::size_t k = 0; k < cfg.learners.size(); ++k) {
        const Learner l = cfg.learners[k];
        LearnerEval& e = report.learners[k];
        e.learner = l;
        if (is_classifier(l) && !categorical) continue;
        const Vector y = is_classifier(l) ? categorical->y : y_reg;
        const Vector y_train = y.head(n_train);
        switch (l) {
            case Learner::lasso:
                e.lasso = learn::lasso_fit(x_train, y_train, cfg.lasso);
                e.predictions = learn::lasso_predict(*e.lasso, x_all);
                break;
            case Learner::forest_regressor:
            case Learner::forest_classifier: {
                auto fc = cfg.forest;
                fc.criterion = l == Learner::forest_classifier ? learn::Criterion::gini : learn::Criterion::mse;
                e.forest = learn::forest_fit(x_train, y_train, fc, cfg.threads);
                e.predictions = learn::forest_predict(*e.forest, x_all);
                break;
            }
            case Learner::svc:
                e.svc = learn::svc_fit(x_train, y_train, cfg.svc, cfg.threads);
                e.predictions = learn::svc_predict(*e.svc, x_all);
                break;
        }
        e.targets = y;
        const bool cls = is_classifier(l);
        e.full = detail::score(e.predictions, y, cls);
        e.train_only = detail::score(e.predictions.head(n_train), y_train, cls);
        e.test = detail::score(e.predictions.tail(n - n_train), y.tail(n - n_train), cls);
    }
    report.learners.erase(std::remove_if(report.learners.begin(), report.learners.end(),
                                         [](const LearnerEval& e) { return e.predictions.size() == 0; }),
                          report.learners.end());
    return report;
}

// ---------------------------------------------------------------------------
// Ablation

struct MetricDelta {
    Learner learner;
    Slice slice;
    std::string metric;
    double delta;  // ablated - baseline
};

struct AblationResult {
    std::vector<int> removed_clusters;
    EvalReport eval;
    std::vector<MetricDelta> delta_vs_baseline;
};

inline std::vector<MetricDelta> metric_deltas(const EvalReport& after, const EvalReport& before) {
    std::vector<MetricDelta> out;
    for (const auto& a : after.learners) {
        const auto* b = before.find(a.learner);
        if (!b) continue;
        for (Slice s : kAllSlices) {
            const auto &ma = a.slice(s), &mb = b->slice(s);
            out.push_back({a.learner, s, "mae", ma.mae - mb.mae});
            out.push_back({a.learner, s, "mse", ma.mse - mb.mse});
            if (ma.r2 && mb.r2) out.push_back({a.learner, s, "r2", *ma.r2 - *mb.r2});
            if (ma.f1 && mb.f1) out.push_back({a.learner, s, "f1", *ma.f1 - *mb.f1});
        }
    }
    return out;
}

inline dataset::SupervisedDataset remove_clusters(const dataset::SupervisedDataset& d, const std::vector<int>& ids) {
    std::set<std::string> drop;
    for (int id : ids) {
        const auto name = dataset::cluster_field(id);
        if (std::none_of(d.columns.begin(), d.columns.end(), [&](const auto& c) { return c.source == name; }))
            throw UnknownCluster(id);
        drop.insert(name);
    }
    return d.select_columns([&](const dataset::ColumnLabel& c) { return !drop.count(c.source); });
}

// Removes the named cluster-count columns and refits with the same split and
// seeds.
inline AblationResult ablate_clusters(const dataset::SupervisedDataset& regression,
                                      const dataset::SupervisedDataset* categorical, const std::vector<int>& ids,
                                      const ExperimentConfig& cfg, const EvalReport& baseline) {
    AblationResult r;
    r.removed_clusters = ids;
    const auto reg = remove_clusters(regression, ids);
    std::optional<dataset::SupervisedDataset> cat;
    if (categorical) cat = remove_clusters(*categorical, ids);
    r.eval = run_experiment(reg, cat ? &*cat : nullptr, cfg);
    r.delta_vs_baseline = metric_deltas(r.eval, baseline);
    return r;
}

// ---------------------------------------------------------------------------
// Label agreement

// Maximum-weight one-to-one matching on a score matrix (rows <= cols after
// padding). Returns the column assigned to each row.
inline std::vector<int> hungarian_max(const std::vector<std::vector<double>>& score) {
    const std::size_t rows = score.size();
    std::size_t cols = 0;
    for (const auto& r : score) cols = std::max(cols, r.size());
    const std::size_t n = std::max(rows, cols);
    double top = 0.0;
    for (const auto& r : score)
        for (double v : r) top = std::max(top, v);
    auto cost = [&](std::size_t i, std::size_t j) {
        const double v = i < rows && j < score[i].size() ? score[i][j] : 0.0;
        return top - v;
    };
    // Jonker-Volgenant style potentials, 1-based.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j)
                if (!used[j]) {
                    const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta) {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> match(rows, -1);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] >= 1 && p[j] <= rows && j <= cols) match[p[j] - 1] = static_cast<int>(j - 1);
    return match;
}

// Fraction of points whose predicted label maps to their true label under
// the best one-to-one matching of label values. Noise (-1) is an ordinary
// label on both sides.
inline double best_match_agreement(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size()) throw DimensionMismatch(truth.size(), predicted.size());
    if (truth.empty()) throw EmptyInput("best_match_agreement");
    std::map<int, std::size_t> pi, ti;
    for (int p : predicted) pi.emplace(p, 0);
    for (int t : truth) ti.emplace(t, 0);
    std::size_t k = 0;
    for (auto& [_, idx] : pi) idx = k++;
    k = 0;
    for (auto& [_, idx] : ti) idx = k++;
    std::vector<std::vector<double>> table(pi.size(), std::vector<double>(ti.size(), 0.0));
    for (std::size_t i = 0; i < truth.size(); ++i) table[pi[predicted[i]]][ti[truth[i]]] += 1.0;
    const auto match = hungarian_max(table);
    double agree = 0.0;
    for (std::size_t r = 0; r < match.size(); ++r)
        if (match[r] >= 0) agree += table[r][static_cast<std::size_t>(match[r])];
    return agree / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Tables

inline std::string fixed4(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    auto s = os.str();
    if (s == "-0.0000") s = "0.0000";
    return s;
}

inline std::string offset_label(int offset) { return offset == 0 ? "t" : "t" + std::to_string(offset); }

// Rows: metric x slice. Columns: one per learner.
inline csv::Table performance_table(const EvalReport& r) {
    csv::Table t;
    t.header = {"score", "slice"};
    for (const auto& e : r.learners) t.header.push_back(to_string(e.learner));
    const std::pair<const char*, Slice> slices[] = {{"Full set", Slice::full}, {"Test set", Slice::test},
                                                    {"Train set", Slice::train_only}};
    for (const char* metric : {"MAE", "R2", "MSE", "f1"})
        for (const auto& [label, s] : slices) {
            csv::Record rec{metric, label};
            for (const auto& e : r.learners) {
                const auto& m = e.slice(s);
                const std::string name = metric;
                if (name == "MAE") rec.push_back(fixed4(m.mae));
                else if (name == "MSE") rec.push_back(fixed4(m.mse));
                else if (name == "R2") rec.push_back(m.r2 ? fixed4(*m.r2) : "undefined");
                else rec.push_back(m.f1 ? fixed4(*m.f1) : "-");
            }
            t.rows.push_back(std::move(rec));
        }
    return t;
}

// rank, feature (at time), importance
inline csv::Table top_features_table(const std::vector<ImportanceEntry>& entries, std::size_t top) {
    csv::Table t;
    t.header = {"rank", "feature", "time_offset", "importance"};
    for (std::size_t i = 0; i < std::min(top, entries.size()); ++i) {
        const auto& e = entries[i];
        t.rows.push_back({std::to_string(e.rank), e.feature_name + " (" + offset_label(e.time_offset) + ")",
                          std::to_string(e.time_offset), fixed4(e.importance)});
    }
    return t;
}

// Three rows per method (feature, time step, importance) and one column per rank.
inline csv::Table relevance_table(const std::vector<std::vector<ImportanceEntry>>& per_method, std::size_t top) {
    csv::Table t;
    t.header = {"method", "row"};
    for (std::size_t k = 1; k <= top; ++k) t.header.push_back(std::to_string(k));
    for (const auto& entries : per_method) {
        if (entries.empty()) continue;
        const std::string method = to_string(entries.front().method);
        csv::Record feat{method, "data_feature"}, step{method, "time_step"}, imp{method, "importance"};
        for (std::size_t k = 0; k < top; ++k) {
            if (k < entries.size()) {
                feat.push_back(entries[k].feature_name);
                step.push_back(std::to_string(entries[k].time_offset));
                imp.push_back(fixed4(entries[k].importance));
            } else {
                feat.push_back("");
                step.push_back("");
                imp.push_back("");
            }
        }
        t.rows.push_back(std::move(feat));
        t.rows.push_back(std::move(step));
        t.rows.push_back(std::move(imp));
    }
    return t;
}

inline csv::Table ablation_table(const std::vector<AblationResult>& results) {
    csv::Table t;
    t.header = {"removed_clusters", "learner", "slice", "metric", "delta"};
    for (const auto& r : results) {
        std::string removed;
        for (std::size_t i = 0; i < r.removed_clusters.size(); ++i)
            removed += (i ? ";" : "") + std::to_string(r.removed_clusters[i]);
        for (const auto& d : r.delta_vs_baseline)
            t.rows.push_back({removed, to_string(d.learner), to_string(d.slice), d.metric, fixed4(d.delta)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Metrics& m) {
    nlohmann::json j{{"rows", m.rows}, {"mae", m.mae}, {"mse", m.mse}};
    j["r2"] = m.r2 ? nlohmann::json(*m.r2) : nlohmann::json(nullptr);
    if (m.f1) j["f1_weighted"] = *m.f1;
    return j;
}

inline nlohmann::json to_json(const ImportanceEntry& e) {
    return {{"method", to_string(e.method)}, {"feature", e.feature_name}, {"time_offset", e.time_offset},
            {"importance", e.importance}, {"rank", e.rank}};
}

inline nlohmann::json to_json(const std::vector<ImportanceEntry>& v) {
    auto j = nlohmann::json::array();
    for (const auto& e : v) j.push_back(to_json(e));
    return j;
}

inline nlohmann::json to_json(const EvalReport& r, bool include_models = false) {
    nlohmann::json j;
    j["slices"] = {{"full", "train and test rows"},
                   {"test", "last " + std::to_string(r.test_rows) + " rows"},
                   {"train_only", "first " + std::to_string(r.train_rows) + " rows"}};
    j["test_periods"] = r.test_periods;
    std::vector<std::string> cols;
    for (const auto& c : r.columns) cols.push_back(c.name());
    j["columns"] = cols;
    auto& models = j["learners"] = nlohmann::json::object();
    for (const auto& e : r.learners) {
        nlohmann::json m;
        for (Slice s : kAllSlices) m[to_string(s)] = to_json(e.slice(s));
        if (include_models) {
            if (e.lasso) m["model"] = learn::to_json(*e.lasso);
            if (e.forest) m["model"] = learn::to_json(*e.forest);
            if (e.svc) m["model"] = learn::to_json(*e.svc);
        }
        models[to_string(e.learner)] = std::move(m);
    }
    return j;
}

inline nlohmann::json to_json(const AblationResult& a) {
    auto deltas = nlohmann::json::array();
    for (const auto& d : a.delta_vs_baseline)
        deltas.push_back({{"learner", to_string(d.learner)}, {"slice", to_string(d.slice)}, {"metric", d.metric},
                          {"delta", d.delta}});
    return {{"removed_clusters", a.removed_clusters}, {"eval", to_json(a.eval)}, {"delta_vs_baseline", deltas}};
}

}  // namespace defectflow::evaluate
