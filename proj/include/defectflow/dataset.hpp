#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "defectflow/core.hpp"
#include "defectflow/corpus.hpp"
#include "defectflow/csv.hpp"
#include "defectflow/date.hpp"

namespace defectflow::dataset {

enum class Granularity { month, release };

inline const char* to_string(Granularity g) { return g == Granularity::month ? "month" : "release"; }

struct PeriodRow {
    std::string period_key;  // "YYYY-MM" or a release id
    long tr_inflow = 0;
    std::array<long, 5> tr_inflow_by_class{};  // index k-1 holds class k
    long releases_delivered = 0;
    long features_delivered = 0;
    double mean_dev_time = 0.0;
    bool no_features = true;  // mean_dev_time was zero-filled
    std::map<int, long> cluster_counts;
    std::vector<std::string> delivered_features;
};

struct TimeSeriesTable {
    Granularity granularity = Granularity::month;
    std::vector<PeriodRow> rows;
    std::vector<int> cluster_ids;           // ascending; empty before augmentation
    std::set<std::string> known_features;  // every feature of the source corpus
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("EmptyCorpus", "corpus has no trouble reports or releases to aggregate") {}
};

class UnknownFeature : public Error {
public:
    explicit UnknownFeature(const std::string& id) : Error("UnknownFeature", "unknown feature " + id), id(id) {}
    std::string id;
};

namespace detail {

inline void finish_row(PeriodRow& row, const std::unordered_map<std::string, long>& dev_time) {
    row.features_delivered = static_cast<long>(row.delivered_features.size());
    row.no_features = row.delivered_features.empty();
    if (row.no_features) {
        row.mean_dev_time = 0.0;
        return;
    }
    double sum = 0.0;
    for (const auto& id : row.delivered_features) sum += static_cast<double>(dev_time.at(id));
    row.mean_dev_time = sum / static_cast<double>(row.delivered_features.size());
}

}  // namespace detail

// Month mode counts reports by report date over a gap-free month range;
// release mode counts reports by attributed release. Features are delivered
// with their linked release.
inline TimeSeriesTable aggregate_periods(const corpus::CorpusBundle& b, Granularity g) {
    if (!b.linked) throw Error("NotLinked", "aggregate_periods requires a linked bundle");
    if (b.trouble_reports.empty() && b.releases.empty()) throw EmptyCorpus();

    TimeSeriesTable t;
    t.granularity = g;
    for (const auto& f : b.features) t.known_features.insert(f.feature_id);

    std::unordered_map<std::string, Date> release_date;
    for (const auto& r : b.releases) release_date[r.release_id] = r.release_date;
    std::unordered_map<std::string, long> dev_time;
    for (const auto& f : b.features) dev_time[f.feature_id] = f.development_time_days;

    if (g == Granularity::month) {
        int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
        auto extend = [&](Date d) {
            lo = std::min(lo, month_index(d));
            hi = std::max(hi, month_index(d));
        };
        for (const auto& tr : b.trouble_reports) extend(tr.date_reported);
        for (const auto& r : b.releases) extend(r.release_date);

        t.rows.resize(static_cast<std::size_t>(hi - lo + 1));
        for (int m = lo; m <= hi; ++m) t.rows[static_cast<std::size_t>(m - lo)].period_key = format_month(m);
        for (const auto& tr : b.trouble_reports) {
            auto& row = t.rows[static_cast<std::size_t>(month_index(tr.date_reported) - lo)];
            ++row.tr_inflow;
            ++row.tr_inflow_by_class[static_cast<std::size_t>(tr.importance_class - 1)];
        }
        for (const auto& r : b.releases) ++t.rows[static_cast<std::size_t>(month_index(r.release_date) - lo)].releases_delivered;
        for (const auto& f : b.features) {
            if (!f.release_id) continue;
            auto& row = t.rows[static_cast<std::size_t>(month_index(release_date.at(*f.release_id)) - lo)];
            row.delivered_features.push_back(f.feature_id);
        }
    } else {
        const auto releases = corpus::sorted_releases(b);
        std::unordered_map<std::string, std::size_t> pos;
        t.rows.resize(releases.size());
        for (std::size_t i = 0; i < releases.size(); ++i) {
            pos[releases[i].release_id] = i;
            t.rows[i].period_key = releases[i].release_id;
            t.rows[i].releases_delivered = 1;
        }
        for (const auto& tr : b.trouble_reports) {
            auto& row = t.rows[pos.at(tr.release_id)];
            ++row.tr_inflow;
            ++row.tr_inflow_by_class[static_cast<std::size_t>(tr.importance_class - 1)];
        }
        for (const auto& f : b.features)
            if (f.release_id) t.rows[pos.at(*f.release_id)].delivered_features.push_back(f.feature_id);
    }
    for (auto& row : t.rows) detail::finish_row(row, dev_time);
    return t;
}

// Adds one count column per cluster id present in `assignments`; features
// without an assignment are not counted.
inline TimeSeriesTable augment_with_clusters(TimeSeriesTable t, const std::map<std::string, int>& assignments) {
    std::set<int> ids;
    for (const auto& [feature, cluster] : assignments) {
        if (!t.known_features.count(feature)) throw UnknownFeature(feature);
        ids.insert(cluster);
    }
    t.cluster_ids.assign(ids.begin(), ids.end());
    for (auto& row : t.rows) {
        row.cluster_counts.clear();
        for (int id : ids) row.cluster_counts[id] = 0;
        for (const auto& f : row.delivered_features)
            if (auto it = assignments.find(f); it != assignments.end()) ++row.cluster_counts[it->second];
    }
    return t;
}

// Inflow-change categories 1..6 on left-open, right-closed intervals:
// (-inf,-15] (-15,-5] (-5,5] (5,15] (15,30] (30,inf).
inline int categorize_delta(double current_inflow, double previous_inflow) {
    const double x = current_inflow - previous_inflow;
    if (x > 30) return 6;
    if (x > 15) return 5;
    if (x > 5) return 4;
    if (x > -5) return 3;
    if (x > -15) return 2;
    return 1;
}

// ---------------------------------------------------------------------------
// Lagged supervised datasets

struct LagConfig {
    int lag = 4;
    bool include_current_exogenous = true;
};

enum class TargetKind { regression_inflow, category_1_6, regression_inflow_class };

struct ColumnLabel {
    std::string source;
    int offset = 0;  // 0 = current period, -k = k periods back

    std::string name() const { return source + "@" + std::to_string(offset); }
    bool operator==(const ColumnLabel&) const = default;
};

inline std::string cluster_field(int id) { return "cluster_" + std::to_string(id); }

inline std::string class_field(int k) { return "tr_inflow_class_" + std::to_string(k); }

struct SupervisedDataset {
    std::vector<ColumnLabel> columns;
    Matrix x;
    Vector y;
    TargetKind target_kind = TargetKind::regression_inflow;
    int class_k = 0;  // regression_inflow_class only
    std::vector<std::string> period_keys;

    std::size_t rows() const { return static_cast<std::size_t>(y.size()); }

    SupervisedDataset slice(std::size_t begin, std::size_t end) const {
        SupervisedDataset out;
        out.columns = columns;
        const auto b = static_cast<Eigen::Index>(begin), n = static_cast<Eigen::Index>(end - begin);
        out.x = x.middleRows(b, n);
        out.y = y.segment(b, n);
        out.target_kind = target_kind;
        out.class_k = class_k;
        out.period_keys.assign(period_keys.begin() + static_cast<std::ptrdiff_t>(begin),
                               period_keys.begin() + static_cast<std::ptrdiff_t>(end));
        return out;
    }

    // Keeps the columns for which `keep` returns true, in their original order.
    SupervisedDataset select_columns(const std::function<bool(const ColumnLabel&)>& keep) const {
        std::vector<Eigen::Index> idx;
        SupervisedDataset out;
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (keep(columns[j])) {
                idx.push_back(static_cast<Eigen::Index>(j));
                out.columns.push_back(columns[j]);
            }
        out.x.resize(x.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) out.x.col(static_cast<Eigen::Index>(j)) = x.col(idx[j]);
        out.y = y;
        out.target_kind = target_kind;
        out.class_k = class_k;
        out.period_keys = period_keys;
        return out;
    }
};

inline double field_value(const PeriodRow& row, const std::string& source) {
    if (source == "tr_inflow") return static_cast<double>(row.tr_inflow);
    if (source == "releases_delivered") return static_cast<double>(row.releases_delivered);
    if (source == "features_delivered") return static_cast<double>(row.features_delivered);
    if (source == "mean_dev_time") return row.mean_dev_time;
    if (source.rfind("tr_inflow_class_", 0) == 0) {
        int k = std::stoi(source.substr(16));
        return static_cast<double>(row.tr_inflow_by_class.at(static_cast<std::size_t>(k - 1)));
    }
    if (source.rfind("cluster_", 0) == 0) {
        int id = std::stoi(source.substr(8));
        auto it = row.cluster_counts.find(id);
        return it == row.cluster_counts.end() ? 0.0 : static_cast<double>(it->second);
    }
    throw Error("UnknownField", "unknown period field " + source);
}

// Column order: current-period exogenous fields first, then each lag block
// (-1, -2, ...) over the lagged fields. Appending cluster fields therefore
// never reorders the base columns.
inline std::vector<ColumnLabel> lagged_columns(const TimeSeriesTable& t, const LagConfig& cfg, TargetKind kind,
                                               int class_k = 0) {
    std::vector<std::string> exogenous{"releases_delivered", "features_delivered", "mean_dev_time"};
    for (int id : t.cluster_ids) exogenous.push_back(cluster_field(id));
    std::vector<std::string> lagged{"tr_inflow"};
    if (kind == TargetKind::regression_inflow_class) lagged.push_back(class_field(class_k));
    lagged.insert(lagged.end(), exogenous.begin(), exogenous.end());

    std::vector<ColumnLabel> cols;
    if (cfg.include_current_exogenous)
        for (const auto& f : exogenous) cols.push_back({f, 0});
    for (int k = 1; k <= cfg.lag; ++k)
        for (const auto& f : lagged) cols.push_back({f, -k});
    return cols;
}

inline double target_value(const TimeSeriesTable& t, std::size_t i, TargetKind kind, int class_k) {
    const auto& row = t.rows[i];
    switch (kind) {
        case TargetKind::regression_inflow:
            return static_cast<double>(row.tr_inflow);
        case TargetKind::category_1_6:
            return categorize_delta(static_cast<double>(row.tr_inflow), static_cast<double>(t.rows[i - 1].tr_inflow));
        case TargetKind::regression_inflow_class:
            return static_cast<double>(row.tr_inflow_by_class.at(static_cast<std::size_t>(class_k - 1)));
    }
    return 0.0;
}

inline SupervisedDataset build_lagged(const TimeSeriesTable& t, const LagConfig& cfg, TargetKind kind,
                                      int class_k = 0) {
    if (cfg.lag < 1) throw ConfigError("lag must be >= 1");
    if (kind == TargetKind::regression_inflow_class && (class_k < 1 || class_k > 5))
        throw ConfigError("importance class must be in 1..5");
    const auto lag = static_cast<std::size_t>(cfg.lag);
    if (t.rows.size() <= lag) throw TooFewRows(lag + 1, t.rows.size());

    SupervisedDataset d;
    d.columns = lagged_columns(t, cfg, kind, class_k);
    d.target_kind = kind;
    d.class_k = kind == TargetKind::regression_inflow_class ? class_k : 0;
    const std::size_t n = t.rows.size() - lag;
    d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.columns.size()));
    d.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = r + lag;
        for (std::size_t j = 0; j < d.columns.size(); ++j) {
            const auto& c = d.columns[j];
            const std::size_t src = i - static_cast<std::size_t>(-c.offset);
            d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = field_value(t.rows[src], c.source);
        }
        d.y(static_cast<Eigen::Index>(r)) = target_value(t, i, kind, class_k);
        d.period_keys.push_back(t.rows[i].period_key);
    }
    return d;
}

inline Vector per_class_target(const TimeSeriesTable& t, int class_k, int lag = 4) {
    if (class_k < 1 || class_k > 5) throw ConfigError("importance class must be in 1..5");
    const auto l = static_cast<std::size_t>(std::max(lag, 0));
    if (t.rows.size() <= l) return Vector(0);
    Vector v(static_cast<Eigen::Index>(t.rows.size() - l));
    for (std::size_t i = l; i < t.rows.size(); ++i)
        v(static_cast<Eigen::Index>(i - l)) =
            static_cast<double>(t.rows[i].tr_inflow_by_class[static_cast<std::size_t>(class_k - 1)]);
    return v;
}

struct Split {
    SupervisedDataset train;
    SupervisedDataset test;
};

// The last ceil(rows * test_fraction) rows form the test set.
inline Split chronological_split(const SupervisedDataset& d, double test_fraction = 0.2) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must be in (0, 1)");
    const std::size_t n = d.rows();
    const auto test_rows = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction - 1e-12));
    if (n < 2 || test_rows == 0 || test_rows >= n) throw TooFewRows(2, n);
    return {d.slice(0, n - test_rows), d.slice(n - test_rows, n)};
}

inline csv::Table to_csv(const SupervisedDataset& d) {
    csv::Table t;
    t.header.push_back("period");
    for (const auto& c : d.columns) t.header.push_back(c.name());
    t.header.push_back("y");
    for (std::size_t r = 0; r < d.rows(); ++r) {
        csv::Record rec{d.period_keys.at(r)};
        for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
            std::ostringstream os;
            os.precision(17);
            os << d.x(static_cast<Eigen::Index>(r), j);
            rec.push_back(os.str());
        }
        std::ostringstream os;
        os.precision(17);
        os << d.y(static_cast<Eigen::Index>(r));
        rec.push_back(os.str());
        t.rows.push_back(std::move(rec));
    }
    return t;
}

}  // namespace defectflow::dataset
