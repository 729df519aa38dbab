#pragma once

#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "defectflow/core.hpp"
#include "defectflow/csv.hpp"
#include "defectflow/date.hpp"

namespace defectflow::corpus {

inline constexpr const char* kSingleGroup = "Single Group";
inline constexpr int kEarlyPostDays = 122;

struct CommitRecord {
    std::string commit_id;
    std::string feature_id;
    Date date;
    std::string system;
    std::string subsystem;
    long files_changed = 0;
    long loc_added = 0;
    long loc_removed = 0;
    long loc_modified = 0;

    long loc_churn() const { return loc_added + loc_removed + loc_modified; }
    bool operator==(const CommitRecord&) const = default;
};

struct TroubleReport {
    std::string tr_id;
    Date date_reported;
    std::string release_id;
    int importance_class = 3;
    bool operator==(const TroubleReport&) const = default;
};

struct FeatureRecord {
    std::string feature_id;
    Date completion_date;
    long development_time_days = 0;
    std::optional<std::string> release_id;  // set by linking
    bool operator==(const FeatureRecord&) const = default;
};

struct Release {
    std::string release_id;
    Date release_date;
    bool operator==(const Release&) const = default;
};

struct CorpusBundle {
    std::vector<CommitRecord> commits;
    std::vector<TroubleReport> trouble_reports;
    std::vector<FeatureRecord> features;
    std::vector<Release> releases;

    // Diagnostics, recomputed by validate() and link_features_to_releases().
    std::vector<std::string> orphan_feature_ids;      // commit feature ids with no feature record
    std::vector<std::string> unreleased_feature_ids;  // later than every release
    bool linked = false;

    bool operator==(const CorpusBundle&) const = default;
};

class DuplicateKey : public Error {
public:
    DuplicateKey(std::string kind, std::string id)
        : Error("DuplicateKey", "duplicate " + kind + " key: " + id), key_kind(std::move(kind)), id(std::move(id)) {}
    std::string key_kind;
    std::string id;
};

class DanglingReference : public Error {
public:
    DanglingReference(std::string kind, std::string id, std::string referrer = {})
        : Error("DanglingReference", "dangling reference from " + kind + (referrer.empty() ? "" : " " + referrer) +
                                         ": " + id),
          ref_kind(std::move(kind)), id(std::move(id)), referrer(std::move(referrer)) {}
    std::string ref_kind;
    std::string id;
    std::string referrer;  // the record holding the bad reference, when known
};

class NoReports : public Error {
public:
    explicit NoReports(const std::string& release_id)
        : Error("NoReports", "no trouble reports attributed to release " + release_id), release_id(release_id) {}
    std::string release_id;
};

class UnknownRelease : public Error {
public:
    explicit UnknownRelease(const std::string& release_id)
        : Error("UnknownRelease", "unknown release " + release_id), release_id(release_id) {}
    std::string release_id;
};

// ---------------------------------------------------------------------------
// Flat-file schemas

inline const csv::Record kCommitHeader{"commit_id", "feature_id", "date", "system", "subsystem",
                                       "files_changed", "loc_added", "loc_removed", "loc_modified"};
inline const csv::Record kTroubleReportHeader{"tr_id", "date_reported", "release_id", "importance_class"};
inline const csv::Record kFeatureHeader{"feature_id", "completion_date", "development_time_days"};
inline const csv::Record kReleaseHeader{"release_id", "release_date"};
inline const csv::Record kFeatureIdMapHeader{"feature_data_id", "commit_data_id"};

struct CorpusPaths {
    std::string commits;
    std::string trouble_reports;
    std::string features;
    std::string releases;
    std::optional<std::string> feature_id_map;

    // Standard file names inside a corpus directory; the id map is picked up
    // only when present.
    static CorpusPaths in_directory(const std::filesystem::path& dir) {
        CorpusPaths p{(dir / "commits.csv").string(), (dir / "trouble_reports.csv").string(),
                      (dir / "features.csv").string(), (dir / "releases.csv").string(), std::nullopt};
        if (std::filesystem::exists(dir / "feature_id_map.csv"))
            p.feature_id_map = (dir / "feature_id_map.csv").string();
        return p;
    }
};

namespace detail {

inline std::string require_nonempty(const std::string& s, std::size_t row, std::size_t col) {
    if (s.empty()) throw csv::ParseError(row, col, "empty value");
    return s;
}

inline Date parse_date_field(const std::string& s, std::size_t row, std::size_t col) {
    auto d = parse_date(s);
    if (!d) throw csv::ParseError(row, col, "invalid date '" + s + "' (expected YYYY-MM-DD)");
    return *d;
}

inline long parse_count(const std::string& s, std::size_t row, std::size_t col) {
    if (s.empty()) throw csv::ParseError(row, col, "empty count");
    long v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') throw csv::ParseError(row, col, "expected nonnegative integer, got '" + s + "'");
        if (v > (std::numeric_limits<long>::max() - (c - '0')) / 10)
            throw csv::ParseError(row, col, "count out of range: '" + s + "'");
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace detail

// Checks keys and references, and recomputes the orphan list. Throws on
// duplicate keys or trouble reports pointing at unknown releases.
inline CorpusBundle validate(CorpusBundle bundle) {
    auto check_unique = [](const auto& items, auto key, const char* kind) {
        std::unordered_set<std::string> seen;
        for (const auto& item : items)
            if (!seen.insert(key(item)).second) throw DuplicateKey(kind, key(item));
        return seen;
    };
    check_unique(bundle.commits, [](const CommitRecord& c) { return c.commit_id; }, "commit");
    check_unique(bundle.trouble_reports, [](const TroubleReport& t) { return t.tr_id; }, "trouble_report");
    auto features = check_unique(bundle.features, [](const FeatureRecord& f) { return f.feature_id; }, "feature");
    auto releases = check_unique(bundle.releases, [](const Release& r) { return r.release_id; }, "release");

    for (const auto& c : bundle.commits) {
        if (c.feature_id.empty()) throw Error("InvalidRecord", "commit " + c.commit_id + " has empty feature_id");
        if (c.files_changed < 0 || c.loc_added < 0 || c.loc_removed < 0 || c.loc_modified < 0)
            throw Error("InvalidRecord", "commit " + c.commit_id + " has a negative count");
    }
    for (const auto& t : bundle.trouble_reports) {
        if (t.importance_class < 1 || t.importance_class > 5)
            throw Error("InvalidRecord", "trouble report " + t.tr_id + " has importance class outside 1..5");
        if (!releases.count(t.release_id)) throw DanglingReference("trouble_report", t.release_id, t.tr_id);
    }
    for (const auto& f : bundle.features) {
        if (f.development_time_days < 0)
            throw Error("InvalidRecord", "feature " + f.feature_id + " has negative development time");
        if (f.release_id && !releases.count(*f.release_id)) throw DanglingReference("feature", *f.release_id, f.feature_id);
    }

    std::set<std::string> orphans;
    for (const auto& c : bundle.commits)
        if (!features.count(c.feature_id)) orphans.insert(c.feature_id);
    bundle.orphan_feature_ids.assign(orphans.begin(), orphans.end());
    return bundle;
}

inline CorpusBundle load_corpus(const CorpusPaths& paths) {
    CorpusBundle b;

    std::unordered_map<std::string, std::string> id_map;  // commit-data id -> feature-data id
    if (paths.feature_id_map) {
        auto t = csv::read_table(*paths.feature_id_map, kFeatureIdMapHeader);
        std::unordered_set<std::string> feature_side;
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            auto fid = detail::require_nonempty(r[0], i + 2, 1);
            auto cid = detail::require_nonempty(r[1], i + 2, 2);
            if (!feature_side.insert(fid).second) throw DuplicateKey("feature_id_map", fid);
            if (!id_map.emplace(cid, fid).second) throw DuplicateKey("feature_id_map", cid);
        }
    }

    {
        auto t = csv::read_table(paths.commits, kCommitHeader);
        b.commits.reserve(t.rows.size());
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            const std::size_t row = i + 2;
            CommitRecord c;
            c.commit_id = detail::require_nonempty(r[0], row, 1);
            c.feature_id = detail::require_nonempty(r[1], row, 2);
            if (auto it = id_map.find(c.feature_id); it != id_map.end()) c.feature_id = it->second;
            c.date = detail::parse_date_field(r[2], row, 3);
            c.system = detail::require_nonempty(r[3], row, 4);
            c.subsystem = detail::require_nonempty(r[4], row, 5);
            c.files_changed = detail::parse_count(r[5], row, 6);
            c.loc_added = detail::parse_count(r[6], row, 7);
            c.loc_removed = detail::parse_count(r[7], row, 8);
            c.loc_modified = detail::parse_count(r[8], row, 9);
            b.commits.push_back(std::move(c));
        }
    }
    {
        auto t = csv::read_table(paths.trouble_reports, kTroubleReportHeader);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            const std::size_t row = i + 2;
            TroubleReport tr;
            tr.tr_id = detail::require_nonempty(r[0], row, 1);
            tr.date_reported = detail::parse_date_field(r[1], row, 2);
            tr.release_id = detail::require_nonempty(r[2], row, 3);
            long cls = detail::parse_count(r[3], row, 4);
            if (cls < 1 || cls > 5) throw csv::ParseError(row, 4, "importance_class must be in 1..5");
            tr.importance_class = static_cast<int>(cls);
            b.trouble_reports.push_back(std::move(tr));
        }
    }
    {
        auto t = csv::read_table(paths.features, kFeatureHeader);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            const std::size_t row = i + 2;
            FeatureRecord f;
            f.feature_id = detail::require_nonempty(r[0], row, 1);
            f.completion_date = detail::parse_date_field(r[1], row, 2);
            f.development_time_days = detail::parse_count(r[2], row, 3);
            b.features.push_back(std::move(f));
        }
    }
    {
        auto t = csv::read_table(paths.releases, kReleaseHeader);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            const std::size_t row = i + 2;
            b.releases.push_back({detail::require_nonempty(r[0], row, 1), detail::parse_date_field(r[1], row, 2)});
        }
    }
    return validate(std::move(b));
}

inline CorpusBundle load_corpus(const std::filesystem::path& dir) {
    return load_corpus(CorpusPaths::in_directory(dir));
}

// Writes the four subset files. Derived fields (release links) are not
// persisted; loading the result yields the unlinked bundle.
inline void save_corpus(const CorpusBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    csv::Table commits{kCommitHeader, {}};
    for (const auto& c : b.commits)
        commits.rows.push_back({c.commit_id, c.feature_id, format_date(c.date), c.system, c.subsystem,
                                std::to_string(c.files_changed), std::to_string(c.loc_added),
                                std::to_string(c.loc_removed), std::to_string(c.loc_modified)});
    csv::write_table((dir / "commits.csv").string(), commits);

    csv::Table trs{kTroubleReportHeader, {}};
    for (const auto& t : b.trouble_reports)
        trs.rows.push_back({t.tr_id, format_date(t.date_reported), t.release_id, std::to_string(t.importance_class)});
    csv::write_table((dir / "trouble_reports.csv").string(), trs);

    csv::Table features{kFeatureHeader, {}};
    for (const auto& f : b.features)
        features.rows.push_back({f.feature_id, format_date(f.completion_date), std::to_string(f.development_time_days)});
    csv::write_table((dir / "features.csv").string(), features);

    csv::Table releases{kReleaseHeader, {}};
    for (const auto& r : b.releases) releases.rows.push_back({r.release_id, format_date(r.release_date)});
    csv::write_table((dir / "releases.csv").string(), releases);
}

// Releases ordered by date, ties broken by id.
inline std::vector<Release> sorted_releases(const CorpusBundle& b) {
    auto out = b.releases;
    std::sort(out.begin(), out.end(), [](const Release& x, const Release& y) {
        return std::tie(x.release_date, x.release_id) < std::tie(y.release_date, y.release_id);
    });
    return out;
}

inline std::unordered_map<std::string, Date> latest_commit_dates(const CorpusBundle& b) {
    std::unordered_map<std::string, Date> last;
    for (const auto& c : b.commits) {
        auto [it, inserted] = last.emplace(c.feature_id, c.date);
        if (!inserted && c.date > it->second) it->second = c.date;
    }
    return last;
}

// Each feature goes to the earliest release dated on or after its latest
// commit (completion date when it has no commits).
inline CorpusBundle link_features_to_releases(CorpusBundle b) {
    if (b.releases.empty()) throw Error("NoReleases", "cannot link features: release list is empty");
    const auto releases = sorted_releases(b);
    const auto last = latest_commit_dates(b);
    b.unreleased_feature_ids.clear();
    for (auto& f : b.features) {
        auto it = last.find(f.feature_id);
        Date anchor = it != last.end() ? it->second : f.completion_date;
        auto rel = std::lower_bound(releases.begin(), releases.end(), anchor,
                                    [](const Release& r, Date d) { return r.release_date < d; });
        if (rel == releases.end()) {
            f.release_id.reset();
            b.unreleased_feature_ids.push_back(f.feature_id);
        } else {
            f.release_id = rel->release_id;
        }
    }
    b.linked = true;
    return b;
}

inline std::map<std::string, std::size_t> subsystem_counts(const CorpusBundle& b) {
    std::map<std::string, std::size_t> counts;
    for (const auto& c : b.commits) ++counts[c.subsystem];
    return counts;
}

// Renames every subsystem with fewer than `threshold` commit rows to
// "Single Group".
inline CorpusBundle consolidate_rare_subsystems(CorpusBundle b, std::size_t threshold = 13) {
    const auto counts = subsystem_counts(b);
    for (auto& c : b.commits)
        if (counts.at(c.subsystem) < threshold) c.subsystem = kSingleGroup;
    return b;
}

// ---------------------------------------------------------------------------
// Footprints

enum class Level { system, subsystem };
enum class Measure { files, loc };

inline const char* to_string(Level l) { return l == Level::system ? "system" : "subsystem"; }
inline const char* to_string(Measure m) { return m == Measure::files ? "files" : "loc"; }

struct FeatureFootprint {
    std::string feature_id;
    Level level = Level::system;
    Measure measure = Measure::files;
    std::map<std::string, double> vector;  // unit -> magnitude, positive entries only
};

struct FootprintSet {
    Level level = Level::system;
    Measure measure = Measure::files;
    std::vector<std::string> units;  // sorted vocabulary, the matrix column order
    std::vector<FeatureFootprint> footprints;
    std::vector<std::string> skipped;  // features whose commits carry zero magnitude

    Matrix matrix() const {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(footprints.size()), static_cast<Eigen::Index>(units.size()));
        std::unordered_map<std::string, Eigen::Index> col;
        for (std::size_t j = 0; j < units.size(); ++j) col[units[j]] = static_cast<Eigen::Index>(j);
        for (std::size_t i = 0; i < footprints.size(); ++i)
            for (const auto& [unit, v] : footprints[i].vector) m(static_cast<Eigen::Index>(i), col.at(unit)) = v;
        return m;
    }
    std::vector<std::string> feature_ids() const {
        std::vector<std::string> ids;
        ids.reserve(footprints.size());
        for (const auto& f : footprints) ids.push_back(f.feature_id);
        return ids;
    }
};

// One footprint per known feature with commits, in feature-list order. On a
// linked bundle only released features are included. Expects consolidation
// to have been applied already for the subsystem level.
inline FootprintSet build_footprints(const CorpusBundle& b, Level level, Measure measure) {
    FootprintSet out;
    out.level = level;
    out.measure = measure;

    std::unordered_set<std::string> eligible;
    for (const auto& f : b.features)
        if (!b.linked || f.release_id) eligible.insert(f.feature_id);

    std::unordered_map<std::string, std::map<std::string, double>> acc;
    std::set<std::string> units;
    for (const auto& c : b.commits) {
        if (!eligible.count(c.feature_id)) continue;
        const std::string& unit = level == Level::system ? c.system : c.subsystem;
        const double amount = measure == Measure::files ? static_cast<double>(c.files_changed)
                                                        : static_cast<double>(c.loc_churn());
        units.insert(unit);
        auto& v = acc[c.feature_id];
        if (amount > 0) v[unit] += amount;
        else v.try_emplace(unit, 0.0);
    }
    out.units.assign(units.begin(), units.end());

    for (const auto& f : b.features) {
        auto it = acc.find(f.feature_id);
        if (it == acc.end()) continue;
        FeatureFootprint fp{f.feature_id, level, measure, {}};
        for (const auto& [unit, v] : it->second)
            if (v > 0) fp.vector.emplace(unit, v);
        if (fp.vector.empty()) out.skipped.push_back(f.feature_id);
        else out.footprints.push_back(std::move(fp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cumulative inflow

struct InflowCurve {
    std::string release_id;
    Date release_date;
    // Cumulative percentage of the release's reports at the end of each day
    // on which at least one report arrived.
    std::vector<std::pair<Date, double>> points;
    std::size_t total = 0;
    std::size_t pre_release = 0;
    std::size_t post_release = 0;
    std::size_t early_post = 0;
    double pre_release_fraction = 0.0;
    std::optional<double> early_post_fraction;  // undefined without post-release reports

    // Step-function value at an arbitrary date.
    double percent_at(Date d) const {
        auto it = std::upper_bound(points.begin(), points.end(), d,
                                   [](Date x, const std::pair<Date, double>& p) { return x < p.first; });
        return it == points.begin() ? 0.0 : std::prev(it)->second;
    }
};

inline InflowCurve cumulative_inflow_curve(const CorpusBundle& b, const std::string& release_id) {
    auto rel = std::find_if(b.releases.begin(), b.releases.end(),
                            [&](const Release& r) { return r.release_id == release_id; });
    if (rel == b.releases.end()) throw UnknownRelease(release_id);

    std::vector<Date> dates;
    for (const auto& t : b.trouble_reports)
        if (t.release_id == release_id) dates.push_back(t.date_reported);
    if (dates.empty()) throw NoReports(release_id);
    std::sort(dates.begin(), dates.end());

    InflowCurve curve;
    curve.release_id = release_id;
    curve.release_date = rel->release_date;
    curve.total = dates.size();
    for (std::size_t i = 0; i < dates.size(); ++i) {
        const Date d = dates[i];
        if (d < rel->release_date) {
            ++curve.pre_release;
        } else {
            ++curve.post_release;
            if (days_between(rel->release_date, d) <= kEarlyPostDays) ++curve.early_post;
        }
        if (i + 1 == dates.size() || dates[i + 1] != d) {
            // The last point is pinned to exactly 100.
            double pct = i + 1 == dates.size() ? 100.0 : 100.0 * static_cast<double>(i + 1) / static_cast<double>(dates.size());
            curve.points.emplace_back(d, pct);
        }
    }
    curve.pre_release_fraction = static_cast<double>(curve.pre_release) / static_cast<double>(curve.total);
    if (curve.post_release > 0)
        curve.early_post_fraction = static_cast<double>(curve.early_post) / static_cast<double>(curve.post_release);
    return curve;
}

struct PooledInflowStats {
    std::size_t releases = 0;
    std::size_t total = 0;
    std::size_t pre_release = 0;
    std::size_t post_release = 0;
    std::size_t early_post = 0;
    double pre_release_fraction = 0.0;
    double early_post_fraction = 0.0;
};

// Report-weighted pooling of the per-release statistics over every release
// that has reports.
inline PooledInflowStats pooled_inflow_stats(const CorpusBundle& b) {
    std::set<std::string> with_reports;
    for (const auto& t : b.trouble_reports) with_reports.insert(t.release_id);
    PooledInflowStats s;
    for (const auto& r : sorted_releases(b)) {
        if (!with_reports.count(r.release_id)) continue;
        auto c = cumulative_inflow_curve(b, r.release_id);
        ++s.releases;
        s.total += c.total;
        s.pre_release += c.pre_release;
        s.post_release += c.post_release;
        s.early_post += c.early_post;
    }
    if (s.total) s.pre_release_fraction = static_cast<double>(s.pre_release) / static_cast<double>(s.total);
    if (s.post_release) s.early_post_fraction = static_cast<double>(s.early_post) / static_cast<double>(s.post_release);
    return s;
}

}  // namespace defectflow::corpus
