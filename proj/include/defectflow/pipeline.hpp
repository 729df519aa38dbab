#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "defectflow/cluster.hpp"
#include "defectflow/core.hpp"
#include "defectflow/corpus.hpp"
#include "defectflow/csv.hpp"
#include "defectflow/dataset.hpp"
#include "defectflow/evaluate.hpp"
#include "defectflow/learn.hpp"
#include "defectflow/preprocess.hpp"
#include "defectflow/svg.hpp"
#include "defectflow/synth.hpp"

namespace defectflow::pipeline {

using nlohmann::json;

struct RunConfig {
    std::string corpus_dir;
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    dataset::Granularity granularity = dataset::Granularity::month;
    dataset::LagConfig lag;
    double split_fraction = 0.2;
    unsigned threads = 1;
    std::size_t subsystem_threshold = 13;
    std::vector<preprocess::ScalerSpec> scalers{{preprocess::ScalerKind::minmax},
                                                {preprocess::ScalerKind::robust_v1},
                                                {preprocess::ScalerKind::robust_v2},
                                                {preprocess::ScalerKind::quantile_uniform},
                                                {preprocess::ScalerKind::quantile_normal}};
    cluster::SelectionPolicy policy;
    cluster::GridRanges dbscan_grid = cluster::GridRanges::defaults();
    std::vector<int> kmeans_ks{2, 3, 4, 5, 6, 7, 8, 9, 10};
    cluster::KMeansConfig kmeans;
    learn::LassoConfig lasso;
    learn::ForestConfig forest;
    learn::SvcConfig svc;
    std::vector<int> importance_classes{2, 4};
    std::size_t top_features = 5;
    std::size_t relevance_top = 8;
    synth::SynthConfig synth = synth::SynthConfig::defaults();

    // Learner settings with seeds derived from the run seed.
    evaluate::ExperimentConfig experiment() const {
        evaluate::ExperimentConfig e;
        e.lasso = lasso;
        e.forest = forest;
        e.forest.seed = derive_seed(seed, "forest");
        e.svc = svc;
        e.svc.seed = derive_seed(seed, "svc");
        e.test_fraction = split_fraction;
        e.threads = threads;
        return e;
    }
};

// ---------------------------------------------------------------------------
// Config JSON

namespace detail {

template <typename T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
            throw ConfigError("unknown config key '" + where + (where.empty() ? "" : ".") + it.key() + "'");
}

template <typename T>
void set_if(const json& j, const char* key, T& target, const std::string& where = "") {
    if (j.contains(key)) target = get_as<T>(j.at(key), where.empty() ? key : where + "." + key);
}

inline dataset::Granularity granularity_from_string(const std::string& s) {
    if (s == "month") return dataset::Granularity::month;
    if (s == "release") return dataset::Granularity::release;
    throw ConfigError("granularity must be 'month' or 'release', got '" + s + "'");
}

inline void apply_synth(const json& j, synth::SynthConfig& s) {
    check_keys(j, {"seed", "n_features", "n_subsystems", "n_systems", "months", "cadence_switch_month", "start_year",
                   "pre_release_detect_prob", "early_post_prob", "inflow_ar_coefficient", "inflow_ar_sigma",
                   "importance_class_weights", "monthly_cadence_fault_scale", "mix_concentration",
                   "pre_release_mean_days", "early_post_mean_days", "late_post_mean_days", "max_pre_release_days",
                   "max_late_post_days", "files_spread", "cluster_archetypes"},
               "synth");
    set_if(j, "seed", s.seed, "synth");
    set_if(j, "n_features", s.n_features, "synth");
    set_if(j, "n_subsystems", s.n_subsystems, "synth");
    set_if(j, "n_systems", s.n_systems, "synth");
    set_if(j, "months", s.months, "synth");
    set_if(j, "cadence_switch_month", s.cadence_switch_month, "synth");
    set_if(j, "start_year", s.start_year, "synth");
    set_if(j, "pre_release_detect_prob", s.pre_release_detect_prob, "synth");
    set_if(j, "early_post_prob", s.early_post_prob, "synth");
    set_if(j, "inflow_ar_coefficient", s.inflow_ar_coefficient, "synth");
    set_if(j, "inflow_ar_sigma", s.inflow_ar_sigma, "synth");
    set_if(j, "importance_class_weights", s.importance_class_weights, "synth");
    set_if(j, "monthly_cadence_fault_scale", s.monthly_cadence_fault_scale, "synth");
    set_if(j, "mix_concentration", s.mix_concentration, "synth");
    set_if(j, "pre_release_mean_days", s.pre_release_mean_days, "synth");
    set_if(j, "early_post_mean_days", s.early_post_mean_days, "synth");
    set_if(j, "late_post_mean_days", s.late_post_mean_days, "synth");
    set_if(j, "max_pre_release_days", s.max_pre_release_days, "synth");
    set_if(j, "max_late_post_days", s.max_late_post_days, "synth");
    set_if(j, "files_spread", s.files_spread, "synth");
    if (j.contains("cluster_archetypes")) {
        s.cluster_archetypes.clear();
        for (const auto& a : j.at("cluster_archetypes")) {
            check_keys(a, {"name", "footprint", "fault_rate", "dev_time_mean", "dev_time_sd", "weight", "diffuse"},
                       "synth.cluster_archetypes");
            synth::Archetype arch;
            set_if(a, "name", arch.name);
            set_if(a, "fault_rate", arch.fault_rate);
            set_if(a, "dev_time_mean", arch.dev_time.mean);
            set_if(a, "dev_time_sd", arch.dev_time.sd);
            set_if(a, "weight", arch.weight);
            set_if(a, "diffuse", arch.diffuse);
            if (a.contains("footprint"))
                for (const auto& [k, v] : a.at("footprint").items()) {
                    int sub = 0;
                    try {
                        sub = std::stoi(k);
                    } catch (const std::exception&) {
                        throw ConfigError("footprint keys must be subsystem indices, got '" + k + "'");
                    }
                    arch.footprint.emplace_back(sub, get_as<double>(v, "footprint"));
                }
            s.cluster_archetypes.push_back(std::move(arch));
        }
    }
}

}  // namespace detail

// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
inline RunConfig apply_json(RunConfig c, const json& j) {
    using detail::set_if;
    detail::check_keys(j, {"corpus_dir", "out_dir", "seed", "granularity", "lag", "include_current_exogenous",
                           "split_fraction", "threads", "subsystem_threshold", "scalers", "quantile_landmarks",
                           "policy", "dbscan_grid", "kmeans", "lasso", "forest", "svc", "importance_classes",
                           "top_features", "relevance_top", "synth"},
                       "");
    set_if(j, "corpus_dir", c.corpus_dir);
    set_if(j, "out_dir", c.out_dir);
    set_if(j, "seed", c.seed);
    if (j.contains("granularity")) c.granularity = detail::granularity_from_string(detail::get_as<std::string>(j["granularity"], "granularity"));
    set_if(j, "lag", c.lag.lag);
    set_if(j, "include_current_exogenous", c.lag.include_current_exogenous);
    set_if(j, "split_fraction", c.split_fraction);
    set_if(j, "threads", c.threads);
    set_if(j, "subsystem_threshold", c.subsystem_threshold);
    if (j.contains("scalers")) {
        c.scalers.clear();
        for (const auto& s : j.at("scalers")) c.scalers.push_back({preprocess::scaler_kind_from_string(detail::get_as<std::string>(s, "scalers"))});
    }
    if (j.contains("quantile_landmarks"))
        for (auto& s : c.scalers) s.quantile_landmarks = detail::get_as<int>(j["quantile_landmarks"], "quantile_landmarks");
    if (j.contains("policy")) {
        const auto& p = j["policy"];
        detail::check_keys(p, {"max_clusters", "min_clusters", "max_largest_fraction"}, "policy");
        set_if(p, "max_clusters", c.policy.max_clusters, "policy");
        set_if(p, "min_clusters", c.policy.min_clusters, "policy");
        set_if(p, "max_largest_fraction", c.policy.max_largest_fraction, "policy");
    }
    if (j.contains("dbscan_grid")) {
        const auto& g = j["dbscan_grid"];
        detail::check_keys(g, {"min_pts", "eps"}, "dbscan_grid");
        set_if(g, "min_pts", c.dbscan_grid.min_pts, "dbscan_grid");
        set_if(g, "eps", c.dbscan_grid.eps, "dbscan_grid");
    }
    if (j.contains("kmeans")) {
        const auto& k = j["kmeans"];
        detail::check_keys(k, {"ks", "n_init", "max_iter", "tol"}, "kmeans");
        set_if(k, "ks", c.kmeans_ks, "kmeans");
        set_if(k, "n_init", c.kmeans.n_init, "kmeans");
        set_if(k, "max_iter", c.kmeans.max_iter, "kmeans");
        set_if(k, "tol", c.kmeans.tol, "kmeans");
    }
    if (j.contains("lasso")) {
        const auto& l = j["lasso"];
        detail::check_keys(l, {"gamma", "max_sweeps", "tol"}, "lasso");
        set_if(l, "gamma", c.lasso.gamma, "lasso");
        set_if(l, "max_sweeps", c.lasso.max_sweeps, "lasso");
        set_if(l, "tol", c.lasso.tol, "lasso");
    }
    if (j.contains("forest")) {
        const auto& f = j["forest"];
        detail::check_keys(f, {"n_trees", "min_samples_split", "max_depth", "bootstrap"}, "forest");
        set_if(f, "n_trees", c.forest.n_trees, "forest");
        set_if(f, "min_samples_split", c.forest.min_samples_split, "forest");
        set_if(f, "max_depth", c.forest.max_depth, "forest");
        set_if(f, "bootstrap", c.forest.bootstrap, "forest");
    }
    if (j.contains("svc")) {
        const auto& s = j["svc"];
        detail::check_keys(s, {"c", "tol", "max_passes"}, "svc");
        set_if(s, "c", c.svc.c, "svc");
        set_if(s, "tol", c.svc.tol, "svc");
        set_if(s, "max_passes", c.svc.max_passes, "svc");
    }
    set_if(j, "importance_classes", c.importance_classes);
    set_if(j, "top_features", c.top_features);
    set_if(j, "relevance_top", c.relevance_top);
    if (j.contains("synth")) detail::apply_synth(j["synth"], c.synth);
    return c;
}

inline void validate(const RunConfig& c) {
    if (c.lag.lag < 1) throw ConfigError("lag must be >= 1");
    if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0)) throw ConfigError("split_fraction must be in (0, 1)");
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
    if (c.scalers.empty()) throw ConfigError("at least one scaler is required");
    for (const auto& s : c.scalers)
        if (preprocess::is_quantile(s.kind) && s.quantile_landmarks < 2) throw ConfigError("quantile_landmarks must be >= 2");
    if (c.policy.min_clusters > c.policy.max_clusters) throw ConfigError("policy.min_clusters > policy.max_clusters");
    for (int m : c.dbscan_grid.min_pts)
        if (m < 1) throw ConfigError("dbscan_grid.min_pts entries must be >= 1");
    for (double e : c.dbscan_grid.eps)
        if (!(e > 0.0)) throw ConfigError("dbscan_grid.eps entries must be > 0");
    for (int k : c.kmeans_ks)
        if (k < 1) throw ConfigError("kmeans.ks entries must be >= 1");
    if (c.kmeans.n_init < 1 || c.kmeans.max_iter < 1) throw ConfigError("kmeans n_init and max_iter must be >= 1");
    if (c.lasso.gamma < 0.0) throw ConfigError("lasso.gamma must be >= 0");
    if (c.forest.n_trees < 1 || c.forest.min_samples_split < 2) throw ConfigError("forest needs n_trees >= 1 and min_samples_split >= 2");
    if (!(c.svc.c > 0.0)) throw ConfigError("svc.c must be > 0");
    for (int k : c.importance_classes)
        if (k < 1 || k > 5) throw ConfigError("importance classes must be in 1..5");
}

// Settings that determine results; paths and thread count are left out so
// reports compare equal across output locations and worker counts.
inline json to_json(const RunConfig& c) {
    std::vector<std::string> scalers;
    for (const auto& s : c.scalers) scalers.push_back(preprocess::to_string(s.kind));
    return {{"seed", c.seed},
            {"granularity", dataset::to_string(c.granularity)},
            {"lag", c.lag.lag},
            {"include_current_exogenous", c.lag.include_current_exogenous},
            {"split_fraction", c.split_fraction},
            {"subsystem_threshold", c.subsystem_threshold},
            {"scalers", scalers},
            {"quantile_landmarks", c.scalers.front().quantile_landmarks},
            {"policy", {{"max_clusters", c.policy.max_clusters}, {"min_clusters", c.policy.min_clusters},
                        {"max_largest_fraction", c.policy.max_largest_fraction}}},
            {"dbscan_grid", {{"min_pts", c.dbscan_grid.min_pts}, {"eps", c.dbscan_grid.eps}}},
            {"kmeans", {{"ks", c.kmeans_ks}, {"n_init", c.kmeans.n_init}, {"max_iter", c.kmeans.max_iter}, {"tol", c.kmeans.tol}}},
            {"lasso", {{"gamma", c.lasso.gamma}, {"max_sweeps", c.lasso.max_sweeps}, {"tol", c.lasso.tol}}},
            {"forest", {{"n_trees", c.forest.n_trees}, {"min_samples_split", c.forest.min_samples_split},
                        {"max_depth", c.forest.max_depth}, {"bootstrap", c.forest.bootstrap}}},
            {"svc", {{"c", c.svc.c}, {"tol", c.svc.tol}, {"max_passes", c.svc.max_passes}}},
            {"importance_classes", c.importance_classes}};
}

// ---------------------------------------------------------------------------
// Stages

// Links features to releases and folds rare subsystems into "Single Group".
inline corpus::CorpusBundle prepare(const corpus::CorpusBundle& raw, const RunConfig& cfg) {
    auto b = corpus::link_features_to_releases(corpus::validate(raw));
    return corpus::consolidate_rare_subsystems(std::move(b), cfg.subsystem_threshold);
}

struct Test1Result {
    dataset::TimeSeriesTable table;
    dataset::SupervisedDataset regression;
    dataset::SupervisedDataset categorical;
    evaluate::EvalReport report;
    std::vector<evaluate::ImportanceEntry> classifier_importance;
    std::vector<evaluate::ImportanceEntry> regressor_importance;
};

namespace detail {

inline Test1Result run_supervised(dataset::TimeSeriesTable table, const RunConfig& cfg) {
    Test1Result r;
    r.table = std::move(table);
    r.regression = dataset::build_lagged(r.table, cfg.lag, dataset::TargetKind::regression_inflow);
    r.categorical = dataset::build_lagged(r.table, cfg.lag, dataset::TargetKind::category_1_6);
    r.report = evaluate::run_experiment(r.regression, &r.categorical, cfg.experiment());
    if (const auto* e = r.report.find(evaluate::Learner::forest_classifier))
        r.classifier_importance = evaluate::forest_importance_report(*e->forest, r.report.columns);
    if (const auto* e = r.report.find(evaluate::Learner::forest_regressor))
        r.regressor_importance = evaluate::forest_importance_report(*e->forest, r.report.columns);
    return r;
}

}  // namespace detail

inline Test1Result run_test1(const corpus::CorpusBundle& prepared, const RunConfig& cfg) {
    return detail::run_supervised(dataset::aggregate_periods(prepared, cfg.granularity), cfg);
}


struct ComboResult {
    corpus::Level level = corpus::Level::system;
    corpus::Measure measure = corpus::Measure::files;
    preprocess::ScalerSpec scaler;
    std::vector<std::string> feature_ids;
    std::vector<std::string> units;
    std::vector<cluster::GridEntry> grid;
    std::vector<cluster::ClusterModel> kmeans;
    std::optional<cluster::ClusterModel> best_kmeans;
    std::optional<cluster::ClusterModel> best_dbscan;
    std::vector<std::string> rejected;  // diagnostics when an algorithm has no feasible candidate

    std::string name() const {
        return std::string(corpus::to_string(level)) + "_" + corpus::to_string(measure) + "_" +
               preprocess::to_string(scaler.kind);
    }
};

struct Test2Result {
    std::vector<ComboResult> combos;
    std::size_t winner_combo = 0;
    cluster::ClusterModel winner;
    std::map<std::string, int> assignments;  // feature id -> cluster label
};

inline constexpr std::pair<corpus::Level, corpus::Measure> kCombos[] = {
    {corpus::Level::system, corpus::Measure::files},
    {corpus::Level::system, corpus::Measure::loc},
    {corpus::Level::subsystem, corpus::Measure::files},
    {corpus::Level::subsystem, corpus::Measure::loc}};

namespace detail {

inline std::optional<cluster::ClusterModel> pick(const std::vector<cluster::ClusterModel>& models,
                                                 const cluster::SelectionPolicy& policy, const std::string& tag,
                                                 std::vector<std::string>& rejected) {
    try {
        return models[cluster::select_index(models, policy)];
    } catch (const cluster::NoFeasibleCandidate& e) {
        for (const auto& r : e.reasons) rejected.push_back(tag + ": " + r);
        if (e.reasons.empty()) rejected.push_back(tag + ": no candidates");
        return std::nullopt;
    }
}

}  // namespace detail

// Footprints for every level/measure pair under every scaler, a k-means sweep
// and the DBSCAN grid per combination, then one winner across all of them.
inline Test2Result run_test2(const corpus::CorpusBundle& prepared, const RunConfig& cfg) {
    Test2Result r;
    std::vector<cluster::ClusterModel> finalists;
    std::vector<std::size_t> finalist_combo;
    std::vector<std::string> all_rejected;
    auto km = cfg.kmeans;
    km.seed = derive_seed(cfg.seed, "kmeans");
    for (const auto& [level, measure] : kCombos) {
        const auto fs = corpus::build_footprints(prepared, level, measure);
        const Matrix raw = fs.matrix();
        for (const auto& spec : cfg.scalers) {
            ComboResult c;
            c.level = level;
            c.measure = measure;
            c.scaler = spec;
            c.feature_ids = fs.feature_ids();
            c.units = fs.units;
            if (raw.rows() == 0 || raw.cols() == 0) {
                c.rejected.push_back("no footprints");
            } else {
                const Matrix pts = preprocess::fit_transform(spec, raw);
                const cluster::DistanceMatrix dm(pts);
                c.grid = cluster::grid_search_dbscan(pts, cfg.dbscan_grid, cfg.threads, &dm);
                c.kmeans = cluster::kmeans_sweep(pts, cfg.kmeans_ks, km, cfg.threads, &dm);
                std::vector<cluster::ClusterModel> db;
                db.reserve(c.grid.size());
                for (const auto& g : c.grid) db.push_back(g.model);
                c.best_kmeans = detail::pick(c.kmeans, cfg.policy, c.name() + " kmeans", c.rejected);
                c.best_dbscan = detail::pick(db, cfg.policy, c.name() + " dbscan", c.rejected);
            }
            for (const auto* m : {&c.best_kmeans, &c.best_dbscan})
                if (*m) {
                    finalists.push_back(**m);
                    finalist_combo.push_back(r.combos.size());
                }
            all_rejected.insert(all_rejected.end(), c.rejected.begin(), c.rejected.end());
            r.combos.push_back(std::move(c));
        }
    }
    if (finalists.empty()) throw cluster::NoFeasibleCandidate(all_rejected);
    const auto w = cluster::select_index(finalists, cfg.policy);
    r.winner = finalists[w];
    r.winner_combo = finalist_combo[w];
    const auto& ids = r.combos[r.winner_combo].feature_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) r.assignments[ids[i]] = r.winner.labels[i];
    return r;
}

struct ClassTarget {
    int class_k = 0;
    dataset::SupervisedDataset data;
    evaluate::EvalReport report;
    std::vector<evaluate::ImportanceEntry> correlation;
    std::vector<evaluate::ImportanceEntry> lasso;
    std::vector<evaluate::ImportanceEntry> forest;
};

struct Test3Result {
    Test1Result total;  // cluster-augmented datasets and their experiment
    std::vector<evaluate::ImportanceEntry> correlation;
    std::vector<evaluate::ImportanceEntry> lasso;
    std::vector<evaluate::ImportanceEntry> forest;
    std::vector<ClassTarget> classes;
    std::vector<evaluate::AblationResult> ablations;  // each cluster alone, then all together
};

namespace detail {

inline std::vector<evaluate::ImportanceEntry> lasso_of(const evaluate::EvalReport& r) {
    const auto* e = r.find(evaluate::Learner::lasso);
    return e && e->lasso ? evaluate::lasso_importance(*e->lasso, r.columns) : std::vector<evaluate::ImportanceEntry>{};
}

inline std::vector<evaluate::ImportanceEntry> forest_of(const evaluate::EvalReport& r) {
    const auto* e = r.find(evaluate::Learner::forest_regressor);
    return e && e->forest ? evaluate::forest_importance_report(*e->forest, r.columns)
                          : std::vector<evaluate::ImportanceEntry>{};
}

}  // namespace detail

// Test 1 with per-period cluster counts added. An empty assignment map
// yields exactly the Test 1 datasets.
inline Test3Result run_test3(const corpus::CorpusBundle& prepared, const std::map<std::string, int>& assignments,
                             const RunConfig& cfg) {
    Test3Result r;
    r.total = detail::run_supervised(
        dataset::augment_with_clusters(dataset::aggregate_periods(prepared, cfg.granularity), assignments), cfg);
    r.correlation = evaluate::correlation_importance(r.total.regression);
    r.lasso = detail::lasso_of(r.total.report);
    r.forest = detail::forest_of(r.total.report);

    auto regressors = cfg.experiment();
    regressors.learners = {evaluate::Learner::forest_regressor, evaluate::Learner::lasso};
    for (int k : cfg.importance_classes) {
        ClassTarget c;
        c.class_k = k;
        c.data = dataset::build_lagged(r.total.table, cfg.lag, dataset::TargetKind::regression_inflow_class, k);
        c.report = evaluate::run_experiment(c.data, nullptr, regressors);
        c.correlation = evaluate::correlation_importance(c.data);
        c.lasso = detail::lasso_of(c.report);
        c.forest = detail::forest_of(c.report);
        r.classes.push_back(std::move(c));
    }

    const auto& ids = r.total.table.cluster_ids;
    for (int id : ids)
        r.ablations.push_back(evaluate::ablate_clusters(r.total.regression, &r.total.categorical, {id},
                                                        cfg.experiment(), r.total.report));
    if (ids.size() > 1)
        r.ablations.push_back(evaluate::ablate_clusters(r.total.regression, &r.total.categorical, ids,
                                                        cfg.experiment(), r.total.report));
    return r;
}

// ---------------------------------------------------------------------------
// Report emission

// Files keyed by path relative to the output directory.
struct Artifacts {
    json report = json::object();
    std::map<std::string, std::string> files;

    void table(const std::string& name, const csv::Table& t) {
        std::ostringstream os;
        csv::write_record(os, t.header);
        for (const auto& r : t.rows) csv::write_record(os, r);
        files["tables/" + name] = os.str();
    }
    void chart(const std::string& name, const svg::LineChart& c) { files["charts/" + name] = svg::render(c); }

    void write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir / "tables");
        std::filesystem::create_directories(dir / "charts");
        auto put = [&](const std::filesystem::path& p, const std::string& content) {
            std::ofstream out(p, std::ios::binary);
            if (!out) throw csv::IoError("cannot write " + p.string());
            out << content;
            if (!out) throw csv::IoError("write failed for " + p.string());
        };
        for (const auto& [name, content] : files) put(dir / name, content);
        put(dir / "report.json", report.dump(2) + "\n");
    }
};

inline json corpus_summary(const corpus::CorpusBundle& raw, const corpus::CorpusBundle& prepared) {
    std::set<std::string> subs;
    for (const auto& c : prepared.commits) subs.insert(c.subsystem);
    std::set<std::string> systems;
    for (const auto& c : prepared.commits) systems.insert(c.system);
    return {{"commits", raw.commits.size()},
            {"trouble_reports", raw.trouble_reports.size()},
            {"features", raw.features.size()},
            {"releases", raw.releases.size()},
            {"orphan_features", prepared.orphan_feature_ids},
            {"unreleased_features", prepared.unreleased_feature_ids.size()},
            {"systems", systems.size()},
            {"subsystems_after_consolidation", std::vector<std::string>(subs.begin(), subs.end())}};
}

inline void emit_inflow(Artifacts& a, const corpus::CorpusBundle& prepared) {
    const auto pooled = corpus::pooled_inflow_stats(prepared);
    csv::Table t;
    t.header = {"release_id", "release_date", "reports", "pre_release", "early_post", "pre_release_fraction",
                "early_post_fraction"};
    std::optional<corpus::InflowCurve> largest;
    for (const auto& rel : corpus::sorted_releases(prepared)) {
        const auto c = corpus::cumulative_inflow_curve(prepared, rel.release_id);
        if (c.total == 0) continue;
        t.rows.push_back({c.release_id, format_date(c.release_date), std::to_string(c.total),
                          std::to_string(c.pre_release), std::to_string(c.early_post),
                          evaluate::fixed4(c.pre_release_fraction),
                          c.early_post_fraction ? evaluate::fixed4(*c.early_post_fraction) : "undefined"});
        if (!largest || c.total > largest->total) largest = c;
    }
    t.rows.push_back({"pooled", "", std::to_string(pooled.total), std::to_string(pooled.pre_release),
                      std::to_string(pooled.early_post), evaluate::fixed4(pooled.pre_release_fraction),
                      evaluate::fixed4(pooled.early_post_fraction)});
    a.table("figure4_inflow.csv", t);
    a.report["inflow"] = {{"releases_with_reports", pooled.releases},
                          {"reports", pooled.total},
                          {"pre_release_fraction", pooled.pre_release_fraction},
                          {"early_post_fraction", pooled.early_post_fraction},
                          {"early_post_window_days", corpus::kEarlyPostDays}};
    if (largest) {
        svg::LineChart ch;
        ch.title = "Cumulative trouble report inflow, release " + largest->release_id;
        ch.x_label = "days relative to release";
        ch.y_label = "cumulative % of reports";
        svg::Series s{largest->release_id, {}, {}, "#1f77b4"};
        for (const auto& [d, pct] : largest->points) {
            s.x.push_back(static_cast<double>(days_between(largest->release_date, d)));
            s.y.push_back(pct);
        }
        ch.series.push_back(std::move(s));
        ch.markers = {{0.0, "release"}, {static_cast<double>(corpus::kEarlyPostDays), "+4 months"}};
        a.chart("figure4_cumulative_inflow.svg", ch);
    }
}

namespace detail {

inline svg::LineChart actual_vs_predicted(const std::string& title, const evaluate::EvalReport& r) {
    svg::LineChart ch;
    ch.title = title;
    ch.x_label = "period index";
    ch.y_label = "scaled trouble report inflow";
    const auto* e = r.find(evaluate::Learner::forest_regressor);
    if (!e) e = r.find(evaluate::Learner::lasso);
    if (!e) return ch;
    svg::Series actual{"actual", {}, {}, "#222222"}, pred{std::string(evaluate::to_string(e->learner)), {}, {}, "#d62728"};
    for (Eigen::Index i = 0; i < e->targets.size(); ++i) {
        actual.x.push_back(static_cast<double>(i));
        actual.y.push_back(e->targets(i));
        pred.x.push_back(static_cast<double>(i));
        pred.y.push_back(e->predictions(i));
    }
    ch.series = {std::move(actual), std::move(pred)};
    ch.markers = {{static_cast<double>(r.train_rows) - 0.5, "test split"}};
    return ch;
}

inline std::string slug(const ComboResult& c) { return c.name(); }

inline std::string or_undefined(const std::optional<double>& v) { return v ? evaluate::fixed4(*v) : "undefined"; }

inline json model_summary(const cluster::ClusterModel& m) {
    std::map<std::string, std::size_t> sizes;
    for (int l : m.labels) ++sizes[std::to_string(l)];
    return {{"algorithm", cluster::to_string(m.algorithm)},
            {"description", m.description},
            {"silhouette", m.silhouette ? json(*m.silhouette) : json(nullptr)},
            {"clusters", m.cluster_count},
            {"largest_fraction", m.largest_fraction},
            {"noise_fraction", m.noise_fraction},
            {"cluster_sizes", sizes}};
}

inline std::vector<evaluate::ImportanceEntry> head(const std::vector<evaluate::ImportanceEntry>& v, std::size_t n) {
    return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size()))};
}

}  // namespace detail

inline void emit_test1(Artifacts& a, const Test1Result& t, const RunConfig& cfg) {
    a.table("table4_test1_performance.csv", evaluate::performance_table(t.report));
    a.table("table5_test1_forest_classifier_importance.csv",
            evaluate::top_features_table(t.classifier_importance, cfg.top_features));
    a.table("table6_test1_forest_regressor_importance.csv",
            evaluate::top_features_table(t.regressor_importance, cfg.top_features));
    a.table("test1_dataset.csv", dataset::to_csv(t.regression));
    a.chart("test1_actual_vs_predicted.svg", detail::actual_vs_predicted("Test 1 total inflow", t.report));
    a.report["test1"] = {
        {"dataset", {{"granularity", dataset::to_string(t.table.granularity)},
                     {"periods", t.table.rows.size()},
                     {"rows", t.regression.rows()},
                     {"columns", t.regression.columns.size()},
                     {"train_rows", t.report.train_rows},
                     {"test_rows", t.report.test_rows}}},
        {"performance", evaluate::to_json(t.report, true)},
        {"importance", {{"forest_classifier", evaluate::to_json(detail::head(t.classifier_importance, cfg.top_features))},
                        {"forest_regressor", evaluate::to_json(detail::head(t.regressor_importance, cfg.top_features))}}}};
}

inline void emit_test2(Artifacts& a, const Test2Result& t) {
    for (const auto& c : t.combos) {
        if (!c.grid.empty()) a.table("test2_dbscan_grid_" + detail::slug(c) + ".csv", cluster::grid_report(c.grid));
        csv::Table km;
        km.header = {"model", "silhouette", "clusters", "largest_fraction", "inertia", "degenerate"};
        for (const auto& m : c.kmeans)
            km.rows.push_back({m.description, detail::or_undefined(m.silhouette), std::to_string(m.cluster_count),
                               evaluate::fixed4(m.largest_fraction), evaluate::fixed4(m.inertia),
                               m.degenerate ? "true" : "false"});
        if (!c.kmeans.empty()) a.table("test2_kmeans_" + detail::slug(c) + ".csv", km);
    }

    // One table per level: algorithm x scaler rows, files and loc column groups.
    for (auto level : {corpus::Level::system, corpus::Level::subsystem}) {
        csv::Table tb;
        tb.header = {"algorithm", "scaler"};
        for (const char* m : {"files", "loc"})
            for (const char* col : {"model", "silhouette", "largest_fraction", "clusters"})
                tb.header.push_back(std::string(m) + "_" + col);
        for (auto algo : {cluster::Algorithm::kmeans, cluster::Algorithm::dbscan}) {
            std::vector<preprocess::ScalerKind> kinds;
            for (const auto& c : t.combos)
                if (c.level == level && std::find(kinds.begin(), kinds.end(), c.scaler.kind) == kinds.end())
                    kinds.push_back(c.scaler.kind);
            for (auto kind : kinds) {
                csv::Record row{cluster::to_string(algo), preprocess::to_string(kind)};
                for (auto measure : {corpus::Measure::files, corpus::Measure::loc}) {
                    const ComboResult* combo = nullptr;
                    for (const auto& c : t.combos)
                        if (c.level == level && c.measure == measure && c.scaler.kind == kind) combo = &c;
                    const auto* best = combo ? (algo == cluster::Algorithm::kmeans ? &combo->best_kmeans : &combo->best_dbscan)
                                             : nullptr;
                    if (best && *best) {
                        const auto& m = **best;
                        row.insert(row.end(), {m.description, detail::or_undefined(m.silhouette),
                                               evaluate::fixed4(m.largest_fraction), std::to_string(m.cluster_count)});
                    } else {
                        row.insert(row.end(), {"infeasible", "-", "-", "-"});
                    }
                }
                tb.rows.push_back(std::move(row));
            }
        }
        a.table(level == corpus::Level::system ? "table7_clustering_system.csv" : "table8_clustering_subsystem.csv", tb);
    }

    csv::Table asg;
    asg.header = {"feature_id", "cluster"};
    for (const auto& [id, label] : t.assignments) asg.rows.push_back({id, std::to_string(label)});
    a.table("test2_cluster_assignments.csv", asg);

    auto combos = json::array();
    for (const auto& c : t.combos) {
        json j{{"level", corpus::to_string(c.level)},
               {"measure", corpus::to_string(c.measure)},
               {"scaler", preprocess::to_string(c.scaler.kind)},
               {"features", c.feature_ids.size()},
               {"units", c.units},
               {"dbscan_candidates", c.grid.size()},
               {"kmeans_candidates", c.kmeans.size()},
               {"rejected_best_candidates", c.rejected.size()}};
        j["best_kmeans"] = c.best_kmeans ? detail::model_summary(*c.best_kmeans) : json(nullptr);
        j["best_dbscan"] = c.best_dbscan ? detail::model_summary(*c.best_dbscan) : json(nullptr);
        combos.push_back(std::move(j));
    }
    const auto& wc = t.combos[t.winner_combo];
    auto winner = detail::model_summary(t.winner);
    winner["level"] = corpus::to_string(wc.level);
    winner["measure"] = corpus::to_string(wc.measure);
    winner["scaler"] = preprocess::to_string(wc.scaler.kind);
    winner["matches_reference_finding"] = wc.level == corpus::Level::system && wc.measure == corpus::Measure::files;
    a.report["test2"] = {{"combinations", combos},
                         {"winner", winner},
                         {"reference_finding", "files modified at the system level"},
                         {"silhouette_convention", "noise points excluded; singleton clusters score 0"}};
}

inline void emit_test3(Artifacts& a, const Test3Result& t, const RunConfig& cfg) {
    a.table("table14_test3_performance.csv", evaluate::performance_table(t.total.report));
    a.table("table11_test3_relevance_total.csv",
            evaluate::relevance_table({t.correlation, t.lasso, t.forest}, cfg.relevance_top));
    for (std::size_t i = 0; i < t.classes.size(); ++i) {
        const auto& c = t.classes[i];
        const std::string suffix = "test3_relevance_class" + std::to_string(c.class_k) + ".csv";
        const std::string name = i == 0 ? "table12_" + suffix : i == 1 ? "table13_" + suffix : suffix;
        a.table(name, evaluate::relevance_table({c.correlation, c.lasso, c.forest}, cfg.relevance_top));
    }
    a.table("test3_ablation.csv", evaluate::ablation_table(t.ablations));
    a.table("test3_dataset.csv", dataset::to_csv(t.total.regression));
    a.chart("test3_actual_vs_predicted.svg", detail::actual_vs_predicted("Test 3 total inflow", t.total.report));

    auto classes = json::object();
    for (const auto& c : t.classes)
        classes[std::to_string(c.class_k)] = {{"performance", evaluate::to_json(c.report)},
                                              {"importance", {{"correlation", evaluate::to_json(c.correlation)},
                                                              {"lasso", evaluate::to_json(c.lasso)},
                                                              {"forest", evaluate::to_json(c.forest)}}}};
    auto ablations = json::array();
    for (const auto& ab : t.ablations) ablations.push_back(evaluate::to_json(ab));
    a.report["test3"] = {
        {"clusters", t.total.table.cluster_ids},
        {"dataset", {{"rows", t.total.regression.rows()}, {"columns", t.total.regression.columns.size()}}},
        {"performance", evaluate::to_json(t.total.report, true)},
        {"importance", {{"correlation", evaluate::to_json(t.correlation)},
                        {"lasso", evaluate::to_json(t.lasso)},
                        {"forest", evaluate::to_json(t.forest)}}},
        {"importance_classes", classes},
        {"ablation", ablations}};
}

inline json notes() {
    return json::array({"Neural sequence models (LSTM, CNN) are out of scope; only forest, LASSO and SVC are fitted.",
                        "Relevance tables use dataset column names only; undefined development-time bin tokens are omitted.",
                        "Regression metrics are on the MinMax-scaled target fitted on training rows.",
                        "LASSO importance is the absolute standardized coefficient.",
                        "robust_v1 scales by the 25th-75th percentile range and robust_v2 by the 10th-90th; both are "
                        "stand-in definitions for the two robust variants."});
}

// ---------------------------------------------------------------------------
// Commands

enum ExitCode { kOk = 0, kValidationFailure = 1, kConfigError = 2, kInternalError = 3 };

namespace detail {

struct Context {
    std::string stage = "config";
    std::ostream& out;
    std::ostream& err;
};

template <typename Fn>
int guarded(std::ostream& out, std::ostream& err, Fn&& fn) {
    Context ctx{"config", out, err};
    try {
        return fn(ctx);
    } catch (const ConfigError& e) {
        err << "error [" << ctx.stage << "] " << e.kind() << ": " << e.what() << "\n";
        return kConfigError;
    } catch (const cluster::NoFeasibleCandidate& e) {
        err << "error [" << ctx.stage << "] " << e.kind() << ": no feasible clustering\n";
        for (const auto& r : e.reasons) err << "  " << r << "\n";
        return kInternalError;
    } catch (const Error& e) {
        err << "error [" << ctx.stage << "] " << e.kind() << ": " << e.what() << "\n";
        return ctx.stage == "load" ? kValidationFailure : kInternalError;
    } catch (const std::exception& e) {
        err << "error [" << ctx.stage << "] internal: " << e.what() << "\n";
        return kInternalError;
    }
}

inline corpus::CorpusBundle load(Context& ctx, const RunConfig& cfg) {
    if (cfg.corpus_dir.empty()) throw ConfigError("a corpus directory is required");
    ctx.stage = "load";
    return corpus::load_corpus(std::filesystem::path(cfg.corpus_dir));
}

}  // namespace detail

inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(out, err, [&](detail::Context& ctx) {
        validate(cfg);
        const auto raw = detail::load(ctx, cfg);
        const auto prepared = prepare(raw, cfg);
        out << "commits: " << raw.commits.size() << "\n";
        out << "trouble_reports: " << raw.trouble_reports.size() << "\n";
        out << "features: " << raw.features.size() << "\n";
        out << "releases: " << raw.releases.size() << "\n";
        const auto counts = corpus::subsystem_counts(prepared);
        out << "subsystems after consolidation: " << counts.size() << "\n";
        for (const auto& id : prepared.unreleased_feature_ids) err << "warning: feature " << id << " completes after the last release\n";
        for (const auto& id : prepared.orphan_feature_ids) err << "error: commits reference unknown feature " << id << "\n";
        return prepared.orphan_feature_ids.empty() ? kOk : kValidationFailure;
    });
}

inline int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(out, err, [&](detail::Context& ctx) {
        auto sc = cfg.synth;
        sc.seed = cfg.seed;
        synth::validate(sc);
        ctx.stage = "synth";
        const auto g = synth::generate_corpus(sc);
        synth::write_corpus(g, cfg.out_dir);
        out << "wrote " << g.bundle.features.size() << " features, " << g.bundle.commits.size() << " commits, "
            << g.bundle.trouble_reports.size() << " trouble reports, " << g.bundle.releases.size() << " releases to "
            << cfg.out_dir << "\n";
        return kOk;
    });
}

// Runs the requested tests on one loaded corpus and writes one report.
inline int cmd_run(const RunConfig& cfg, bool test1, bool test2, bool test3, std::ostream& out, std::ostream& err) {
    return detail::guarded(out, err, [&](detail::Context& ctx) {
        validate(cfg);
        const auto raw = detail::load(ctx, cfg);
        ctx.stage = "prepare";
        const auto prepared = prepare(raw, cfg);
        Artifacts a;
        a.report["config"] = to_json(cfg);
        a.report["corpus"] = corpus_summary(raw, prepared);
        a.report["notes"] = notes();
        emit_inflow(a, prepared);
        if (test1) {
            ctx.stage = "test1";
            const auto t = run_test1(prepared, cfg);
            emit_test1(a, t, cfg);
            out << "test1: " << t.regression.rows() << " rows, " << t.regression.columns.size() << " columns\n";
        }
        if (test2 || test3) {
            ctx.stage = "test2";
            const auto t2 = run_test2(prepared, cfg);
            emit_test2(a, t2);
            out << "test2: winner " << t2.combos[t2.winner_combo].name() << " " << t2.winner.description << " ("
                << t2.winner.cluster_count << " clusters)\n";
            if (test3) {
                ctx.stage = "test3";
                const auto t3 = run_test3(prepared, t2.assignments, cfg);
                emit_test3(a, t3, cfg);
                out << "test3: " << t3.total.regression.columns.size() << " columns, " << t3.ablations.size()
                    << " ablation trials\n";
            }
        }
        ctx.stage = "write";
        a.write(cfg.out_dir);
        out << "report written to " << cfg.out_dir << "\n";
        return kOk;
    });
}

inline int cmd_test1(const RunConfig& cfg, std::ostream& out, std::ostream& err) { return cmd_run(cfg, true, false, false, out, err); }
inline int cmd_test2(const RunConfig& cfg, std::ostream& out, std::ostream& err) { return cmd_run(cfg, false, true, false, out, err); }
inline int cmd_test3(const RunConfig& cfg, std::ostream& out, std::ostream& err) { return cmd_run(cfg, false, true, true, out, err); }
inline int cmd_all(const RunConfig& cfg, std::ostream& out, std::ostream& err) { return cmd_run(cfg, true, true, true, out, err); }

}  // namespace defectflow::pipeline
