// One pass/fail line per acceptance criterion. Criteria 1-13 run the matching
// unit test cases in a child process; 14-16 run the pipeline directly.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "defectflow/pipeline.hpp"

using namespace defectflow;
namespace pl = defectflow::pipeline;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int shell(const std::string& cmd, const fs::path& log) {
    const int rc = std::system((cmd + " > " + log.string() + " 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("defectflow_acceptance_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int failures = 0;

void report(int id, const std::string& title, double limit_s, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double took = seconds_since(t0);
    const bool pass = o.ok && took < limit_s;
    if (!pass) ++failures;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2fs/%.0fs", took, limit_s);
    std::cout << (pass ? "PASS" : "FAIL") << "  [" << id << "] " << title << "  (" << buf << ")";
    if (!o.detail.empty()) std::cout << "  " << o.detail;
    std::cout << std::endl;
}

Outcome unit_cases(const std::string& filter) {
    const auto log = scratch("unit") / "log.txt";
    const int rc = shell(std::string(DEFECTFLOW_UNIT_TESTS) + " --gtest_filter='" + filter + "'", log);
    const auto out = slurp(log);
    std::size_t cases = 0;
    for (auto pos = out.find("[       OK ]"); pos != std::string::npos; pos = out.find("[       OK ]", pos + 1)) ++cases;
    if (cases == 0 && rc == 0) return {false, "no test matched " + filter};
    if (rc != 0) {
        std::cerr << out << std::endl;
        return {false, "unit cases failed: " + filter};
    }
    return {true, std::to_string(cases) + " unit cases"};
}

struct Pipeline {
    pl::RunConfig cfg;
    corpus::CorpusBundle prepared;
    pl::Test2Result t2;
    pl::Test3Result t3;
    double seconds = 0.0;
};

Pipeline& shared_pipeline() {
    static Pipeline p = [] {
        Pipeline r;
        const auto t0 = Clock::now();
        r.cfg.corpus_dir = DEFECTFLOW_DEFAULT_CORPUS;
        r.prepared = pl::prepare(corpus::load_corpus(fs::path(r.cfg.corpus_dir)), r.cfg);
        r.t2 = pl::run_test2(r.prepared, r.cfg);
        r.t3 = pl::run_test3(r.prepared, r.t2.assignments, r.cfg);
        r.seconds = seconds_since(t0);
        return r;
    }();
    return p;
}

Outcome end_to_end() {
    const auto root = scratch("e2e");
    const std::string cli = DEFECTFLOW_CLI;
    const auto t0 = Clock::now();
    if (shell(cli + " all --threads 1 --out-dir " + (root / "t1").string(), root / "log1.txt") != 0)
        return {false, "run with 1 thread failed: " + slurp(root / "log1.txt")};
    const double first = seconds_since(t0);
    if (shell(cli + " all --threads 1 --out-dir " + (root / "t1b").string(), root / "log2.txt") != 0)
        return {false, "rerun failed"};
    if (shell(cli + " all --threads 4 --out-dir " + (root / "t4").string(), root / "log3.txt") != 0)
        return {false, "run with 4 threads failed"};

    const char* required[] = {"table4_test1_performance.csv",
                              "table5_test1_forest_classifier_importance.csv",
                              "table6_test1_forest_regressor_importance.csv",
                              "table7_clustering_system.csv",
                              "table8_clustering_subsystem.csv",
                              "table11_test3_relevance_total.csv",
                              "table12_test3_relevance_class2.csv",
                              "table13_test3_relevance_class4.csv",
                              "table14_test3_performance.csv"};
    for (const char* f : required)
        if (!fs::exists(root / "t1" / "tables" / f)) return {false, std::string("missing ") + f};

    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "t1")) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto rel = fs::relative(e.path(), root / "t1");
        const auto a = slurp(e.path());
        if (a != slurp(root / "t1b" / rel)) return {false, rel.string() + " differs across reruns"};
        if (a != slurp(root / "t4" / rel)) return {false, rel.string() + " differs across thread counts"};
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu files identical x3, single run %.1fs", files, first);
    return {first < 60.0, buf};
}

Outcome reduction_identity() {
    auto& p = shared_pipeline();
    const auto t1 = pl::run_test1(p.prepared, p.cfg);
    const auto& ids = p.t3.total.table.cluster_ids;
    if (ids.empty()) return {false, "no cluster columns to ablate"};
    const auto& all = p.t3.ablations.back();
    if (all.removed_clusters != ids) return {false, "last ablation does not remove every cluster"};
    const auto a = evaluate::to_json(all.eval).dump();
    const auto b = evaluate::to_json(t1.report).dump();
    return {a == b, std::to_string(ids.size()) + " cluster columns removed"};
}

Outcome planted_structure() {
    auto& p = shared_pipeline();
    const auto truth = synth::ground_truth_from_json(
        nlohmann::json::parse(slurp(fs::path(DEFECTFLOW_DEFAULT_CORPUS) / "ground_truth.json")));
    std::vector<int> pred, real;
    std::map<int, long> causal_votes;
    for (const auto& [fid, label] : p.t2.assignments) {
        const auto it = truth.feature_archetype.find(fid);
        if (it == truth.feature_archetype.end()) continue;
        pred.push_back(label);
        real.push_back(it->second);
        if (it->second == truth.causal_archetype) ++causal_votes[label];
    }
    if (pred.empty()) return {false, "no clustered feature has a planted archetype"};
    const double agreement = evaluate::best_match_agreement(pred, real);
    int causal = -2;
    long best = -1;
    for (const auto& [label, n] : causal_votes)
        if (n > best) best = n, causal = label;
    int rank = 0;
    for (const auto& e : p.t3.forest)
        if (e.feature_name == dataset::cluster_field(causal)) {
            rank = e.rank;
            break;
        }
    char buf[128];
    std::snprintf(buf, sizeof buf, "agreement %.4f, causal cluster %d forest rank %d", agreement, causal, rank);
    return {agreement >= 0.8 && rank >= 1 && rank <= 3, buf};
}

}  // namespace

int main() {
    report(1, "inflow category boundaries, totality, monotonicity", 1, [] { return unit_cases("Categorize.*"); });
    report(2, "subsystem consolidation threshold and idempotence", 1,
           [] { return unit_cases("Corpus.Consolidation*"); });
    report(3, "lagged entries equal shifted sources, 10 rows give 6", 2,
           [] { return unit_cases("Lagged.EntriesAreShiftedSources:Lagged.TenRowsGiveSix"); });
    report(4, "silhouette equals brute-force oracle", 5, [] { return unit_cases("Silhouette.MatchesBruteForce"); });
    report(5, "DBSCAN equals naive reference", 10, [] { return unit_cases("Dbscan.MatchesNaiveReference"); });
    report(6, "DBSCAN default grid has 240 rows", 1, [] { return unit_cases("Dbscan.GridHas240Rows"); });
    report(7, "k-means inertia trace and exact recovery", 2,
           [] { return unit_cases("KMeans.InertiaNeverIncreases:KMeans.ExactRecoveryAgainstAllPartitions"); });
    report(8, "LASSO closed forms, kill gamma, L1 ladder", 5,
           [] {
               return unit_cases("Lasso.SingleColumnClosedForm:Lasso.OrthogonalColumnsClosedForm:"
                                 "Lasso.KillGammaZeroesEverything:Lasso.L1NormShrinksAlongGammaLadder");
           });
    report(9, "forest exact fit, importance sum, root split search", 5,
           [] {
               return unit_cases("Forest.SingleTreeFitsDistinctInputsExactly:Forest.ImportancesSumToOne:"
                                 "Forest.RootSplitEqualsExhaustiveMidpointSearch");
           });
    report(10, "SVC fixtures and dual feasibility", 10,
           [] { return unit_cases("Svc.TwoPoints:Svc.ThreeBlobs:Svc.DualFeasibilityAtTermination"); });
    report(11, "metric fixtures and mae <= sqrt(mse)", 1,
           [] { return unit_cases("Metrics.Fixtures:Metrics.WeightedF1ByHand:Metrics.MaeBoundedByRootMse"); });
    report(12, "scaler range, round trip, quantile median, robust oracle", 2,
           [] {
               return unit_cases("Scalers.MinMaxRangeAndRoundTrip:Scalers.QuantileNormalMedianIsZero:"
                                 "Scalers.RobustMatchesOrderStatistics");
           });
    report(13, "planted detection fractions recovered", 5, [] { return unit_cases("Synth.DetectionFractionsAtScale"); });
    report(14, "end-to-end run: artifacts, determinism, runtime", 600, end_to_end);
    double pipeline_seconds = 0.0;
    report(15, "ablating every cluster reproduces Test 1", 30, [&] {
        auto o = reduction_identity();
        pipeline_seconds = shared_pipeline().seconds;
        return o;
    });
    report(16, "planted structure recovered", 60, [&] {
        auto o = planted_structure();
        char buf[48];
        std::snprintf(buf, sizeof buf, ", clustering + Test 3 %.1fs", pipeline_seconds);
        o.detail += buf;
        o.ok = o.ok && pipeline_seconds < 60.0;
        return o;
    });
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
