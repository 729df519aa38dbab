#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "defectflow/synth.hpp"
#include "helpers.hpp"

using namespace defectflow;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

synth::SynthConfig small(std::uint64_t seed) {
    auto c = synth::SynthConfig::defaults();
    c.seed = seed;
    c.n_features = 400;
    return c;
}

}  // namespace

TEST(Synth, SameSeedSameBytes) {
    testing_support::TempDir a("synth_a"), b("synth_b");
    synth::write_corpus(synth::generate_corpus(small(3)), a.path());
    synth::write_corpus(synth::generate_corpus(small(3)), b.path());
    for (const char* f : {"commits.csv", "trouble_reports.csv", "features.csv", "releases.csv", "ground_truth.json"})
        EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
    synth::write_corpus(synth::generate_corpus(small(4)), b.path());
    EXPECT_NE(slurp(a.path() / "commits.csv"), slurp(b.path() / "commits.csv"));
}

TEST(Synth, WrittenCorpusLoadsAndLinks) {
    testing_support::TempDir dir("synth");
    auto g = synth::generate_corpus(small(5));
    synth::write_corpus(g, dir.path());
    auto b = corpus::load_corpus(dir.path());
    EXPECT_TRUE(b.orphan_feature_ids.empty());
    EXPECT_EQ(b.features.size(), 400u);
    EXPECT_EQ(b.commits.size(), g.bundle.commits.size());
    std::set<std::string> subs;
    for (const auto& c : b.commits) subs.insert(c.subsystem);
    EXPECT_LE(subs.size(), 19u);
    auto linked = corpus::link_features_to_releases(b);
    EXPECT_TRUE(linked.unreleased_feature_ids.empty());
}

TEST(Synth, ZeroFaultRatesGiveNoReports) {
    auto c = small(6);
    for (auto& a : c.cluster_archetypes) a.fault_rate = 0.0;
    EXPECT_TRUE(synth::generate_corpus(c).bundle.trouble_reports.empty());
}

TEST(Synth, DetectionFractionsAtScale) {
    auto g = synth::generate_corpus(synth::SynthConfig::defaults());
    ASSERT_GE(g.bundle.trouble_reports.size(), 5000u);
    auto pooled = corpus::pooled_inflow_stats(g.bundle);
    EXPECT_NEAR(pooled.pre_release_fraction, 0.63, 0.03);
    EXPECT_NEAR(pooled.early_post_fraction, 0.58, 0.04);
}

TEST(Synth, ReleaseCadence) {
    auto c = synth::SynthConfig::defaults();
    auto rel = synth::release_calendar(c);
    EXPECT_EQ(rel.size(), 4u + 24u);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(month_index(rel[i].release_date) - month_index(rel[i - 1].release_date), 6);
    for (std::size_t i = 5; i < rel.size(); ++i) EXPECT_EQ(month_index(rel[i].release_date) - month_index(rel[i - 1].release_date), 1);
}

TEST(Synth, InflowDropsAfterCadenceSwitch) {
    double before = 0, after = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto c = small(seed);
        auto g = synth::generate_corpus(c);
        const int start = month_index(synth::release_calendar(c).front().release_date) - 5;
        const int sw = start + c.cadence_switch_month;
        double pre = 0, post = 0;
        for (const auto& t : g.bundle.trouble_reports) {
            const int m = month_index(t.date_reported);
            if (m < sw) ++pre;
            else if (m < start + c.months) ++post;
        }
        before += pre / c.cadence_switch_month;
        after += post / (c.months - c.cadence_switch_month);
    }
    EXPECT_GT(before / 10, after / 10);
}

TEST(Synth, ReportsFollowTheirRelease) {
    auto c = small(7);
    auto g = synth::generate_corpus(c);
    std::map<std::string, Date> rel;
    for (const auto& r : g.bundle.releases) rel[r.release_id] = r.release_date;
    for (const auto& t : g.bundle.trouble_reports) {
        ASSERT_TRUE(rel.count(t.release_id));
        EXPECT_GE(days_between(rel[t.release_id], t.date_reported), -c.max_pre_release_days);
    }
}

TEST(Synth, GroundTruthReport) {
    auto c = small(8);
    c.cluster_archetypes = {{"one", {{0, 5}}, 2.0, {50, 5}, 1.0, false}, {"two", {{10, 7}}, 4.5, {60, 5}, 1.0, false}};
    auto g = synth::generate_corpus(c);
    auto j = synth::describe_ground_truth(g.truth);
    ASSERT_EQ(j["archetypes"].size(), 2u);
    EXPECT_EQ(j["archetypes"][0]["fault_rate"].get<double>(), 2.0);
    EXPECT_EQ(j["archetypes"][1]["fault_rate"].get<double>(), 4.5);
    std::size_t total = 0;
    for (const auto& a : j["archetypes"]) total += a["features"].get<std::size_t>();
    EXPECT_EQ(total, 400u);
    EXPECT_EQ(g.truth.feature_archetype.size(), 400u);
    EXPECT_EQ(j["causal_archetype"].get<int>(), 1);
    auto back = synth::ground_truth_from_json(j);
    EXPECT_EQ(back.feature_archetype, g.truth.feature_archetype);
}

TEST(Synth, InvalidConfig) {
    auto c = small(9);
    c.pre_release_detect_prob = 1.5;
    EXPECT_THROW(synth::generate_corpus(c), ConfigError);
    c = small(9);
    c.importance_class_weights = {0.5, 0.5, 0.5, 0, 0};
    EXPECT_THROW(synth::generate_corpus(c), ConfigError);
    c = small(9);
    c.cadence_switch_month = 48;
    EXPECT_THROW(synth::generate_corpus(c), ConfigError);
}
