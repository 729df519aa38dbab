#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "defectflow/corpus.hpp"
#include "helpers.hpp"

using namespace defectflow;
using testing_support::commit;
using testing_support::day;

TEST(Corpus, LinksToEarliestReleaseOnOrAfterLastCommit) {
    auto b = corpus::link_features_to_releases(corpus::validate(testing_support::tiny_bundle()));
    ASSERT_TRUE(b.linked);
    EXPECT_EQ(*b.features[0].release_id, "R1");
    EXPECT_EQ(*b.features[1].release_id, "R1");
    EXPECT_EQ(*b.features[2].release_id, "R2");
    EXPECT_TRUE(b.unreleased_feature_ids.empty());
}

TEST(Corpus, CommitOnReleaseDayBelongsToThatRelease) {
    auto b = testing_support::tiny_bundle();
    b.commits.push_back(commit("C5", "F3", "2020-06-01", "SYS_B", "SUB_03", 1));
    b = corpus::link_features_to_releases(b);
    EXPECT_EQ(*b.features[2].release_id, "R2");
    b.commits.push_back(commit("C6", "F3", "2020-06-02", "SYS_B", "SUB_03", 1));
    b = corpus::link_features_to_releases(b);
    EXPECT_FALSE(b.features[2].release_id);
    EXPECT_EQ(b.unreleased_feature_ids, std::vector<std::string>{"F3"});
}

TEST(Corpus, ValidationErrors) {
    auto dup = testing_support::tiny_bundle();
    dup.commits.push_back(dup.commits.front());
    EXPECT_THROW(corpus::validate(dup), corpus::DuplicateKey);

    auto dangling = testing_support::tiny_bundle();
    dangling.trouble_reports.push_back({"T9", day("2020-05-01"), "R7", 3});
    try {
        corpus::validate(dangling);
        FAIL();
    } catch (const corpus::DanglingReference& e) {
        EXPECT_EQ(e.id, "R7");
        EXPECT_EQ(e.referrer, "T9");
    }

    auto bad_class = testing_support::tiny_bundle();
    bad_class.trouble_reports[0].importance_class = 6;
    EXPECT_THROW(corpus::validate(bad_class), Error);

    auto orphan = testing_support::tiny_bundle();
    orphan.commits.push_back(commit("C9", "F404", "2020-02-01", "SYS_A", "SUB_01", 1));
    EXPECT_EQ(corpus::validate(orphan).orphan_feature_ids, std::vector<std::string>{"F404"});
}

TEST(Corpus, SaveLoadRoundTrip) {
    testing_support::TempDir dir("corpus");
    auto b = corpus::validate(testing_support::tiny_bundle());
    corpus::save_corpus(b, dir.path());
    auto back = corpus::load_corpus(dir.path());
    EXPECT_EQ(back.commits, b.commits);
    ASSERT_EQ(back.trouble_reports.size(), b.trouble_reports.size());
    EXPECT_EQ(back.trouble_reports[4].importance_class, 1);
    EXPECT_EQ(back.features.size(), 3u);
    EXPECT_EQ(back.releases.size(), 2u);
}

TEST(Corpus, LoadRejectsBadRows) {
    testing_support::TempDir dir("corpus");
    corpus::save_corpus(corpus::validate(testing_support::tiny_bundle()), dir.path());
    {
        std::ofstream out(dir.path() / "trouble_reports.csv", std::ios::app);
        out << "T6,2020-13-01,R1,2\n";
    }
    EXPECT_THROW(corpus::load_corpus(dir.path()), csv::ParseError);
}

TEST(Corpus, ConsolidationThreshold) {
    corpus::CorpusBundle b = testing_support::tiny_bundle();
    b.commits.clear();
    int n = 0;
    for (int i = 0; i < 12; ++i) b.commits.push_back(commit("A" + std::to_string(n++), "F1", "2020-01-01", "S", "rare", 1));
    for (int i = 0; i < 13; ++i) b.commits.push_back(commit("A" + std::to_string(n++), "F1", "2020-01-01", "S", "kept", 1));
    auto c = corpus::consolidate_rare_subsystems(b, 13);
    auto counts = corpus::subsystem_counts(c);
    EXPECT_EQ(counts.count("rare"), 0u);
    EXPECT_EQ(counts.at(corpus::kSingleGroup), 12u);
    EXPECT_EQ(counts.at("kept"), 13u);
}

TEST(Corpus, ConsolidationIdempotentOnRandomCorpora) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        corpus::CorpusBundle b;
        std::uniform_int_distribution<int> sub(0, 9), count(1, 30);
        const int rows = count(rng) * 5;
        for (int i = 0; i < rows; ++i)
            b.commits.push_back(commit("C" + std::to_string(i), "F", "2020-01-01", "S", "s" + std::to_string(sub(rng)), 1));
        auto once = corpus::consolidate_rare_subsystems(b, 13);
        auto twice = corpus::consolidate_rare_subsystems(once, 13);
        EXPECT_EQ(once.commits, twice.commits);
    }
}

TEST(Corpus, Footprints) {
    auto b = corpus::link_features_to_releases(testing_support::tiny_bundle());
    auto fs = corpus::build_footprints(b, corpus::Level::system, corpus::Measure::files);
    EXPECT_EQ(fs.units, (std::vector<std::string>{"SYS_A", "SYS_B"}));
    Matrix expect(3, 2);
    expect << 3, 2, 5, 0, 0, 1;
    EXPECT_EQ(fs.matrix(), expect);
    EXPECT_EQ(fs.feature_ids(), (std::vector<std::string>{"F1", "F2", "F3"}));

    auto loc = corpus::build_footprints(b, corpus::Level::subsystem, corpus::Measure::loc);
    EXPECT_EQ(loc.units.size(), 3u);
    EXPECT_DOUBLE_EQ(loc.matrix()(0, 0), 15.0);
}

TEST(Corpus, ZeroMagnitudeFeaturesAreSkipped) {
    auto b = testing_support::tiny_bundle();
    b.commits[3].files_changed = 0;
    auto fs = corpus::build_footprints(corpus::link_features_to_releases(b), corpus::Level::system, corpus::Measure::files);
    EXPECT_EQ(fs.skipped, std::vector<std::string>{"F3"});
    EXPECT_EQ(fs.footprints.size(), 2u);
}

TEST(Corpus, InflowCurve) {
    auto b = testing_support::tiny_bundle();
    auto c = corpus::cumulative_inflow_curve(b, "R1");
    EXPECT_EQ(c.total, 3u);
    EXPECT_EQ(c.pre_release, 1u);
    EXPECT_EQ(c.early_post, 2u);
    EXPECT_NEAR(c.pre_release_fraction, 1.0 / 3.0, 1e-15);
    ASSERT_TRUE(c.early_post_fraction);
    EXPECT_DOUBLE_EQ(*c.early_post_fraction, 1.0);
    ASSERT_EQ(c.points.size(), 3u);
    EXPECT_DOUBLE_EQ(c.points.back().second, 100.0);
    EXPECT_DOUBLE_EQ(c.percent_at(day("2020-03-20")), 200.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.percent_at(day("2020-01-01")), 0.0);
    EXPECT_THROW(corpus::cumulative_inflow_curve(b, "R9"), corpus::UnknownRelease);

    auto pooled = corpus::pooled_inflow_stats(b);
    EXPECT_EQ(pooled.total, 5u);
    EXPECT_DOUBLE_EQ(pooled.pre_release_fraction, 2.0 / 5.0);
    EXPECT_DOUBLE_EQ(pooled.early_post_fraction, 1.0);
}

TEST(Corpus, EarlyWindowBoundary) {
    corpus::CorpusBundle b;
    b.releases = {{"R", day("2020-01-01")}};
    const Date r = day("2020-01-01");
    b.trouble_reports = {{"a", r + std::chrono::days(122), "R", 3}, {"b", r + std::chrono::days(123), "R", 3}};
    auto c = corpus::cumulative_inflow_curve(b, "R");
    EXPECT_EQ(c.early_post, 1u);
    EXPECT_EQ(c.post_release, 2u);
}
