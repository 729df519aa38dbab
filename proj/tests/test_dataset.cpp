#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "defectflow/dataset.hpp"
#include "helpers.hpp"

using namespace defectflow;

TEST(Categorize, BoundaryTable) {
    const std::pair<double, int> table[] = {{-16, 1}, {-15, 1}, {-14, 2}, {-6, 2}, {-5, 2}, {-4, 3}, {4, 3},  {5, 3},
                                            {6, 4},   {14, 4},  {15, 4},  {16, 5}, {29, 5}, {30, 5}, {31, 6}, {40, 6}};
    for (const auto& [x, cat] : table) EXPECT_EQ(dataset::categorize_delta(x, 0.0), cat) << x;
    EXPECT_EQ(dataset::categorize_delta(20, 20), 3);
}

TEST(Categorize, TotalAndMonotone) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = u(rng);
    std::sort(xs.begin(), xs.end());
    int prev = 1;
    for (double x : xs) {
        const int c = dataset::categorize_delta(x, 0.0);
        ASSERT_GE(c, 1);
        ASSERT_LE(c, 6);
        ASSERT_GE(c, prev) << x;
        prev = c;
    }
}

TEST(Aggregate, MonthTable) {
    auto b = corpus::link_features_to_releases(testing_support::tiny_bundle());
    auto t = dataset::aggregate_periods(b, dataset::Granularity::month);
    ASSERT_EQ(t.rows.size(), 6u);
    const long inflow[] = {1, 1, 1, 1, 0, 1};
    const long releases[] = {0, 1, 0, 0, 1, 0};
    const long features[] = {0, 2, 0, 0, 1, 0};
    const double dev[] = {0, 40, 0, 0, 70, 0};
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(t.rows[i].tr_inflow, inflow[i]) << i;
        EXPECT_EQ(t.rows[i].releases_delivered, releases[i]) << i;
        EXPECT_EQ(t.rows[i].features_delivered, features[i]) << i;
        EXPECT_DOUBLE_EQ(t.rows[i].mean_dev_time, dev[i]) << i;
    }
    EXPECT_EQ(t.rows[0].period_key, "2020-02");
    EXPECT_EQ(t.rows[5].period_key, "2020-07");
    EXPECT_EQ(t.rows[0].tr_inflow_by_class[1], 1);
}

TEST(Aggregate, ReleaseTable) {
    auto b = corpus::link_features_to_releases(testing_support::tiny_bundle());
    auto t = dataset::aggregate_periods(b, dataset::Granularity::release);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].tr_inflow, 3);
    EXPECT_EQ(t.rows[1].tr_inflow, 2);
    EXPECT_EQ(t.rows[0].features_delivered, 2);
}

TEST(Aggregate, RequiresLinking) {
    EXPECT_THROW(dataset::aggregate_periods(testing_support::tiny_bundle(), dataset::Granularity::month), Error);
}

TEST(Augment, CountsAndUnknownFeatures) {
    auto b = corpus::link_features_to_releases(testing_support::tiny_bundle());
    auto t = dataset::aggregate_periods(b, dataset::Granularity::month);
    auto a = dataset::augment_with_clusters(t, {{"F1", 0}, {"F2", -1}, {"F3", 0}});
    EXPECT_EQ(a.cluster_ids, (std::vector<int>{-1, 0}));
    EXPECT_EQ(a.rows[1].cluster_counts.at(0), 1);
    EXPECT_EQ(a.rows[1].cluster_counts.at(-1), 1);
    EXPECT_EQ(a.rows[4].cluster_counts.at(0), 1);
    EXPECT_THROW(dataset::augment_with_clusters(t, {{"F99", 1}}), dataset::UnknownFeature);
}

namespace {

dataset::TimeSeriesTable random_table(std::mt19937_64& rng, std::size_t n, int clusters) {
    std::uniform_int_distribution<long> count(0, 40);
    dataset::TimeSeriesTable t;
    for (int c = 0; c < clusters; ++c) t.cluster_ids.push_back(c);
    for (std::size_t i = 0; i < n; ++i) {
        dataset::PeriodRow r;
        r.period_key = "p" + std::to_string(i);
        r.tr_inflow = count(rng);
        for (auto& v : r.tr_inflow_by_class) v = count(rng);
        r.releases_delivered = count(rng) % 2;
        r.features_delivered = count(rng);
        r.mean_dev_time = static_cast<double>(count(rng)) * 2.5;
        for (int c = 0; c < clusters; ++c) r.cluster_counts[c] = count(rng);
        t.rows.push_back(r);
    }
    return t;
}

double source_value(const dataset::PeriodRow& r, const std::string& name) {
    if (name == "tr_inflow") return static_cast<double>(r.tr_inflow);
    if (name == "releases_delivered") return static_cast<double>(r.releases_delivered);
    if (name == "features_delivered") return static_cast<double>(r.features_delivered);
    if (name == "mean_dev_time") return r.mean_dev_time;
    if (name == "tr_inflow_class_2") return static_cast<double>(r.tr_inflow_by_class[1]);
    return static_cast<double>(r.cluster_counts.at(std::stoi(name.substr(8))));
}

}  // namespace

TEST(Lagged, EntriesAreShiftedSources) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 6 + static_cast<std::size_t>(trial % 20);
        const int lag = 1 + trial % 5;
        auto t = random_table(rng, n, trial % 3);
        const auto kind = trial % 2 ? dataset::TargetKind::regression_inflow : dataset::TargetKind::regression_inflow_class;
        auto d = dataset::build_lagged(t, {lag, true}, kind, 2);
        ASSERT_EQ(d.rows(), n - static_cast<std::size_t>(lag));
        for (std::size_t r = 0; r < d.rows(); ++r) {
            const std::size_t i = r + static_cast<std::size_t>(lag);
            for (std::size_t j = 0; j < d.columns.size(); ++j) {
                const auto& c = d.columns[j];
                ASSERT_LE(c.offset, 0);
                ASSERT_GE(c.offset, -lag);
                EXPECT_EQ(d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)),
                          source_value(t.rows[i - static_cast<std::size_t>(-c.offset)], c.source));
            }
            const double want = kind == dataset::TargetKind::regression_inflow ? static_cast<double>(t.rows[i].tr_inflow)
                                                                               : static_cast<double>(t.rows[i].tr_inflow_by_class[1]);
            EXPECT_EQ(d.y(static_cast<Eigen::Index>(r)), want);
            EXPECT_EQ(d.period_keys[r], t.rows[i].period_key);
        }
    }
}

TEST(Lagged, TenRowsGiveSix) {
    std::mt19937_64 rng(5);
    auto t = random_table(rng, 10, 0);
    auto d = dataset::build_lagged(t, {}, dataset::TargetKind::category_1_6);
    EXPECT_EQ(d.rows(), 6u);
    for (std::size_t r = 0; r < 6; ++r)
        EXPECT_EQ(d.y(static_cast<Eigen::Index>(r)),
                  dataset::categorize_delta(static_cast<double>(t.rows[r + 4].tr_inflow), static_cast<double>(t.rows[r + 3].tr_inflow)));
    EXPECT_EQ(d.columns.size(), 3u + 4u * 4u);
    EXPECT_THROW(dataset::build_lagged(random_table(rng, 4, 0), {}, dataset::TargetKind::regression_inflow), TooFewRows);
    EXPECT_THROW(dataset::build_lagged(t, {0, true}, dataset::TargetKind::regression_inflow), ConfigError);
}

TEST(Lagged, ClusterColumnsDoNotReorderBase) {
    std::mt19937_64 rng(8);
    auto t = random_table(rng, 12, 2);
    auto with = dataset::build_lagged(t, {}, dataset::TargetKind::regression_inflow);
    auto base_table = t;
    base_table.cluster_ids.clear();
    auto without = dataset::build_lagged(base_table, {}, dataset::TargetKind::regression_inflow);
    auto stripped = with.select_columns([](const dataset::ColumnLabel& c) { return c.source.rfind("cluster_", 0) != 0; });
    ASSERT_EQ(stripped.columns.size(), without.columns.size());
    for (std::size_t j = 0; j < without.columns.size(); ++j) EXPECT_EQ(stripped.columns[j].name(), without.columns[j].name());
    EXPECT_EQ(stripped.x, without.x);
}

TEST(Split, LastCeilFractionIsTest) {
    std::mt19937_64 rng(9);
    auto d = dataset::build_lagged(random_table(rng, 58, 0), {}, dataset::TargetKind::regression_inflow);
    auto s = dataset::chronological_split(d, 0.2);
    EXPECT_EQ(s.test.rows(), 11u);
    EXPECT_EQ(s.train.rows(), 43u);
    EXPECT_EQ(s.test.period_keys.front(), d.period_keys[43]);
    EXPECT_THROW(dataset::chronological_split(d, 1.0), ConfigError);
}
