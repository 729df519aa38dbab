#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "defectflow/core.hpp"
#include "defectflow/corpus.hpp"
#include "defectflow/date.hpp"

namespace defectflow::synth {

struct DevTimeParams {
    double mean = 90.0;
    double sd = 20.0;
};

// A planted feature family. `footprint` maps subsystem index to the base
// number of files a member touches there. Diffuse archetypes ignore it and
// touch random subsystems instead.
struct Archetype {
    std::string name;
    std::vector<std::pair<int, double>> footprint;
    double fault_rate = 3.0;  // expected trouble reports per feature
    DevTimeParams dev_time;
    double weight = 1.0;  // base share of features
    bool diffuse = false;
};

struct SynthConfig {
    std::uint64_t seed = 42;
    int n_features = 2000;
    int n_subsystems = 19;
    int n_systems = 5;
    int months = 48;
    int cadence_switch_month = 24;
    int start_year = 2015;
    std::vector<Archetype> cluster_archetypes;
    double pre_release_detect_prob = 0.63;
    double early_post_prob = 0.58;
    double inflow_ar_coefficient = 0.6;
    double inflow_ar_sigma = 0.25;
    std::vector<double> importance_class_weights{0.05, 0.20, 0.35, 0.25, 0.15};
    double monthly_cadence_fault_scale = 0.45;  // per-feature fault multiplier after the switch
    double mix_concentration = 2.0;             // gamma shape of the monthly archetype mix; lower = more varied
    double pre_release_mean_days = 25.0;
    double early_post_mean_days = 35.0;
    double late_post_mean_days = 60.0;
    int max_pre_release_days = 180;
    int max_late_post_days = 300;
    double files_spread = 0.0;  // lognormal sigma of per-subsystem file counts; 0 reproduces the template

    static SynthConfig defaults() {
        SynthConfig c;
        c.cluster_archetypes = default_archetypes();
        return c;
    }

    // Five families centred on one system each, one causal family spread
    // over three systems with a high fault rate, and a diffuse noise family.
    // Assumes 19 subsystems in blocks of 4,4,4,4,3 over 5 systems.
    static std::vector<Archetype> default_archetypes() {
        return {
            {"core_a", {{0, 20}, {1, 15}, {5, 8}}, 3.0, {80, 20}, 0.15, false},
            {"core_b", {{4, 20}, {6, 15}, {13, 8}}, 3.0, {95, 20}, 0.15, false},
            {"core_c", {{8, 20}, {9, 15}, {17, 8}}, 3.0, {85, 20}, 0.15, false},
            {"core_d", {{12, 20}, {14, 15}, {2, 8}}, 3.0, {90, 20}, 0.15, false},
            {"core_e", {{16, 20}, {18, 15}, {10, 8}}, 3.0, {100, 20}, 0.15, false},
            {"causal", {{3, 15}, {11, 15}, {7, 10}}, 11.0, {90, 20}, 0.15, false},
            {"noise", {}, 3.0, {100, 45}, 0.10, true},
        };
    }
};

struct GroundTruth {
    std::map<std::string, int> feature_archetype;  // feature id -> index into archetypes
    std::vector<std::string> archetype_names;
    std::vector<double> fault_rates;
    std::vector<bool> diffuse;
    std::vector<std::size_t> feature_counts;
    std::vector<std::size_t> report_counts;
    int causal_archetype = -1;  // highest fault rate among non-diffuse archetypes
    double pre_release_detect_prob = 0.0;
    double early_post_prob = 0.0;
    double monthly_cadence_fault_scale = 1.0;
    std::vector<corpus::Release> releases;
    std::vector<double> release_factors;  // AR(1) multiplier per release, calendar order
    int cadence_switch_month = 0;
};

inline void validate(const SynthConfig& c) {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
    };
    prob(c.pre_release_detect_prob, "pre_release_detect_prob");
    prob(c.early_post_prob, "early_post_prob");
    if (c.n_features < 0) throw ConfigError("n_features must be >= 0");
    if (c.n_systems < 1 || c.n_subsystems < c.n_systems) throw ConfigError("need n_subsystems >= n_systems >= 1");
    if (c.months < 1) throw ConfigError("months must be >= 1");
    if (c.cadence_switch_month < 0 || c.cadence_switch_month >= c.months)
        throw ConfigError("cadence_switch_month must be in [0, months)");
    if (!(c.inflow_ar_coefficient > -1.0 && c.inflow_ar_coefficient < 1.0))
        throw ConfigError("inflow_ar_coefficient must be in (-1, 1)");
    if (c.inflow_ar_sigma < 0.0) throw ConfigError("inflow_ar_sigma must be >= 0");
    if (c.importance_class_weights.size() != 5) throw ConfigError("importance_class_weights needs 5 entries");
    double sum = 0.0;
    for (double w : c.importance_class_weights) {
        prob(w, "importance class weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("importance_class_weights must sum to 1");
    if (c.cluster_archetypes.empty()) throw ConfigError("at least one archetype is required");
    double wsum = 0.0;
    for (const auto& a : c.cluster_archetypes) {
        if (a.fault_rate < 0.0 || a.weight < 0.0 || a.dev_time.sd < 0.0) throw ConfigError("archetype " + a.name + " has a negative parameter");
        if (!a.diffuse && a.footprint.empty()) throw ConfigError("archetype " + a.name + " has an empty footprint");
        for (const auto& [s, files] : a.footprint)
            if (s < 0 || s >= c.n_subsystems || files <= 0.0)
                throw ConfigError("archetype " + a.name + " references subsystem " + std::to_string(s));
        wsum += a.weight;
    }
    if (!(wsum > 0.0)) throw ConfigError("archetype weights must not all be 0");
    if (c.monthly_cadence_fault_scale < 0.0 || !(c.mix_concentration > 0.0)) throw ConfigError("invalid fault scale or mix concentration");
    if (c.pre_release_mean_days <= 0 || c.early_post_mean_days <= 0 || c.late_post_mean_days <= 0 ||
        c.max_pre_release_days < 1 || c.max_late_post_days < 1 || c.files_spread < 0.0)
        throw ConfigError("invalid detection delay parameters");
}

// Subsystem j belongs to system j * n_systems / n_subsystems (contiguous
// blocks, earlier systems take the remainder).
inline int system_of(int subsystem, int n_subsystems, int n_systems) {
    const int base = n_subsystems / n_systems, extra = n_subsystems % n_systems;
    const int wide = extra * (base + 1);
    return subsystem < wide ? subsystem / (base + 1) : extra + (subsystem - wide) / base;
}

inline std::string system_name(int s) { return "SYS_" + std::string(1, static_cast<char>('A' + s % 26)) + (s >= 26 ? std::to_string(s / 26) : ""); }

inline std::string subsystem_name(int j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "SUB_%02d", j + 1);
    return buf;
}

namespace detail {

inline std::string padded(const char* prefix, std::size_t v, int width) {
    std::string digits = std::to_string(v);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return prefix + digits;
}

// Exponential with mean `mean` truncated to [0, cap), floored to whole days.
inline long truncated_exp_days(std::mt19937_64& rng, double mean, int cap) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = -mean * std::log(1.0 - u(rng) * (1.0 - std::exp(-static_cast<double>(cap) / mean)));
    return std::min<long>(static_cast<long>(std::floor(x)), cap - 1);
}

inline Date month_day(int start_year, int month, unsigned day) {
    const int idx = start_year * 12 + month;
    return Date{std::chrono::year{idx / 12} / std::chrono::month{static_cast<unsigned>(idx % 12 + 1)} / std::chrono::day{day}};
}

}  // namespace detail

// Biannual releases (every sixth month) before the switch, monthly from the
// switch on; all dated on day 28. The last month always has a release.
inline std::vector<corpus::Release> release_calendar(const SynthConfig& c) {
    std::vector<corpus::Release> out;
    for (int m = 0; m < c.months; ++m) {
        const bool release = m >= c.cadence_switch_month || (m + 1) % 6 == 0;
        if (release) out.push_back({detail::padded("R", out.size() + 1, 3), detail::month_day(c.start_year, m, 28)});
    }
    return out;
}

struct Generated {
    corpus::CorpusBundle bundle;
    GroundTruth truth;
};

// Every random draw comes from a named stream derived from the seed; per
// entity streams are further split by entity index.
inline Generated generate_corpus(const SynthConfig& cfg) {
    validate(cfg);
    Generated g;
    auto& b = g.bundle;
    auto& gt = g.truth;
    const auto& arch = cfg.cluster_archetypes;
    const std::size_t na = arch.size();

    gt.pre_release_detect_prob = cfg.pre_release_detect_prob;
    gt.early_post_prob = cfg.early_post_prob;
    gt.monthly_cadence_fault_scale = cfg.monthly_cadence_fault_scale;
    gt.cadence_switch_month = cfg.cadence_switch_month;
    gt.feature_counts.assign(na, 0);
    gt.report_counts.assign(na, 0);
    double best_rate = -1.0;
    for (std::size_t a = 0; a < na; ++a) {
        gt.archetype_names.push_back(arch[a].name);
        gt.fault_rates.push_back(arch[a].fault_rate);
        gt.diffuse.push_back(arch[a].diffuse);
        if (!arch[a].diffuse && arch[a].fault_rate > best_rate) {
            best_rate = arch[a].fault_rate;
            gt.causal_archetype = static_cast<int>(a);
        }
    }

    b.releases = release_calendar(cfg);
    gt.releases = b.releases;
    std::vector<int> release_month;
    for (int m = 0; m < cfg.months; ++m)
        if (m >= cfg.cadence_switch_month || (m + 1) % 6 == 0) release_month.push_back(m);
    // month -> index of the release that ships features completed in it
    std::vector<std::size_t> ships(static_cast<std::size_t>(cfg.months));
    for (int m = 0, r = 0; m < cfg.months; ++m) {
        while (release_month[static_cast<std::size_t>(r)] < m) ++r;
        ships[static_cast<std::size_t>(m)] = static_cast<std::size_t>(r);
    }

    {
        std::mt19937_64 rng(derive_seed(cfg.seed, "release_factor"));
        std::normal_distribution<double> eps(0.0, 1.0);
        const double phi = cfg.inflow_ar_coefficient, s = cfg.inflow_ar_sigma;
        const double stationary_var = s * s / (1.0 - phi * phi);
        double z = std::sqrt(stationary_var) * eps(rng);
        for (std::size_t r = 0; r < b.releases.size(); ++r) {
            if (r > 0) z = phi * z + s * eps(rng);
            gt.release_factors.push_back(std::exp(z - stationary_var / 2.0));
        }
    }

    // Monthly archetype mix: base weight times a unit-mean gamma draw.
    std::vector<std::vector<double>> mix(static_cast<std::size_t>(cfg.months), std::vector<double>(na));
    {
        std::mt19937_64 rng(derive_seed(cfg.seed, "mix"));
        std::gamma_distribution<double> gamma(cfg.mix_concentration, 1.0 / cfg.mix_concentration);
        for (auto& w : mix)
            for (std::size_t a = 0; a < na; ++a) w[a] = arch[a].weight * gamma(rng);
    }

    const std::uint64_t feature_stream = derive_seed(cfg.seed, "features");
    const std::uint64_t commit_stream = derive_seed(cfg.seed, "commits");
    const std::uint64_t fault_stream = derive_seed(cfg.seed, "faults");
    std::discrete_distribution<int> importance(cfg.importance_class_weights.begin(), cfg.importance_class_weights.end());
    std::size_t commit_seq = 0, tr_seq = 0;

    for (int i = 0; i < cfg.n_features; ++i) {
        const auto fi = static_cast<std::size_t>(i);
        const std::string fid = detail::padded("F", fi + 1, 5);
        std::mt19937_64 frng(derive_seed(feature_stream, fi));
        const int month = std::uniform_int_distribution<int>(0, cfg.months - 1)(frng);
        const auto day = static_cast<unsigned>(std::uniform_int_distribution<int>(1, 27)(frng));
        const auto& w = mix[static_cast<std::size_t>(month)];
        std::discrete_distribution<int> pick(w.begin(), w.end());
        const auto a = static_cast<std::size_t>(pick(frng));
        const auto& A = arch[a];
        const long dev = std::max<long>(1, std::lround(std::normal_distribution<double>(A.dev_time.mean, A.dev_time.sd)(frng)));
        const Date completion = detail::month_day(cfg.start_year, month, day);
        b.features.push_back({fid, completion, dev, std::nullopt});
        gt.feature_archetype[fid] = static_cast<int>(a);
        ++gt.feature_counts[a];

        // Commits realizing the footprint; the last one lands on the completion date.
        std::mt19937_64 crng(derive_seed(commit_stream, fi));
        std::vector<std::pair<int, long>> touched;
        if (A.diffuse) {
            const int k = std::uniform_int_distribution<int>(1, 4)(crng);
            std::vector<int> subs(static_cast<std::size_t>(cfg.n_subsystems));
            for (int s = 0; s < cfg.n_subsystems; ++s) subs[static_cast<std::size_t>(s)] = s;
            std::shuffle(subs.begin(), subs.end(), crng);
            for (int s = 0; s < k; ++s)
                touched.emplace_back(subs[static_cast<std::size_t>(s)], std::uniform_int_distribution<long>(1, 40)(crng));
        } else {
            std::normal_distribution<double> spread(0.0, 1.0);
            for (const auto& [s, base] : A.footprint) {
                const double f = cfg.files_spread > 0.0 ? std::exp(cfg.files_spread * spread(crng)) : 1.0;
                touched.emplace_back(s, std::max<long>(1, std::lround(base * f)));
            }
        }
        std::vector<corpus::CommitRecord> commits;
        for (const auto& [s, files] : touched) {
            const long pieces = std::min<long>(files, std::uniform_int_distribution<long>(1, 3)(crng));
            long left = files;
            for (long p = 0; p < pieces; ++p) {
                const long f = p + 1 == pieces ? left : std::max<long>(1, left / (pieces - p));
                left -= f;
                corpus::CommitRecord c;
                c.feature_id = fid;
                c.date = completion - std::chrono::days{std::uniform_int_distribution<long>(1, dev)(crng)};
                c.system = system_name(system_of(s, cfg.n_subsystems, cfg.n_systems));
                c.subsystem = subsystem_name(s);
                c.files_changed = f;
                c.loc_added = f * std::uniform_int_distribution<long>(15, 40)(crng);
                c.loc_removed = f * std::uniform_int_distribution<long>(0, 10)(crng);
                c.loc_modified = f * std::uniform_int_distribution<long>(5, 20)(crng);
                commits.push_back(std::move(c));
            }
        }
        commits.back().date = completion;
        for (auto& c : commits) {
            c.commit_id = detail::padded("C", ++commit_seq, 6);
            b.commits.push_back(std::move(c));
        }

        // Trouble reports attributed to the shipping release.
        const std::size_t r = ships[static_cast<std::size_t>(month)];
        const Date release_date = b.releases[r].release_date;
        const double scale = month >= cfg.cadence_switch_month ? cfg.monthly_cadence_fault_scale : 1.0;
        std::mt19937_64 trng(derive_seed(fault_stream, fi));
        const double lambda = A.fault_rate * gt.release_factors[r] * scale;
        const int count = lambda > 0.0 ? std::poisson_distribution<int>(lambda)(trng) : 0;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < count; ++k) {
            Date d;
            if (u(trng) < cfg.pre_release_detect_prob) {
                d = release_date - std::chrono::days{1 + detail::truncated_exp_days(trng, cfg.pre_release_mean_days, cfg.max_pre_release_days)};
            } else if (u(trng) < cfg.early_post_prob) {
                d = release_date + std::chrono::days{detail::truncated_exp_days(trng, cfg.early_post_mean_days, corpus::kEarlyPostDays + 1)};
            } else {
                d = release_date + std::chrono::days{corpus::kEarlyPostDays + 1 +
                                                     detail::truncated_exp_days(trng, cfg.late_post_mean_days, cfg.max_late_post_days)};
            }
            b.trouble_reports.push_back({detail::padded("TR", ++tr_seq, 5), d, b.releases[r].release_id, importance(trng) + 1});
            ++gt.report_counts[a];
        }
    }
    return g;
}

inline nlohmann::json describe_ground_truth(const GroundTruth& gt) {
    nlohmann::json j;
    auto& table = j["archetypes"] = nlohmann::json::array();
    for (std::size_t a = 0; a < gt.archetype_names.size(); ++a)
        table.push_back({{"id", a},
                         {"name", gt.archetype_names[a]},
                         {"fault_rate", gt.fault_rates[a]},
                         {"diffuse", static_cast<bool>(gt.diffuse[a])},
                         {"features", gt.feature_counts[a]},
                         {"trouble_reports", gt.report_counts[a]}});
    j["causal_archetype"] = gt.causal_archetype;
    j["pre_release_detect_prob"] = gt.pre_release_detect_prob;
    j["early_post_prob"] = gt.early_post_prob;
    j["monthly_cadence_fault_scale"] = gt.monthly_cadence_fault_scale;
    j["cadence_switch_month"] = gt.cadence_switch_month;
    auto& rel = j["releases"] = nlohmann::json::array();
    for (std::size_t r = 0; r < gt.releases.size(); ++r)
        rel.push_back({{"release_id", gt.releases[r].release_id},
                       {"release_date", format_date(gt.releases[r].release_date)},
                       {"fault_factor", gt.release_factors[r]}});
    j["feature_archetype"] = gt.feature_archetype;
    return j;
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth gt;
    for (const auto& a : j.at("archetypes")) {
        gt.archetype_names.push_back(a.at("name").get<std::string>());
        gt.fault_rates.push_back(a.at("fault_rate").get<double>());
        gt.diffuse.push_back(a.at("diffuse").get<bool>());
        gt.feature_counts.push_back(a.at("features").get<std::size_t>());
        gt.report_counts.push_back(a.at("trouble_reports").get<std::size_t>());
    }
    gt.causal_archetype = j.at("causal_archetype").get<int>();
    gt.pre_release_detect_prob = j.at("pre_release_detect_prob").get<double>();
    gt.early_post_prob = j.at("early_post_prob").get<double>();
    gt.monthly_cadence_fault_scale = j.at("monthly_cadence_fault_scale").get<double>();
    gt.cadence_switch_month = j.at("cadence_switch_month").get<int>();
    for (const auto& r : j.at("releases")) {
        gt.releases.push_back({r.at("release_id").get<std::string>(), *parse_date(r.at("release_date").get<std::string>())});
        gt.release_factors.push_back(r.at("fault_factor").get<double>());
    }
    gt.feature_archetype = j.at("feature_archetype").get<std::map<std::string, int>>();
    return gt;
}

// Writes the four corpus files and ground_truth.json.
inline void write_corpus(const Generated& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    corpus::save_corpus(g.bundle, dir);
    std::ofstream out(dir / "ground_truth.json", std::ios::binary);
    if (!out) throw csv::IoError((dir / "ground_truth.json").string());
    out << describe_ground_truth(g.truth).dump(2) << '\n';
}

}  // namespace defectflow::synth
