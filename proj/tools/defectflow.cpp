#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "defectflow/pipeline.hpp"

#ifndef DEFECTFLOW_DEFAULT_CORPUS
#define DEFECTFLOW_DEFAULT_CORPUS "data/default_corpus"
#endif

namespace pl = defectflow::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"defectflow: trouble report inflow prediction and feature footprint clustering"};
    app.require_subcommand(1);

    std::string corpus_dir = DEFECTFLOW_DEFAULT_CORPUS;
    std::string out_dir;
    std::uint64_t seed = 42;
    std::string granularity;
    int lag = 0;
    double split = 0.0;
    unsigned threads = 1;
    std::string config_file;

    auto* corpus_opt = app.add_option("--corpus-dir", corpus_dir, "directory with the four corpus CSV files");
    auto* out_opt = app.add_option("--out-dir", out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "run seed");
    auto* gran_opt = app.add_option("--granularity", granularity, "month or release")->check(CLI::IsMember({"month", "release"}));
    auto* lag_opt = app.add_option("--lag", lag, "number of lagged periods");
    auto* split_opt = app.add_option("--split-fraction", split, "held-out fraction of rows");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads");
    app.add_option("--config", config_file, "JSON run configuration, applied over the flags");
    corpus_opt->default_str(DEFECTFLOW_DEFAULT_CORPUS);

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const pl::RunConfig&, std::ostream&, std::ostream&);
    };
    const Sub subs[] = {
        {"validate", "load, link and consolidate a corpus and report diagnostics", pl::cmd_validate},
        {"synth", "write a synthetic corpus with ground truth", pl::cmd_synth},
        {"test1", "inflow prediction from delivery history", pl::cmd_test1},
        {"test2", "feature footprint clustering", pl::cmd_test2},
        {"test3", "inflow prediction with cluster counts", pl::cmd_test3},
        {"all", "run all three tests", pl::cmd_all},
    };
    for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pl::kConfigError;
    }

    pl::RunConfig cfg;
    try {
        cfg.corpus_dir = corpus_dir;
        if (*out_opt) cfg.out_dir = out_dir;
        if (*seed_opt) cfg.seed = seed;
        if (*gran_opt) cfg.granularity = pl::detail::granularity_from_string(granularity);
        if (*lag_opt) cfg.lag.lag = lag;
        if (*split_opt) cfg.split_fraction = split;
        if (*threads_opt) cfg.threads = threads;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw defectflow::ConfigError("cannot read config file " + config_file);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw defectflow::ConfigError(std::string("config file is not valid JSON: ") + e.what());
            }
            cfg = pl::apply_json(cfg, j);
        }
        if (!*out_opt && cfg.out_dir == "out" && app.got_subcommand("synth")) cfg.out_dir = "synthetic_corpus";
    } catch (const defectflow::ConfigError& e) {
        std::cerr << "error [config] " << e.kind() << ": " << e.what() << "\n";
        return pl::kConfigError;
    }

    for (const auto& s : subs)
        if (app.got_subcommand(s.name)) return s.fn(cfg, std::cout, std::cerr);
    return pl::kInternalError;
}
