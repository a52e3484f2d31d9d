// Scenario runner: dvbs2sim run --config cfg.json [filters] [--out DIR]

#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "dvbs2sim/config.hpp"
#include "dvbs2sim/harness.hpp"

using namespace dvbs2sim;

int main(int argc, char** argv)
{
    CLI::App app{"DVB-S2 link-level synchronization simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the scenario matrix and write reports");
    std::string configPath;
    std::string scenario, syncMode, modcod, format;
    std::uint64_t seed = 0;
    std::string outDir = ".";
    bool trace = false;
    bool verbose = false;
    int workers = -1;
    run->add_option("--config", configPath, "Flat JSON configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--scenario", scenario, "clean | doppler | interference");
    run->add_option("--sync-mode", syncMode, "internal | gpsdo");
    run->add_option("--modcod", modcod, "MC4 | MC12 | MC24");
    auto* seedOpt = run->add_option("--seed", seed, "Master seed (overrides the config)");
    run->add_option("--out", outDir, "Output directory");
    run->add_option("--format", format, "csv | json (default: both)")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--workers", workers, "Worker threads (0: all cores)");
    run->add_flag("--trace", trace, "Write per-burst receiver traces");
    run->add_flag("-v,--verbose", verbose, "Progress on stderr");

    CLI11_PARSE(app, argc, argv);

    try {
        SimConfig cfg = load_config(configPath);
        if (*seedOpt)
            cfg.masterSeed = seed;
        if (workers >= 0)
            cfg.workers = workers;

        harness::MatrixFilter filter;
        if (!scenario.empty())
            filter.scenario = harness::parse_scenario(scenario);
        if (!syncMode.empty())
            filter.syncMode = harness::parse_sync_mode(syncMode);
        if (!modcod.empty())
            filter.modcod = framing::parse_modcod(modcod).id;

        harness::RunOptions opts;
        opts.quiet = !verbose;
        if (trace) {
            std::filesystem::create_directories(outDir);
            opts.traceDir = outDir;
        }

        const auto result = harness::run_matrix(cfg, filter, opts);
        const auto fmt = format == "csv"    ? harness::ReportFormat::Csv
                         : format == "json" ? harness::ReportFormat::Json
                                            : harness::ReportFormat::Both;
        harness::emit_report(result, outDir, fmt);
        std::cout << harness::table_csv(result.table);

        for (const auto& c : result.cells)
            if (!c.error.empty())
                std::cerr << "cell " << c.cell.label() << " failed: " << c.error << "\n";
        return result.any_error() ? 2 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
