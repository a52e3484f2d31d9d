#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvbs2sim/config.hpp"
#include "dvbs2sim/framing.hpp"
#include "dvbs2sim/metrics.hpp"
#include "dvbs2sim/receiver.hpp"

namespace dvbs2sim::harness {

enum class Scenario { Clean, Doppler, Interference };
enum class SyncMode { Internal, Gpsdo };
enum class Antenna { Omni, RhcpDirectional };

std::string to_string(Scenario s);
std::string to_string(SyncMode m);
std::string to_string(Antenna a);
Scenario parse_scenario(const std::string& s);
SyncMode parse_sync_mode(const std::string& s);
Antenna parse_antenna(const std::string& s);

struct ScenarioConfig
{
    SimConfig sim;
    Scenario scenario = Scenario::Clean;
    SyncMode syncMode = SyncMode::Internal;
    framing::ModCod modcod = framing::modcod(framing::ModCodId::MC4);
    Antenna antenna = Antenna::Omni;
    int iterations = 10;
    int framesPerBurst = 50;
    double esN0Db = 9.0;            // before the antenna gain
    double residualDopplerHz = 0.0;
    std::uint64_t masterSeed = 1;

    // overrides used by tests and diagnostics
    std::optional<double> forcedTxFreqError;
    std::optional<double> forcedRxFreqError;
    bool noiseEnabled = true;
    bool impairmentsEnabled = true;  // oscillators, tau_0, Doppler, interferer

    double antenna_gain_db() const;
    double effective_esn0_db() const;
    void validate() const;
};

/// Cell configuration from simulation defaults (Es/N0, residual Doppler,
/// iterations, frames per burst).
ScenarioConfig make_scenario(const SimConfig& sim, Scenario s, SyncMode m, framing::ModCodId mc, Antenna a);

/// Ground truth and receiver output of one burst.
struct BurstDetail
{
    double trueCfoHz = 0.0;
    double trueSco = 0.0;
    double startOffsetS = 0.0;
    double noisePower = 0.0;
    double channelDopplerHz = 0.0;
    receiver::DemodReport report;

    /// Carrier offset left after synchronization at the end of the burst.
    double residual_cfo_hz() const { return trueCfoHz - report.cfoEstimateHz; }
};

metrics::LinkMetrics run_burst(const ScenarioConfig& cfg, int iterationIndex, BurstDetail* detail = nullptr);

struct CellId
{
    Scenario scenario;
    SyncMode syncMode;
    framing::ModCodId modcod;
    Antenna antenna;

    std::string label() const;  // e.g. "omni_clean_MC4_gpsdo"
};

struct ScenarioReport
{
    CellId cell;
    std::vector<metrics::LinkMetrics> perIteration;
    metrics::LinkMetrics aggregate;
    std::string error;  // non-empty if the cell failed
};

struct TableEntry
{
    std::optional<double> npgBer, npgFer, snrGainDb;
};

struct TableRow
{
    Antenna antenna;
    Scenario scenario;
    std::array<TableEntry, 3> perModcod;  // MC4, MC12, MC24
};

struct ComparisonTable
{
    std::vector<TableRow> rows;
};

struct MatrixFilter
{
    std::optional<Scenario> scenario;
    std::optional<SyncMode> syncMode;
    std::optional<framing::ModCodId> modcod;
};

struct MatrixResult
{
    SimConfig config;
    std::vector<ScenarioReport> cells;
    ComparisonTable table;

    bool any_error() const;
};

struct RunOptions
{
    std::optional<std::filesystem::path> traceDir;
    bool quiet = true;
};

MatrixResult run_matrix(const SimConfig& cfg, const MatrixFilter& filter = {}, const RunOptions& opts = {});

/// Builds the comparison table from finished cells; entries stay empty where
/// a sync-mode pair is incomplete.
ComparisonTable build_table(const std::vector<ScenarioReport>& cells);

enum class ReportFormat { Csv, Json, Both };

std::string table_csv(const ComparisonTable& t);
nlohmann::json to_json(const MatrixResult& r);
nlohmann::json table_to_json(const ComparisonTable& t);
ComparisonTable table_from_json(const nlohmann::json& j);
bool operator==(const ComparisonTable& a, const ComparisonTable& b);

/// Writes matrix.csv and/or matrix.json plus per-cell series files into `dir`;
/// returns the paths written.
std::vector<std::filesystem::path> emit_report(const MatrixResult& r, const std::filesystem::path& dir,
                                               ReportFormat format);

} // namespace dvbs2sim::harness
