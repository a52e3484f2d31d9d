#include "dvbs2sim/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "dvbs2sim/channel.hpp"
#include "dvbs2sim/impairments.hpp"
#include "dvbs2sim/rng.hpp"

namespace dvbs2sim::harness {

namespace {

using framing::ModCodId;
using nlohmann::json;

constexpr std::array<Scenario, 3> kScenarios{Scenario::Clean, Scenario::Doppler, Scenario::Interference};
constexpr std::array<Antenna, 2> kAntennas{Antenna::Omni, Antenna::RhcpDirectional};
constexpr std::array<SyncMode, 2> kSyncModes{SyncMode::Internal, SyncMode::Gpsdo};

enum SeedTag : std::uint64_t { kData = 1, kChannel = 2, kImpair = 3, kOscillator = 4 };

std::uint64_t modcod_index(ModCodId id)
{
    return static_cast<std::uint64_t>(id);
}

std::size_t modcod_slot(ModCodId id)
{
    return static_cast<std::size_t>(id);
}

std::string table_antenna(Antenna a)
{
    return a == Antenna::Omni ? "Omni" : "RHCP";
}

std::string table_scenario(Scenario s)
{
    switch (s) {
    case Scenario::Clean: return "Clean";
    case Scenario::Doppler: return "Doppler";
    case Scenario::Interference: return "Interf.";
    }
    return "?";
}

std::string fixed4(const std::optional<double>& v)
{
    if (!v)
        return {};
    double x = *v;
    if (x == 0.0 || std::abs(x) < 5e-5)
        x = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

json metrics_json(const metrics::LinkMetrics& m)
{
    return {{"ber", m.ber},
            {"fer", m.fer},
            {"snr_db", m.snrEstimateDb},
            {"bits", m.bitsCounted},
            {"bit_errors", m.bitErrors},
            {"frames", m.framesCounted},
            {"frame_errors", m.frameErrors},
            {"frames_detected", m.framesDetected}};
}

json opt_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from(const json& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<double>();
}

} // namespace

std::string to_string(Scenario s)
{
    switch (s) {
    case Scenario::Clean: return "clean";
    case Scenario::Doppler: return "doppler";
    case Scenario::Interference: return "interference";
    }
    return "?";
}

std::string to_string(SyncMode m)
{
    return m == SyncMode::Internal ? "internal" : "gpsdo";
}

std::string to_string(Antenna a)
{
    return a == Antenna::Omni ? "omni" : "rhcp";
}

Scenario parse_scenario(const std::string& s)
{
    if (s == "clean" || s == "Clean")
        return Scenario::Clean;
    if (s == "doppler" || s == "Doppler")
        return Scenario::Doppler;
    if (s == "interference" || s == "Interference" || s == "interf")
        return Scenario::Interference;
    throw std::invalid_argument("unknown scenario '" + s + "'");
}

SyncMode parse_sync_mode(const std::string& s)
{
    if (s == "internal" || s == "Internal" || s == "unsync")
        return SyncMode::Internal;
    if (s == "gpsdo" || s == "Gpsdo" || s == "GPSDO" || s == "sync")
        return SyncMode::Gpsdo;
    throw std::invalid_argument("unknown sync mode '" + s + "'");
}

Antenna parse_antenna(const std::string& s)
{
    if (s == "omni" || s == "Omni")
        return Antenna::Omni;
    if (s == "rhcp" || s == "RHCP" || s == "RhcpDirectional")
        return Antenna::RhcpDirectional;
    throw std::invalid_argument("unknown antenna '" + s + "'");
}

double ScenarioConfig::antenna_gain_db() const
{
    return antenna == Antenna::Omni ? sim.antennaGainOmniDb : sim.antennaGainRhcpDb;
}

double ScenarioConfig::effective_esn0_db() const
{
    return esN0Db + antenna_gain_db();
}

void ScenarioConfig::validate() const
{
    sim.validate();
    if (iterations < 1 || framesPerBurst < 1)
        throw std::invalid_argument("iterations and framesPerBurst must be >= 1");
    if (scenario == Scenario::Doppler && residualDopplerHz == 0.0)
        throw std::invalid_argument("Doppler scenario needs a non-zero residual Doppler");
    if (scenario != Scenario::Doppler && residualDopplerHz != 0.0)
        throw std::invalid_argument("residual Doppler only applies to the Doppler scenario");
}

ScenarioConfig make_scenario(const SimConfig& sim, Scenario s, SyncMode m, ModCodId mc, Antenna a)
{
    ScenarioConfig c;
    c.sim = sim;
    c.scenario = s;
    c.syncMode = m;
    c.modcod = framing::modcod(mc);
    c.antenna = a;
    c.iterations = sim.iterations;
    c.framesPerBurst = sim.framesPerBurst;
    switch (mc) {
    case ModCodId::MC4: c.esN0Db = sim.esn0DbQpsk; break;
    case ModCodId::MC12: c.esN0Db = sim.esn0Db8psk; break;
    case ModCodId::MC24: c.esN0Db = sim.esn0Db32apsk; break;
    }
    c.residualDopplerHz = s == Scenario::Doppler ? sim.uncompensatedDopplerHz : 0.0;
    c.masterSeed = sim.masterSeed;
    return c;
}

metrics::LinkMetrics run_burst(const ScenarioConfig& cfg, int iter, BurstDetail* detail)
{
    cfg.validate();
    const SimConfig& sim = cfg.sim;
    const auto& mc = cfg.modcod;
    const auto it = static_cast<std::uint64_t>(iter);
    const std::uint64_t sc = static_cast<std::uint64_t>(cfg.scenario);
    const std::uint64_t ant = static_cast<std::uint64_t>(cfg.antenna);
    const std::uint64_t mci = modcod_index(mc.id);
    auto seed = [&](SeedTag tag) { return derive_seed({cfg.masterSeed, sc, mci, ant, it, tag}); };

    // transmit
    const auto burst = framing::build_bit_burst(seed(kData), mc, cfg.framesPerBurst);
    const framing::IdentityCodec codec;
    std::vector<framing::PlFrame> frames;
    frames.reserve(static_cast<std::size_t>(cfg.framesPerBurst));
    for (int f = 0; f < cfg.framesPerBurst; ++f)
        frames.push_back(framing::build_plframe(burst.frame_bits(f, mc), mc, sim.pilots, codec, sim.scramblingIndex));
    framing::PulseShapeConfig ps;
    ps.rolloff = sim.rolloff;
    ps.samplesPerSymbol = sim.samples_per_symbol();
    ps.spanSymbols = sim.rrcSpanSymbols;
    ps.symbolRate = sim.symbolRateHz;
    IqBlock x = framing::pulse_shape(frames, ps);

    BurstDetail d;
    // software channel; the geometric Doppler is pre-compensated, only the
    // configured residual reaches the receiver
    if (sim.channelEnabled) {
        auto profile = sim.tdlProfile.empty() ? channel::load_ntn_tdl_c(sim.rmsDelaySpreadS)
                                              : channel::load_tdl_profile(sim.tdlProfile, sim.rmsDelaySpreadS);
        profile.shadowingStdDb = sim.shadowingStdDb;
        auto geom = channel::geometry_from_elevation(sim.elevationDeg, sim.satAltitudeM, sim.satVelocityMps);
        geom.earthRadius = sim.earthRadiusM;
        geom.centralAngle = channel::central_angle_from_elevation(sim.elevationDeg, sim.satAltitudeM, sim.earthRadiusM);
        channel::ChannelOptions co;
        co.dopplerCompensationHz = channel::doppler_shift(geom, sim.centerFrequencyHz);
        const auto real = channel::realize_channel(profile, geom, sim.centerFrequencyHz, x.sampleRate, x.size(),
                                                   seed(kChannel), co);
        d.channelDopplerHz = real.losDoppler;
        x = channel::apply_channel(x, real);
    }

    // hardware path
    impairments::ImpairmentConfig ic;
    ic.carrierFreq = sim.centerFrequencyHz;
    ic.seed = seed(kImpair);
    if (cfg.impairmentsEnabled) {
        Rng osc(derive_seed({cfg.masterSeed, sc, mci, ant, it, kOscillator, static_cast<std::uint64_t>(cfg.syncMode)}));
        auto tx = impairments::internal_oscillator(osc, sim.internalOscTolerance, sim.internalPhaseNoiseStd);
        auto rx = impairments::internal_oscillator(osc, sim.internalOscTolerance, sim.internalPhaseNoiseStd);
        if (cfg.syncMode == SyncMode::Gpsdo) {
            tx = impairments::gpsdo_discipline(tx, sim.gpsdoStability, osc, sim.gpsdoPhaseNoiseFactor);
            rx = impairments::gpsdo_discipline(rx, sim.gpsdoStability, osc, sim.gpsdoPhaseNoiseFactor);
            std::uniform_real_distribution<double> u(-sim.gpsdoTimingAccuracyS, sim.gpsdoTimingAccuracyS);
            ic.startOffsetSec = sim.gpsdoTimingAccuracyS > 0.0 ? u(osc) : 0.0;
        }
        if (cfg.forcedTxFreqError)
            tx.fractionalFreqError = tx.samplingClockError = *cfg.forcedTxFreqError;
        if (cfg.forcedRxFreqError)
            rx.fractionalFreqError = rx.samplingClockError = *cfg.forcedRxFreqError;
        ic.txOsc = tx;
        ic.rxOsc = rx;
        ic.extraCfoHz = cfg.residualDopplerHz;
        if (cfg.scenario == Scenario::Interference) {
            impairments::InterfererConfig ifc;
            ifc.bandwidth = sim.interfererBandwidthHz;
            ifc.centerOffset = sim.interfererCenterOffsetHz;
            ifc.power = std::pow(10.0, -sim.carrierToInterferenceDb / 10.0);
            ic.interferer = ifc;
        }
    }
    if (cfg.noiseEnabled)
        ic.noisePower = ps.samplesPerSymbol / std::pow(10.0, cfg.effective_esn0_db() / 10.0);
    x = impairments::apply_impairments(x, ic);

    d.trueCfoHz = impairments::derive_cfo(ic.carrierFreq, ic.txOsc, ic.rxOsc) + ic.extraCfoHz;
    d.trueSco = ic.txOsc.samplingClockError - ic.rxOsc.samplingClockError;
    d.startOffsetS = ic.startOffsetSec;
    d.noisePower = ic.noisePower;

    // receive
    receiver::ReceiverConfig rc;
    rc.fllLoopBw = sim.fllLoopBw;
    rc.timingLoopBw = sim.timingLoopBw;
    rc.samplesPerSymbol = ps.samplesPerSymbol;
    rc.rolloff = sim.rolloff;
    rc.spanSymbols = sim.rrcSpanSymbols;
    rc.symbolRate = sim.symbolRateHz;
    rc.frameSyncThreshold = sim.frameSyncThreshold;
    rc.pilotsEnabled = sim.pilots;
    rc.scramblingIndex = sim.scramblingIndex;
    rc.expectedFrames = cfg.framesPerBurst;
    rc.trace = detail != nullptr;
    rc.cfoSearchRangeHz = cfg.syncMode == SyncMode::Gpsdo ? 2.0 * sim.centerFrequencyHz * sim.gpsdoStability
                                                          : sim.symbolRateHz / 4.0;
    d.report = receiver::receive_burst(x, rc, mc, codec);

    // score
    metrics::LinkMetrics m;
    std::vector<std::vector<std::uint8_t>> txBits;
    std::vector<bool> ok;
    for (int f = 0; f < cfg.framesPerBurst; ++f) {
        const auto bits = burst.frame_bits(f, mc);
        txBits.emplace_back(bits.begin(), bits.end());
        const auto& rx = d.report.recoveredBits[static_cast<std::size_t>(f)];
        const std::uint64_t e = rx.empty() ? bits.size() : metrics::count_bit_errors(bits, rx);
        m.bitErrors += e;
        m.bitsCounted += bits.size();
        ok.push_back(!rx.empty() && e == 0);
    }
    m.ber = metrics::ber(txBits, d.report.recoveredBits);
    m.fer = metrics::fer(ok);
    m.framesCounted = cfg.framesPerBurst;
    m.frameErrors = static_cast<int>(std::count(ok.begin(), ok.end(), false));
    m.framesDetected = d.report.frames_detected();
    m.snrEstimateDb = d.report.snrEstimateDb;

    if (detail)
        *detail = std::move(d);
    return m;
}

std::string CellId::label() const
{
    return to_string(antenna) + "_" + to_string(scenario) + "_" + framing::modcod(modcod).name() + "_"
           + to_string(syncMode);
}

bool MatrixResult::any_error() const
{
    return std::any_of(cells.begin(), cells.end(), [](const ScenarioReport& r) { return !r.error.empty(); });
}

ComparisonTable build_table(const std::vector<ScenarioReport>& cells)
{
    auto find = [&](Antenna a, Scenario s, ModCodId mc, SyncMode m) -> const ScenarioReport* {
        for (const auto& c : cells)
            if (c.cell.antenna == a && c.cell.scenario == s && c.cell.modcod == mc && c.cell.syncMode == m)
                return c.error.empty() ? &c : nullptr;
        return nullptr;
    };
    ComparisonTable t;
    for (Antenna a : kAntennas)
        for (Scenario s : kScenarios) {
            TableRow row{a, s, {}};
            for (ModCodId mc : framing::all_modcods()) {
                const auto* u = find(a, s, mc, SyncMode::Internal);
                const auto* g = find(a, s, mc, SyncMode::Gpsdo);
                if (u && g) {
                    const auto cmp = metrics::compare(u->aggregate, g->aggregate);
                    row.perModcod[modcod_slot(mc)] = {cmp.npgBer, cmp.npgFer, cmp.snrGainDb};
                }
            }
            t.rows.push_back(row);
        }
    return t;
}

MatrixResult run_matrix(const SimConfig& cfg, const MatrixFilter& filter, const RunOptions& opts)
{
    cfg.validate();
    MatrixResult res;
    res.config = cfg;

    std::vector<ScenarioConfig> cellCfg;
    for (Antenna a : kAntennas)
        for (Scenario s : kScenarios) {
            if (filter.scenario && *filter.scenario != s)
                continue;
            for (ModCodId mc : framing::all_modcods()) {
                if (filter.modcod && *filter.modcod != mc)
                    continue;
                for (SyncMode m : kSyncModes) {
                    if (filter.syncMode && *filter.syncMode != m)
                        continue;
                    cellCfg.push_back(make_scenario(cfg, s, m, mc, a));
                    res.cells.push_back({{s, m, mc, a}, {}, {}, {}});
                }
            }
        }

    struct Job
    {
        std::size_t cell;
        int iter;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cellCfg.size(); ++c)
        for (int i = 0; i < cellCfg[c].iterations; ++i)
            jobs.push_back({c, i});
    std::vector<metrics::LinkMetrics> out(jobs.size());
    std::vector<std::string> err(jobs.size());

    std::atomic<std::size_t> next{0};
    std::mutex logMutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size())
                return;
            const auto& job = jobs[j];
            try {
                if (opts.traceDir) {
                    BurstDetail d;
                    out[j] = run_burst(cellCfg[job.cell], job.iter, &d);
                    const auto path = *opts.traceDir
                                      / ("trace_" + res.cells[job.cell].cell.label() + "_" + std::to_string(job.iter) + ".csv");
                    receiver::write_trace_csv(path.string(), d.report.trace);
                } else {
                    out[j] = run_burst(cellCfg[job.cell], job.iter);
                }
            } catch (const std::exception& e) {
                err[j] = e.what();
            }
            if (!opts.quiet) {
                std::lock_guard<std::mutex> lock(logMutex);
                std::fprintf(stderr, "[%zu/%zu] %s iter %d%s\n", j + 1, jobs.size(),
                             res.cells[job.cell].cell.label().c_str(), job.iter, err[j].empty() ? "" : " FAILED");
            }
        }
    };
    unsigned n = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : std::max(1u, std::thread::hardware_concurrency());
    n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& cell = res.cells[jobs[j].cell];
        if (!err[j].empty() && cell.error.empty())
            cell.error = "iteration " + std::to_string(jobs[j].iter) + ": " + err[j];
        cell.perIteration.push_back(out[j]);
    }
    for (auto& cell : res.cells)
        if (cell.error.empty() && !cell.perIteration.empty())
            cell.aggregate = metrics::aggregate(cell.perIteration);

    res.table = build_table(res.cells);
    return res;
}

std::string table_csv(const ComparisonTable& t)
{
    std::string s = "Antenna,Scenario";
    for (ModCodId mc : framing::all_modcods()) {
        const auto n = framing::modcod(mc).name();
        s += "," + n + " NPG-BER," + n + " NPG-FER," + n + " SNR gain (dB)";
    }
    s += "\n";
    for (const auto& r : t.rows) {
        s += table_antenna(r.antenna) + "," + table_scenario(r.scenario);
        for (const auto& e : r.perModcod)
            s += "," + fixed4(e.npgBer) + "," + fixed4(e.npgFer) + "," + fixed4(e.snrGainDb);
        s += "\n";
    }
    return s;
}

json table_to_json(const ComparisonTable& t)
{
    json rows = json::array();
    for (const auto& r : t.rows) {
        json row = {{"antenna", to_string(r.antenna)}, {"scenario", to_string(r.scenario)}};
        for (ModCodId mc : framing::all_modcods()) {
            const auto& e = r.perModcod[modcod_slot(mc)];
            row[framing::modcod(mc).name()] = {
                {"npg_ber", opt_json(e.npgBer)}, {"npg_fer", opt_json(e.npgFer)}, {"snr_gain_db", opt_json(e.snrGainDb)}};
        }
        rows.push_back(row);
    }
    return rows;
}

ComparisonTable table_from_json(const json& j)
{
    ComparisonTable t;
    for (const auto& row : j) {
        TableRow r{parse_antenna(row.at("antenna").get<std::string>()),
                   parse_scenario(row.at("scenario").get<std::string>()),
                   {}};
        for (ModCodId mc : framing::all_modcods()) {
            const auto& e = row.at(framing::modcod(mc).name());
            r.perModcod[modcod_slot(mc)] = {opt_from(e.at("npg_ber")), opt_from(e.at("npg_fer")),
                                            opt_from(e.at("snr_gain_db"))};
        }
        t.rows.push_back(r);
    }
    return t;
}

bool operator==(const ComparisonTable& a, const ComparisonTable& b)
{
    if (a.rows.size() != b.rows.size())
        return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& x = a.rows[i];
        const auto& y = b.rows[i];
        if (x.antenna != y.antenna || x.scenario != y.scenario)
            return false;
        for (std::size_t k = 0; k < 3; ++k)
            if (x.perModcod[k].npgBer != y.perModcod[k].npgBer || x.perModcod[k].npgFer != y.perModcod[k].npgFer
                || x.perModcod[k].snrGainDb != y.perModcod[k].snrGainDb)
                return false;
    }
    return true;
}

json to_json(const MatrixResult& r)
{
    json cells = json::array();
    for (const auto& c : r.cells) {
        json it = json::array();
        for (const auto& m : c.perIteration)
            it.push_back(metrics_json(m));
        cells.push_back({{"label", c.cell.label()},
                         {"antenna", to_string(c.cell.antenna)},
                         {"scenario", to_string(c.cell.scenario)},
                         {"modcod", framing::modcod(c.cell.modcod).name()},
                         {"sync_mode", to_string(c.cell.syncMode)},
                         {"error", c.error.empty() ? json(nullptr) : json(c.error)},
                         {"per_iteration", it},
                         {"aggregate", metrics_json(c.aggregate)}});
    }
    return {{"config", to_json(r.config)}, {"cells", cells}, {"table", table_to_json(r.table)}};
}

std::vector<std::filesystem::path> emit_report(const MatrixResult& r, const std::filesystem::path& dir,
                                               ReportFormat format)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto write = [&](const std::filesystem::path& p, const std::string& body) {
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + p.string());
        out << body;
        if (!out)
            throw std::runtime_error("write failed for " + p.string());
        written.push_back(p);
    };
    if (format != ReportFormat::Json)
        write(dir / "matrix.csv", table_csv(r.table));
    if (format != ReportFormat::Csv)
        write(dir / "matrix.json", to_json(r).dump(2) + "\n");

    for (const auto& row : r.table.rows) {
        const std::string stem = "series_" + to_string(row.antenna) + "_" + to_string(row.scenario) + "_";
        const std::array<std::pair<const char*, std::optional<double> TableEntry::*>, 3> metrics{
            {{"npg_ber", &TableEntry::npgBer}, {"npg_fer", &TableEntry::npgFer}, {"snr_gain", &TableEntry::snrGainDb}}};
        for (const auto& [name, member] : metrics) {
            std::string body = std::string("modcod,") + name + "\n";
            for (ModCodId mc : framing::all_modcods())
                body += framing::modcod(mc).name() + "," + fixed4(row.perModcod[modcod_slot(mc)].*member) + "\n";
            write(dir / (stem + name + ".csv"), body);
        }
    }
    return written;
}

} // namespace dvbs2sim::harness
