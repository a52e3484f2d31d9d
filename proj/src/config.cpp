#include "dvbs2sim/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

namespace dvbs2sim {

namespace {

using nlohmann::json;

struct Field
{
    std::function<json(const SimConfig&)> get;
    std::function<void(SimConfig&, const json&)> set;
};

template <typename T>
Field field(T SimConfig::*m)
{
    return {[m](const SimConfig& c) { return json(c.*m); },
            [m](SimConfig& c, const json& v) {
                if constexpr (std::is_same_v<T, bool>) {
                    if (!v.is_boolean())
                        throw std::invalid_argument("expected boolean");
                } else if constexpr (std::is_same_v<T, std::string>) {
                    if (!v.is_string())
                        throw std::invalid_argument("expected string");
                } else if constexpr (std::is_integral_v<T>) {
                    if (!v.is_number_integer())
                        throw std::invalid_argument("expected integer");
                    if constexpr (std::is_unsigned_v<T>)
                        if (v.is_number_integer() && !v.is_number_unsigned())
                            throw std::invalid_argument("expected non-negative integer");
                } else {
                    if (!v.is_number())
                        throw std::invalid_argument("expected number");
                }
                c.*m = v.get<T>();
            }};
}

const std::map<std::string, Field>& fields()
{
    static const std::map<std::string, Field> f = {
        {"center_frequency_hz", field(&SimConfig::centerFrequencyHz)},
        {"sample_rate_hz", field(&SimConfig::sampleRateHz)},
        {"symbol_rate_hz", field(&SimConfig::symbolRateHz)},
        {"frame_bits", field(&SimConfig::frameBits)},
        {"rolloff", field(&SimConfig::rolloff)},
        {"rrc_span_symbols", field(&SimConfig::rrcSpanSymbols)},
        {"pilots", field(&SimConfig::pilots)},
        {"scrambling_index", field(&SimConfig::scramblingIndex)},
        {"fll_loop_bw", field(&SimConfig::fllLoopBw)},
        {"timing_loop_bw", field(&SimConfig::timingLoopBw)},
        {"frame_sync_threshold", field(&SimConfig::frameSyncThreshold)},
        {"sat_altitude_m", field(&SimConfig::satAltitudeM)},
        {"elevation_deg", field(&SimConfig::elevationDeg)},
        {"sat_velocity_mps", field(&SimConfig::satVelocityMps)},
        {"earth_radius_m", field(&SimConfig::earthRadiusM)},
        {"shadowing_std_db", field(&SimConfig::shadowingStdDb)},
        {"rms_delay_spread_s", field(&SimConfig::rmsDelaySpreadS)},
        {"tdl_profile", field(&SimConfig::tdlProfile)},
        {"channel_enabled", field(&SimConfig::channelEnabled)},
        {"interferer_bandwidth_hz", field(&SimConfig::interfererBandwidthHz)},
        {"interferer_center_offset_hz", field(&SimConfig::interfererCenterOffsetHz)},
        {"carrier_to_interference_db", field(&SimConfig::carrierToInterferenceDb)},
        {"uncompensated_doppler_hz", field(&SimConfig::uncompensatedDopplerHz)},
        {"internal_osc_tolerance", field(&SimConfig::internalOscTolerance)},
        {"internal_phase_noise_std", field(&SimConfig::internalPhaseNoiseStd)},
        {"gpsdo_stability", field(&SimConfig::gpsdoStability)},
        {"gpsdo_timing_accuracy_s", field(&SimConfig::gpsdoTimingAccuracyS)},
        {"gpsdo_phase_noise_factor", field(&SimConfig::gpsdoPhaseNoiseFactor)},
        {"frames_per_burst", field(&SimConfig::framesPerBurst)},
        {"iterations", field(&SimConfig::iterations)},
        {"esn0_db_qpsk", field(&SimConfig::esn0DbQpsk)},
        {"esn0_db_8psk", field(&SimConfig::esn0Db8psk)},
        {"esn0_db_32apsk", field(&SimConfig::esn0Db32apsk)},
        {"antenna_gain_omni_db", field(&SimConfig::antennaGainOmniDb)},
        {"antenna_gain_rhcp_db", field(&SimConfig::antennaGainRhcpDb)},
        {"master_seed", field(&SimConfig::masterSeed)},
        {"workers", field(&SimConfig::workers)},
    };
    return f;
}

} // namespace

int SimConfig::samples_per_symbol() const
{
    return static_cast<int>(std::lround(sampleRateHz / symbolRateHz));
}

void SimConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw std::invalid_argument(what);
    };
    require(centerFrequencyHz > 0.0, "center_frequency_hz must be positive");
    require(sampleRateHz > 0.0 && symbolRateHz > 0.0, "sample and symbol rates must be positive");
    const double ratio = sampleRateHz / symbolRateHz;
    require(std::abs(ratio - std::round(ratio)) < 1e-9 && std::round(ratio) >= 2,
            "sample_rate_hz / symbol_rate_hz must be an integer >= 2");
    require(frameBits == 16200, "only short frames (16200 bits) are supported");
    require(rolloff > 0.0 && rolloff <= 1.0, "rolloff must be in (0, 1]");
    require(rrcSpanSymbols >= 1, "rrc_span_symbols must be >= 1");
    require(fllLoopBw > 0.0 && fllLoopBw < 1.0, "fll_loop_bw must be in (0, 1)");
    require(timingLoopBw > 0.0 && timingLoopBw < 1.0, "timing_loop_bw must be in (0, 1)");
    require(frameSyncThreshold >= 0.0 && frameSyncThreshold <= 1.0, "frame_sync_threshold must be in [0, 1]");
    require(satAltitudeM > 0.0 && satVelocityMps > 0.0 && earthRadiusM > 0.0, "geometry must be positive");
    require(elevationDeg > 0.0 && elevationDeg <= 90.0, "elevation_deg must be in (0, 90]");
    require(shadowingStdDb >= 0.0, "shadowing_std_db must be non-negative");
    require(rmsDelaySpreadS > 0.0, "rms_delay_spread_s must be positive");
    require(interfererBandwidthHz > 0.0 && interfererBandwidthHz <= sampleRateHz,
            "interferer_bandwidth_hz must be in (0, sample_rate_hz]");
    require(internalOscTolerance >= 0.0 && internalOscTolerance < 1e-4, "internal_osc_tolerance out of range");
    require(internalPhaseNoiseStd >= 0.0, "internal_phase_noise_std must be non-negative");
    require(gpsdoStability >= 0.0 && gpsdoStability < 1e-4, "gpsdo_stability out of range");
    require(gpsdoTimingAccuracyS >= 0.0, "gpsdo_timing_accuracy_s must be non-negative");
    require(gpsdoPhaseNoiseFactor >= 0.0, "gpsdo_phase_noise_factor must be non-negative");
    require(framesPerBurst >= 1, "frames_per_burst must be >= 1");
    require(iterations >= 1, "iterations must be >= 1");
    require(workers >= 0, "workers must be non-negative");
}

SimConfig default_config()
{
    return SimConfig{};
}

nlohmann::json to_json(const SimConfig& c)
{
    json j = json::object();
    for (const auto& [k, f] : fields())
        j[k] = f.get(c);
    return j;
}

SimConfig config_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw std::invalid_argument("config must be a JSON object");
    SimConfig c = default_config();
    const auto& f = fields();
    for (const auto& [k, v] : j.items()) {
        const auto it = f.find(k);
        if (it == f.end())
            throw std::invalid_argument("unknown config key '" + k + "'");
        try {
            it->second.set(c, v);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config key '" + k + "': " + e.what());
        }
    }
    c.validate();
    return c;
}

SimConfig load_config(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw std::runtime_error("cannot open config " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + file.string() + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace dvbs2sim
