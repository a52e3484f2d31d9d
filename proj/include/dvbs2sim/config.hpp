#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace dvbs2sim {

/// Simulation parameters; JSON keys mirror the member names in snake_case.
struct SimConfig
{
    double centerFrequencyHz = 437e6;
    double sampleRateHz = 2e6;
    double symbolRateHz = 1e6;
    int frameBits = 16200;
    double rolloff = 0.35;
    int rrcSpanSymbols = 10;
    bool pilots = true;
    int scramblingIndex = 0;

    double fllLoopBw = 0.8e-3;
    double timingLoopBw = 0.6e-3;
    double frameSyncThreshold = 0.6;

    double satAltitudeM = 500e3;
    double elevationDeg = 45.0;
    double satVelocityMps = 7.8e3;
    double earthRadiusM = 6371e3;
    double shadowingStdDb = 0.8;
    double rmsDelaySpreadS = 80e-9;
    std::string tdlProfile;  // empty: bundled NTN-TDL-C table
    bool channelEnabled = true;

    double interfererBandwidthHz = 300e3;
    double interfererCenterOffsetHz = 0.0;
    double carrierToInterferenceDb = 10.0;
    double uncompensatedDopplerHz = 1000.0;

    double internalOscTolerance = 2.5e-6;
    double internalPhaseNoiseStd = 1e-4;
    double gpsdoStability = 1e-11;
    double gpsdoTimingAccuracyS = 20e-9;
    double gpsdoPhaseNoiseFactor = 0.01;

    int framesPerBurst = 50;
    int iterations = 10;
    double esn0DbQpsk = 9.0;
    double esn0Db8psk = 14.0;
    double esn0Db32apsk = 19.0;
    double antennaGainOmniDb = 0.0;
    double antennaGainRhcpDb = 3.0;

    std::uint64_t masterSeed = 1;
    int workers = 0;  // 0: one per hardware thread

    int samples_per_symbol() const;
    void validate() const;
};

SimConfig default_config();

nlohmann::json to_json(const SimConfig& c);

/// Starts from the defaults and applies every key of `j`; unknown keys and
/// type mismatches throw std::invalid_argument.
SimConfig config_from_json(const nlohmann::json& j);

SimConfig load_config(const std::filesystem::path& file);

} // namespace dvbs2sim
