#pragma once

#include <cstdint>
#include <optional>

#include "dvbs2sim/iq.hpp"
#include "dvbs2sim/rng.hpp"

namespace dvbs2sim::impairments {

struct OscillatorModel
{
    double fractionalFreqError = 0.0;  // epsilon
    double samplingClockError = 0.0;   // epsilon_s
    double phaseNoiseStd = 0.0;        // rad/sample, random-walk increment

    void validate() const;
};

struct InterfererConfig
{
    double bandwidth = 300e3;   // Hz
    double centerOffset = 0.0;  // Hz
    double power = 0.1;         // linear, relative to unit signal power

    void validate(double sampleRate) const;
};

struct ImpairmentConfig
{
    OscillatorModel txOsc;
    OscillatorModel rxOsc;
    double carrierFreq = 437e6;
    double noisePower = 0.0;
    std::optional<InterfererConfig> interferer;
    double extraCfoHz = 0.0;      // e.g. uncompensated Doppler
    double startOffsetSec = 0.0;  // constant timing offset tau_0
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr double kInternalTolerance = 2.5e-6;
inline constexpr double kInternalPhaseNoise = 1e-4;
inline constexpr double kGpsdoPhaseNoiseFactor = 0.01;

/// Free-running oscillator: epsilon uniform in +/-tolerance, epsilon_s = epsilon.
OscillatorModel internal_oscillator(Rng& rng, double tolerance = kInternalTolerance,
                                    double phaseNoiseStd = kInternalPhaseNoise);

/// Disciplined copy: epsilon and epsilon_s redrawn in +/-stability,
/// phase noise scaled by `phaseNoiseFactor`.
OscillatorModel gpsdo_discipline(const OscillatorModel& osc, double stability, Rng& rng,
                                 double phaseNoiseFactor = kGpsdoPhaseNoiseFactor);
OscillatorModel gpsdo_discipline(const OscillatorModel& osc, double stability, std::uint64_t seed,
                                 double phaseNoiseFactor = kGpsdoPhaseNoiseFactor);

double derive_cfo(double f0, const OscillatorModel& tx, const OscillatorModel& rx);

IqBlock apply_cfo_and_phase_noise(const IqBlock& x, double cfoHz, double phaseNoiseStd, std::uint64_t seed);

/// Resamples so that output[n] = x(n(1 + epsS) + offsetSamples); positions
/// outside the input read as zero. Output length equals input length.
IqBlock apply_sco(const IqBlock& x, double epsS, double offsetSamples = 0.0);

IqBlock add_awgn(const IqBlock& x, double noisePower, std::uint64_t seed);

IqBlock generate_interferer(const InterfererConfig& cfg, std::size_t nSamples, double sampleRate,
                            std::uint64_t seed);

/// Full hardware path on a shaped (and channel-filtered) waveform:
/// SCO and tau_0, then CFO and phase noise, then interferer and AWGN.
IqBlock apply_impairments(const IqBlock& x, const ImpairmentConfig& cfg);

} // namespace dvbs2sim::impairments
