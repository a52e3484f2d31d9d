#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dvbs2sim/iq.hpp"

namespace dvbs2sim::channel {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kEarthRadius = 6371000.0;

struct Geometry
{
    double satAltitude = 500e3;        // m
    double earthRadius = kEarthRadius; // m
    double centralAngle = 0.0;         // rad
    double satVelocity = 7.8e3;        // m/s
    int direction = 1;                 // +1 approaching, -1 receding
    double elevationDeg = 45.0;        // informational

    void validate() const;
};

/// Central angle between the ground station and the sub-satellite point for
/// a given elevation angle.
double central_angle_from_elevation(double elevationDeg, double altitude, double earthRadius = kEarthRadius);

Geometry geometry_from_elevation(double elevationDeg, double altitude = 500e3, double velocity = 7.8e3,
                                 int direction = 1);

double doppler_shift(const Geometry& geom, double f0);

struct TdlTap
{
    double delay = 0.0;   // s
    double powerDb = 0.0; // normalized so that all taps sum to 0 dB
    bool isLos = false;
};

struct TdlProfile
{
    std::vector<TdlTap> taps;
    double ricianKDb = 0.0;
    double rmsDelaySpread = 0.0; // s
    double shadowingStdDb = 0.8;

    std::vector<double> linear_powers() const;
    void validate() const;
};

/// Power-weighted r.m.s. delay spread of the tap set.
double rms_delay_spread(const TdlProfile& p);

/// Loads a tap table (see data/ntn_tdl_c.txt for the format) and scales its
/// delays so that the realized r.m.s. delay spread equals `rmsDelaySpread`.
TdlProfile load_tdl_profile(const std::filesystem::path& file, double rmsDelaySpread);
TdlProfile load_ntn_tdl_c(double rmsDelaySpread);

std::filesystem::path default_data_dir();

/// A fading tap realized as a sum of complex sinusoids (or a static gain when
/// its Doppler spread is zero).
struct FadingTap
{
    int delay = 0;        // samples
    double power = 0.0;   // linear mean power
    Complex staticGain{};
    std::vector<Complex> amplitudes;
    std::vector<double> frequencies; // cycles/sample

    Complex gain(std::size_t n) const;
};

struct ChannelRealization
{
    double losAmplitude = 1.0;
    double losPhase = 0.0;   // rad
    double losDoppler = 0.0; // Hz
    int losDelay = 0;        // samples
    std::vector<FadingTap> taps;
    double shadowingDb = 0.0;
    double sampleRate = 0.0;
    std::size_t length = 0;

    double shadowing_gain() const; // linear amplitude
};

struct ChannelOptions
{
    double dopplerCompensationHz = 0.0; // subtracted from the geometric LOS Doppler
    int sinusoids = 16;
};

ChannelRealization realize_channel(const TdlProfile& profile, const Geometry& geom, double f0, double sampleRate,
                                   std::size_t nSamples, std::uint64_t seed, const ChannelOptions& opts = {});

IqBlock apply_channel(const IqBlock& x, const ChannelRealization& real);

double signal_power(const ChannelRealization& real);

} // namespace dvbs2sim::channel
