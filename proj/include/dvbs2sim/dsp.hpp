#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dvbs2sim/iq.hpp"

namespace dvbs2sim::dsp {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wraps an angle into [-pi, pi).
double wrap_phase(double phi);

/// Root-raised-cosine taps spanning `spanSymbols` symbols at `samplesPerSymbol`,
/// (spanSymbols * samplesPerSymbol + 1 taps), scaled to sum of squares `energy`.
std::vector<double> rrc_taps(double rolloff, int samplesPerSymbol, int spanSymbols,
                             double energy = 1.0);

/// Full linear convolution: output length x.size() + taps.size() - 1.
std::vector<Complex> convolve(std::span<const Complex> x, std::span<const double> taps);

/// Kaiser-windowed sinc low-pass. `cutoff` is the -6 dB edge in cycles/sample.
std::vector<double> kaiser_lowpass(double cutoff, double transition, double attenuationDb);

/// Fractional-delay interpolator: 16-tap Kaiser-windowed sinc, tabulated in
/// 256 phases with linear blending between neighbouring phase rows.
class FractionalInterpolator
{
public:
    static constexpr int kTaps = 16;
    static constexpr int kHalf = kTaps / 2;
    static constexpr int kPhases = 256;

    FractionalInterpolator();

    /// Value at real-valued position `t` (samples). Samples outside the
    /// block are treated as zero.
    Complex operator()(std::span<const Complex> x, double t) const;

    /// Exact (untabulated) weights for fractional offset mu in [0, 1); weight
    /// j applies to sample floor(t) + j - kHalf + 1.
    static std::array<double, kTaps> weights(double mu);

    static const FractionalInterpolator& instance();

private:
    std::vector<std::array<double, kTaps>> table_; // kPhases + 1 rows
};

} // namespace dvbs2sim::dsp
