#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dvbs2sim/iq.hpp"

namespace dvbs2sim::metrics {

inline constexpr double kRateFloor = 1e-8;
inline constexpr double kSnrCeilingDb = 40.0;
inline constexpr double kSnrFloorDb = -20.0;

struct LinkMetrics
{
    double ber = 1.0;
    double fer = 1.0;
    double snrEstimateDb = kSnrFloorDb;
    std::uint64_t bitsCounted = 0;
    std::uint64_t bitErrors = 0;
    int framesCounted = 0;
    int frameErrors = 0;
    int framesDetected = 0;
};

struct NpgReport
{
    double npgBer = 0.0;
    double npgFer = 0.0;
    double snrGainDb = 0.0;
};

double floor_rate(double r);

/// Bit errors between two equally sized bit vectors.
std::uint64_t count_bit_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

double ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

/// Frame-organized BER: an empty received frame is an erasure and counts
/// every transmitted bit of that frame as an error.
double ber(const std::vector<std::vector<std::uint8_t>>& tx, const std::vector<std::vector<std::uint8_t>>& rx);

double fer(const std::vector<bool>& perFrameOk);

/// Data-aided SNR (dB). With blockSize > 0 the coherent mean is taken per
/// block of that many symbols and the moments are pooled.
double estimate_snr(std::span<const Complex> rxPilots, std::span<const Complex> knownPilots,
                    std::size_t blockSize = 0);

double npg(double valueUnsync, double valueSync);

double throughput(double symbolRate, int bitsPerSymbol, double codeRate);

double snr_gain(double snrSyncDb, double snrUnsyncDb);

NpgReport compare(const LinkMetrics& unsync, const LinkMetrics& sync);

/// Mean of per-iteration metrics (rates averaged, then re-floored).
LinkMetrics aggregate(const std::vector<LinkMetrics>& perIteration);

} // namespace dvbs2sim::metrics
