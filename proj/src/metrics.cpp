#include "dvbs2sim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dvbs2sim::metrics {

double floor_rate(double r)
{
    return std::clamp(r, kRateFloor, 1.0);
}

std::uint64_t count_bit_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx)
{
    if (tx.size() != rx.size())
        throw std::invalid_argument("bit layout mismatch");
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < tx.size(); ++i)
        e += (tx[i] & 1u) != (rx[i] & 1u);
    return e;
}

double ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx)
{
    if (tx.empty())
        throw std::invalid_argument("no bits to compare");
    return floor_rate(static_cast<double>(count_bit_errors(tx, rx)) / static_cast<double>(tx.size()));
}

double ber(const std::vector<std::vector<std::uint8_t>>& tx, const std::vector<std::vector<std::uint8_t>>& rx)
{
    if (tx.size() != rx.size())
        throw std::invalid_argument("frame count mismatch");
    std::uint64_t errors = 0, total = 0;
    for (std::size_t f = 0; f < tx.size(); ++f) {
        total += tx[f].size();
        errors += rx[f].empty() ? tx[f].size() : count_bit_errors(tx[f], rx[f]);
    }
    if (total == 0)
        throw std::invalid_argument("no bits to compare");
    return floor_rate(static_cast<double>(errors) / static_cast<double>(total));
}

double fer(const std::vector<bool>& perFrameOk)
{
    if (perFrameOk.empty())
        throw std::invalid_argument("fer needs at least one frame");
    const auto bad = std::count(perFrameOk.begin(), perFrameOk.end(), false);
    return floor_rate(static_cast<double>(bad) / static_cast<double>(perFrameOk.size()));
}

double estimate_snr(std::span<const Complex> rx, std::span<const Complex> known, std::size_t blockSize)
{
    if (rx.size() != known.size())
        throw std::invalid_argument("pilot length mismatch");
    if (rx.size() < 36)
        throw std::invalid_argument("need at least 36 pilot symbols");
    if (blockSize == 0)
        blockSize = rx.size();
    if (blockSize < 2)
        throw std::invalid_argument("block size must be at least 2");

    double sig = 0.0, noise = 0.0;
    std::size_t dof = 0, blocks = 0;
    for (std::size_t b = 0; b + blockSize <= rx.size(); b += blockSize) {
        Complex mean{};
        for (std::size_t i = b; i < b + blockSize; ++i)
            mean += rx[i] * std::conj(known[i]) / std::norm(known[i]);
        mean /= static_cast<double>(blockSize);
        double ss = 0.0;
        for (std::size_t i = b; i < b + blockSize; ++i)
            ss += std::norm(rx[i] * std::conj(known[i]) / std::norm(known[i]) - mean);
        const double var = ss / static_cast<double>(blockSize - 1);
        sig += std::norm(mean) - var / static_cast<double>(blockSize);
        noise += ss;
        dof += blockSize - 1;
        ++blocks;
    }
    sig /= static_cast<double>(blocks);
    noise /= static_cast<double>(dof);
    if (noise <= 0.0)
        return kSnrCeilingDb;
    if (sig <= 0.0)
        return kSnrFloorDb;
    return std::clamp(10.0 * std::log10(sig / noise), kSnrFloorDb, kSnrCeilingDb);
}

double npg(double valueUnsync, double valueSync)
{
    if (valueUnsync < 0.0 || valueSync < 0.0)
        throw std::invalid_argument("npg inputs must be non-negative");
    const double d = valueUnsync + valueSync;
    if (d == 0.0)
        throw std::invalid_argument("npg undefined for two zero values");
    return (valueUnsync - valueSync) / d;
}

double throughput(double symbolRate, int bitsPerSymbol, double codeRate)
{
    if (symbolRate <= 0.0 || bitsPerSymbol <= 0 || codeRate <= 0.0)
        throw std::invalid_argument("throughput inputs must be positive");
    return symbolRate * bitsPerSymbol * codeRate;
}

double snr_gain(double snrSyncDb, double snrUnsyncDb)
{
    return snrSyncDb - snrUnsyncDb;
}

NpgReport compare(const LinkMetrics& unsync, const LinkMetrics& sync)
{
    return {npg(floor_rate(unsync.ber), floor_rate(sync.ber)), npg(floor_rate(unsync.fer), floor_rate(sync.fer)),
            snr_gain(sync.snrEstimateDb, unsync.snrEstimateDb)};
}

LinkMetrics aggregate(const std::vector<LinkMetrics>& perIteration)
{
    if (perIteration.empty())
        throw std::invalid_argument("nothing to aggregate");
    LinkMetrics a;
    a.ber = a.fer = a.snrEstimateDb = 0.0;
    for (const auto& m : perIteration) {
        a.ber += m.ber;
        a.fer += m.fer;
        a.snrEstimateDb += m.snrEstimateDb;
        a.bitsCounted += m.bitsCounted;
        a.bitErrors += m.bitErrors;
        a.framesCounted += m.framesCounted;
        a.frameErrors += m.frameErrors;
        a.framesDetected += m.framesDetected;
    }
    const auto n = static_cast<double>(perIteration.size());
    a.ber = floor_rate(a.ber / n);
    a.fer = floor_rate(a.fer / n);
    a.snrEstimateDb /= n;
    return a;
}

} // namespace dvbs2sim::metrics
