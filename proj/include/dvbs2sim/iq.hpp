#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace dvbs2sim {

using Complex = std::complex<double>;

/// A finite run of complex baseband samples at a fixed sample rate.
struct IqBlock
{
    std::vector<Complex> samples;
    double sampleRate = 0.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

/// Sidecar metadata stored next to a raw I/Q dump.
struct IqFileInfo
{
    double sampleRate = 0.0;
    std::string modcod;   // empty when not applicable
    std::string content;  // "iq" or "symbols"
    std::size_t samples = 0;
};

// Raw file: interleaved float32 I/Q, little-endian. Sidecar: <path>.json.
void write_iq_file(const std::filesystem::path& path,
                   const std::vector<Complex>& samples,
                   const IqFileInfo& info);

void write_iq_file(const std::filesystem::path& path, const IqBlock& block,
                   const std::string& modcod = {});

IqBlock read_iq_file(const std::filesystem::path& path, IqFileInfo* info = nullptr);

double mean_power(const std::vector<Complex>& x);

} // namespace dvbs2sim
