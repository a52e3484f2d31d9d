#include "dvbs2sim/iq.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dvbs2sim {

namespace {

static_assert(std::endian::native == std::endian::little,
              "I/Q file writer assumes a little-endian host");

std::filesystem::path sidecar_path(const std::filesystem::path& path)
{
    auto p = path;
    p += ".json";
    return p;
}

} // namespace

void write_iq_file(const std::filesystem::path& path,
                   const std::vector<Complex>& samples,
                   const IqFileInfo& info)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");

    std::vector<float> buf(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        buf[2 * i] = static_cast<float>(samples[i].real());
        buf[2 * i + 1] = static_cast<float>(samples[i].imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out)
        throw std::runtime_error("write failed: " + path.string());

    nlohmann::json meta = {
        {"format", "cf32_le"},
        {"sample_rate", info.sampleRate},
        {"modcod", info.modcod},
        {"content", info.content.empty() ? "iq" : info.content},
        {"samples", samples.size()},
    };
    std::ofstream side(sidecar_path(path));
    if (!side)
        throw std::runtime_error("cannot write sidecar for " + path.string());
    side << meta.dump(2) << '\n';
}

void write_iq_file(const std::filesystem::path& path, const IqBlock& block,
                   const std::string& modcod)
{
    write_iq_file(path, block.samples, IqFileInfo{block.sampleRate, modcod, "iq", block.size()});
}

IqBlock read_iq_file(const std::filesystem::path& path, IqFileInfo* info)
{
    std::ifstream side(sidecar_path(path));
    if (!side)
        throw std::runtime_error("missing sidecar for " + path.string());
    auto meta = nlohmann::json::parse(side);
    if (meta.value("format", "") != "cf32_le")
        throw std::runtime_error("unsupported I/Q format in " + path.string());

    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % (2 * sizeof(float)) != 0)
        throw std::runtime_error("truncated I/Q file " + path.string());
    in.seekg(0);
    std::vector<float> buf(bytes / sizeof(float));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));

    IqBlock block;
    block.sampleRate = meta.at("sample_rate").get<double>();
    block.samples.resize(buf.size() / 2);
    for (std::size_t i = 0; i < block.samples.size(); ++i)
        block.samples[i] = {buf[2 * i], buf[2 * i + 1]};

    if (info) {
        info->sampleRate = block.sampleRate;
        info->modcod = meta.value("modcod", "");
        info->content = meta.value("content", "iq");
        info->samples = block.samples.size();
    }
    return block;
}

double mean_power(const std::vector<Complex>& x)
{
    if (x.empty())
        return 0.0;
    double acc = 0.0;
    for (const auto& v : x)
        acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

} // namespace dvbs2sim
