#include <doctest.h>

#include <bitset>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "dvbs2sim/dsp.hpp"
#include "dvbs2sim/framing.hpp"
#include "dvbs2sim/receiver.hpp"

using namespace dvbs2sim;
using namespace dvbs2sim::framing;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, unsigned seed)
{
    std::mt19937 g(seed);
    std::vector<std::uint8_t> b(n);
    for (auto& v : b)
        v = static_cast<std::uint8_t>(g() & 1u);
    return b;
}

// Gold-code rotation indices computed straight from the register recursions.
std::vector<int> gold_oracle(int n, int count)
{
    const int len = (1 << 18) - 1;
    std::vector<int> x(len + 18, 0), y(len + 18, 0);
    x[0] = 1;
    for (int i = 0; i < 18; ++i)
        y[i] = 1;
    for (int i = 0; i < len; ++i) {
        x[i + 18] = (x[i + 7] + x[i]) % 2;
        y[i + 18] = (y[i + 10] + y[i + 7] + y[i + 5] + y[i]) % 2;
    }
    auto z = [&](int i) { return (x[(i + n) % len] + y[i]) % 2; };
    std::vector<int> r(count);
    for (int i = 0; i < count; ++i)
        r[i] = 2 * z((i + 131072) % len) + z(i);
    return r;
}

} // namespace

TEST_CASE("modcod table")
{
    const auto m4 = modcod(ModCodId::MC4);
    CHECK(m4.constellation == Constellation::QPSK);
    CHECK(m4.bitsPerSymbol == 2);
    CHECK(m4.rateNum == 1);
    CHECK(m4.rateDen == 2);
    CHECK(m4.packetsPerFrame == 4);
    const auto m12 = modcod(ModCodId::MC12);
    CHECK(m12.constellation == Constellation::PSK8);
    CHECK(m12.code_rate() == doctest::Approx(0.6));
    CHECK(m12.packetsPerFrame == 6);
    const auto m24 = modcod(ModCodId::MC24);
    CHECK(m24.constellation == Constellation::APSK32);
    CHECK(m24.code_rate() == doctest::Approx(0.75));
    CHECK(m24.packetsPerFrame == 7);
    for (auto id : all_modcods()) {
        const auto mc = modcod(id);
        CHECK(kFrameBits % mc.bitsPerSymbol == 0);
        CHECK(mc.info_bits() <= kFrameBits);
        CHECK(parse_modcod(mc.name()).id == id);
    }
    CHECK_THROWS_AS(parse_modcod("MC7"), std::invalid_argument);
}

TEST_CASE("bit burst shape and determinism")
{
    const auto a = build_bit_burst(7, modcod(ModCodId::MC4), 50);
    CHECK(a.rows == 1504);
    CHECK(a.cols == 200);
    CHECK(a.bits.size() == 1504u * 200u);
    const auto b = build_bit_burst(7, modcod(ModCodId::MC24), 1);
    CHECK(b.cols == 7);
    const auto c = build_bit_burst(7, modcod(ModCodId::MC4), 50);
    CHECK(a.bits == c.bits);
    const auto d = build_bit_burst(8, modcod(ModCodId::MC4), 50);
    CHECK(a.bits != d.bits);
    const double ones = std::accumulate(a.bits.begin(), a.bits.end(), 0.0) / static_cast<double>(a.bits.size());
    CHECK(ones == doctest::Approx(0.5).epsilon(0.01));
    CHECK(a.frame_bits(3, modcod(ModCodId::MC4)).size() == 4u * 1504u);
    CHECK(a.at(5, 12) == a.bits[12 * 1504 + 5]);
    CHECK_THROWS(build_bit_burst(1, modcod(ModCodId::MC4), 0));
}

TEST_CASE("identity codec pads with the baseband PRBS")
{
    const auto mc = modcod(ModCodId::MC4);
    const auto info = random_bits(static_cast<std::size_t>(mc.info_bits()), 3);
    IdentityCodec codec;
    const auto cw = codec.encode(info, mc);
    REQUIRE(cw.size() == 16200u);
    CHECK(codec.decode(cw, mc) == info);
    // first output bytes of the 1 + x^14 + x^15 generator from its standard load
    const int expected[3] = {0x03, 0xF6, 0x08};
    for (int b = 0; b < 3; ++b) {
        int v = 0;
        for (int i = 0; i < 8; ++i)
            v = (v << 1) | cw[static_cast<std::size_t>(mc.info_bits() + b * 8 + i)];
        CHECK(v == expected[b]);
    }
    CHECK_THROWS(codec.encode(std::vector<std::uint8_t>(10), mc));
}

TEST_CASE("constellations have unit average energy")
{
    for (auto c : {Constellation::QPSK, Constellation::PSK8, Constellation::APSK32}) {
        const auto& p = constellation_points(c);
        double e = 0.0;
        for (auto v : p)
            e += std::norm(v);
        CHECK(std::abs(e / static_cast<double>(p.size()) - 1.0) < 1e-12);
    }
}

TEST_CASE("QPSK mapping")
{
    const auto mc = modcod(ModCodId::MC4);
    const auto s = map_constellation(std::vector<std::uint8_t>{0, 0, 0, 1, 1, 0, 1, 1}, mc);
    const double h = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(s[0] - Complex(h, h)) < 1e-15);
    CHECK(std::abs(s[1] - Complex(h, -h)) < 1e-15);
    CHECK(std::abs(s[2] - Complex(-h, h)) < 1e-15);
    CHECK(std::abs(s[3] - Complex(-h, -h)) < 1e-15);
    CHECK_THROWS_AS(map_constellation(std::vector<std::uint8_t>{0, 1, 1}, mc), std::invalid_argument);
}

TEST_CASE("8PSK is Gray coded")
{
    const auto& p = constellation_points(Constellation::PSK8);
    std::vector<std::pair<double, int>> byAngle;
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(std::abs(p[static_cast<std::size_t>(i)]) - 1.0) < 1e-12);
        byAngle.push_back({std::arg(p[static_cast<std::size_t>(i)]), i});
    }
    std::sort(byAngle.begin(), byAngle.end());
    for (int k = 0; k < 8; ++k) {
        const int a = byAngle[static_cast<std::size_t>(k)].second;
        const int b = byAngle[static_cast<std::size_t>((k + 1) % 8)].second;
        CHECK(std::bitset<3>(static_cast<unsigned>(a ^ b)).count() == 1);
    }
}

TEST_CASE("32APSK ring geometry")
{
    const auto& p = constellation_points(Constellation::APSK32);
    std::vector<double> r;
    for (auto v : p)
        r.push_back(std::abs(v));
    std::sort(r.begin(), r.end());
    const double r1 = r.front();
    int n1 = 0, n2 = 0, n3 = 0;
    for (double v : r) {
        if (std::abs(v / r1 - 1.0) < 1e-9)
            ++n1;
        else if (std::abs(v / r1 - 2.84) < 1e-9)
            ++n2;
        else if (std::abs(v / r1 - 5.27) < 1e-9)
            ++n3;
    }
    CHECK(n1 == 4);
    CHECK(n2 == 12);
    CHECK(n3 == 16);
    // every point distinct
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            CHECK(std::abs(p[i] - p[j]) > 0.05);
}

TEST_CASE("map then demap is the identity for every MODCOD")
{
    for (auto id : all_modcods()) {
        const auto mc = modcod(id);
        const auto bits = random_bits(kFrameBits, 11);
        CHECK(receiver::demap(map_constellation(bits, mc), mc) == bits);
        // exhaustive over all points
        const auto& pts = constellation_points(mc.constellation);
        for (std::size_t i = 0; i < pts.size(); ++i)
            CHECK(nearest_point(pts[i], mc.constellation) == static_cast<int>(i));
    }
}

TEST_CASE("tie at the origin resolves to the lowest index")
{
    CHECK(nearest_point(Complex{}, Constellation::QPSK) == 0);
    CHECK(nearest_point(Complex{}, Constellation::PSK8) == 0);
    const auto& a = constellation_points(Constellation::APSK32);
    const double inner = std::abs(a[17]);
    int lowest = -1;
    for (int i = 0; i < 32 && lowest < 0; ++i)
        if (std::abs(std::abs(a[static_cast<std::size_t>(i)]) - inner) < 1e-12)
            lowest = i;
    CHECK(nearest_point(Complex{}, Constellation::APSK32) == lowest);
}

TEST_CASE("pi/2-BPSK and SOF")
{
    const double h = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(pi2_bpsk(0, 0) - Complex(h, h)) < 1e-15);
    CHECK(std::abs(pi2_bpsk(1, 0) - Complex(-h, -h)) < 1e-15);
    CHECK(std::abs(pi2_bpsk(0, 1) - Complex(-h, h)) < 1e-15);
    CHECK(std::abs(pi2_bpsk(1, 1) - Complex(h, -h)) < 1e-15);
    const auto sof = sof_symbols();
    REQUIRE(sof.size() == 26u);
    const std::string bits = "01100011010010111010000010"; // 0x18D2E82
    for (int i = 0; i < 26; ++i)
        CHECK(std::abs(sof[static_cast<std::size_t>(i)] - pi2_bpsk(bits[static_cast<std::size_t>(i)] - '0', i)) < 1e-15);
}

TEST_CASE("PLSC codewords")
{
    constexpr std::uint64_t scramble = 0x719D83C953422DFAULL;
    std::vector<std::uint64_t> words;
    for (int f = 0; f < 128; ++f)
        words.push_back(plsc_codeword(static_cast<std::uint8_t>(f)) ^ scramble);
    int dmin = 64;
    for (std::size_t i = 0; i < words.size(); ++i)
        for (std::size_t j = i + 1; j < words.size(); ++j)
            dmin = std::min(dmin, static_cast<int>(std::bitset<64>(words[i] ^ words[j]).count()));
    CHECK(dmin >= 16);
    CHECK((plsc_codeword(0) ^ scramble) == 0);
    // linear over GF(2) in the six MODCOD/type bits
    for (int a = 0; a < 64; ++a)
        for (int b = 0; b < 64; b += 7)
            CHECK((words[static_cast<std::size_t>(a << 1)] ^ words[static_cast<std::size_t>(b << 1)])
                  == words[static_cast<std::size_t>((a ^ b) << 1)]);
    CHECK(plsc_field(modcod(ModCodId::MC4), true) == ((4 << 2) | 3));
    CHECK(plsc_field(modcod(ModCodId::MC24), false) == ((24 << 2) | 2));
    // pilot flag complements every second bit
    const auto a = plsc_codeword(0x10) ^ scramble;
    const auto b = plsc_codeword(0x11) ^ scramble;
    CHECK((a ^ b) == 0x5555555555555555ULL);
}

TEST_CASE("scrambling sequence matches the register recursions")
{
    for (int n : {0, 1, 77}) {
        const auto r = scrambling_sequence(n, 2000);
        const auto o = gold_oracle(n, 2000);
        for (int i = 0; i < 2000; ++i)
            REQUIRE(r[static_cast<std::size_t>(i)] == o[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("scramble and descramble")
{
    std::mt19937 g(5);
    std::normal_distribution<double> n;
    std::vector<Complex> v(3000);
    for (auto& s : v)
        s = {n(g), n(g)};
    const auto s0 = scramble_payload(v, 0);
    const auto back = descramble_payload(s0, 0);
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(back[i] == v[i]);
    double p0 = 0.0, p1 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        p0 += std::norm(v[i]);
        p1 += std::norm(s0[i]);
    }
    CHECK(p1 == doctest::Approx(p0).epsilon(1e-12));
    const auto s1 = scramble_payload(v, 1);
    int differ = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        differ += s0[i] != s1[i];
    CHECK(differ > 1000);
}

TEST_CASE("PLFRAME lengths follow the slot and pilot rule")
{
    for (auto id : all_modcods()) {
        const auto mc = modcod(id);
        const int nb = mc.bitsPerSymbol;
        const int expectedPilots = 90 + 16200 / nb + 36 * ((16200 / (90 * nb) - 1) / 16);
        const auto payload = map_constellation(random_bits(kFrameBits, 1), mc);
        CHECK(static_cast<int>(assemble_plframe(payload, mc, true).symbols.size()) == expectedPilots);
        CHECK(static_cast<int>(assemble_plframe(payload, mc, false).symbols.size()) == 90 + 16200 / nb);
    }
    CHECK(frame_layout(modcod(ModCodId::MC4), true).totalSymbols == 8370);
    CHECK(frame_layout(modcod(ModCodId::MC12), true).totalSymbols == 5598);
    CHECK(frame_layout(modcod(ModCodId::MC24), true).totalSymbols == 3402);
    CHECK(frame_layout(modcod(ModCodId::MC4), false).totalSymbols == 8190);
    CHECK(frame_layout(modcod(ModCodId::MC12), false).totalSymbols == 5490);
    CHECK(frame_layout(modcod(ModCodId::MC24), false).totalSymbols == 3330);
}

TEST_CASE("pilot placement")
{
    const auto mc = modcod(ModCodId::MC4);
    const auto l = frame_layout(mc, true);
    REQUIRE(l.pilotStarts.size() == 5u);
    for (std::size_t i = 0; i < l.pilotStarts.size(); ++i)
        CHECK(l.pilotStarts[i] == 90 + static_cast<int>(i + 1) * 1440 + static_cast<int>(i) * 36);
    for (std::size_t i = 1; i < l.pilotStarts.size(); ++i)
        CHECK(l.pilotStarts[i] - l.pilotStarts[i - 1] == kPilotSpacing);
    // never after the last slot: the frame ends with data
    CHECK(l.dataIndices.back() == l.totalSymbols - 1);

    const auto bits = random_bits(kFrameBits, 4);
    const auto payload = map_constellation(bits, mc);
    const auto f = assemble_plframe(payload, mc, true);
    for (const auto& b : f.pilot_blocks()) {
        REQUIRE(b.size() == 36u);
        for (auto p : b) {
            CHECK(std::abs(std::abs(p) - 1.0) < 1e-12);
            CHECK(std::abs(p - Complex(std::sqrt(0.5), std::sqrt(0.5))) < 1e-12);
        }
    }
    const auto back = f.payload();
    REQUIRE(back.size() == payload.size());
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(std::abs(back[i] - payload[i]) < 1e-12);
    const auto hdr = plheader_symbols(mc, true);
    for (int i = 0; i < 90; ++i)
        CHECK(f.symbols[static_cast<std::size_t>(i)] == hdr[static_cast<std::size_t>(i)]);
    CHECK_THROWS_AS(assemble_plframe(std::span<const Complex>(payload).first(100), mc, true), std::invalid_argument);
}

TEST_CASE("bits -> map -> frame -> descramble -> demap is the identity")
{
    IdentityCodec codec;
    for (auto id : all_modcods()) {
        const auto mc = modcod(id);
        const auto info = random_bits(static_cast<std::size_t>(mc.info_bits()), 9);
        const auto f = build_plframe(info, mc, true, codec, 3);
        CHECK(f.groundTruthBits.size() == 16200u);
        CHECK(codec.decode(receiver::demap(f.payload(), mc), mc) == info);
    }
}

TEST_CASE("pulse shaping")
{
    PulseShapeConfig cfg;
    SUBCASE("impulse response peaks at the centre")
    {
        const std::vector<Complex> one{Complex{1.0, 0.0}};
        const auto y = pulse_shape(one, cfg);
        CHECK(y.size() == static_cast<std::size_t>((1 + cfg.spanSymbols) * cfg.samplesPerSymbol));
        std::size_t peak = 0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (std::abs(y.samples[i]) > std::abs(y.samples[peak]))
                peak = i;
        CHECK(peak == static_cast<std::size_t>(cfg.spanSymbols * cfg.samplesPerSymbol / 2));
        CHECK(y.sampleRate == doctest::Approx(2e6));
    }
    SUBCASE("matched cascade recovers symbols")
    {
        const auto mc = modcod(ModCodId::MC4);
        const auto sym = map_constellation(random_bits(8000, 2), mc);
        const auto y = pulse_shape(sym, cfg);
        CHECK(y.size() == (sym.size() + static_cast<std::size_t>(cfg.spanSymbols)) * 2u);
        auto h = tx_filter(cfg);
        double e = 0.0;
        for (double v : h)
            e += v * v;
        CHECK(e == doctest::Approx(2.0));
        for (double& v : h)
            v /= cfg.samplesPerSymbol;
        const auto z = dsp::convolve(y.samples, h);
        const std::size_t delay = static_cast<std::size_t>(cfg.spanSymbols * cfg.samplesPerSymbol);
        double maxErr = 0.0, isi = 0.0;
        for (std::size_t k = 20; k + 20 < sym.size(); ++k) {
            const Complex d = z[delay + 2 * k] - sym[k];
            maxErr = std::max(maxErr, std::abs(d));
            isi += std::norm(d);
        }
        CHECK(maxErr < 0.01);
        CHECK(10.0 * std::log10(isi / static_cast<double>(sym.size() - 40)) < -40.0);
        double p = 0.0;
        for (std::size_t i = 100; i + 100 < y.size(); ++i)
            p += std::norm(y.samples[i]);
        CHECK(p / static_cast<double>(y.size() - 200) == doctest::Approx(1.0).epsilon(0.03));
    }
    SUBCASE("validation")
    {
        cfg.samplesPerSymbol = 1;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}

TEST_CASE("I/Q file round trip")
{
    const auto dir = std::filesystem::temp_directory_path() / "dvbs2sim_iq_test";
    std::filesystem::create_directories(dir);
    IqBlock b{{Complex{0.5, -0.25}, Complex{1.0, 2.0}, Complex{-3.0, 0.125}}, 2e6};
    write_iq_file(dir / "x.cf32", b, "MC4");
    IqFileInfo info;
    const auto r = read_iq_file(dir / "x.cf32", &info);
    CHECK(info.sampleRate == 2e6);
    CHECK(info.modcod == "MC4");
    CHECK(info.samples == 3u);
    REQUIRE(r.size() == 3u);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(r.samples[i] == b.samples[i]);
    CHECK(std::filesystem::file_size(dir / "x.cf32") == 24u);
    std::filesystem::remove_all(dir);
}
