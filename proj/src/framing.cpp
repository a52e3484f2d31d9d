#include "dvbs2sim/framing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dvbs2sim/dsp.hpp"
#include "dvbs2sim/rng.hpp"

namespace dvbs2sim::framing {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

const Complex kPilot{kInvSqrt2, kInvSqrt2};

constexpr std::uint32_t kPlscRows[6] = {0x90AC2DDD, 0x55555555, 0x33333333,
                                        0x0F0F0F0F, 0x00FF00FF, 0x0000FFFF};
constexpr std::uint64_t kPlscScramble = 0x719D83C953422DFAULL;

std::vector<Complex> make_qpsk()
{
    std::vector<Complex> p(4);
    for (int i = 0; i < 4; ++i) {
        const int b0 = (i >> 1) & 1;
        const int b1 = i & 1;
        p[static_cast<std::size_t>(i)] = {(1 - 2 * b0) * kInvSqrt2, (1 - 2 * b1) * kInvSqrt2};
    }
    return p;
}

std::vector<Complex> make_8psk()
{
    constexpr double pi = dsp::kPi;
    const double angles[8] = {pi / 4, 0.0, pi, 5 * pi / 4, pi / 2, 7 * pi / 4, 3 * pi / 4, 3 * pi / 2};
    std::vector<Complex> p(8);
    for (int i = 0; i < 8; ++i)
        p[static_cast<std::size_t>(i)] = std::polar(1.0, angles[i]);
    return p;
}

std::vector<Complex> make_32apsk()
{
    constexpr double pi = dsp::kPi;
    const double r1 = 1.0, r2 = kApsk32Gamma1, r3 = kApsk32Gamma2;
    struct P { double r, a; };
    const P pts[32] = {
        {r2, pi / 4},      {r2, 5 * pi / 12},  {r2, -pi / 4},      {r2, -5 * pi / 12},
        {r2, 3 * pi / 4},  {r2, 7 * pi / 12},  {r2, -3 * pi / 4},  {r2, -7 * pi / 12},
        {r3, pi / 8},      {r3, 3 * pi / 8},   {r3, -pi / 4},      {r3, -pi / 2},
        {r3, 3 * pi / 4},  {r3, pi / 2},       {r3, -7 * pi / 8},  {r3, -5 * pi / 8},
        {r2, pi / 12},     {r1, pi / 4},       {r2, -pi / 12},     {r1, -pi / 4},
        {r2, 11 * pi / 12},{r1, 3 * pi / 4},   {r2, -11 * pi / 12},{r1, -3 * pi / 4},
        {r3, 0.0},         {r3, pi / 4},       {r3, -pi / 8},      {r3, -3 * pi / 8},
        {r3, 7 * pi / 8},  {r3, 5 * pi / 8},   {r3, pi},           {r3, -3 * pi / 4},
    };
    const double avg = (4 * r1 * r1 + 12 * r2 * r2 + 16 * r3 * r3) / 32.0;
    const double s = 1.0 / std::sqrt(avg);
    std::vector<Complex> p(32);
    for (int i = 0; i < 32; ++i)
        p[static_cast<std::size_t>(i)] = std::polar(pts[i].r * s, pts[i].a);
    return p;
}

constexpr int kGoldLen = (1 << 18) - 1;

struct GoldTables
{
    std::vector<std::uint8_t> x, y;
    GoldTables() : x(kGoldLen + 18), y(kGoldLen + 18)
    {
        x[0] = 1;
        for (int i = 0; i < 18; ++i)
            y[static_cast<std::size_t>(i)] = 1;
        for (int i = 0; i + 18 < kGoldLen + 18; ++i) {
            const auto u = static_cast<std::size_t>(i);
            x[u + 18] = x[u + 7] ^ x[u];
            y[u + 18] = y[u + 10] ^ y[u + 7] ^ y[u + 5] ^ y[u];
        }
    }
    std::uint8_t z(int n, int i) const
    {
        return x[static_cast<std::size_t>((i + n) % kGoldLen)] ^ y[static_cast<std::size_t>(i)];
    }
};

const GoldTables& gold()
{
    static const GoldTables t;
    return t;
}

Complex rotate_quarter(Complex v, int r)
{
    switch (r & 3) {
    case 0: return v;
    case 1: return {-v.imag(), v.real()};
    case 2: return -v;
    default: return {v.imag(), -v.real()};
    }
}

} // namespace

std::string ModCod::name() const
{
    switch (id) {
    case ModCodId::MC4: return "MC4";
    case ModCodId::MC12: return "MC12";
    case ModCodId::MC24: return "MC24";
    }
    return "?";
}

ModCod modcod(ModCodId id)
{
    switch (id) {
    case ModCodId::MC4: return {id, 2, 1, 2, 4, Constellation::QPSK, 4};
    case ModCodId::MC12: return {id, 3, 3, 5, 6, Constellation::PSK8, 12};
    case ModCodId::MC24: return {id, 5, 3, 4, 7, Constellation::APSK32, 24};
    }
    throw std::invalid_argument("unknown MODCOD");
}

ModCod parse_modcod(const std::string& name)
{
    if (name == "MC4")
        return modcod(ModCodId::MC4);
    if (name == "MC12")
        return modcod(ModCodId::MC12);
    if (name == "MC24")
        return modcod(ModCodId::MC24);
    throw std::invalid_argument("unknown MODCOD '" + name + "'");
}

const std::array<ModCodId, 3>& all_modcods()
{
    static const std::array<ModCodId, 3> ids{ModCodId::MC4, ModCodId::MC12, ModCodId::MC24};
    return ids;
}

std::span<const std::uint8_t> BitBurst::frame_bits(int frame, const ModCod& mc) const
{
    if (frame < 0 || frame >= framesPerBurst)
        throw std::out_of_range("frame index out of range");
    const std::size_t n = static_cast<std::size_t>(mc.packetsPerFrame) * static_cast<std::size_t>(rows);
    return {bits.data() + static_cast<std::size_t>(frame) * n, n};
}

BitBurst build_bit_burst(std::uint64_t seed, const ModCod& mc, int nFrames)
{
    if (nFrames < 1)
        throw std::invalid_argument("nFrames must be >= 1");
    BitBurst b;
    b.cols = mc.packetsPerFrame * nFrames;
    b.framesPerBurst = nFrames;
    b.seed = seed;
    b.bits.resize(static_cast<std::size_t>(b.rows) * static_cast<std::size_t>(b.cols));
    Rng rng(seed);
    std::uint64_t word = 0;
    int left = 0;
    for (auto& bit : b.bits) {
        if (left == 0) {
            word = rng();
            left = 64;
        }
        bit = static_cast<std::uint8_t>(word & 1);
        word >>= 1;
        --left;
    }
    return b;
}

std::vector<std::uint8_t> IdentityCodec::encode(std::span<const std::uint8_t> info, const ModCod& mc) const
{
    if (static_cast<int>(info.size()) != mc.info_bits())
        throw std::invalid_argument("info length does not match MODCOD");
    std::vector<std::uint8_t> out(kFrameBits);
    std::copy(info.begin(), info.end(), out.begin());
    // 1 + x^14 + x^15, register loaded with 100101010000000
    // (stage k of the register is bit k-1)
    std::uint16_t reg = 0x00A9;
    for (std::size_t i = info.size(); i < out.size(); ++i) {
        const auto fb = static_cast<std::uint8_t>(((reg >> 13) ^ (reg >> 14)) & 1);
        reg = static_cast<std::uint16_t>(((reg << 1) | fb) & 0x7FFF);
        out[i] = fb;
    }
    return out;
}

std::vector<std::uint8_t> IdentityCodec::decode(std::span<const std::uint8_t> codeword, const ModCod& mc) const
{
    if (static_cast<int>(codeword.size()) != kFrameBits)
        throw std::invalid_argument("codeword length must be 16200");
    return {codeword.begin(), codeword.begin() + mc.info_bits()};
}

const std::vector<Complex>& constellation_points(Constellation c)
{
    static const std::vector<Complex> qpsk = make_qpsk();
    static const std::vector<Complex> psk8 = make_8psk();
    static const std::vector<Complex> apsk32 = make_32apsk();
    switch (c) {
    case Constellation::QPSK: return qpsk;
    case Constellation::PSK8: return psk8;
    case Constellation::APSK32: return apsk32;
    }
    throw std::invalid_argument("unknown constellation");
}

std::vector<Complex> map_constellation(std::span<const std::uint8_t> bits, const ModCod& mc)
{
    const auto nb = static_cast<std::size_t>(mc.bitsPerSymbol);
    if (bits.size() % nb != 0)
        throw std::invalid_argument("bit count not divisible by bits per symbol");
    const auto& pts = constellation_points(mc.constellation);
    std::vector<Complex> out(bits.size() / nb);
    for (std::size_t k = 0; k < out.size(); ++k) {
        unsigned idx = 0;
        for (std::size_t b = 0; b < nb; ++b)
            idx = (idx << 1) | (bits[k * nb + b] & 1u);
        out[k] = pts[idx];
    }
    return out;
}

int nearest_point(Complex z, Constellation c)
{
    const auto& pts = constellation_points(c);
    int best = 0;
    double bestD = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = std::norm(z - pts[i]);
        if (d < bestD) {
            bestD = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Complex pi2_bpsk(int bit, int position)
{
    if (position % 2 == 0)
        return bit ? Complex{-kInvSqrt2, -kInvSqrt2} : Complex{kInvSqrt2, kInvSqrt2};
    return bit ? Complex{kInvSqrt2, -kInvSqrt2} : Complex{-kInvSqrt2, kInvSqrt2};
}

std::uint64_t plsc_codeword(std::uint8_t field)
{
    std::uint32_t temp = 0;
    for (int r = 0; r < 6; ++r)
        if (field & (0x40 >> r))
            temp ^= kPlscRows[r];
    std::uint64_t code = 0;
    for (int m = 0; m < 32; ++m) {
        const std::uint64_t b = (temp >> (31 - m)) & 1u;
        const std::uint64_t b2 = b ^ (field & 1u);
        code |= b << (63 - 2 * m);
        code |= b2 << (62 - 2 * m);
    }
    return code ^ kPlscScramble;
}

std::uint8_t plsc_field(const ModCod& mc, bool pilots)
{
    return static_cast<std::uint8_t>((mc.standardIndex << 2) | 0x2 | (pilots ? 1 : 0));
}

std::vector<Complex> sof_symbols()
{
    std::vector<Complex> s(kSofSymbols);
    for (int i = 0; i < kSofSymbols; ++i)
        s[static_cast<std::size_t>(i)] = pi2_bpsk(static_cast<int>((kSofBits >> (kSofSymbols - 1 - i)) & 1u), i);
    return s;
}

std::vector<Complex> plheader_symbols(const ModCod& mc, bool pilots)
{
    std::vector<Complex> s = sof_symbols();
    s.resize(kHeaderSymbols);
    const std::uint64_t code = plsc_codeword(plsc_field(mc, pilots));
    for (int i = 0; i < kPlscSymbols; ++i) {
        const int pos = kSofSymbols + i;
        s[static_cast<std::size_t>(pos)] = pi2_bpsk(static_cast<int>((code >> (63 - i)) & 1u), pos);
    }
    return s;
}

std::vector<std::uint8_t> scrambling_sequence(int scramblingIndex, std::size_t length)
{
    if (scramblingIndex < 0 || scramblingIndex >= kGoldLen)
        throw std::invalid_argument("scrambling index out of range");
    const auto& g = gold();
    std::vector<std::uint8_t> r(length);
    for (std::size_t i = 0; i < length; ++i) {
        const int ii = static_cast<int>(i % kGoldLen);
        const int shifted = (ii + 131072) % kGoldLen;
        r[i] = static_cast<std::uint8_t>(2 * g.z(scramblingIndex, shifted) + g.z(scramblingIndex, ii));
    }
    return r;
}

void apply_scrambling(std::span<Complex> symbols, std::span<const std::uint8_t> seq, bool inverse)
{
    if (seq.size() < symbols.size())
        throw std::invalid_argument("scrambling sequence too short");
    for (std::size_t i = 0; i < symbols.size(); ++i)
        symbols[i] = rotate_quarter(symbols[i], inverse ? 4 - seq[i] : seq[i]);
}

std::vector<Complex> scramble_payload(std::span<const Complex> symbols, int scramblingIndex)
{
    std::vector<Complex> out(symbols.begin(), symbols.end());
    apply_scrambling(out, scrambling_sequence(scramblingIndex, out.size()), false);
    return out;
}

std::vector<Complex> descramble_payload(std::span<const Complex> symbols, int scramblingIndex)
{
    std::vector<Complex> out(symbols.begin(), symbols.end());
    apply_scrambling(out, scrambling_sequence(scramblingIndex, out.size()), true);
    return out;
}

FrameLayout frame_layout(const ModCod& mc, bool pilots)
{
    FrameLayout l;
    const int payload = mc.payload_symbols();
    l.slots = payload / kSlotSymbols;
    l.pilotBlocks = pilots ? (l.slots - 1) / kSlotsPerPilotBlock : 0;
    l.totalSymbols = kHeaderSymbols + payload + l.pilotBlocks * kPilotBlockSymbols;
    l.dataIndices.reserve(static_cast<std::size_t>(payload));
    int pos = kHeaderSymbols;
    for (int s = 0; s < l.slots; ++s) {
        for (int k = 0; k < kSlotSymbols; ++k)
            l.dataIndices.push_back(pos++);
        if (pilots && (s + 1) % kSlotsPerPilotBlock == 0 && s + 1 < l.slots) {
            l.pilotStarts.push_back(pos);
            pos += kPilotBlockSymbols;
        }
    }
    return l;
}

std::vector<std::vector<Complex>> PlFrame::pilot_blocks() const
{
    const FrameLayout l = frame_layout(modcod, pilotsEnabled);
    const auto seq = scrambling_sequence(scramblingIndex, symbols.size() - kHeaderSymbols);
    std::vector<std::vector<Complex>> blocks;
    for (int start : l.pilotStarts) {
        std::vector<Complex> b(symbols.begin() + start, symbols.begin() + start + kPilotBlockSymbols);
        apply_scrambling(b, std::span<const std::uint8_t>(seq).subspan(static_cast<std::size_t>(start - kHeaderSymbols)), true);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

std::vector<Complex> PlFrame::payload() const
{
    const FrameLayout l = frame_layout(modcod, pilotsEnabled);
    const auto seq = scrambling_sequence(scramblingIndex, symbols.size() - kHeaderSymbols);
    std::vector<Complex> out;
    out.reserve(l.dataIndices.size());
    for (int idx : l.dataIndices)
        out.push_back(rotate_quarter(symbols[static_cast<std::size_t>(idx)],
                                     4 - seq[static_cast<std::size_t>(idx - kHeaderSymbols)]));
    return out;
}

PlFrame assemble_plframe(std::span<const Complex> payloadSymbols, const ModCod& mc, bool pilotsEnabled,
                         int scramblingIndex)
{
    if (static_cast<int>(payloadSymbols.size()) != mc.payload_symbols())
        throw std::invalid_argument("payload length does not match MODCOD");
    const FrameLayout l = frame_layout(mc, pilotsEnabled);

    PlFrame f{mc, pilotsEnabled, scramblingIndex, {}, {}};
    f.symbols.assign(static_cast<std::size_t>(l.totalSymbols), kPilot);
    const auto hdr = plheader_symbols(mc, pilotsEnabled);
    std::copy(hdr.begin(), hdr.end(), f.symbols.begin());
    for (std::size_t k = 0; k < l.dataIndices.size(); ++k)
        f.symbols[static_cast<std::size_t>(l.dataIndices[k])] = payloadSymbols[k];

    std::span<Complex> body(f.symbols.data() + kHeaderSymbols, f.symbols.size() - kHeaderSymbols);
    apply_scrambling(body, scrambling_sequence(scramblingIndex, body.size()), false);
    return f;
}

PlFrame build_plframe(std::span<const std::uint8_t> infoBits, const ModCod& mc, bool pilotsEnabled,
                      const FecCodec& codec, int scramblingIndex)
{
    auto code = codec.encode(infoBits, mc);
    const auto syms = map_constellation(code, mc);
    PlFrame f = assemble_plframe(syms, mc, pilotsEnabled, scramblingIndex);
    f.groundTruthBits = std::move(code);
    return f;
}

std::vector<Complex> reference_symbols(const ModCod& mc, bool pilots, int scramblingIndex)
{
    const FrameLayout l = frame_layout(mc, pilots);
    std::vector<Complex> ref(static_cast<std::size_t>(l.totalSymbols));
    const auto hdr = plheader_symbols(mc, pilots);
    std::copy(hdr.begin(), hdr.end(), ref.begin());
    const auto seq = scrambling_sequence(scramblingIndex, ref.size() - kHeaderSymbols);
    for (int start : l.pilotStarts)
        for (int k = 0; k < kPilotBlockSymbols; ++k) {
            const auto i = static_cast<std::size_t>(start + k);
            ref[i] = rotate_quarter(kPilot, seq[i - kHeaderSymbols]);
        }
    return ref;
}

void PulseShapeConfig::validate() const
{
    if (samplesPerSymbol < 2)
        throw std::invalid_argument("samplesPerSymbol must be >= 2");
    if (spanSymbols < 1)
        throw std::invalid_argument("spanSymbols must be >= 1");
    if (rolloff <= 0.0 || rolloff > 1.0)
        throw std::invalid_argument("rolloff must be in (0, 1]");
    if (symbolRate <= 0.0)
        throw std::invalid_argument("symbolRate must be positive");
}

std::vector<double> tx_filter(const PulseShapeConfig& cfg)
{
    cfg.validate();
    return dsp::rrc_taps(cfg.rolloff, cfg.samplesPerSymbol, cfg.spanSymbols, cfg.samplesPerSymbol);
}

IqBlock pulse_shape(std::span<const Complex> symbols, const PulseShapeConfig& cfg)
{
    const auto h = tx_filter(cfg);
    const auto ns = static_cast<std::size_t>(cfg.samplesPerSymbol);
    IqBlock out;
    out.sampleRate = cfg.symbolRate * cfg.samplesPerSymbol;
    out.samples.assign((symbols.size() + static_cast<std::size_t>(cfg.spanSymbols)) * ns, Complex{});
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        const Complex s = symbols[k];
        Complex* y = out.samples.data() + k * ns;
        for (std::size_t t = 0; t < h.size(); ++t)
            y[t] += h[t] * s;
    }
    return out;
}

IqBlock pulse_shape(std::span<const PlFrame> frames, const PulseShapeConfig& cfg)
{
    std::vector<Complex> all;
    for (const auto& f : frames)
        all.insert(all.end(), f.symbols.begin(), f.symbols.end());
    return pulse_shape(all, cfg);
}

} // namespace dvbs2sim::framing
