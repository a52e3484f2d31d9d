#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dvbs2sim/iq.hpp"

namespace dvbs2sim::framing {

inline constexpr int kFrameBits = 16200;      // short FECFRAME
inline constexpr int kPacketBits = 1504;      // 188-byte transport packet
inline constexpr int kSlotSymbols = 90;
inline constexpr int kHeaderSymbols = 90;     // SOF + PLSC
inline constexpr int kSofSymbols = 26;
inline constexpr int kPlscSymbols = 64;
inline constexpr int kPilotBlockSymbols = 36;
inline constexpr int kSlotsPerPilotBlock = 16;
inline constexpr int kPilotSpacing = kSlotsPerPilotBlock * kSlotSymbols + kPilotBlockSymbols; // 1476

enum class ModCodId { MC4, MC12, MC24 };
enum class Constellation { QPSK, PSK8, APSK32 };

struct ModCod
{
    ModCodId id;
    int bitsPerSymbol;
    int rateNum;
    int rateDen;
    int packetsPerFrame;
    Constellation constellation;
    int standardIndex; // MODCOD field value carried in the PLSC

    double code_rate() const { return static_cast<double>(rateNum) / rateDen; }
    int payload_symbols() const { return kFrameBits / bitsPerSymbol; }
    int info_bits() const { return packetsPerFrame * kPacketBits; }
    std::string name() const;
};

ModCod modcod(ModCodId id);
ModCod parse_modcod(const std::string& name); // "MC4", "MC12", "MC24"
const std::array<ModCodId, 3>& all_modcods();

/// Packet matrix of kPacketBits rows; column c is packet c, stored contiguously.
struct BitBurst
{
    int rows = kPacketBits;
    int cols = 0;
    int framesPerBurst = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint8_t> bits; // column-major, rows * cols

    std::uint8_t at(int row, int col) const
    {
        return bits[static_cast<std::size_t>(col) * rows + static_cast<std::size_t>(row)];
    }
    /// Info bits carried by frame f (packetsPerFrame consecutive columns).
    std::span<const std::uint8_t> frame_bits(int frame, const ModCod& mc) const;
};

BitBurst build_bit_burst(std::uint64_t seed, const ModCod& mc, int nFrames);

/// Pluggable FEC: maps info bits of one frame to a kFrameBits FECFRAME and back.
class FecCodec
{
public:
    virtual ~FecCodec() = default;
    virtual std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info, const ModCod& mc) const = 0;
    virtual std::vector<std::uint8_t> decode(std::span<const std::uint8_t> codeword, const ModCod& mc) const = 0;
};

/// Pass-through codec: info bits fill the head of the FECFRAME; the tail is
/// filled with the baseband-scrambler PRBS (1 + x^14 + x^15).
class IdentityCodec final : public FecCodec
{
public:
    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info, const ModCod& mc) const override;
    std::vector<std::uint8_t> decode(std::span<const std::uint8_t> codeword, const ModCod& mc) const override;
};

// Constellations ------------------------------------------------------------

/// Points indexed by the bit group read MSB-first.
const std::vector<Complex>& constellation_points(Constellation c);

/// 32APSK ring radius ratios R2/R1 and R3/R1 for code rate 3/4.
inline constexpr double kApsk32Gamma1 = 2.84;
inline constexpr double kApsk32Gamma2 = 5.27;

std::vector<Complex> map_constellation(std::span<const std::uint8_t> bits, const ModCod& mc);

/// Index of the nearest constellation point; ties go to the lower index.
int nearest_point(Complex z, Constellation c);

// Physical-layer signalling --------------------------------------------------

inline constexpr std::uint32_t kSofBits = 0x18D2E82; // 26 bits, MSB first

/// pi/2-BPSK mapping of a bit at header position i (0-based).
Complex pi2_bpsk(int bit, int position);

/// 64-bit PLSC codeword (before pi/2-BPSK) for a 7-bit signalling field.
std::uint64_t plsc_codeword(std::uint8_t field);

/// 7-bit field: MODCOD << 2 | short-frame flag << 1 | pilot flag.
std::uint8_t plsc_field(const ModCod& mc, bool pilots);

std::vector<Complex> sof_symbols();
std::vector<Complex> plheader_symbols(const ModCod& mc, bool pilots);

// Scrambling ----------------------------------------------------------------

/// Rotation index R_n(i) in {0,1,2,3} for the complex Gold-code scrambler.
std::vector<std::uint8_t> scrambling_sequence(int scramblingIndex, std::size_t length);

std::vector<Complex> scramble_payload(std::span<const Complex> symbols, int scramblingIndex);
std::vector<Complex> descramble_payload(std::span<const Complex> symbols, int scramblingIndex);
void apply_scrambling(std::span<Complex> symbols, std::span<const std::uint8_t> seq, bool inverse);

// PLFRAME --------------------------------------------------------------------

struct FrameLayout
{
    int totalSymbols = 0;
    int slots = 0;
    int pilotBlocks = 0;
    std::vector<int> pilotStarts; // frame-relative index of each pilot block
    std::vector<int> dataIndices; // frame-relative index of every data symbol, in order
};

FrameLayout frame_layout(const ModCod& mc, bool pilots);

struct PlFrame
{
    ModCod modcod;
    bool pilotsEnabled = true;
    int scramblingIndex = 0;
    std::vector<Complex> symbols;               // on-air: header + scrambled body
    std::vector<std::uint8_t> groundTruthBits;  // kFrameBits FECFRAME bits

    std::span<const Complex> header() const { return {symbols.data(), kHeaderSymbols}; }
    std::vector<std::vector<Complex>> pilot_blocks() const;
    std::vector<Complex> payload() const; // descrambled data symbols
};

PlFrame assemble_plframe(std::span<const Complex> payloadSymbols, const ModCod& mc, bool pilotsEnabled,
                         int scramblingIndex = 0);

/// Frame assembly from info bits through the codec and mapper.
PlFrame build_plframe(std::span<const std::uint8_t> infoBits, const ModCod& mc, bool pilotsEnabled,
                      const FecCodec& codec, int scramblingIndex = 0);

/// Known on-air symbols of a frame at reference positions (header and
/// scrambled pilots); zero at data positions.
std::vector<Complex> reference_symbols(const ModCod& mc, bool pilots, int scramblingIndex);

// Pulse shaping ---------------------------------------------------------------

struct PulseShapeConfig
{
    double rolloff = 0.35;
    int samplesPerSymbol = 2;
    int spanSymbols = 10;
    double symbolRate = 1e6;

    void validate() const;
};

/// RRC taps used on transmit (sum of squares = samplesPerSymbol, so that the
/// shaped waveform has unit average power for unit-energy symbols).
std::vector<double> tx_filter(const PulseShapeConfig& cfg);

IqBlock pulse_shape(std::span<const Complex> symbols, const PulseShapeConfig& cfg);
IqBlock pulse_shape(std::span<const PlFrame> frames, const PulseShapeConfig& cfg);

} // namespace dvbs2sim::framing
