#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvbs2sim/framing.hpp"
#include "dvbs2sim/iq.hpp"

namespace dvbs2sim::receiver {

struct ReceiverConfig
{
    double fllLoopBw = 0.8e-3;
    double timingLoopBw = 0.6e-3;
    int samplesPerSymbol = 2;
    double rolloff = 0.35;
    int spanSymbols = 10;
    double symbolRate = 1e6;
    double frameSyncThreshold = 0.6;
    int pilotSpacing = framing::kPilotSpacing;
    bool pilotsEnabled = true;
    int scramblingIndex = 0;
    double cfoSearchRangeHz = 250e3;  // clamp on the initial coarse estimate
    double residualPhaseGain = 0.01;  // decision-directed tracker
    int agcWindow = 4096;
    int timingAcquisitionSymbols = 4000;
    int expectedFrames = 0;           // 0: infer from the last detected frame
    bool trace = false;

    void validate() const;
};

struct LockFlags
{
    bool timing = false;
    bool frame = false;
    bool coarseFreq = false;
    bool fineFreq = false;
};

struct SyncState
{
    double timingPhase = 0.0;    // fractional samples, [0, N_s)
    long long timingWraps = 0;   // whole symbols slipped by the wrap
    double freqEstimate = 0.0;   // cycles/symbol
    LockFlags lock;
};

struct TraceRow
{
    long long symbol = 0;
    double timingPhase = 0.0;
    double freqEstimate = 0.0;  // cycles/symbol
    double pilotPhase = 0.0;    // rad, last reference-block phase
    LockFlags lock;
};

struct DemodReport
{
    int framesExpected = 0;
    std::vector<std::vector<std::uint8_t>> recoveredBits; // info bits per frame, empty if erased
    std::vector<long long> frameStartIndices;             // sample index of each frame start, -1 if missed
    std::vector<bool> perFrameDecodeOk;
    std::vector<double> frameSnrDb;                       // NaN for missed frames
    double snrEstimateDb = -20.0;
    double initialCcfoRaw = 0.0;  // cycles/symbol, before range clamp
    double initialCcfo = 0.0;     // cycles/symbol
    double cfoEstimateHz = 0.0;
    double fllResidualHz = 0.0;   // offset left by the FLL, measured on the trailing frames' pilots
    LockFlags lock;
    std::vector<TraceRow> trace;

    int frames_detected() const;
};

IqBlock agc_normalize(const IqBlock& x, int window = 4096);

double gardner_ted(Complex midSample, Complex currentSymbol, Complex previousSymbol);

/// Slope at zero offset of the mean Gardner error per sample of timing
/// offset, for unit-power symbols through a raised-cosine cascade.
double gardner_slope(double rolloff, int samplesPerSymbol);

SyncState timing_loop_step(SyncState state, double err, double beta, int samplesPerSymbol = 2);

/// Band-limited interpolation at fractional position tau (samples).
Complex interpolate_at(const IqBlock& x, double tau);

struct SyncCandidate
{
    long long index = 0;
    double metric = 0.0;
};

/// Normalized differential correlation against `reference` at every offset.
std::vector<double> frame_sync_metric(std::span<const Complex> symbols, std::span<const Complex> reference);

/// Offsets whose metric reaches `threshold`, greedily thinned so that kept
/// offsets are at least `minSpacing` apart; ascending order.
std::vector<SyncCandidate> frame_sync_candidates(std::span<const Complex> symbols, double threshold,
                                                 std::span<const Complex> reference, long long minSpacing);

std::vector<long long> frame_sync(std::span<const Complex> symbols, double threshold,
                                  std::span<const Complex> reference, long long minSpacing);

/// SOF-only search with the shortest frame length as spacing.
std::vector<long long> frame_sync(std::span<const Complex> symbols, double threshold = 0.6);

/// Lag-1 phase increment of the modulation-stripped reference, in cycles/symbol.
double coarse_cfo_estimate(std::span<const Complex> symbols, std::span<const Complex> knownRef);

double fll_step(double freq, double err, double beta);

/// Frequency error from one reference block: phase drift between its two
/// halves, in cycles/symbol.
double block_freq_error(std::span<const Complex> symbols, std::span<const Complex> knownRef);

double pilot_phase_estimate(std::span<const Complex> rxPilots, std::span<const Complex> knownPilots);

double pilot_freq_estimate(std::span<const double> blockPhases, int pilotSpacing, double symbolPeriod);

std::vector<double> unwrap_phases(std::span<const double> phases);

std::vector<double> phase_interpolate(std::span<const double> blockPhases, std::span<const double> blockIndices,
                                      std::span<const int> dataIndices);

std::vector<std::uint8_t> demap(std::span<const Complex> symbols, const framing::ModCod& mc);

DemodReport receive_burst(const IqBlock& x, const ReceiverConfig& cfg, const framing::ModCod& mc);
DemodReport receive_burst(const IqBlock& x, const ReceiverConfig& cfg, const framing::ModCod& mc,
                          const framing::FecCodec& codec);

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

} // namespace dvbs2sim::receiver
