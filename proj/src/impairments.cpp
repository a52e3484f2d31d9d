#include "dvbs2sim/impairments.hpp"

#include <cmath>
#include <stdexcept>

#include "dvbs2sim/dsp.hpp"

namespace dvbs2sim::impairments {

void OscillatorModel::validate() const
{
    if (std::abs(fractionalFreqError) >= 1e-4 || std::abs(samplingClockError) >= 1e-4)
        throw std::invalid_argument("oscillator error must be below 1e-4");
    if (phaseNoiseStd < 0.0)
        throw std::invalid_argument("phaseNoiseStd must be non-negative");
}

void InterfererConfig::validate(double sampleRate) const
{
    if (bandwidth <= 0.0 || bandwidth > sampleRate)
        throw std::invalid_argument("interferer bandwidth must be in (0, sampleRate]");
    if (power < 0.0)
        throw std::invalid_argument("interferer power must be non-negative");
}

void ImpairmentConfig::validate() const
{
    txOsc.validate();
    rxOsc.validate();
    if (carrierFreq <= 0.0)
        throw std::invalid_argument("carrier frequency must be positive");
    if (noisePower < 0.0)
        throw std::invalid_argument("noise power must be non-negative");
}

OscillatorModel internal_oscillator(Rng& rng, double tolerance, double phaseNoiseStd)
{
    std::uniform_real_distribution<double> u(-tolerance, tolerance);
    OscillatorModel o;
    o.fractionalFreqError = u(rng);
    o.samplingClockError = o.fractionalFreqError;
    o.phaseNoiseStd = phaseNoiseStd;
    return o;
}

OscillatorModel gpsdo_discipline(const OscillatorModel& osc, double stability, Rng& rng, double phaseNoiseFactor)
{
    if (stability < 0.0)
        throw std::invalid_argument("stability must be non-negative");
    OscillatorModel o = osc;
    if (stability == 0.0) {
        o.fractionalFreqError = 0.0;
        o.samplingClockError = 0.0;
    } else {
        std::uniform_real_distribution<double> u(-stability, stability);
        o.fractionalFreqError = u(rng);
        o.samplingClockError = u(rng);
    }
    o.phaseNoiseStd = osc.phaseNoiseStd * phaseNoiseFactor;
    return o;
}

OscillatorModel gpsdo_discipline(const OscillatorModel& osc, double stability, std::uint64_t seed,
                                 double phaseNoiseFactor)
{
    Rng rng(seed);
    return gpsdo_discipline(osc, stability, rng, phaseNoiseFactor);
}

double derive_cfo(double f0, const OscillatorModel& tx, const OscillatorModel& rx)
{
    return f0 * (tx.fractionalFreqError - rx.fractionalFreqError);
}

IqBlock apply_cfo_and_phase_noise(const IqBlock& x, double cfoHz, double phaseNoiseStd, std::uint64_t seed)
{
    if (x.sampleRate <= 0.0 && cfoHz != 0.0)
        throw std::invalid_argument("sample rate required for CFO");
    IqBlock y{std::vector<Complex>(x.size()), x.sampleRate};
    const double step = cfoHz != 0.0 ? cfoHz / x.sampleRate : 0.0;
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, phaseNoiseStd > 0.0 ? phaseNoiseStd : 1.0);
    double phi = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        if (n > 0 && phaseNoiseStd > 0.0)
            phi += g(rng);
        double cycles = step * static_cast<double>(n);
        cycles -= std::floor(cycles);
        y.samples[n] = x.samples[n] * std::polar(1.0, dsp::kTwoPi * cycles + phi);
    }
    return y;
}

IqBlock apply_sco(const IqBlock& x, double epsS, double offsetSamples)
{
    if (std::abs(epsS) > 1e-4)
        throw std::invalid_argument("|epsS| must not exceed 1e-4");
    if (epsS == 0.0 && offsetSamples == 0.0)
        return x;
    const auto& interp = dsp::FractionalInterpolator::instance();
    IqBlock y{std::vector<Complex>(x.size()), x.sampleRate};
    const double rate = 1.0 + epsS;
    for (std::size_t n = 0; n < x.size(); ++n)
        y.samples[n] = interp(x.samples, static_cast<double>(n) * rate + offsetSamples);
    return y;
}

IqBlock add_awgn(const IqBlock& x, double noisePower, std::uint64_t seed)
{
    if (noisePower < 0.0)
        throw std::invalid_argument("noise power must be non-negative");
    IqBlock y = x;
    if (noisePower == 0.0)
        return y;
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(noisePower / 2.0));
    for (auto& s : y.samples) {
        const double re = g(rng);
        const double im = g(rng);
        s += Complex{re, im};
    }
    return y;
}

IqBlock generate_interferer(const InterfererConfig& cfg, std::size_t nSamples, double sampleRate,
                            std::uint64_t seed)
{
    cfg.validate(sampleRate);
    IqBlock out{std::vector<Complex>(nSamples), sampleRate};
    if (cfg.power == 0.0 || nSamples == 0)
        return out;

    const double cutoff = 0.5 * cfg.bandwidth / sampleRate;
    std::vector<double> h;
    if (cutoff < 0.5 - 1e-9) {
        const double transition = std::min(0.01, 0.5 * std::min(cutoff, 0.5 - cutoff));
        h = dsp::kaiser_lowpass(cutoff, transition, 65.0);
    } else {
        h = {1.0};
    }
    double e = 0.0;
    for (double v : h)
        e += v * v;

    Rng rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    const std::size_t nt = h.size();
    std::vector<Complex> w(nSamples + nt - 1);
    for (auto& s : w) {
        const double re = g(rng);
        const double im = g(rng);
        s = {re, im};
    }
    const double scale = std::sqrt(cfg.power / e);
    const double step = cfg.centerOffset / sampleRate;
    for (std::size_t n = 0; n < nSamples; ++n) {
        double re = 0.0, im = 0.0;
        const Complex* p = w.data() + n;
        for (std::size_t k = 0; k < nt; ++k) {
            re += h[k] * p[k].real();
            im += h[k] * p[k].imag();
        }
        Complex v{re * scale, im * scale};
        if (step != 0.0) {
            double cycles = step * static_cast<double>(n);
            cycles -= std::floor(cycles);
            v *= std::polar(1.0, dsp::kTwoPi * cycles);
        }
        out.samples[n] = v;
    }
    return out;
}

IqBlock apply_impairments(const IqBlock& x, const ImpairmentConfig& cfg)
{
    cfg.validate();
    const double epsS = cfg.txOsc.samplingClockError - cfg.rxOsc.samplingClockError;
    IqBlock y = apply_sco(x, epsS, -cfg.startOffsetSec * x.sampleRate);

    const double cfo = derive_cfo(cfg.carrierFreq, cfg.txOsc, cfg.rxOsc) + cfg.extraCfoHz;
    const double pn = std::hypot(cfg.txOsc.phaseNoiseStd, cfg.rxOsc.phaseNoiseStd);
    y = apply_cfo_and_phase_noise(y, cfo, pn, derive_seed({cfg.seed, 1}));

    if (cfg.interferer && cfg.interferer->power > 0.0) {
        const IqBlock i = generate_interferer(*cfg.interferer, y.size(), y.sampleRate, derive_seed({cfg.seed, 2}));
        for (std::size_t n = 0; n < y.size(); ++n)
            y.samples[n] += i.samples[n];
    }
    return add_awgn(y, cfg.noisePower, derive_seed({cfg.seed, 3}));
}

} // namespace dvbs2sim::impairments
