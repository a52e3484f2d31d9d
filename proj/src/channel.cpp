#include "dvbs2sim/channel.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dvbs2sim/dsp.hpp"
#include "dvbs2sim/rng.hpp"

namespace dvbs2sim::channel {

namespace {

Complex sinusoid_sum(const FadingTap& t, std::size_t n)
{
    Complex g = t.staticGain;
    for (std::size_t i = 0; i < t.amplitudes.size(); ++i) {
        double cyc = t.frequencies[i] * static_cast<double>(n);
        cyc -= std::floor(cyc);
        g += t.amplitudes[i] * std::polar(1.0, dsp::kTwoPi * cyc);
    }
    return g;
}

} // namespace

void Geometry::validate() const
{
    if (satAltitude <= 0.0)
        throw std::invalid_argument("satellite altitude must be positive");
    if (centralAngle < 0.0 || centralAngle >= dsp::kPi / 2)
        throw std::invalid_argument("central angle must be in [0, pi/2)");
    if (satVelocity <= 0.0)
        throw std::invalid_argument("satellite velocity must be positive");
    if (direction != 1 && direction != -1)
        throw std::invalid_argument("direction must be +1 or -1");
}

double central_angle_from_elevation(double elevationDeg, double altitude, double earthRadius)
{
    const double th = elevationDeg * dsp::kPi / 180.0;
    return std::acos(earthRadius / (earthRadius + altitude) * std::cos(th)) - th;
}

Geometry geometry_from_elevation(double elevationDeg, double altitude, double velocity, int direction)
{
    Geometry g;
    g.satAltitude = altitude;
    g.satVelocity = velocity;
    g.direction = direction;
    g.elevationDeg = elevationDeg;
    g.centralAngle = central_angle_from_elevation(elevationDeg, altitude, g.earthRadius);
    return g;
}

double doppler_shift(const Geometry& geom, double f0)
{
    geom.validate();
    return geom.satVelocity * f0 / kSpeedOfLight * (geom.earthRadius * std::sin(geom.centralAngle))
           / (geom.earthRadius + geom.satAltitude) * geom.direction;
}

std::vector<double> TdlProfile::linear_powers() const
{
    std::vector<double> p;
    p.reserve(taps.size());
    for (const auto& t : taps)
        p.push_back(std::pow(10.0, t.powerDb / 10.0));
    return p;
}

void TdlProfile::validate() const
{
    int los = 0;
    for (const auto& t : taps) {
        if (t.delay < 0.0)
            throw std::invalid_argument("negative tap delay");
        if (t.isLos) {
            ++los;
            if (t.delay != 0.0)
                throw std::invalid_argument("LOS tap must be at delay 0");
        }
    }
    if (los != 1)
        throw std::invalid_argument("profile needs exactly one LOS tap");
    if (shadowingStdDb < 0.0)
        throw std::invalid_argument("shadowing std must be non-negative");
}

double rms_delay_spread(const TdlProfile& p)
{
    const auto pw = p.linear_powers();
    double s = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < pw.size(); ++i) {
        s += pw[i];
        m1 += pw[i] * p.taps[i].delay;
        m2 += pw[i] * p.taps[i].delay * p.taps[i].delay;
    }
    if (s <= 0.0)
        return 0.0;
    m1 /= s;
    m2 /= s;
    return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

std::filesystem::path default_data_dir()
{
    if (const char* env = std::getenv("DVBS2SIM_DATA_DIR"))
        return env;
    return DVBS2SIM_DATA_DIR;
}

TdlProfile load_tdl_profile(const std::filesystem::path& file, double rmsDelaySpread)
{
    if (rmsDelaySpread <= 0.0)
        throw std::invalid_argument("rms delay spread must be positive");
    std::ifstream in(file);
    if (!in)
        throw std::runtime_error("cannot open tap table " + file.string());

    TdlProfile p;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        double delay, powerDb, kDb;
        int los;
        if (!(ss >> delay)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::runtime_error(file.string() + ":" + std::to_string(lineNo) + ": malformed row");
            continue;
        }
        if (!(ss >> powerDb >> los >> kDb) || (los != 0 && los != 1))
            throw std::runtime_error(file.string() + ":" + std::to_string(lineNo) + ": malformed row");
        p.taps.push_back({delay, powerDb, los == 1});
        if (los == 1)
            p.ricianKDb = kDb;
    }
    if (p.taps.empty())
        throw std::runtime_error("tap table " + file.string() + " is empty");
    p.validate();

    double total = 0.0;
    for (double v : p.linear_powers())
        total += v;
    const double offset = 10.0 * std::log10(total);
    for (auto& t : p.taps)
        t.powerDb -= offset;

    const double raw = rms_delay_spread(p);
    if (raw > 0.0)
        for (auto& t : p.taps)
            t.delay *= rmsDelaySpread / raw;
    p.rmsDelaySpread = rmsDelaySpread;
    return p;
}

TdlProfile load_ntn_tdl_c(double rmsDelaySpread)
{
    return load_tdl_profile(default_data_dir() / "ntn_tdl_c.txt", rmsDelaySpread);
}

Complex FadingTap::gain(std::size_t n) const
{
    return sinusoid_sum(*this, n);
}

double ChannelRealization::shadowing_gain() const
{
    return std::pow(10.0, shadowingDb / 20.0);
}

ChannelRealization realize_channel(const TdlProfile& profile, const Geometry& geom, double f0, double sampleRate,
                                   std::size_t nSamples, std::uint64_t seed, const ChannelOptions& opts)
{
    profile.validate();
    if (sampleRate <= 0.0)
        throw std::invalid_argument("sample rate must be positive");
    if (opts.sinusoids < 1)
        throw std::invalid_argument("need at least one sinusoid per tap");
    for (const auto& t : profile.taps)
        if (t.delay > static_cast<double>(nSamples) / sampleRate)
            throw std::invalid_argument("tap delay exceeds realization length");

    Rng rng(seed);
    std::uniform_real_distribution<double> uphase(0.0, dsp::kTwoPi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ChannelRealization r;
    r.sampleRate = sampleRate;
    r.length = nSamples;
    r.losPhase = uphase(rng);
    r.losDoppler = doppler_shift(geom, f0) - opts.dopplerCompensationHz;
    r.shadowingDb = profile.shadowingStdDb > 0.0 ? profile.shadowingStdDb * gauss(rng) : 0.0;

    const double fd = std::abs(r.losDoppler) / sampleRate;
    const auto pw = profile.linear_powers();
    const int m = opts.sinusoids;
    for (std::size_t i = 0; i < profile.taps.size(); ++i) {
        const auto& t = profile.taps[i];
        const int k = static_cast<int>(std::lround(t.delay * sampleRate));
        if (t.isLos) {
            r.losAmplitude = std::sqrt(pw[i]);
            r.losDelay = k;
            continue;
        }
        FadingTap ft;
        ft.delay = k;
        ft.power = pw[i];
        if (fd == 0.0) {
            ft.staticGain = std::sqrt(pw[i] / 2.0) * Complex{gauss(rng), gauss(rng)};
        } else {
            const double theta = uphase(rng) - dsp::kPi;
            const double a = std::sqrt(pw[i] / m);
            for (int n = 1; n <= m; ++n) {
                const double alpha = (dsp::kTwoPi * n - dsp::kPi + theta) / m;
                ft.frequencies.push_back(fd * std::cos(alpha));
                ft.amplitudes.push_back(std::polar(a, uphase(rng)));
            }
        }
        r.taps.push_back(std::move(ft));
    }
    return r;
}

IqBlock apply_channel(const IqBlock& x, const ChannelRealization& real)
{
    if (real.length < x.size())
        throw std::invalid_argument("channel realization shorter than input");
    const std::size_t n = x.size();
    IqBlock y{std::vector<Complex>(n), x.sampleRate};
    const double g = real.shadowing_gain();

    // line-of-sight term
    {
        const double step = real.sampleRate > 0.0 ? real.losDoppler / real.sampleRate : 0.0;
        const auto k = static_cast<std::size_t>(real.losDelay);
        for (std::size_t i = k; i < n; ++i) {
            double cyc = step * static_cast<double>(i);
            cyc -= std::floor(cyc);
            y.samples[i] = real.losAmplitude * std::polar(1.0, dsp::kTwoPi * cyc + real.losPhase) * x.samples[i - k];
        }
    }

    constexpr std::size_t kRefresh = 1024;
    for (const auto& tap : real.taps) {
        const auto k = static_cast<std::size_t>(tap.delay);
        if (tap.amplitudes.empty()) {
            for (std::size_t i = k; i < n; ++i)
                y.samples[i] += tap.staticGain * x.samples[i - k];
            continue;
        }
        const std::size_t nc = tap.amplitudes.size();
        std::vector<Complex> ph(nc), rot(nc);
        for (std::size_t c = 0; c < nc; ++c)
            rot[c] = std::polar(1.0, dsp::kTwoPi * tap.frequencies[c]);
        for (std::size_t i = k; i < n; ++i) {
            if ((i - k) % kRefresh == 0)
                for (std::size_t c = 0; c < nc; ++c) {
                    double cyc = tap.frequencies[c] * static_cast<double>(i);
                    cyc -= std::floor(cyc);
                    ph[c] = tap.amplitudes[c] * std::polar(1.0, dsp::kTwoPi * cyc);
                }
            Complex h = tap.staticGain;
            for (std::size_t c = 0; c < nc; ++c) {
                h += ph[c];
                ph[c] *= rot[c];
            }
            y.samples[i] += h * x.samples[i - k];
        }
    }

    if (g != 1.0)
        for (auto& s : y.samples)
            s *= g;
    return y;
}

double signal_power(const ChannelRealization& real)
{
    double p = real.losAmplitude * real.losAmplitude;
    for (const auto& t : real.taps)
        p += t.power;
    const double g = real.shadowing_gain();
    return p * g * g;
}

} // namespace dvbs2sim::channel
