#include "dvbs2sim/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace dvbs2sim::dsp {

double wrap_phase(double phi)
{
    phi = std::fmod(phi + kPi, kTwoPi);
    if (phi < 0.0)
        phi += kTwoPi;
    return phi - kPi;
}

std::vector<double> rrc_taps(double rolloff, int samplesPerSymbol, int spanSymbols, double energy)
{
    if (rolloff <= 0.0 || rolloff > 1.0)
        throw std::invalid_argument("rolloff must be in (0, 1]");
    if (samplesPerSymbol < 1 || spanSymbols < 1)
        throw std::invalid_argument("bad RRC dimensions");

    const int n = spanSymbols * samplesPerSymbol + 1;
    const int mid = n / 2;
    const double a = rolloff;
    std::vector<double> h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i - mid) / samplesPerSymbol;
        double v;
        if (i == mid) {
            v = 1.0 - a + 4.0 * a / kPi;
        } else if (std::abs(std::abs(4.0 * a * t) - 1.0) < 1e-9) {
            v = a / std::sqrt(2.0)
                * ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * a))
                   + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * a)));
        } else {
            v = (std::sin(kPi * t * (1.0 - a)) + 4.0 * a * t * std::cos(kPi * t * (1.0 + a)))
                / (kPi * t * (1.0 - (4.0 * a * t) * (4.0 * a * t)));
        }
        h[static_cast<std::size_t>(i)] = v;
    }
    double e = 0.0;
    for (double v : h)
        e += v * v;
    const double g = std::sqrt(energy / e);
    for (double& v : h)
        v *= g;
    return h;
}

std::vector<Complex> convolve(std::span<const Complex> x, std::span<const double> taps)
{
    if (x.empty() || taps.empty())
        return {};
    const std::size_t nx = x.size();
    const std::size_t nt = taps.size();
    std::vector<Complex> y(nx + nt - 1);
    for (std::size_t n = 0; n < y.size(); ++n) {
        const std::size_t kLo = n >= nx ? n - nx + 1 : 0;
        const std::size_t kHi = std::min(n, nt - 1);
        double re = 0.0, im = 0.0;
        for (std::size_t k = kLo; k <= kHi; ++k) {
            const Complex& s = x[n - k];
            re += taps[k] * s.real();
            im += taps[k] * s.imag();
        }
        y[n] = {re, im};
    }
    return y;
}

std::vector<double> kaiser_lowpass(double cutoff, double transition, double attenuationDb)
{
    if (cutoff <= 0.0 || cutoff >= 0.5 || transition <= 0.0)
        throw std::invalid_argument("bad low-pass parameters");

    double beta;
    if (attenuationDb > 50.0)
        beta = 0.1102 * (attenuationDb - 8.7);
    else if (attenuationDb >= 21.0)
        beta = 0.5842 * std::pow(attenuationDb - 21.0, 0.4) + 0.07886 * (attenuationDb - 21.0);
    else
        beta = 0.0;

    int n = static_cast<int>(std::ceil((attenuationDb - 8.0) / (2.285 * kTwoPi * transition)));
    n |= 1;
    const int mid = n / 2;
    const double i0b = std::cyl_bessel_i(0.0, beta);
    std::vector<double> h(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double m = i - mid;
        const double r = m / mid;
        const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        const double s = (m == 0) ? 2.0 * cutoff : std::sin(kTwoPi * cutoff * m) / (kPi * m);
        h[static_cast<std::size_t>(i)] = s * w;
        sum += s * w;
    }
    for (double& v : h)
        v /= sum;
    return h;
}

std::array<double, FractionalInterpolator::kTaps> FractionalInterpolator::weights(double mu)
{
    constexpr double beta = 7.0;
    static const double i0b = std::cyl_bessel_i(0.0, beta);
    std::array<double, kTaps> w{};
    double sum = 0.0;
    for (int j = 0; j < kTaps; ++j) {
        const double off = mu - static_cast<double>(j - kHalf + 1);
        const double r = off / kHalf;
        const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        const double s = std::abs(off) < 1e-12 ? 1.0 : std::sin(kPi * off) / (kPi * off);
        w[static_cast<std::size_t>(j)] = s * win;
        sum += s * win;
    }
    for (double& v : w)
        v /= sum;
    return w;
}

FractionalInterpolator::FractionalInterpolator() : table_(kPhases + 1)
{
    for (int p = 0; p <= kPhases; ++p)
        table_[static_cast<std::size_t>(p)] = weights(static_cast<double>(p) / kPhases);
}

const FractionalInterpolator& FractionalInterpolator::instance()
{
    static const FractionalInterpolator interp;
    return interp;
}

Complex FractionalInterpolator::operator()(std::span<const Complex> x, double t) const
{
    const double base = std::floor(t);
    const double mu = t - base;
    const auto n0 = static_cast<long long>(base);
    const long long len = static_cast<long long>(x.size());

    if (mu == 0.0)
        return (n0 >= 0 && n0 < len) ? x[static_cast<std::size_t>(n0)] : Complex{};

    const double pos = mu * kPhases;
    const auto row = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(row);
    const auto& w0 = table_[row];
    const auto& w1 = table_[row + 1];

    const long long first = n0 - kHalf + 1;
    double re = 0.0, im = 0.0;
    if (first >= 0 && first + kTaps <= len) {
        const Complex* p = x.data() + first;
        for (int j = 0; j < kTaps; ++j) {
            const double w = w0[static_cast<std::size_t>(j)]
                             + frac * (w1[static_cast<std::size_t>(j)] - w0[static_cast<std::size_t>(j)]);
            re += w * p[j].real();
            im += w * p[j].imag();
        }
    } else {
        for (int j = 0; j < kTaps; ++j) {
            const long long idx = first + j;
            if (idx < 0 || idx >= len)
                continue;
            const double w = w0[static_cast<std::size_t>(j)]
                             + frac * (w1[static_cast<std::size_t>(j)] - w0[static_cast<std::size_t>(j)]);
            re += w * x[static_cast<std::size_t>(idx)].real();
            im += w * x[static_cast<std::size_t>(idx)].imag();
        }
    }
    return {re, im};
}

} // namespace dvbs2sim::dsp
