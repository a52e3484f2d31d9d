#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dvbs2sim/channel.hpp"
#include "dvbs2sim/rng.hpp"

using namespace dvbs2sim;
using namespace dvbs2sim::channel;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Geometry table_geometry(double psiDeg, int direction = 1)
{
    Geometry g;
    g.satAltitude = 500e3;
    g.satVelocity = 7.8e3;
    g.centralAngle = psiDeg * kDeg;
    g.direction = direction;
    return g;
}

double slant_range(double psi, double re, double h)
{
    return std::sqrt(re * re + (re + h) * (re + h) - 2.0 * re * (re + h) * std::cos(psi));
}

// -(d'/c) f0 with the satellite moving along its circular arc towards the ground station
double range_rate_doppler(double psi, double f0)
{
    const double re = kEarthRadius, h = 500e3, v = 7.8e3;
    const double dt = 1e-3;
    const double psiDot = v / (re + h);
    const double dd = (slant_range(psi - psiDot * dt, re, h) - slant_range(psi + psiDot * dt, re, h)) / (2.0 * dt);
    return -dd / kSpeedOfLight * f0;
}

std::vector<Complex> white(std::size_t n, std::uint64_t seed)
{
    Rng g(seed);
    std::normal_distribution<double> d(0.0, std::sqrt(0.5));
    std::vector<Complex> x(n);
    for (auto& s : x)
        s = {d(g), d(g)};
    return x;
}

TdlProfile los_only()
{
    TdlProfile p;
    p.taps = {{0.0, 0.0, true}};
    p.shadowingStdDb = 0.0;
    p.ricianKDb = 100.0;
    return p;
}

} // namespace

TEST_CASE("Doppler formula")
{
    CHECK(doppler_shift(table_geometry(0.0), 437e6) == 0.0);
    const double f10 = doppler_shift(table_geometry(10.0), 437e6);
    CHECK(f10 == doctest::Approx(1830.7).epsilon(1e-3));
    CHECK(doppler_shift(table_geometry(10.0, -1), 437e6) == -f10);
    for (double psi : {5.0, 20.0, 40.0, 60.0})
        CHECK(doppler_shift(table_geometry(psi, -1), 437e6) == -doppler_shift(table_geometry(psi), 437e6));
    CHECK(doppler_shift(table_geometry(20.0), 2.0 * 437e6) == doctest::Approx(2.0 * doppler_shift(table_geometry(20.0), 437e6)));
}

TEST_CASE("Doppler formula relates to the slant-range rate by the range ratio")
{
    // the closed form uses the orbital radius where the exact range rate uses the slant range
    for (double psi : {5.0, 10.0, 20.0, 40.0, 60.0}) {
        const double exact = range_rate_doppler(psi * kDeg, 437e6);
        const double ratio = (kEarthRadius + 500e3) / slant_range(psi * kDeg, kEarthRadius, 500e3);
        CHECK(exact == doctest::Approx(doppler_shift(table_geometry(psi), 437e6) * ratio).epsilon(1e-6));
    }
}

TEST_CASE("elevation to central angle")
{
    const double psi = central_angle_from_elevation(45.0, 500e3);
    CHECK(psi / kDeg == doctest::Approx(4.031).epsilon(1e-3));
    // the elevation seen from the ground station at that central angle
    const double re = kEarthRadius, rs = kEarthRadius + 500e3;
    const double d = slant_range(psi, re, 500e3);
    const double el = std::asin((rs * std::cos(psi) - re) / d);
    CHECK(el / kDeg == doctest::Approx(45.0).epsilon(1e-9));
    CHECK(central_angle_from_elevation(90.0, 500e3) == doctest::Approx(0.0));
    CHECK(doppler_shift(geometry_from_elevation(45.0), 437e6) == doctest::Approx(741.09).epsilon(1e-4));
}

TEST_CASE("NTN-TDL-C profile")
{
    const auto p = load_ntn_tdl_c(80e-9);
    CHECK(rms_delay_spread(p) == doctest::Approx(80e-9).epsilon(0.01));
    double sum = 0.0;
    for (double v : p.linear_powers())
        sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    int los = 0;
    for (const auto& t : p.taps)
        if (t.isLos) {
            ++los;
            CHECK(t.delay == 0.0);
        }
    CHECK(los == 1);
    CHECK(p.ricianKDb == doctest::Approx(10.224));
    CHECK(p.shadowingStdDb == 0.8);

    const auto q = load_ntn_tdl_c(160e-9);
    REQUIRE(q.taps.size() == p.taps.size());
    for (std::size_t i = 0; i < p.taps.size(); ++i) {
        CHECK(q.taps[i].delay == doctest::Approx(2.0 * p.taps[i].delay));
        CHECK(q.taps[i].powerDb == p.taps[i].powerDb);
    }
    CHECK_THROWS_AS(load_ntn_tdl_c(0.0), std::invalid_argument);
    CHECK_THROWS(load_tdl_profile("/nonexistent/tdl.txt", 80e-9));
}

TEST_CASE("LOS-only channel")
{
    IqBlock x{white(2000, 1), 2e6};
    ChannelRealization r;
    r.sampleRate = 2e6;
    r.length = x.size();
    SUBCASE("identity")
    {
        CHECK(apply_channel(x, r).samples == x.samples);
        CHECK(signal_power(r) == 1.0);
    }
    SUBCASE("half-turn phase negates")
    {
        r.losPhase = std::numbers::pi;
        const auto y = apply_channel(x, r);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(y.samples[i] + x.samples[i]) < 1e-12);
    }
    SUBCASE("realized from a LOS-only profile")
    {
        const auto rr = realize_channel(los_only(), table_geometry(4.0), 437e6, 2e6, x.size(), 5);
        CHECK(rr.taps.empty());
        CHECK(rr.losAmplitude == doctest::Approx(1.0));
        const auto y = apply_channel(x, rr);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(y.samples[i]) == doctest::Approx(std::abs(x.samples[i])).epsilon(1e-12));
    }
    SUBCASE("short realization is rejected")
    {
        r.length = 10;
        CHECK_THROWS_AS(apply_channel(x, r), std::invalid_argument);
    }
}

TEST_CASE("static two-tap channel matches brute-force convolution")
{
    IqBlock x{white(1000, 2), 2e6};
    ChannelRealization r;
    r.sampleRate = 2e6;
    r.length = x.size();
    r.losAmplitude = 0.8;
    r.losPhase = 0.3;
    r.shadowingDb = 0.5;
    FadingTap t;
    t.delay = 3;
    t.power = 0.2;
    t.staticGain = {0.3, -0.2};
    r.taps.push_back(t);
    const auto y = apply_channel(x, r);
    const Complex h0 = 0.8 * std::polar(1.0, 0.3);
    const double g = std::pow(10.0, 0.5 / 20.0);
    double maxErr = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        Complex ref = h0 * x.samples[n];
        if (n >= 3)
            ref += t.staticGain * x.samples[n - 3];
        maxErr = std::max(maxErr, std::abs(y.samples[n] - g * ref));
    }
    CHECK(maxErr < 1e-12);
}

TEST_CASE("channel is linear for a fixed realization")
{
    const auto p = load_ntn_tdl_c(1e-6);
    const auto r = realize_channel(p, table_geometry(4.0), 437e6, 2e6, 5000, 9);
    IqBlock a{white(5000, 3), 2e6}, b{white(5000, 4), 2e6}, s{std::vector<Complex>(5000), 2e6};
    const Complex ca{0.7, -1.1}, cb{-2.0, 0.4};
    for (std::size_t i = 0; i < 5000; ++i)
        s.samples[i] = ca * a.samples[i] + cb * b.samples[i];
    const auto ya = apply_channel(a, r), yb = apply_channel(b, r), ys = apply_channel(s, r);
    double maxErr = 0.0;
    for (std::size_t i = 0; i < 5000; ++i)
        maxErr = std::max(maxErr, std::abs(ys.samples[i] - (ca * ya.samples[i] + cb * yb.samples[i])));
    CHECK(maxErr < 1e-10);
}

TEST_CASE("fading tap statistics")
{
    TdlProfile p;
    p.taps = {{0.0, 10.0 * std::log10(0.8), true}, {1e-6, 10.0 * std::log10(0.2), false}};
    p.shadowingStdDb = 0.0;
    const std::size_t n = 1000000;
    const auto r = realize_channel(p, table_geometry(10.0), 437e6, 2e6, n, 17);
    REQUIRE(r.taps.size() == 1u);
    CHECK(r.taps[0].delay == 2);
    CHECK(r.losAmplitude * r.losAmplitude == doctest::Approx(0.8));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::norm(r.taps[0].gain(i));
    CHECK(std::abs(acc / static_cast<double>(n) - 0.2) < 0.01);
    CHECK(signal_power(r) == doctest::Approx(1.0));
}

TEST_CASE("output power equals the realized channel power")
{
    const auto p = load_ntn_tdl_c(80e-9);
    const std::size_t n = 1000000;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const auto r = realize_channel(p, table_geometry(10.0), 437e6, 2e6, n, seed);
        const auto y = apply_channel(IqBlock{white(n, seed + 100), 2e6}, r);
        double acc = 0.0;
        const double step = r.losDoppler / 2e6;
        for (std::size_t i = 0; i < n; ++i) {
            Complex h0 = r.losAmplitude * std::polar(1.0, 2.0 * std::numbers::pi * step * static_cast<double>(i) + r.losPhase);
            double q = 0.0;
            for (const auto& t : r.taps) {
                if (t.delay == r.losDelay)
                    h0 += t.gain(i);
                else
                    q += std::norm(t.gain(i));
            }
            acc += std::norm(h0) + q;
        }
        const double g = r.shadowing_gain();
        CHECK(mean_power(y.samples) == doctest::Approx(acc / static_cast<double>(n) * g * g).epsilon(0.02));
    }
}

TEST_CASE("static realization power")
{
    TdlProfile p;
    p.taps = {{0.0, 10.0 * std::log10(0.8), true}, {1e-6, 10.0 * std::log10(0.2), false}};
    p.shadowingStdDb = 0.0;
    const std::size_t n = 1000000;
    const auto r = realize_channel(p, table_geometry(0.0), 437e6, 2e6, n, 5);
    REQUIRE(r.taps.size() == 1u);
    const double expect = 0.8 + std::norm(r.taps[0].staticGain);
    const auto y = apply_channel(IqBlock{white(n, 6), 2e6}, r);
    CHECK(mean_power(y.samples) == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("realization is deterministic and draws a uniform LOS phase")
{
    const auto p = load_ntn_tdl_c(80e-9);
    const auto a = realize_channel(p, table_geometry(4.0), 437e6, 2e6, 1000, 3);
    const auto b = realize_channel(p, table_geometry(4.0), 437e6, 2e6, 1000, 3);
    CHECK(a.losPhase == b.losPhase);
    CHECK(a.shadowingDb == b.shadowingDb);
    REQUIRE(a.taps.size() == b.taps.size());
    for (std::size_t i = 0; i < a.taps.size(); ++i)
        CHECK(a.taps[i].amplitudes == b.taps[i].amplitudes);
    double mean = 0.0, sh = 0.0;
    const int trials = 4000;
    for (int s = 0; s < trials; ++s) {
        const auto r = realize_channel(p, table_geometry(4.0), 437e6, 2e6, 1000, static_cast<std::uint64_t>(s));
        CHECK(r.losPhase >= 0.0);
        CHECK(r.losPhase < 2.0 * std::numbers::pi);
        mean += r.losPhase;
        sh += r.shadowingDb * r.shadowingDb;
    }
    CHECK(mean / trials == doctest::Approx(std::numbers::pi).epsilon(0.03));
    CHECK(std::sqrt(sh / trials) == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("Doppler compensation removes the LOS rotation")
{
    const auto p = load_ntn_tdl_c(80e-9);
    const auto g = table_geometry(4.0);
    ChannelOptions o;
    o.dopplerCompensationHz = doppler_shift(g, 437e6);
    const auto r = realize_channel(p, g, 437e6, 2e6, 1000, 3, o);
    CHECK(r.losDoppler == doctest::Approx(0.0));
    for (const auto& t : r.taps)
        CHECK(t.amplitudes.empty());
}

TEST_CASE("SNR arithmetic")
{
    CHECK(10.0 * std::log10(1.0 / 0.1) == doctest::Approx(10.0));
}
