#include <doctest.h>

#include <cmath>

#include "dvbs2sim/framing.hpp"
#include "dvbs2sim/metrics.hpp"
#include "dvbs2sim/rng.hpp"

using namespace dvbs2sim;
using namespace dvbs2sim::metrics;

TEST_CASE("bit error rate")
{
    std::vector<std::uint8_t> a(1504, 0), b(1504, 0);
    CHECK(ber(a, b) == kRateFloor);
    for (std::size_t i : {3u, 700u, 1503u})
        b[i] = 1;
    CHECK(ber(a, b) == doctest::Approx(3.0 / 1504.0));
    CHECK(ber(a, b) == doctest::Approx(1.9947e-3).epsilon(1e-4));
    std::vector<std::uint8_t> c(1504, 1);
    CHECK(ber(a, c) == 1.0);
    CHECK(count_bit_errors(a, b) == 3u);
    CHECK_THROWS_AS(ber(a, std::vector<std::uint8_t>(10)), std::invalid_argument);
}

TEST_CASE("erased frames count every bit as an error")
{
    const std::vector<std::vector<std::uint8_t>> tx(4, std::vector<std::uint8_t>(100, 1));
    auto rx = tx;
    CHECK(ber(tx, rx) == kRateFloor);
    rx[2].clear();
    CHECK(ber(tx, rx) == doctest::Approx(0.25));
    rx[0][5] = 0;
    CHECK(ber(tx, rx) == doctest::Approx(101.0 / 400.0));
    rx.pop_back();
    CHECK_THROWS_AS(ber(tx, rx), std::invalid_argument);
}

TEST_CASE("frame error rate")
{
    CHECK(fer(std::vector<bool>(50, true)) == kRateFloor);
    std::vector<bool> f(50, true);
    for (int i = 0; i < 5; ++i)
        f[static_cast<std::size_t>(i * 7)] = false;
    CHECK(fer(f) == doctest::Approx(0.1));
    CHECK(fer(std::vector<bool>(50, false)) == 1.0);
    CHECK_THROWS_AS(fer(std::vector<bool>{}), std::invalid_argument);
}

TEST_CASE("rates stay within the floor and one")
{
    Rng g(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(u(g) * 500);
        std::vector<std::uint8_t> a(n), b(n);
        std::vector<bool> ok(n);
        const double p = u(g);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<std::uint8_t>(u(g) < 0.5);
            b[i] = static_cast<std::uint8_t>(u(g) < p ? !a[i] : a[i]);
            ok[i] = u(g) < p;
        }
        const double r = ber(a, b), f = fer(ok);
        CHECK(r >= kRateFloor);
        CHECK(r <= 1.0);
        CHECK(f >= kRateFloor);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("normalized performance gain")
{
    CHECK(npg(0.3, 0.3) == 0.0);
    CHECK(npg(1e-2, kRateFloor) == doctest::Approx(0.999998).epsilon(1e-7));
    CHECK(npg(0.004, 0.001) == doctest::Approx(0.6));
    CHECK(npg(kRateFloor, 1.0) == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK_THROWS_AS(npg(-0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(npg(0.0, 0.0), std::invalid_argument);
    Rng g(2);
    std::uniform_real_distribution<double> u(1e-8, 1.0);
    for (int t = 0; t < 1000; ++t) {
        const double a = u(g), b = u(g), c = u(g) * 100.0;
        CHECK(npg(a, b) == doctest::Approx(-npg(b, a)));
        CHECK(npg(c * a, c * b) == doctest::Approx(npg(a, b)));
        CHECK(std::abs(npg(a, b)) <= 1.0);
    }
}

TEST_CASE("throughput")
{
    CHECK(throughput(1e6, 2, 0.5) == doctest::Approx(1.0e6));
    CHECK(throughput(1e6, 5, 0.75) == doctest::Approx(3.75e6));
    CHECK(throughput(1e6, 3, 1.0) == doctest::Approx(3e6));
    CHECK(throughput(2e6, 2, 0.5) > throughput(1e6, 2, 0.5));
    CHECK(throughput(1e6, 3, 0.5) > throughput(1e6, 2, 0.5));
    CHECK(throughput(1e6, 2, 0.6) > throughput(1e6, 2, 0.5));
    const auto mc = framing::modcod(framing::ModCodId::MC24);
    CHECK(throughput(1e6, mc.bitsPerSymbol, mc.code_rate()) == doctest::Approx(3.75e6));
    CHECK_THROWS_AS(throughput(0.0, 2, 0.5), std::invalid_argument);
}

TEST_CASE("SNR gain")
{
    CHECK(snr_gain(5.0, 5.0) == 0.0);
    CHECK(snr_gain(12.0, 7.49) == doctest::Approx(4.51));
    CHECK(snr_gain(7.49, 12.0) == -snr_gain(12.0, 7.49));
}

TEST_CASE("data-aided SNR estimate")
{
    const auto pilots = std::vector<Complex>(180, Complex(std::sqrt(0.5), std::sqrt(0.5)));
    SUBCASE("noise-free reaches the ceiling")
    {
        CHECK(estimate_snr(pilots, pilots) >= kSnrCeilingDb);
        CHECK(estimate_snr(pilots, pilots) == kSnrCeilingDb);
    }
    SUBCASE("Monte Carlo at 10 dB over five pilot blocks")
    {
        Rng g(3);
        std::normal_distribution<double> n(0.0, std::sqrt(0.05));
        double acc = 0.0;
        for (int t = 0; t < 500; ++t) {
            std::vector<Complex> rx(pilots);
            const Complex rot = std::polar(1.0, 0.7);
            for (auto& v : rx)
                v = v * rot + Complex{n(g), n(g)};
            acc += estimate_snr(rx, pilots);
        }
        CHECK(std::abs(acc / 500.0 - 10.0) < 0.5);
    }
    SUBCASE("scale invariant")
    {
        Rng g(4);
        std::normal_distribution<double> n(0.0, 0.2);
        std::vector<Complex> rx(pilots), scaled(pilots);
        for (std::size_t i = 0; i < rx.size(); ++i) {
            rx[i] += Complex{n(g), n(g)};
            scaled[i] = rx[i] * Complex(3.0, -1.5);
        }
        CHECK(estimate_snr(scaled, pilots) == doctest::Approx(estimate_snr(rx, pilots)));
    }
    SUBCASE("too few pilots")
    {
        const std::vector<Complex> few(20, Complex{1.0, 0.0});
        CHECK_THROWS_AS(estimate_snr(few, few), std::invalid_argument);
    }
}

TEST_CASE("compare and aggregate")
{
    LinkMetrics u, s;
    u.ber = 0.004;
    s.ber = 0.001;
    u.fer = 1.0;
    s.fer = 1.0;
    u.snrEstimateDb = 7.49;
    s.snrEstimateDb = 12.0;
    const auto r = compare(u, s);
    CHECK(r.npgBer == doctest::Approx(0.6));
    CHECK(r.npgFer == 0.0);
    CHECK(r.snrGainDb == doctest::Approx(4.51));
    const auto rr = compare(s, u);
    CHECK(rr.npgBer == doctest::Approx(-r.npgBer));
    CHECK(rr.snrGainDb == doctest::Approx(-r.snrGainDb));

    LinkMetrics a, b;
    a.ber = kRateFloor;
    b.ber = kRateFloor;
    a.fer = 0.2;
    b.fer = 0.4;
    a.snrEstimateDb = 10.0;
    b.snrEstimateDb = 12.0;
    a.bitsCounted = b.bitsCounted = 100;
    const auto m = aggregate({a, b});
    CHECK(m.ber == kRateFloor);
    CHECK(m.fer == doctest::Approx(0.3));
    CHECK(m.snrEstimateDb == doctest::Approx(11.0));
    CHECK(m.bitsCounted == 200u);
    CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}
