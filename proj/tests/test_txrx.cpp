#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "nmcap/filters.hpp"
#include "nmcap/txrx.hpp"
#include "oracles.hpp"

using namespace nmcap;

namespace {

ModemConfig cfg(int m, double beta, double alpha) { return ModemConfig::from_bandwidth(m, 4, beta, alpha, 3e6); }

SymbolFrame random_frame(int m, std::size_t count, int order, unsigned seed) {
    const QamConstellation qam(order);
    std::mt19937 rng(seed);
    std::uniform_int_distribution<unsigned> label(0, static_cast<unsigned>(order) - 1);
    SymbolFrame f;
    f.subcarriers.resize(m);
    for (auto& sc : f.subcarriers)
        for (std::size_t k = 0; k < count; ++k) sc.push_back(qam.point(label(rng)));
    return f;
}

double max_error(const SymbolFrame& a, const SymbolFrame& b) {
    double worst = 0.0;
    for (int n = 0; n < a.m(); ++n)
        for (std::size_t k = 0; k < a.subcarriers[n].size(); ++k)
            worst = std::max(worst, std::abs(a.subcarriers[n][k] - b.subcarriers[n][k]));
    return worst;
}

int popcount(unsigned v) { return __builtin_popcount(v); }

}  // namespace

TEST_CASE("prbs15 period and balance") {
    const auto bits = prbs(2 * prbs15_period, 1);
    REQUIRE(bits.size() == 2 * prbs15_period);
    CHECK(std::equal(bits.begin(), bits.begin() + prbs15_period, bits.begin() + prbs15_period));

    const auto ones = std::count(bits.begin(), bits.begin() + prbs15_period, 1);
    CHECK(ones == 16384);
    CHECK(prbs15_period - ones == 16383);

    // No shorter period: the register returns to its start state only after 32767 steps.
    Prbs15 reg(1);
    std::uint32_t steps = 0;
    do {
        reg.next();
        ++steps;
    } while (reg.state() != 1 && steps <= prbs15_period);
    CHECK(steps == prbs15_period);

    // Every proper rotation differs from the sequence itself (checked on a divisor-free sample).
    const std::vector<std::uint8_t> one(bits.begin(), bits.begin() + prbs15_period);
    for (std::uint32_t r : {1u, 7u, 31u, 151u, 4681u, 16383u})
        CHECK_FALSE(std::equal(one.begin(), one.end() - r, one.begin() + r));
}

TEST_CASE("prbs15 edge cases") {
    CHECK(prbs(0, 5).empty());
    CHECK_THROWS(Prbs15(0));
    CHECK_THROWS(Prbs15(0x8000));  // low 15 bits all zero
    CHECK(prbs(1000, 123) == prbs(1000, 123));
    CHECK(prbs(1000, 123) != prbs(1000, 124));

    std::set<std::uint32_t> states;
    for (int n = 1; n <= 10; ++n) {
        const auto s = subcarrier_prbs_state(42, n);
        CHECK(s != 0);
        CHECK(s <= 0x7fffu);
        CHECK(s == subcarrier_prbs_state(42, n));
        states.insert(s);
    }
    CHECK(states.size() == 10);
}

TEST_CASE("4-QAM constellation") {
    const QamConstellation qam(4);
    const double r = 1.0 / std::sqrt(2.0);
    std::set<std::pair<double, double>> pts;
    for (unsigned l = 0; l < 4; ++l) {
        const auto p = qam.point(l);
        CHECK(std::abs(std::abs(p.real()) - r) < 1e-15);
        CHECK(std::abs(std::abs(p.imag()) - r) < 1e-15);
        pts.insert({p.real(), p.imag()});
    }
    CHECK(pts.size() == 4);
}

TEST_CASE("gray adjacency and unit energy") {
    for (int order : {4, 16, 64}) {
        const QamConstellation qam(order);
        const double d = qam.min_distance();
        double energy = 0.0;
        for (unsigned a = 0; a < static_cast<unsigned>(order); ++a) {
            energy += std::norm(qam.point(a));
            for (unsigned b = 0; b < static_cast<unsigned>(order); ++b)
                if (std::abs(std::abs(qam.point(a) - qam.point(b)) - d) < 1e-9) CHECK(popcount(a ^ b) == 1);
        }
        CHECK(energy / order == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS(QamConstellation(8));
    CHECK_THROWS(QamConstellation(2));
}

TEST_CASE("qam map / demap round trip") {
    for (int order : {4, 16, 64}) {
        const QamConstellation qam(order);
        const int k = qam.bits_per_symbol();
        // Exhaustive over ordered label pairs.
        BitStream bits;
        for (unsigned a = 0; a < static_cast<unsigned>(order); ++a)
            for (unsigned b = 0; b < static_cast<unsigned>(order); ++b)
                for (unsigned label : {a, b})
                    for (int i = k - 1; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((label >> i) & 1u));
        const auto symbols = qam.map(bits);
        CHECK(symbols.size() == bits.size() / k);
        CHECK(qam.demap(symbols) == bits);
        for (unsigned l = 0; l < static_cast<unsigned>(order); ++l) CHECK(qam.decide(qam.point(l)) == l);

        const BitStream bad(k + 1, 0);
        CHECK_THROWS(qam.map(bad));
    }
}

TEST_CASE("slicer tolerates noise below half the minimum distance") {
    std::mt19937 rng(3);
    for (int order : {4, 16}) {
        const QamConstellation qam(order);
        const double lim = 0.49 * qam.min_distance();
        std::uniform_real_distribution<double> u(-lim, lim);
        for (int t = 0; t < 2000; ++t) {
            const unsigned l = rng() % order;
            CHECK(qam.decide(qam.point(l) + cplx(u(rng), u(rng))) == l);
        }
    }
}

TEST_CASE("slicer tie-break") {
    const QamConstellation qam(4);
    CHECK(qam.decide(cplx(0.0, 0.0)) == 0u);
    CHECK(qam.demap(std::vector<cplx>{cplx(0.0, 0.0)}) == BitStream{0, 0});
    // Ties on one axis only resolve that axis to the smaller Gray label.
    const double r = 1.0 / std::sqrt(2.0);
    const unsigned pos_q = qam.decide(cplx(-r, r));
    CHECK(qam.decide(cplx(0.0, r)) == (pos_q & 1u));
}

TEST_CASE("modulate basic responses") {
    const auto tx = build_tx_bank(cfg(3, 0.3, 0.0));
    const int ns = tx.samples_per_symbol();
    const int d = tx.delay_samples();

    SymbolFrame zero;
    zero.subcarriers.assign(3, std::vector<cplx>(20, cplx(0.0, 0.0)));
    const auto w0 = modulate(zero, tx);
    CHECK(w0.samples.size() == static_cast<std::size_t>(20 * ns + 2 * d));
    CHECK(w0.sample_rate_hz == doctest::Approx(tx.sample_rate_hz()));
    CHECK(std::all_of(w0.samples.begin(), w0.samples.end(), [](double v) { return v == 0.0; }));

    // One unit symbol on subcarrier 2 at slot 4.
    SymbolFrame one = zero;
    one.subcarriers[1][4] = cplx(1.0, 0.0);
    const auto w1 = modulate(one, tx);
    const auto& fi = tx.subcarriers[1].in_phase.taps;
    for (std::size_t i = 0; i < w1.samples.size(); ++i) {
        const long k = static_cast<long>(i) - 4 * ns;
        const double expect = (k >= 0 && k < static_cast<long>(fi.size())) ? std::sqrt(2.0) * fi[k] : 0.0;
        CHECK(w1.samples[i] == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
    }

    SymbolFrame wrong = zero;
    wrong.subcarriers.pop_back();
    CHECK_THROWS(modulate(wrong, tx));
}

TEST_CASE("modulate is linear and power is stable across alpha") {
    const auto a = random_frame(4, 200, 4, 1);
    const auto b = random_frame(4, 200, 16, 2);
    const auto tx = build_tx_bank(cfg(4, 0.1, 0.0));
    const auto wa = modulate(a, tx).samples;
    const auto wb = modulate(b, tx).samples;
    SymbolFrame sum = a;
    for (int n = 0; n < 4; ++n)
        for (std::size_t k = 0; k < 200; ++k) sum.subcarriers[n][k] = 2.0 * a.subcarriers[n][k] - 0.5 * b.subcarriers[n][k];
    const auto ws = modulate(sum, tx).samples;
    for (std::size_t i = 0; i < ws.size(); ++i) CHECK(std::abs(ws[i] - (2.0 * wa[i] - 0.5 * wb[i])) < 1e-12);

    const auto frame = random_frame(10, 2000, 4, 9);
    auto power = [&](double alpha) {
        const auto bank = build_tx_bank(cfg(10, 0.1, alpha));
        const auto w = modulate(frame, bank);
        const int d = bank.delay_samples();
        double p = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 2 * d; i + 2 * d < w.samples.size(); ++i, ++count) p += w.samples[i] * w.samples[i];
        return p / static_cast<double>(count);
    };
    const double p0 = power(0.0);
    CHECK(p0 * 22 == doctest::Approx(2.0 * 10).epsilon(0.05));  // m unit-energy bands, sqrt(2) gain, per n_s samples
    for (double alpha : {0.1, 0.2, 0.3}) CHECK(power(alpha) == doctest::Approx(p0).epsilon(0.05));
}

TEST_CASE("two-band spectrum before the channel") {
    const auto c = cfg(2, 0.1, 0.0);
    const auto tx = build_tx_bank(c);
    const auto w = modulate(random_frame(2, 4000, 4, 5), tx);
    // Averaged periodogram oracle: 256-point blocks, rectangular window.
    const std::size_t n = 256;
    std::vector<double> psd(n / 2 + 1, 0.0);
    for (std::size_t start = 0; start + n <= w.samples.size(); start += n) {
        std::vector<double> seg(w.samples.begin() + start, w.samples.begin() + start + n);
        const auto mag = oracle::dft_mag(seg, {}, n);
        for (std::size_t k = 0; k <= n / 2; ++k) psd[k] += mag[k] * mag[k];
    }
    const double bin = w.sample_rate_hz / n;
    auto band = [&](double lo, double hi) {
        double p = 0.0;
        for (std::size_t k = 0; k <= n / 2; ++k)
            if (k * bin >= lo && k * bin < hi) p += psd[k];
        return p;
    };
    const double b1 = band(0.0, 1.5e6);
    const double b2 = band(1.5e6, 3.0e6);
    const double out = band(3.2e6, w.sample_rate_hz / 2);
    CHECK(std::abs(10.0 * std::log10(b2 / b1)) < 1.0);
    CHECK(10.0 * std::log10(out / (b1 + b2)) < -30.0);

    const auto split = static_cast<std::size_t>(1.5e6 / bin);
    const auto top = static_cast<std::size_t>(3.0e6 / bin);
    const double c1 = oracle::power_centroid_bin(psd, 0, split) * bin;
    const double c2 = oracle::power_centroid_bin(psd, split + 1, top) * bin;
    CHECK(std::abs(c1 - 0.75e6) < 2 * bin);
    CHECK(std::abs(c2 - 2.25e6) < 2 * bin);
}

TEST_CASE("loopback") {
    SUBCASE("alpha = 0, m = 10, beta = 0.5") {
        const auto tx = build_tx_bank(cfg(10, 0.5, 0.0));
        const auto frame = random_frame(10, 500, 4, 11);
        const auto rxf = demodulate(modulate(frame, tx), build_rx_bank(tx), 500);
        CHECK(max_error(frame, rxf) < 1e-2);
    }
    SUBCASE("alpha = 0.1 keeps every hard decision") {
        const auto tx = build_tx_bank(cfg(10, 0.1, 0.1));
        const auto frame = random_frame(10, 2000, 4, 12);
        const auto rxf = demodulate(modulate(frame, tx), build_rx_bank(tx), 2000);
        const QamConstellation qam(4);
        const double err = max_error(frame, rxf);
        CHECK(err > 1e-3);
        CHECK(err < 0.5 * qam.min_distance());
        for (int n = 0; n < 10; ++n) CHECK(qam.demap(rxf.subcarriers[n]) == qam.demap(frame.subcarriers[n]));
    }
    SUBCASE("zero waveform") {
        const auto tx = build_tx_bank(cfg(2, 0.3, 0.0));
        const Waveform w{std::vector<double>(2000, 0.0), tx.sample_rate_hz()};
        const auto rxf = demodulate(w, build_rx_bank(tx), 10);
        for (const auto& sc : rxf.subcarriers)
            for (const auto& s : sc) CHECK(s == cplx(0.0, 0.0));
    }
    SUBCASE("perfect reconstruction grid") {
        for (int m = 1; m <= 10; ++m)
            for (double beta : {0.1, 0.3, 0.5}) {
                const auto tx = build_tx_bank(cfg(m, beta, 0.0));
                const auto frame = random_frame(m, 300, 4, 100 + m);
                const auto rxf = demodulate(modulate(frame, tx), build_rx_bank(tx), 300);
                CAPTURE(m);
                CAPTURE(beta);
                // Residual is span truncation, far inside the decision margin.
                CHECK(max_error(frame, rxf) < 0.05);
                const QamConstellation qam(4);
                for (int n = 0; n < m; ++n) CHECK(qam.demap(rxf.subcarriers[n]) == qam.demap(frame.subcarriers[n]));
            }
    }
    SUBCASE("misuse") {
        const auto tx = build_tx_bank(cfg(2, 0.3, 0.0));
        const auto w = modulate(random_frame(2, 10, 4, 1), tx);
        CHECK_THROWS_AS(demodulate(w, build_rx_bank(tx), 11), std::length_error);
        CHECK_THROWS(demodulate(w, tx, 10));
        Waveform other = w;
        other.sample_rate_hz *= 2;
        CHECK_THROWS(demodulate(other, build_rx_bank(tx), 10));
    }
}

TEST_CASE("modulation is deterministic") {
    const auto tx = build_tx_bank(cfg(5, 0.3, 0.2));
    const auto frame = random_frame(5, 100, 16, 8);
    CHECK(modulate(frame, tx).samples == modulate(frame, tx).samples);
}

TEST_CASE("waveform file round trip") {
    const auto path = std::filesystem::temp_directory_path() / "nmcap_test_waveform.bin";
    Waveform w{{0.0, -1.5, 3.25e-7, 1e300, -0.0}, 6.923e6};
    write_waveform(path, w);
    const auto r = read_waveform(path);
    CHECK(r.sample_rate_hz == w.sample_rate_hz);
    CHECK(r.samples == w.samples);
    CHECK(std::filesystem::file_size(path) == 8 + 8 + 8 * w.samples.size());

    {
        std::ofstream bad(path, std::ios::binary);
        bad << "NOTAWAVE";
    }
    CHECK_THROWS(read_waveform(path));
    std::filesystem::remove(path);
    CHECK_THROWS(read_waveform(path));
}
