#include "nmcap/txrx.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace nmcap {

namespace {

constexpr char wave_magic[8] = {'N', 'M', 'C', 'A', 'P', 'W', 'A', 'V'};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

unsigned gray_encode(unsigned v) { return v ^ (v >> 1); }

unsigned gray_decode(unsigned g) {
    unsigned v = 0;
    for (; g != 0; g >>= 1) v ^= g;
    return v;
}

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
    return v;
}

void put_f64(std::ostream& out, double v) {
    const auto le = to_little_endian(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &le, 8);
    out.write(bytes, 8);
}

double get_f64(const char* bytes) {
    std::uint64_t le = 0;
    std::memcpy(&le, bytes, 8);
    return std::bit_cast<double>(to_little_endian(le));
}

}  // namespace

Prbs15::Prbs15(std::uint32_t state) : state_(state & 0x7fffu) {
    if (state_ == 0) throw std::invalid_argument("PRBS seed state must be nonzero");
}

BitStream prbs(std::size_t count, std::uint32_t seed_state) {
    Prbs15 gen(seed_state);
    BitStream bits(count);
    for (auto& b : bits) b = gen.next();
    return bits;
}

std::uint32_t subcarrier_prbs_state(std::uint64_t seed, int n) {
    const std::uint64_t h = splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(n));
    return static_cast<std::uint32_t>(h % prbs15_period) + 1u;
}

QamConstellation::QamConstellation(int order) : order_(order) {
    if (order != 4 && order != 16 && order != 64)
        throw std::domain_error(fmt::format("unsupported QAM order {}", order));
    bits_ = std::countr_zero(static_cast<unsigned>(order));
    side_ = 1 << (bits_ / 2);
    scale_ = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);
}

double QamConstellation::level(unsigned axis_label) const {
    const auto idx = static_cast<int>(gray_decode(axis_label));
    return (2.0 * idx - (side_ - 1)) * scale_;
}

unsigned QamConstellation::decide_axis(double v) const {
    const double u = (v / scale_ + (side_ - 1)) / 2.0;
    if (!(u > 0.0)) return gray_encode(0);
    if (u >= side_ - 1) return gray_encode(static_cast<unsigned>(side_ - 1));
    const double lower = std::floor(u);
    const auto lo = static_cast<unsigned>(lower);
    if (u - lower == 0.5) return std::min(gray_encode(lo), gray_encode(lo + 1));
    return gray_encode(static_cast<unsigned>(std::lround(u)));
}

cplx QamConstellation::point(unsigned label) const {
    const int half = bits_ / 2;
    const unsigned mask = (1u << half) - 1u;
    return {level((label >> half) & mask), level(label & mask)};
}

unsigned QamConstellation::decide(cplx symbol) const {
    const int half = bits_ / 2;
    return (decide_axis(symbol.real()) << half) | decide_axis(symbol.imag());
}

std::vector<cplx> QamConstellation::map(std::span<const std::uint8_t> bits) const {
    if (bits.size() % static_cast<std::size_t>(bits_) != 0)
        throw std::length_error(fmt::format("{} bits do not divide into {}-bit symbols",
                                            bits.size(), bits_));
    std::vector<cplx> out;
    out.reserve(bits.size() / bits_);
    for (std::size_t i = 0; i < bits.size(); i += bits_) {
        unsigned label = 0;
        for (int b = 0; b < bits_; ++b) label = (label << 1) | (bits[i + b] & 1u);
        out.push_back(point(label));
    }
    return out;
}

BitStream QamConstellation::demap(std::span<const cplx> symbols) const {
    BitStream out;
    out.reserve(symbols.size() * bits_);
    for (const cplx& s : symbols) {
        const unsigned label = decide(s);
        for (int b = bits_ - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((label >> b) & 1u));
    }
    return out;
}

Waveform modulate(const SymbolFrame& frame, const FilterBank& tx) {
    if (tx.role != BankRole::transmit) throw std::invalid_argument("modulate needs a transmit bank");
    if (frame.m() != tx.m())
        throw std::invalid_argument(fmt::format("frame has {} subcarriers, bank has {}", frame.m(), tx.m()));
    const std::size_t count = frame.symbols_per_subcarrier();
    for (const auto& sc : frame.subcarriers)
        if (sc.size() != count) throw std::invalid_argument("subcarriers carry unequal symbol counts");

    const auto ns = static_cast<std::size_t>(tx.samples_per_symbol());
    const auto delay = static_cast<std::size_t>(tx.delay_samples());
    Waveform w;
    w.sample_rate_hz = tx.sample_rate_hz();
    w.samples.assign(count * ns + 2 * delay, 0.0);
    if (count == 0) return w;

    const std::size_t taps = tx.subcarriers.front().in_phase.size();
    for (int n = 0; n < tx.m(); ++n) {
        const double* fi = tx.subcarriers[n].in_phase.taps.data();
        const double* fq = tx.subcarriers[n].quadrature.taps.data();
        const auto& syms = frame.subcarriers[n];
        for (std::size_t k = 0; k < count; ++k) {
            const double a = std::numbers::sqrt2 * syms[k].real();
            const double b = -std::numbers::sqrt2 * syms[k].imag();
            if (a == 0.0 && b == 0.0) continue;
            double* out = w.samples.data() + k * ns;
            for (std::size_t t = 0; t < taps; ++t) out[t] += a * fi[t] + b * fq[t];
        }
    }
    return w;
}

SymbolFrame demodulate(const Waveform& w, const FilterBank& rx, std::size_t symbol_count) {
    if (rx.role != BankRole::receive) throw std::invalid_argument("demodulate needs a receive bank");
    const double fs = rx.sample_rate_hz();
    if (std::abs(w.sample_rate_hz - fs) > 1e-9 * fs)
        throw std::invalid_argument(
            fmt::format("waveform rate {} Hz does not match filter rate {} Hz", w.sample_rate_hz, fs));

    const auto ns = static_cast<std::size_t>(rx.samples_per_symbol());
    const std::size_t taps = rx.subcarriers.front().in_phase.size();
    // tx delay + rx delay; both banks share one prototype length.
    const std::size_t cascade_delay = 2 * static_cast<std::size_t>(rx.delay_samples());
    if (symbol_count > 0) {
        const std::size_t needed = (symbol_count - 1) * ns + cascade_delay + 1;
        if (w.samples.size() < needed)
            throw std::length_error(fmt::format(
                "waveform has {} samples, {} symbols need {}", w.samples.size(), symbol_count, needed));
    }

    SymbolFrame frame;
    frame.subcarriers.assign(rx.m(), std::vector<cplx>(symbol_count));
    for (int n = 0; n < rx.m(); ++n) {
        // y[k] = sum_t w[k*ns + D - t] g[t]; walk g backwards so the window
        // over w is contiguous.
        const double* gi = rx.subcarriers[n].in_phase.taps.data();
        const double* gq = rx.subcarriers[n].quadrature.taps.data();
        for (std::size_t k = 0; k < symbol_count; ++k) {
            const double* win = w.samples.data() + k * ns + cascade_delay - (taps - 1);
            double yi = 0.0;
            double yq = 0.0;
            for (std::size_t t = 0; t < taps; ++t) {
                const double x = win[t];
                yi += x * gi[taps - 1 - t];
                yq += x * gq[taps - 1 - t];
            }
            frame.subcarriers[n][k] = cplx(yi, -yq) / std::numbers::sqrt2;
        }
    }
    return frame;
}

void write_waveform(const std::filesystem::path& path, const Waveform& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    out.write(wave_magic, sizeof(wave_magic));
    put_f64(out, w.sample_rate_hz);
    for (double v : w.samples) put_f64(out, v);
    if (!out) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

Waveform read_waveform(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), wave_magic, 8) != 0)
        throw std::runtime_error(fmt::format("{} is not a waveform dump", path.string()));
    if ((bytes.size() - 16) % 8 != 0)
        throw std::runtime_error(fmt::format("{} has a truncated sample", path.string()));
    Waveform w;
    w.sample_rate_hz = get_f64(bytes.data() + 8);
    w.samples.resize((bytes.size() - 16) / 8);
    for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = get_f64(bytes.data() + 16 + 8 * i);
    return w;
}

}  // namespace nmcap
