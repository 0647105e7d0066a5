// txrx.hpp - m-CAP transmit and receive chains
//
//   bits -> Gray QAM -> zero-stuff by n_s -> f_I / f_Q -> sum over bands (x sqrt 2)
//   waveform -> matched g_I / g_Q -> sample every n_s -> (y_I - j y_Q) / sqrt 2 -> slicer
//
// Timing is known a priori: the receiver compensates the analytic group delay
// of the transmit and matched filters, there is no synchroniser.

#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nmcap/core.hpp"
#include "nmcap/filters.hpp"

namespace nmcap {

using cplx = std::complex<double>;
using BitStream = std::vector<std::uint8_t>;

inline constexpr std::uint32_t prbs15_period = 32767;

/// 15-stage Fibonacci LFSR with characteristic polynomial x^15 + x^14 + 1.
class Prbs15 {
public:
    /// Only the low 15 bits of `state` are used; they must not all be zero.
    explicit Prbs15(std::uint32_t state);

    std::uint8_t next() {
        const std::uint32_t bit = ((state_ >> 14) ^ (state_ >> 13)) & 1u;
        state_ = ((state_ << 1) | bit) & 0x7fffu;
        return static_cast<std::uint8_t>(bit);
    }

    std::uint32_t state() const { return state_; }

private:
    std::uint32_t state_;
};

BitStream prbs(std::size_t count, std::uint32_t seed_state);

/// Register state for subcarrier n (1-based) derived from the run seed.
/// Every nonzero state lies on the single maximal-length cycle, so this
/// amounts to a per-subcarrier starting offset into the same sequence.
std::uint32_t subcarrier_prbs_state(std::uint64_t seed, int n);

/// Square Gray-coded M-QAM with unit average symbol energy.
///
/// A label's high half of bits selects the in-phase level and the low half
/// the quadrature level; each axis is Gray coded independently.
class QamConstellation {
public:
    explicit QamConstellation(int order);

    int order() const { return order_; }
    int bits_per_symbol() const { return bits_; }
    /// Distance between adjacent levels on one axis.
    double min_distance() const { return 2.0 * scale_; }

    cplx point(unsigned label) const;
    /// Minimum-distance decision. On an exact boundary the candidate with the
    /// smaller Gray label wins.
    unsigned decide(cplx symbol) const;

    std::vector<cplx> map(std::span<const std::uint8_t> bits) const;
    BitStream demap(std::span<const cplx> symbols) const;

private:
    double level(unsigned axis_label) const;
    unsigned decide_axis(double v) const;

    int order_;
    int bits_;
    int side_;  // levels per axis
    double scale_;
};

inline std::vector<cplx> qam_map(std::span<const std::uint8_t> bits, int order) {
    return QamConstellation(order).map(bits);
}

inline BitStream qam_demap(std::span<const cplx> symbols, int order) {
    return QamConstellation(order).demap(symbols);
}

struct SymbolFrame {
    std::vector<std::vector<cplx>> subcarriers;  // index 0 is subcarrier n = 1

    int m() const { return static_cast<int>(subcarriers.size()); }
    std::size_t symbols_per_subcarrier() const {
        return subcarriers.empty() ? 0 : subcarriers.front().size();
    }
};

struct Waveform {
    std::vector<double> samples;
    double sample_rate_hz = 1.0;
};

/// s = sqrt(2) * sum_n (s_I^n (*) f_I^n - s_Q^n (*) f_Q^n) on the n_s-stuffed
/// symbol grid. Symbol k of every band peaks at sample k * n_s + delay.
/// Output length is N * n_s + 2 * delay for N symbols per subcarrier.
Waveform modulate(const SymbolFrame& frame, const FilterBank& tx);

/// Matched filtering and symbol-rate sampling. Requires at least
/// (symbol_count - 1) * n_s + tx delay + rx delay + 1 samples.
SymbolFrame demodulate(const Waveform& w, const FilterBank& rx, std::size_t symbol_count);

/// Binary dump: "NMCAPWAV", float64 sample rate, then float64 samples, all
/// little-endian.
void write_waveform(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform(const std::filesystem::path& path);

}  // namespace nmcap
