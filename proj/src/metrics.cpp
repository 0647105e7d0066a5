#include "nmcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nmcap/dsp.hpp"

namespace nmcap {

std::size_t count_bit_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx) {
    if (tx.size() != rx.size())
        throw std::length_error(fmt::format("bit streams differ in length ({} vs {})", tx.size(), rx.size()));
    std::size_t errors = 0;
    for (std::size_t i = 0; i < tx.size(); ++i) errors += (tx[i] & 1u) != (rx[i] & 1u);
    return errors;
}

double ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx) {
    const std::size_t errors = count_bit_errors(tx, rx);
    if (tx.empty()) throw std::length_error("BER of an empty stream is undefined");
    return static_cast<double>(errors) / static_cast<double>(tx.size());
}

double evm(std::span<const cplx> reference, std::span<const cplx> received) {
    if (reference.size() != received.size())
        throw std::length_error(fmt::format("symbol sequences differ in length ({} vs {})",
                                            reference.size(), received.size()));
    if (reference.empty()) throw std::length_error("EVM of an empty sequence is undefined");
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        err += std::norm(received[i] - reference[i]);
        ref += std::norm(reference[i]);
    }
    if (ref <= 0.0) throw std::domain_error("EVM reference has zero power");
    return 100.0 * std::sqrt(err / ref);
}

FecVerdict fec_verdict(double ber, std::size_t bits_tested) {
    if (!(ber >= 0.0 && ber <= 1.0)) throw std::domain_error(fmt::format("BER {} outside [0, 1]", ber));
    FecVerdict v;
    v.pass = ber < fec_limit;
    v.floor = ber == 0.0 || bits_tested == 0;
    v.reported_ber = v.floor ? ber_floor : ber;
    return v;
}

std::vector<SpectrumPoint> spectrum_estimate(const Waveform& w, std::size_t segments) {
    if (segments == 0) throw std::invalid_argument("segment count must be positive");
    const std::size_t n = w.samples.size();
    if (n < segments * min_segment_length)
        throw std::length_error(fmt::format("{} samples are too few for {} segments", n, segments));

    const std::size_t len = n / segments;
    const std::size_t hop = std::max<std::size_t>(1, len / 2);
    const std::size_t bins = len / 2 + 1;

    std::vector<double> window(len);
    for (std::size_t i = 0; i < len; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));

    std::vector<double> psd(bins, 0.0);
    std::vector<double> seg(len);
    std::size_t count = 0;
    for (std::size_t start = 0; start + len <= n; start += hop) {
        for (std::size_t i = 0; i < len; ++i) seg[i] = w.samples[start + i] * window[i];
        const auto spec = dsp::rfft(seg, len);
        for (std::size_t k = 0; k < bins; ++k) psd[k] += std::norm(spec[k]);
        ++count;
    }

    const double peak = *std::max_element(psd.begin(), psd.end());
    const double tiny = std::numeric_limits<double>::min();
    std::vector<SpectrumPoint> out(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        out[k].freq_hz = static_cast<double>(k) * w.sample_rate_hz / static_cast<double>(len);
        const double rel = peak > 0.0 ? psd[k] / peak : 0.0;
        out[k].power_db = 10.0 * std::log10(std::max(rel, tiny));
    }
    return out;
}

double band_power(const std::vector<SpectrumPoint>& spectrum, double low_hz, double high_hz) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& p : spectrum) {
        if (p.freq_hz < low_hz || p.freq_hz > high_hz) continue;
        acc += std::pow(10.0, p.power_db / 10.0);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("no spectrum bins in the requested band");
    return acc / static_cast<double>(count);
}

std::size_t RunReport::bits_tested() const {
    std::size_t total = 0;
    for (const auto& s : subcarriers) total += s.bits;
    return total;
}

std::size_t RunReport::bit_errors() const {
    std::size_t total = 0;
    for (const auto& s : subcarriers) total += s.bit_errors;
    return total;
}

double RunReport::aggregate_ber() const {
    const std::size_t bits = bits_tested();
    return bits == 0 ? 0.0 : static_cast<double>(bit_errors()) / static_cast<double>(bits);
}

bool RunReport::all_pass() const {
    return std::all_of(subcarriers.begin(), subcarriers.end(),
                       [](const SubcarrierResult& s) { return s.verdict.pass; });
}

std::string format_snr(const std::optional<double>& snr_db) {
    return snr_db ? fmt::format("{}", *snr_db) : std::string("inf");
}

void write_report_rows(std::ostream& out, const RunReport& r, bool error_column) {
    const auto& c = r.config;
    const std::string snr = format_snr(r.snr_db);
    for (const auto& s : r.subcarriers) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{}{}\n", c.m, c.qam_order, c.beta, c.alpha, snr,
                   s.subcarrier, s.verdict.reported_ber, s.verdict.floor ? 1 : 0, s.evm_pct,
                   r.spectral_efficiency, s.verdict.pass ? 1 : 0, s.bits, error_column ? "," : "");
    }
}

void write_report_csv(std::ostream& out, const RunReport& report) {
    out << report_csv_header << '\n';
    write_report_rows(out, report);
}

void write_constellation_csv(std::ostream& out, const SymbolFrame& frame) {
    out << "subcarrier,real,imag\n";
    for (int n = 0; n < frame.m(); ++n)
        for (const cplx& s : frame.subcarriers[n]) fmt::print(out, "{},{},{}\n", n + 1, s.real(), s.imag());
}

}  // namespace nmcap
