// metrics.hpp - error counting, verdicts and reporting artefacts

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmcap/core.hpp"
#include "nmcap/txrx.hpp"

namespace nmcap {

/// 7% overhead hard-decision FEC threshold.
inline constexpr double fec_limit = 3.8e-3;
/// BER reported for a run with no observed errors.
inline constexpr double ber_floor = 1e-4;

std::size_t count_bit_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

/// Bit-by-bit mismatch ratio. Throws on unequal or empty streams.
double ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

/// RMS error-vector magnitude over RMS reference magnitude, in percent.
double evm(std::span<const cplx> reference, std::span<const cplx> received);

struct FecVerdict {
    bool pass = false;
    bool floor = false;         // zero errors observed
    double reported_ber = 0.0;  // ber, or ber_floor when `floor` is set
};

FecVerdict fec_verdict(double ber, std::size_t bits_tested);

struct SpectrumPoint {
    double freq_hz;
    double power_db;  // relative to the strongest bin
};

inline constexpr std::size_t min_segment_length = 16;

/// Welch estimate: Hann-windowed segments of length N / segments with 50%
/// overlap, one-sided, normalised so the peak bin is 0 dB. An all-zero input
/// yields every bin at the smallest representable level.
std::vector<SpectrumPoint> spectrum_estimate(const Waveform& w, std::size_t segments);

/// Mean linear power (relative units) of an estimate between two frequencies.
double band_power(const std::vector<SpectrumPoint>& spectrum, double low_hz, double high_hz);

struct SubcarrierResult {
    int subcarrier = 0;  // 1-based
    std::size_t bit_errors = 0;
    std::size_t bits = 0;
    double ber = 0.0;    // raw errors / bits
    double evm_pct = 0.0;
    FecVerdict verdict;
};

struct RunReport {
    ModemConfig config;
    std::optional<double> snr_db;  // nullopt: noiseless
    std::vector<SubcarrierResult> subcarriers;
    double spectral_efficiency = 0.0;

    std::size_t bits_tested() const;
    std::size_t bit_errors() const;
    double aggregate_ber() const;
    bool all_pass() const;
};

inline constexpr const char* report_csv_header =
    "m,qam_order,beta,alpha,snr_db,subcarrier,ber,floor_flag,evm_pct,spec_eff,fec_pass,bits_tested";

std::string format_snr(const std::optional<double>& snr_db);

/// One row per subcarrier, no header, LF endings. With `error_column` every
/// row gets an extra empty trailing field.
void write_report_rows(std::ostream& out, const RunReport& report, bool error_column = false);
void write_report_csv(std::ostream& out, const RunReport& report);

/// Received symbols as `subcarrier,real,imag` rows with a header.
void write_constellation_csv(std::ostream& out, const SymbolFrame& frame);

}  // namespace nmcap
