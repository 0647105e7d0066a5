// core.hpp - modem configuration and closed-form m-CAP / NM-CAP relations
//
// A band of total width B is split into m subcarriers. Each subcarrier
// carries QAM symbols at R_s/m baud shaped by a square-root raised-cosine
// pulse with roll-off beta, so it occupies B/m of spectrum. Compressing by
// alpha pulls every carrier down by the factor (1 - alpha), which overlaps
// neighbouring bands and saves alpha*B of bandwidth.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace nmcap {

/// Full parameter set for one modem instance. Everything else (carrier grid,
/// sample rate, filter lengths) is derived from these fields.
///
/// Construct through from_bandwidth() or from_baud_rate(); both validate.
struct ModemConfig {
    int m = 10;                  // subcarrier count
    int qam_order = 4;           // M, one of 4, 16, 64
    double beta = 0.1;           // SRRC roll-off, (0, 1]
    double alpha = 0.0;          // bandwidth compression, [0, 1)
    double bandwidth_hz = 3e6;   // total signal bandwidth B
    int span_symbols = 10;       // filter span per side, in symbol periods
    std::uint64_t seed = 1;

    static ModemConfig from_bandwidth(int m, int qam_order, double beta, double alpha,
                                      double bandwidth_hz, int span_symbols = 10,
                                      std::uint64_t seed = 1);

    /// Baud-driven construction; B is recovered as baud_rate * (1 + beta).
    static ModemConfig from_baud_rate(int m, int qam_order, double beta, double alpha,
                                      double baud_rate, int span_symbols = 10,
                                      std::uint64_t seed = 1);

    /// Throws std::domain_error on any out-of-range field.
    void validate() const;

    /// Aggregate symbol rate over all subcarriers, B / (1 + beta).
    double baud_rate() const;
    double subcarrier_baud_rate() const { return baud_rate() / m; }
    double symbol_period_s() const { return 1.0 / subcarrier_baud_rate(); }
    int samples_per_symbol() const;
    double sample_rate_hz() const;
    int bits_per_symbol() const;
    double carrier_hz(int n) const;
    double spectral_efficiency() const;

    bool operator==(const ModemConfig&) const = default;
};

/// n_s = ceil(2 m (1 + beta)).
int samples_per_symbol(int m, double beta);

/// f_c^n = (2n - 1) / (2m) * B * (1 - alpha), n in [1, m].
double carrier_frequency(int n, int m, double bandwidth_hz, double alpha);

/// f_s = R_s * n_s / m with R_s the aggregate baud rate.
double sampling_frequency(double baud_rate, int samples_per_symbol, int m);

/// eta = log2(M) / ((1 + beta)(1 - alpha)), bits/s/Hz.
double spectral_efficiency(int qam_order, double beta, double alpha);

/// Fractional spectral-efficiency gain of compression alpha over alpha = 0,
/// i.e. 1/(1 - alpha) - 1. Independent of M and beta.
double compression_gain(double alpha);

/// Positive-frequency span actually occupied by the m bands:
/// [f_c^1 - B/(2m), f_c^m + B/(2m)], clamped at 0 Hz.
struct OccupiedBand {
    double low_hz = 0.0;
    double high_hz = 0.0;
    double width_hz() const { return high_hz - low_hz; }
};

OccupiedBand occupied_band(const ModemConfig& config);

/// Parse the key=value configuration format (`#` comments, blank lines
/// allowed). Keys not present keep the values already in `base`.
ModemConfig parse_config(std::istream& in, ModemConfig base = {});
ModemConfig load_config(const std::filesystem::path& path, ModemConfig base = {});

std::string to_string(const ModemConfig& config);

}  // namespace nmcap
