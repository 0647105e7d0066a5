// filters.hpp - SRRC Hilbert-pair filter banks for m-CAP / NM-CAP
//
// Each subcarrier n is served by two FIR filters built from one square-root
// raised-cosine prototype p(t):
//
//   in-phase    f_I(t) = p(t) cos(2 pi f_c^n t)   (even about the centre tap)
//   quadrature  f_Q(t) = p(t) sin(2 pi f_c^n t)   (odd about the centre tap)
//
// The receiver uses the time-reversed (matched) responses. All responses are
// scaled to unit energy so a tx -> matched rx cascade has unit gain at lag 0.

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "nmcap/core.hpp"

namespace nmcap {

struct ImpulseResponse {
    std::vector<double> taps;
    double sample_rate_hz = 1.0;
    int delay_samples = 0;  // group delay, (taps.size() - 1) / 2

    std::size_t size() const { return taps.size(); }
};

enum class BankRole { transmit, receive };

struct FilterPair {
    ImpulseResponse in_phase;
    ImpulseResponse quadrature;
};

struct FilterBank {
    ModemConfig config;
    BankRole role = BankRole::transmit;
    std::vector<FilterPair> subcarriers;  // index 0 is subcarrier n = 1

    int m() const { return static_cast<int>(subcarriers.size()); }
    int samples_per_symbol() const { return config.samples_per_symbol(); }
    double sample_rate_hz() const { return config.sample_rate_hz(); }
    int delay_samples() const { return subcarriers.front().in_phase.delay_samples; }
    std::size_t filter_count() const { return 2 * subcarriers.size(); }
};

/// Continuous SRRC pulse p(t) with t in units of the symbol period T.
/// The removable singularities at t = 0 and |t| = 1/(4 beta) evaluate to their
/// closed-form limits.
double srrc_value(double t_over_T, double beta);

/// SRRC sampled at t = k / samples_per_symbol for |k| <= span * samples_per_symbol.
/// Amplitudes are the raw pulse values (peak 1 - beta + 4 beta / pi); sample
/// rate is expressed per symbol period (T = 1).
ImpulseResponse srrc_prototype(double beta, int samples_per_symbol, int span_symbols);

FilterBank build_tx_bank(const ModemConfig& config);

/// Matched receive bank: every response is the sample-reversed transmit one.
FilterBank build_rx_bank(const FilterBank& tx);

/// Worst-case crosstalk gains between subcarriers.
///
/// Entry (i, j) is the largest magnitude, over symbol-spaced lags and over
/// the four I/Q path combinations, of transmit filter j cascaded with the
/// matched receive filter i. Each row is divided by its diagonal entry.
class IciMatrix {
public:
    IciMatrix() = default;
    explicit IciMatrix(int m) : m_(m), gains_(static_cast<std::size_t>(m) * m, 0.0) {}

    int size() const { return m_; }
    double operator()(int i, int j) const { return gains_[index(i, j)]; }
    double& operator()(int i, int j) { return gains_[index(i, j)]; }
    double db(int i, int j) const;
    double max_off_diagonal() const;

    /// Number of off-diagonal entries in `row` above `floor_db` (relative to
    /// the diagonal).
    int dominant_interferers(int row, double floor_db = -30.0) const;

private:
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * m_ + j; }
    int m_ = 0;
    std::vector<double> gains_;
};

IciMatrix ici_matrix(const FilterBank& tx);

/// Cascade of `tx` followed by matched filtering with `rx_source` (given as
/// its transmit form), sampled at lags k * step around the cascade centre for
/// k in [-max_lag, max_lag].
std::vector<double> symbol_spaced_cascade(const std::vector<double>& tx,
                                          const std::vector<double>& rx_source, int step,
                                          int max_lag);

}  // namespace nmcap
