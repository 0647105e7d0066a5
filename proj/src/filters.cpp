#include "nmcap/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "nmcap/dsp.hpp"

namespace nmcap {

namespace {

constexpr double pi = std::numbers::pi;

void normalize_energy(std::vector<double>& taps) {
    const double e = dsp::energy(taps);
    if (e <= 0.0) throw std::domain_error("filter has zero energy");
    const double scale = 1.0 / std::sqrt(e);
    for (double& v : taps) v *= scale;
}

}  // namespace

double srrc_value(double t, double beta) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::domain_error(fmt::format("roll-off beta must be in (0, 1], got {}", beta));

    if (t == 0.0) return 1.0 - beta + 4.0 * beta / pi;

    const double x = 4.0 * beta * t;
    if (std::abs(std::abs(x) - 1.0) < 1e-12) {
        const double a = pi / (4.0 * beta);
        return beta / std::numbers::sqrt2 *
               ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
    }
    const double num = std::sin(pi * t * (1.0 - beta)) + x * std::cos(pi * t * (1.0 + beta));
    return num / (pi * t * (1.0 - x * x));
}

ImpulseResponse srrc_prototype(double beta, int samples_per_symbol, int span_symbols) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::domain_error(fmt::format("roll-off beta must be in (0, 1], got {}", beta));
    if (samples_per_symbol < 2) throw std::domain_error("need at least 2 samples per symbol");
    if (span_symbols < 1) throw std::domain_error("filter span must be >= 1 symbol");

    const int half = span_symbols * samples_per_symbol;
    ImpulseResponse h;
    h.taps.resize(2 * static_cast<std::size_t>(half) + 1);
    h.sample_rate_hz = samples_per_symbol;
    h.delay_samples = half;

    // Fill one side and mirror so the pulse is exactly even.
    h.taps[half] = srrc_value(0.0, beta);
    for (int k = 1; k <= half; ++k) {
        const double v = srrc_value(static_cast<double>(k) / samples_per_symbol, beta);
        h.taps[half + k] = v;
        h.taps[half - k] = v;
    }
    return h;
}

FilterBank build_tx_bank(const ModemConfig& config) {
    config.validate();
    const int ns = config.samples_per_symbol();
    const double fs = config.sample_rate_hz();
    const ImpulseResponse proto = srrc_prototype(config.beta, ns, config.span_symbols);
    const int delay = proto.delay_samples;

    FilterBank bank;
    bank.config = config;
    bank.role = BankRole::transmit;
    bank.subcarriers.reserve(config.m);

    for (int n = 1; n <= config.m; ++n) {
        const double w = 2.0 * pi * config.carrier_hz(n) / fs;
        FilterPair pair;
        pair.in_phase = {std::vector<double>(proto.size()), fs, delay};
        pair.quadrature = {std::vector<double>(proto.size()), fs, delay};
        auto& fi = pair.in_phase.taps;
        auto& fq = pair.quadrature.taps;

        fi[delay] = proto.taps[delay];
        fq[delay] = 0.0;
        for (int k = 1; k <= delay; ++k) {
            const double p = proto.taps[delay + k];
            const double c = p * std::cos(w * k);
            const double s = p * std::sin(w * k);
            fi[delay + k] = c;
            fi[delay - k] = c;
            fq[delay + k] = s;
            fq[delay - k] = -s;
        }
        normalize_energy(fi);
        normalize_energy(fq);
        bank.subcarriers.push_back(std::move(pair));
    }
    return bank;
}

FilterBank build_rx_bank(const FilterBank& tx) {
    if (tx.role != BankRole::transmit) throw std::invalid_argument("build_rx_bank needs a transmit bank");
    if (tx.subcarriers.empty()) throw std::invalid_argument("empty filter bank");
    FilterBank rx = tx;
    rx.role = BankRole::receive;
    for (auto& pair : rx.subcarriers) {
        std::reverse(pair.in_phase.taps.begin(), pair.in_phase.taps.end());
        std::reverse(pair.quadrature.taps.begin(), pair.quadrature.taps.end());
    }
    return rx;
}

std::vector<double> symbol_spaced_cascade(const std::vector<double>& tx,
                                          const std::vector<double>& rx_source, int step,
                                          int max_lag) {
    // tx (*) reverse(rx_source) at offset d from the centre equals
    // sum_t tx[t] * rx_source[t - d].
    const auto len = static_cast<std::ptrdiff_t>(tx.size());
    std::vector<double> out;
    out.reserve(2 * static_cast<std::size_t>(max_lag) + 1);
    for (int k = -max_lag; k <= max_lag; ++k) {
        const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(k) * step;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, d);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, len + d);
        double acc = 0.0;
        for (std::ptrdiff_t t = lo; t < hi; ++t) acc += tx[t] * rx_source[t - d];
        out.push_back(acc);
    }
    return out;
}

double IciMatrix::db(int i, int j) const { return 20.0 * std::log10((*this)(i, j)); }

double IciMatrix::max_off_diagonal() const {
    double best = 0.0;
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j)
            if (i != j) best = std::max(best, (*this)(i, j));
    return best;
}

int IciMatrix::dominant_interferers(int row, double floor_db) const {
    const double floor = std::pow(10.0, floor_db / 20.0);
    int count = 0;
    for (int j = 0; j < m_; ++j)
        if (j != row && (*this)(row, j) > floor) ++count;
    return count;
}

IciMatrix ici_matrix(const FilterBank& tx) {
    if (tx.role != BankRole::transmit) throw std::invalid_argument("ici_matrix needs a transmit bank");
    const int m = tx.m();
    const int ns = tx.samples_per_symbol();
    // Cascade support is twice the filter length; beyond 2*span symbols it is zero.
    const int max_lag = 2 * tx.config.span_symbols;

    IciMatrix ici(m);
    for (int i = 0; i < m; ++i) {
        const auto& rx = tx.subcarriers[i];
        for (int j = 0; j < m; ++j) {
            const auto& src = tx.subcarriers[j];
            double worst = 0.0;
            for (const auto* a : {&src.in_phase.taps, &src.quadrature.taps})
                for (const auto* b : {&rx.in_phase.taps, &rx.quadrature.taps})
                    for (double v : symbol_spaced_cascade(*a, *b, ns, max_lag))
                        worst = std::max(worst, std::abs(v));
            ici(i, j) = worst;
        }
        const double diag = ici(i, i);
        for (int j = 0; j < m; ++j) ici(i, j) /= diag;
    }
    return ici;
}

}  // namespace nmcap
