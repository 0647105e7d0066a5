#include "nmcap/core.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string_view>

#include <fmt/format.h>

namespace nmcap {

namespace {

void check_m(int m) {
    if (m < 1) throw std::domain_error(fmt::format("subcarrier count must be >= 1, got {}", m));
}

void check_beta(double beta) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::domain_error(fmt::format("roll-off beta must be in (0, 1], got {}", beta));
}

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::domain_error(fmt::format("compression alpha must be in [0, 1), got {}", alpha));
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, std::string_view key, int line) {
    const std::string owned(text);
    std::size_t used = 0;
    T value{};
    try {
        if constexpr (std::is_same_v<T, double>) {
            value = std::stod(owned, &used);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!owned.empty() && owned.front() == '-') throw std::invalid_argument("negative");
            value = std::stoull(owned, &used);
        } else {
            value = static_cast<T>(std::stol(owned, &used));
        }
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != owned.size())
        throw std::invalid_argument(
            fmt::format("config line {}: bad value '{}' for key '{}'", line, owned, key));
    return value;
}

}  // namespace

int samples_per_symbol(int m, double beta) {
    check_m(m);
    check_beta(beta);
    // 2*10*1.1 evaluates to 22.000000000000004; the guard keeps exact
    // products from rounding up to the next integer.
    const double exact = 2.0 * m * (1.0 + beta);
    return static_cast<int>(std::ceil(exact - 1e-9 * exact));
}

double carrier_frequency(int n, int m, double bandwidth_hz, double alpha) {
    check_m(m);
    check_alpha(alpha);
    if (n < 1 || n > m)
        throw std::out_of_range(fmt::format("subcarrier index {} outside [1, {}]", n, m));
    if (!(bandwidth_hz > 0.0)) throw std::domain_error("bandwidth must be positive");
    return (2.0 * n - 1.0) / (2.0 * m) * bandwidth_hz * (1.0 - alpha);
}

double sampling_frequency(double baud_rate, int samples_per_symbol, int m) {
    if (m <= 0) throw std::domain_error("subcarrier count must be positive");
    if (!(baud_rate > 0.0) || samples_per_symbol <= 0)
        throw std::domain_error("baud rate and samples per symbol must be positive");
    return baud_rate * samples_per_symbol / m;
}

double spectral_efficiency(int qam_order, double beta, double alpha) {
    if (qam_order < 2 || (qam_order & (qam_order - 1)) != 0)
        throw std::domain_error(fmt::format("QAM order must be a power of two >= 2, got {}", qam_order));
    check_beta(beta);
    check_alpha(alpha);
    return std::log2(static_cast<double>(qam_order)) / ((1.0 + beta) * (1.0 - alpha));
}

double compression_gain(double alpha) {
    check_alpha(alpha);
    return 1.0 / (1.0 - alpha) - 1.0;
}

ModemConfig ModemConfig::from_bandwidth(int m, int qam_order, double beta, double alpha,
                                        double bandwidth_hz, int span_symbols,
                                        std::uint64_t seed) {
    ModemConfig c;
    c.m = m;
    c.qam_order = qam_order;
    c.beta = beta;
    c.alpha = alpha;
    c.bandwidth_hz = bandwidth_hz;
    c.span_symbols = span_symbols;
    c.seed = seed;
    c.validate();
    return c;
}

ModemConfig ModemConfig::from_baud_rate(int m, int qam_order, double beta, double alpha,
                                        double baud_rate, int span_symbols,
                                        std::uint64_t seed) {
    check_beta(beta);
    if (!(baud_rate > 0.0)) throw std::domain_error("baud rate must be positive");
    return from_bandwidth(m, qam_order, beta, alpha, baud_rate * (1.0 + beta), span_symbols,
                          seed);
}

void ModemConfig::validate() const {
    check_m(m);
    if (qam_order != 4 && qam_order != 16 && qam_order != 64)
        throw std::domain_error(fmt::format("QAM order must be 4, 16 or 64, got {}", qam_order));
    check_beta(beta);
    check_alpha(alpha);
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
        throw std::domain_error(fmt::format("bandwidth must be positive, got {}", bandwidth_hz));
    if (span_symbols < 1)
        throw std::domain_error(fmt::format("filter span must be >= 1 symbol, got {}", span_symbols));
}

double ModemConfig::baud_rate() const { return bandwidth_hz / (1.0 + beta); }

int ModemConfig::samples_per_symbol() const { return nmcap::samples_per_symbol(m, beta); }

double ModemConfig::sample_rate_hz() const {
    return sampling_frequency(baud_rate(), samples_per_symbol(), m);
}

int ModemConfig::bits_per_symbol() const {
    return static_cast<int>(std::lround(std::log2(static_cast<double>(qam_order))));
}

double ModemConfig::carrier_hz(int n) const {
    return carrier_frequency(n, m, bandwidth_hz, alpha);
}

double ModemConfig::spectral_efficiency() const {
    return nmcap::spectral_efficiency(qam_order, beta, alpha);
}

OccupiedBand occupied_band(const ModemConfig& config) {
    const double half = config.bandwidth_hz / (2.0 * config.m);
    OccupiedBand band;
    band.low_hz = std::max(0.0, config.carrier_hz(1) - half);
    band.high_hz = config.carrier_hz(config.m) + half;
    return band;
}

ModemConfig parse_config(std::istream& in, ModemConfig base) {
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text(raw);
        if (const auto hash = text.find('#'); hash != std::string_view::npos)
            text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;

        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument(fmt::format("config line {}: expected key=value", line));
        const auto key = trim(text.substr(0, eq));
        const auto value = trim(text.substr(eq + 1));

        if (key == "m") base.m = parse_number<int>(value, key, line);
        else if (key == "qam_order") base.qam_order = parse_number<int>(value, key, line);
        else if (key == "beta") base.beta = parse_number<double>(value, key, line);
        else if (key == "alpha") base.alpha = parse_number<double>(value, key, line);
        else if (key == "bandwidth_hz") base.bandwidth_hz = parse_number<double>(value, key, line);
        else if (key == "span_symbols") base.span_symbols = parse_number<int>(value, key, line);
        else if (key == "seed") base.seed = parse_number<std::uint64_t>(value, key, line);
        else
            throw std::invalid_argument(
                fmt::format("config line {}: unknown key '{}'", line, std::string(key)));
    }
    base.validate();
    return base;
}

ModemConfig load_config(const std::filesystem::path& path, ModemConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open config file {}", path.string()));
    return parse_config(in, base);
}

std::string to_string(const ModemConfig& c) {
    return fmt::format("m={} qam_order={} beta={} alpha={} bandwidth_hz={} span_symbols={} seed={}",
                       c.m, c.qam_order, c.beta, c.alpha, c.bandwidth_hz, c.span_symbols, c.seed);
}

}  // namespace nmcap
