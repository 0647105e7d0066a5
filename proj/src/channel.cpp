#include "nmcap/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "nmcap/dsp.hpp"

namespace nmcap {

namespace {

constexpr double pi = std::numbers::pi;

struct ResponsePoint {
    double freq_hz;
    double mag_db;
};

double interpolate_db(const std::vector<ResponsePoint>& table, double f) {
    if (f <= table.front().freq_hz) return table.front().mag_db;
    if (f >= table.back().freq_hz) return table.back().mag_db;
    const auto hi = std::upper_bound(table.begin(), table.end(), f,
                                     [](double v, const ResponsePoint& p) { return v < p.freq_hz; });
    const auto lo = hi - 1;
    const double span = hi->freq_hz - lo->freq_hz;
    if (span <= 0.0) return hi->mag_db;
    const double t = (f - lo->freq_hz) / span;
    return lo->mag_db + t * (hi->mag_db - lo->mag_db);
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x); }

}  // namespace

ChannelModel identity_channel(double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0)) throw std::domain_error("sample rate must be positive");
    ChannelModel model;
    model.response = {{1.0}, sample_rate_hz, 0};
    return model;
}

double led_magnitude(double f, double cut_on_hz, double cut_off_hz) {
    const double u = std::abs(f) / cut_on_hz;
    const double v = std::abs(f) / cut_off_hz;
    return u / std::sqrt(1.0 + u * u) / std::sqrt(1.0 + v * v);
}

ImpulseResponse frequency_sampling_fir(const std::function<double(double)>& magnitude,
                                       double sample_rate_hz, int taps) {
    if (taps < 1 || taps % 2 == 0) throw std::domain_error(fmt::format("tap count must be odd, got {}", taps));
    if (!(sample_rate_hz > 0.0)) throw std::domain_error("sample rate must be positive");

    const int half = (taps - 1) / 2;
    std::vector<double> mag(half + 1);
    for (int k = 0; k <= half; ++k) {
        mag[k] = magnitude(k * sample_rate_hz / taps);
        if (!std::isfinite(mag[k]) || mag[k] < 0.0)
            throw std::domain_error("magnitude response must be finite and non-negative");
    }

    // Real, even zero-phase sequence from the sampled magnitude, centred on
    // tap `half`.
    ImpulseResponse h;
    h.taps.resize(taps);
    h.sample_rate_hz = sample_rate_hz;
    h.delay_samples = half;
    for (int n = 0; n < taps; ++n) {
        const double t = static_cast<double>(n - half);
        double acc = mag[0];
        for (int k = 1; k <= half; ++k) acc += 2.0 * mag[k] * std::cos(2.0 * pi * k * t / taps);
        h.taps[n] = acc / taps;
    }
    return h;
}

ChannelModel parametric_led_model(double cut_on_hz, double cut_off_hz, double sample_rate_hz,
                                  int taps) {
    if (!(cut_on_hz > 0.0 && cut_on_hz < cut_off_hz && cut_off_hz < sample_rate_hz / 2.0))
        throw std::domain_error(fmt::format(
            "LED corners need 0 < cut-on ({}) < cut-off ({}) < fs/2 ({})", cut_on_hz, cut_off_hz,
            sample_rate_hz / 2.0));
    ChannelModel model;
    model.response = frequency_sampling_fir(
        [=](double f) { return led_magnitude(f, cut_on_hz, cut_off_hz); }, sample_rate_hz, taps);
    return model;
}

ChannelModel measured_response_from_csv(std::istream& in, double sample_rate_hz, int taps) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("response CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "freq_hz,mag_db")
        throw std::runtime_error(fmt::format("response CSV header must be 'freq_hz,mag_db', got '{}'", line));

    const double nyquist = sample_rate_hz / 2.0;
    std::vector<ResponsePoint> table;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw std::runtime_error(fmt::format("response CSV row {}: expected two columns", row));
        ResponsePoint p{};
        try {
            std::size_t used_f = 0;
            std::size_t used_m = 0;
            const std::string fs = line.substr(0, comma);
            const std::string ms = line.substr(comma + 1);
            p.freq_hz = std::stod(fs, &used_f);
            p.mag_db = std::stod(ms, &used_m);
            if (used_f != fs.size() || used_m != ms.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::runtime_error(fmt::format("response CSV row {}: malformed number", row));
        }
        if (!std::isfinite(p.freq_hz) || !std::isfinite(p.mag_db) || p.freq_hz < 0.0)
            throw std::runtime_error(fmt::format("response CSV row {}: value out of range", row));
        if (p.freq_hz > nyquist * (1.0 + 1e-12))
            throw std::runtime_error(
                fmt::format("response CSV row {}: {} Hz is beyond Nyquist ({} Hz)", row, p.freq_hz, nyquist));
        if (!table.empty() && p.freq_hz <= table.back().freq_hz)
            throw std::runtime_error(fmt::format("response CSV row {}: frequencies must ascend", row));
        table.push_back(p);
    }
    if (table.size() < 2) throw std::runtime_error("response CSV needs at least two rows");

    ChannelModel model;
    model.response = frequency_sampling_fir(
        [&](double f) { return std::pow(10.0, interpolate_db(table, f) / 20.0); }, sample_rate_hz, taps);
    return model;
}

ChannelModel measured_response_from_csv(const std::filesystem::path& path, double sample_rate_hz,
                                        int taps) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open response file {}", path.string()));
    return measured_response_from_csv(in, sample_rate_hz, taps);
}

double noise_sigma(double signal_power, double sample_rate_hz, const ChannelModel& model) {
    if (model.noiseless()) return 0.0;
    const double width = model.band ? model.band->width_hz() : sample_rate_hz / 2.0;
    if (!(width > 0.0)) throw std::domain_error("SNR band must have positive width");
    // White noise of variance s^2 puts s^2 * 2W / fs into a positive band of width W.
    const double snr = std::pow(10.0, *model.snr_db / 10.0);
    const double in_band_noise = signal_power / snr;
    return std::sqrt(in_band_noise * sample_rate_hz / (2.0 * width));
}

Waveform apply_channel(const Waveform& w, const ChannelModel& model) {
    const double fs = w.sample_rate_hz;
    if (std::abs(model.response.sample_rate_hz - fs) > 1e-9 * fs)
        throw std::invalid_argument(fmt::format("channel rate {} Hz does not match waveform rate {} Hz",
                                                model.response.sample_rate_hz, fs));
    if (model.snr_db && !std::isfinite(*model.snr_db)) throw std::domain_error("SNR must be finite");

    Waveform out;
    out.sample_rate_hz = fs;
    const auto& h = model.response.taps;
    if (h.size() == 1) {
        out.samples = w.samples;
        for (double& v : out.samples) v *= h[0];
    } else {
        const auto full = dsp::convolve(w.samples, h);
        const auto delay = static_cast<std::size_t>(model.response.delay_samples);
        out.samples.assign(full.begin() + static_cast<std::ptrdiff_t>(delay),
                           full.begin() + static_cast<std::ptrdiff_t>(delay + w.samples.size()));
    }

    if (!model.noiseless()) {
        const double sigma = noise_sigma(dsp::mean_power(out.samples), fs, model);
        std::mt19937_64 rng(model.noise_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& v : out.samples) v += sigma * gauss(rng);
    }
    return out;
}

RationalRatio rational_approximation(double ratio, double tol, long long max_den) {
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw std::domain_error("rate ratio must be positive");
    // Continued-fraction convergents are the best approximations per denominator.
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double x = ratio;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_f = std::floor(x);
        if (a_f > 1e15) break;
        const auto a = static_cast<long long>(a_f);
        const long long p2 = a * p1 + p0;
        const long long q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - ratio) <= tol * ratio)
            return {p1, q1};
        const double frac = x - a_f;
        if (frac <= 0.0) break;
        x = 1.0 / frac;
    }
    throw std::domain_error(fmt::format("rate ratio {} has no rational form with denominator <= {}",
                                        ratio, max_den));
}

Waveform resample(const Waveform& w, double target_rate_hz) {
    if (!(target_rate_hz > 0.0)) throw std::domain_error("target rate must be positive");
    const auto [up, down] = rational_approximation(target_rate_hz / w.sample_rate_hz);
    Waveform out;
    out.sample_rate_hz = target_rate_hz;
    if (up == 1 && down == 1) {
        out.samples = w.samples;
        return out;
    }

    // Anti-alias / anti-image low-pass at the upsampled rate, cut at the
    // lower of the two Nyquist frequencies.
    constexpr long long zero_crossings = 64;
    constexpr double kaiser_beta = 10.0;
    const long long k = std::max(up, down);
    const long long half = zero_crossings * k;
    const auto taps = static_cast<std::size_t>(2 * half + 1);
    const auto window = dsp::kaiser_window(taps, kaiser_beta);
    std::vector<double> h(taps);
    for (std::size_t i = 0; i < taps; ++i) {
        const double t = static_cast<double>(static_cast<long long>(i) - half) / static_cast<double>(k);
        h[i] = static_cast<double>(up) / static_cast<double>(k) * sinc(t) * window[i];
    }

    const auto in_len = static_cast<long long>(w.samples.size());
    const long long out_len = (in_len * up + down - 1) / down;
    out.samples.assign(static_cast<std::size_t>(out_len), 0.0);
    for (long long j = 0; j < out_len; ++j) {
        // y[j] = sum_i x[i] h[half + j*down - i*up]
        const long long t = j * down + half;
        long long i_lo = t - 2 * half;
        i_lo = i_lo <= 0 ? 0 : (i_lo + up - 1) / up;
        const long long i_hi = std::min(in_len - 1, t / up);
        double acc = 0.0;
        for (long long i = i_lo; i <= i_hi; ++i) acc += w.samples[i] * h[t - i * up];
        out.samples[j] = acc;
    }
    return out;
}

}  // namespace nmcap
