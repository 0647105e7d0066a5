#include "nmcap/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nmcap/filters.hpp"

namespace nmcap {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t noise_stream_tag = 0x6e6f697365ull;  // "noise"

// Scale each band to unit RMS so slicer thresholds for M > 4 stay valid after
// channel attenuation. Positive real scaling, no phase or ISI correction.
void normalize_gain(SymbolFrame& frame) {
    for (auto& sc : frame.subcarriers) {
        double p = 0.0;
        for (const cplx& s : sc) p += std::norm(s);
        if (sc.empty() || p <= 0.0) continue;
        const double g = 1.0 / std::sqrt(p / static_cast<double>(sc.size()));
        for (cplx& s : sc) s *= g;
    }
}

std::string sanitize(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    return text;
}

}  // namespace

ChannelModel ChannelSpec::build(double sample_rate_hz) const {
    switch (kind) {
        case Kind::ideal: return identity_channel(sample_rate_hz);
        case Kind::led: return parametric_led_model(cut_on_hz, cut_off_hz, sample_rate_hz, taps);
        case Kind::csv: return measured_response_from_csv(csv_path, sample_rate_hz, taps);
    }
    throw std::logic_error("unknown channel kind");
}

std::string ChannelSpec::describe() const {
    switch (kind) {
        case Kind::ideal: return "ideal";
        case Kind::led: return fmt::format("led({}Hz-{}Hz,{} taps)", cut_on_hz, cut_off_hz, taps);
        case Kind::csv: return fmt::format("csv:{}", csv_path.string());
    }
    return "?";
}

ChannelSpec parse_channel_spec(const std::string& text) {
    ChannelSpec spec;
    if (text == "ideal") {
        spec.kind = ChannelSpec::Kind::ideal;
    } else if (text == "led") {
        spec.kind = ChannelSpec::Kind::led;
    } else if (text.rfind("csv:", 0) == 0 && text.size() > 4) {
        spec.kind = ChannelSpec::Kind::csv;
        spec.csv_path = text.substr(4);
    } else {
        throw std::invalid_argument(fmt::format("unknown channel '{}' (ideal, led, csv:<path>)", text));
    }
    return spec;
}

std::optional<double> parse_snr(const std::string& text) {
    if (text == "inf" || text == "noiseless") return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v))
        throw std::invalid_argument(fmt::format("bad SNR value '{}'", text));
    return v;
}

RunResult run_single(const ModemConfig& config, const RunOptions& options) {
    config.validate();
    const QamConstellation qam(config.qam_order);
    const auto k = static_cast<std::size_t>(qam.bits_per_symbol());
    const std::size_t symbols = options.bits_per_subcarrier / k;
    if (symbols == 0)
        throw std::invalid_argument(fmt::format("{} bits per subcarrier is less than one {}-QAM symbol",
                                                options.bits_per_subcarrier, config.qam_order));

    std::vector<BitStream> tx_bits(config.m);
    SymbolFrame tx_frame;
    tx_frame.subcarriers.resize(config.m);
    for (int n = 1; n <= config.m; ++n) {
        tx_bits[n - 1] = prbs(symbols * k, subcarrier_prbs_state(config.seed, n));
        tx_frame.subcarriers[n - 1] = qam.map(tx_bits[n - 1]);
    }

    const FilterBank tx = build_tx_bank(config);
    const FilterBank rx = build_rx_bank(tx);
    const Waveform sent = modulate(tx_frame, tx);
    const double fs = sent.sample_rate_hz;

    const double channel_rate = options.capture_rate_hz.value_or(fs);
    ChannelModel model = options.channel.build(channel_rate);
    model.snr_db = options.snr_db;
    model.noise_seed = mix(config.seed ^ noise_stream_tag);
    model.band = occupied_band(config);

    Waveform received;
    if (options.capture_rate_hz) {
        received = resample(apply_channel(resample(sent, channel_rate), model), fs);
        received.samples.resize(sent.samples.size(), 0.0);
    } else {
        received = apply_channel(sent, model);
    }

    SymbolFrame rx_frame = demodulate(received, rx, symbols);
    if (options.channel.kind != ChannelSpec::Kind::ideal) normalize_gain(rx_frame);

    RunResult result;
    RunReport& report = result.report;
    report.config = config;
    report.snr_db = options.snr_db;
    report.spectral_efficiency = config.spectral_efficiency();
    for (int n = 0; n < config.m; ++n) {
        const BitStream decided = qam.demap(rx_frame.subcarriers[n]);
        SubcarrierResult s;
        s.subcarrier = n + 1;
        s.bits = decided.size();
        s.bit_errors = count_bit_errors(tx_bits[n], decided);
        s.ber = static_cast<double>(s.bit_errors) / static_cast<double>(s.bits);
        s.evm_pct = evm(tx_frame.subcarriers[n], rx_frame.subcarriers[n]);
        s.verdict = fec_verdict(s.ber, s.bits);
        report.subcarriers.push_back(s);
    }
    if (options.keep_received) result.received = std::move(rx_frame);
    if (options.keep_waveform) result.tx_waveform = sent;
    return result;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix(mix(master) ^ mix(index + 1));
}

void SweepPlan::validate() const {
    if (m_values.empty()) throw std::invalid_argument("sweep plan: m list is empty");
    if (beta_values.empty()) throw std::invalid_argument("sweep plan: beta list is empty");
    if (alpha_values.empty()) throw std::invalid_argument("sweep plan: alpha list is empty");
    if (snr_values.empty()) throw std::invalid_argument("sweep plan: SNR list is empty");
    if (bits_per_subcarrier == 0) throw std::invalid_argument("sweep plan: bits per subcarrier is zero");
    // Surface configuration errors before any point runs.
    for (int m : m_values)
        for (double beta : beta_values)
            for (double alpha : alpha_values)
                ModemConfig::from_bandwidth(m, qam_order, beta, alpha, bandwidth_hz, span_symbols);
}

std::size_t SweepPlan::point_count() const {
    return m_values.size() * beta_values.size() * alpha_values.size() * snr_values.size();
}

std::vector<SweepPoint> expand(const SweepPlan& plan) {
    plan.validate();
    std::vector<SweepPoint> points;
    points.reserve(plan.point_count());
    for (int m : plan.m_values)
        for (double beta : plan.beta_values)
            for (double alpha : plan.alpha_values)
                for (const auto& snr : plan.snr_values) {
                    SweepPoint p;
                    p.index = points.size();
                    p.config = ModemConfig::from_bandwidth(m, plan.qam_order, beta, alpha, plan.bandwidth_hz,
                                                           plan.span_symbols,
                                                           derive_seed(plan.master_seed, p.index));
                    p.snr_db = snr;
                    points.push_back(p);
                }
    return points;
}

std::size_t SweepResult::failures() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(),
                                                  [](const PointOutcome& o) { return !o.report; }));
}

SweepResult run_sweep(const SweepPlan& plan, int workers, const ProgressFn& progress) {
    const auto points = expand(plan);
    SweepResult result;
    result.outcomes.resize(points.size());

    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            PointOutcome outcome;
            outcome.point = points[i];
            try {
                RunOptions opts;
                opts.channel = plan.channel;
                opts.snr_db = points[i].snr_db;
                opts.bits_per_subcarrier = plan.bits_per_subcarrier;
                outcome.report = run_single(points[i].config, opts).report;
            } catch (const std::exception& e) {
                outcome.error = e.what();
            }
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(outcome);
            }
            result.outcomes[i] = std::move(outcome);
        }
    };

    const int threads = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, points.size())));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << sweep_csv_header << '\n';
    for (const auto& o : result.outcomes) {
        if (o.report) {
            write_report_rows(out, *o.report, true);
            continue;
        }
        const auto& c = o.point.config;
        fmt::print(out, "{},{},{},{},{},,,,,{},,,{}\n", c.m, c.qam_order, c.beta, c.alpha,
                   format_snr(o.point.snr_db), c.spectral_efficiency(), sanitize(o.error));
    }
}

std::string summary_line(const PointOutcome& o) {
    const auto& c = o.point.config;
    const std::string head = fmt::format("point {}: m={} beta={} alpha={} snr={}", o.point.index, c.m, c.beta,
                                         c.alpha, format_snr(o.point.snr_db));
    if (!o.report) return head + " ERROR " + o.error;
    return fmt::format("{} ber={:.3e} ({} errors / {} bits) fec={}", head, o.report->aggregate_ber(),
                       o.report->bit_errors(), o.report->bits_tested(), o.report->all_pass() ? "pass" : "fail");
}

}  // namespace nmcap
