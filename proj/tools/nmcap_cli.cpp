// nmcap - m-CAP / NM-CAP link simulator
//
//   nmcap run      one configuration, per-subcarrier report CSV
//   nmcap sweep    cartesian parameter grid, concatenated report CSV
//   nmcap filters dump   transmit (or matched receive) impulse responses
//   nmcap spectrum averaged periodogram of the transmitted / received signal

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "nmcap/channel.hpp"
#include "nmcap/core.hpp"
#include "nmcap/filters.hpp"
#include "nmcap/metrics.hpp"
#include "nmcap/sim.hpp"
#include "nmcap/txrx.hpp"

namespace {

using namespace nmcap;

struct ConfigFlags {
    std::string config_file;
    int m = 10;
    int qam_order = 4;
    double beta = 0.1;
    double alpha = 0.0;
    double bandwidth_hz = 3e6;
    int span_symbols = 10;
    std::uint64_t seed = 1;

    CLI::Option* m_opt = nullptr;
    CLI::Option* qam_opt = nullptr;
    CLI::Option* beta_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* bw_opt = nullptr;
    CLI::Option* span_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "key=value configuration file (flags override)");
        m_opt = app.add_option("--m", m, "subcarrier count");
        qam_opt = app.add_option("--qam-order", qam_order, "QAM order (4, 16, 64)");
        beta_opt = app.add_option("--beta", beta, "SRRC roll-off factor");
        alpha_opt = app.add_option("--alpha", alpha, "bandwidth compression factor");
        bw_opt = app.add_option("--bandwidth-hz", bandwidth_hz, "total signal bandwidth");
        span_opt = app.add_option("--span-symbols", span_symbols, "filter span per side");
        seed_opt = app.add_option("--seed", seed, "PRBS / noise seed");
    }

    ModemConfig resolve() const {
        ModemConfig c;
        if (!config_file.empty()) c = load_config(config_file);
        if (m_opt->count()) c.m = m;
        if (qam_opt->count()) c.qam_order = qam_order;
        if (beta_opt->count()) c.beta = beta;
        if (alpha_opt->count()) c.alpha = alpha;
        if (bw_opt->count()) c.bandwidth_hz = bandwidth_hz;
        if (span_opt->count()) c.span_symbols = span_symbols;
        if (seed_opt->count()) c.seed = seed;
        c.validate();
        return c;
    }
};

struct ChannelFlags {
    std::string channel = "ideal";
    std::string snr = "inf";
    int taps = 1025;

    void attach(CLI::App& app) {
        app.add_option("--channel", channel, "ideal | led | csv:<path>");
        app.add_option("--snr-db", snr, "in-band SNR in dB, or inf for noiseless");
        app.add_option("--channel-taps", taps, "FIR length of the channel response (odd)");
    }

    ChannelSpec spec() const {
        ChannelSpec s = parse_channel_spec(channel);
        s.taps = taps;
        return s;
    }
};

class OutputFile {
public:
    explicit OutputFile(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_.open(path, std::ios::binary);
        if (!file_) throw std::runtime_error(fmt::format("cannot open {} for writing", path));
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int cmd_run(const ConfigFlags& cfg, const ChannelFlags& ch, std::size_t bits, std::optional<double> capture,
            const std::string& out, const std::string& wave_path, const std::string& const_path) {
    const ModemConfig config = cfg.resolve();
    RunOptions opts;
    opts.channel = ch.spec();
    opts.snr_db = parse_snr(ch.snr);
    opts.bits_per_subcarrier = bits;
    opts.capture_rate_hz = capture;
    opts.keep_waveform = !wave_path.empty();
    opts.keep_received = !const_path.empty();

    const RunResult result = run_single(config, opts);
    const RunReport& r = result.report;
    fmt::print(std::cerr, "run: {} channel={} snr={} ber={:.3e} ({} errors / {} bits) fec={}\n", to_string(config),
               opts.channel.describe(), format_snr(opts.snr_db), r.aggregate_ber(), r.bit_errors(),
               r.bits_tested(), r.all_pass() ? "pass" : "fail");

    OutputFile file(out);
    write_report_csv(file.stream(), r);
    if (result.tx_waveform) write_waveform(wave_path, *result.tx_waveform);
    if (result.received) {
        std::ofstream cf(const_path, std::ios::binary);
        if (!cf) throw std::runtime_error(fmt::format("cannot open {} for writing", const_path));
        write_constellation_csv(cf, *result.received);
    }
    return 0;
}

// Comma-separated numbers. An empty string is an empty list.
template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
    std::vector<T> values;
    std::size_t start = 0;
    while (!text.empty() && start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        const std::string item = text.substr(start, end - start);
        std::size_t used = 0;
        T v{};
        try {
            if constexpr (std::is_integral_v<T>)
                v = static_cast<T>(std::stoi(item, &used));
            else
                v = static_cast<T>(std::stod(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size())
            throw std::invalid_argument(fmt::format("{}: bad list item '{}'", flag, item));
        values.push_back(v);
        start = end + 1;
    }
    return values;
}

int cmd_sweep(SweepPlan plan, const std::vector<std::string>& snr_text, int workers, const std::string& out) {
    plan.snr_values.clear();
    for (const auto& s : snr_text) plan.snr_values.push_back(parse_snr(s));
    plan.validate();
    fmt::print(std::cerr, "sweep: {} points, {} bits per subcarrier, channel {}, {} workers\n", plan.point_count(),
               plan.bits_per_subcarrier, plan.channel.describe(), workers);

    const auto started = std::chrono::steady_clock::now();
    const SweepResult result =
        run_sweep(plan, workers, [](const PointOutcome& o) { std::cerr << summary_line(o) << '\n'; });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    {
        OutputFile file(out);
        write_sweep_csv(file.stream(), result);
    }

    if (!out.empty() && out != "-") {
        nlohmann::json meta;
        meta["created_utc"] = utc_timestamp();
        meta["elapsed_s"] = seconds;
        meta["workers"] = workers;
        meta["points"] = plan.point_count();
        meta["failures"] = result.failures();
        meta["m"] = plan.m_values;
        meta["beta"] = plan.beta_values;
        meta["alpha"] = plan.alpha_values;
        meta["snr_db"] = snr_text;
        meta["bits_per_subcarrier"] = plan.bits_per_subcarrier;
        meta["master_seed"] = plan.master_seed;
        meta["channel"] = plan.channel.describe();
        meta["qam_order"] = plan.qam_order;
        meta["bandwidth_hz"] = plan.bandwidth_hz;
        meta["span_symbols"] = plan.span_symbols;
        std::ofstream side(out + ".meta.json");
        side << meta.dump(2) << '\n';
    }
    return result.failures() == 0 ? 0 : 1;
}

int cmd_filters_dump(const ConfigFlags& cfg, bool receive, const std::string& out) {
    const ModemConfig config = cfg.resolve();
    FilterBank bank = build_tx_bank(config);
    if (receive) bank = build_rx_bank(bank);
    OutputFile file(out);
    std::ostream& os = file.stream();
    os << "subcarrier,branch,sample_index,amplitude\n";
    for (int n = 0; n < bank.m(); ++n) {
        const auto& pair = bank.subcarriers[n];
        for (std::size_t i = 0; i < pair.in_phase.size(); ++i)
            fmt::print(os, "{},I,{},{}\n", n + 1, i, pair.in_phase.taps[i]);
        for (std::size_t i = 0; i < pair.quadrature.size(); ++i)
            fmt::print(os, "{},Q,{},{}\n", n + 1, i, pair.quadrature.taps[i]);
    }
    fmt::print(std::cerr, "filters: {} responses of {} taps, fs={} Hz\n", bank.filter_count(),
               bank.subcarriers.front().in_phase.size(), bank.sample_rate_hz());
    return 0;
}

int cmd_spectrum(const ConfigFlags& cfg, const ChannelFlags& ch, std::size_t bits, std::size_t segments,
                 const std::string& out) {
    const ModemConfig config = cfg.resolve();
    const QamConstellation qam(config.qam_order);
    const std::size_t symbols = bits / static_cast<std::size_t>(qam.bits_per_symbol());
    SymbolFrame frame;
    for (int n = 1; n <= config.m; ++n)
        frame.subcarriers.push_back(
            qam.map(prbs(symbols * qam.bits_per_symbol(), subcarrier_prbs_state(config.seed, n))));

    const FilterBank tx = build_tx_bank(config);
    const Waveform sent = modulate(frame, tx);
    ChannelModel model = ch.spec().build(sent.sample_rate_hz);
    model.snr_db = parse_snr(ch.snr);
    model.noise_seed = config.seed;
    model.band = occupied_band(config);
    const Waveform received = apply_channel(sent, model);

    OutputFile file(out);
    std::ostream& os = file.stream();
    os << "freq_hz,power_db\n";
    for (const auto& p : spectrum_estimate(received, segments)) fmt::print(os, "{},{}\n", p.freq_hz, p.power_db);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"m-CAP / NM-CAP modem simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "simulate one configuration");
    ConfigFlags run_cfg;
    ChannelFlags run_ch;
    std::size_t run_bits = 1'000'000;
    double capture_rate = 0.0;
    std::string run_out, wave_path, const_path;
    run_cfg.attach(*run);
    run_ch.attach(*run);
    run->add_option("--bits", run_bits, "bits per subcarrier");
    auto* capture_opt = run->add_option("--capture-rate-hz", capture_rate, "run the channel at this rate (RES stages)");
    run->add_option("--out", run_out, "report CSV (default stdout)");
    run->add_option("--dump-waveform", wave_path, "write the transmitted waveform (binary)");
    run->add_option("--dump-constellation", const_path, "write received symbols as CSV");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
    SweepPlan plan;
    plan.m_values = {2, 10};
    plan.beta_values = {0.1, 0.3, 0.5};
    plan.alpha_values = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
    std::vector<std::string> snr_text = {"inf"};
    std::string sweep_channel = "ideal";
    int sweep_taps = 1025;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string sweep_out;
    std::string m_text, beta_text, alpha_text;
    auto* m_list = sweep->add_option("--m", m_text, "subcarrier counts, comma separated");
    auto* beta_list = sweep->add_option("--beta", beta_text, "roll-off factors, comma separated");
    auto* alpha_list = sweep->add_option("--alpha", alpha_text, "compression factors, comma separated");
    sweep->add_option("--snr-db", snr_text, "SNR values in dB (inf = noiseless)")->delimiter(',');
    sweep->add_option("--qam-order", plan.qam_order, "QAM order");
    sweep->add_option("--bandwidth-hz", plan.bandwidth_hz, "total signal bandwidth");
    sweep->add_option("--span-symbols", plan.span_symbols, "filter span per side");
    sweep->add_option("--bits", plan.bits_per_subcarrier, "bits per subcarrier per point");
    sweep->add_option("--seed", plan.master_seed, "master seed");
    sweep->add_option("--channel", sweep_channel, "ideal | led | csv:<path>");
    sweep->add_option("--channel-taps", sweep_taps, "FIR length of the channel response (odd)");
    sweep->add_option("--workers", workers, "parallel worker threads");
    sweep->add_option("--out", sweep_out, "report CSV (default stdout)");

    // filters dump
    auto* filters = app.add_subcommand("filters", "filter bank utilities");
    filters->require_subcommand(1);
    auto* dump = filters->add_subcommand("dump", "write impulse responses as CSV");
    ConfigFlags dump_cfg;
    bool dump_rx = false;
    std::string dump_out;
    dump_cfg.attach(*dump);
    dump->add_flag("--rx", dump_rx, "dump the matched receive bank");
    dump->add_option("--out", dump_out, "CSV path (default stdout)");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "averaged periodogram of the signal after the channel");
    ConfigFlags spec_cfg;
    ChannelFlags spec_ch;
    std::size_t spec_bits = 100'000;
    std::size_t segments = 64;
    std::string spec_out;
    spec_cfg.attach(*spectrum);
    spec_ch.attach(*spectrum);
    spectrum->add_option("--bits", spec_bits, "bits per subcarrier");
    spectrum->add_option("--segments", segments, "periodogram segments");
    spectrum->add_option("--out", spec_out, "CSV path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            std::optional<double> capture;
            if (capture_opt->count()) capture = capture_rate;
            return cmd_run(run_cfg, run_ch, run_bits, capture, run_out, wave_path, const_path);
        }
        if (*sweep) {
            if (m_list->count()) plan.m_values = parse_list<int>(m_text, "--m");
            if (beta_list->count()) plan.beta_values = parse_list<double>(beta_text, "--beta");
            if (alpha_list->count()) plan.alpha_values = parse_list<double>(alpha_text, "--alpha");
            plan.channel = parse_channel_spec(sweep_channel);
            plan.channel.taps = sweep_taps;
            return cmd_sweep(plan, snr_text, workers, sweep_out);
        }
        if (*dump) return cmd_filters_dump(dump_cfg, dump_rx, dump_out);
        if (*spectrum) return cmd_spectrum(spec_cfg, spec_ch, spec_bits, segments, spec_out);
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return 1;
    }
    return 1;
}
