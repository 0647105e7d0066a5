// sim.hpp - end-to-end link runs and parameter sweeps
//
// run_single():  PRBS -> QAM -> modulate -> [RES up] -> channel -> [RES down]
//                -> demodulate -> gain control -> slicer -> metrics
// run_sweep():   run_single() over the cartesian product of a SweepPlan, one
//                deterministic seed per point, rows emitted in point order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nmcap/channel.hpp"
#include "nmcap/core.hpp"
#include "nmcap/metrics.hpp"
#include "nmcap/txrx.hpp"

namespace nmcap {

struct ChannelSpec {
    enum class Kind { ideal, led, csv };
    Kind kind = Kind::ideal;
    std::filesystem::path csv_path;
    double cut_on_hz = 250e3;
    double cut_off_hz = 1.25e6;
    int taps = 1025;

    /// Channel model at the given processing rate (noise fields unset).
    ChannelModel build(double sample_rate_hz) const;
    std::string describe() const;
};

/// "ideal", "led" or "csv:<path>".
ChannelSpec parse_channel_spec(const std::string& text);

/// Parses "inf" / "noiseless" as nullopt, anything else as a finite dB value.
std::optional<double> parse_snr(const std::string& text);

struct RunOptions {
    ChannelSpec channel;
    std::optional<double> snr_db;
    std::size_t bits_per_subcarrier = 1'000'000;
    // When set, the channel runs at this rate between two RES stages.
    std::optional<double> capture_rate_hz;
    bool keep_received = false;
    bool keep_waveform = false;
};

struct RunResult {
    RunReport report;
    std::optional<SymbolFrame> received;  // after gain control
    std::optional<Waveform> tx_waveform;
};

/// Deterministic in (config, options). bits_per_subcarrier is rounded down
/// to whole symbols.
RunResult run_single(const ModemConfig& config, const RunOptions& options);

/// Independent seed for sweep point `index`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct SweepPlan {
    std::vector<int> m_values;
    std::vector<double> beta_values;
    std::vector<double> alpha_values;
    std::vector<std::optional<double>> snr_values;
    std::size_t bits_per_subcarrier = 100'000;
    std::uint64_t master_seed = 1;
    ChannelSpec channel;
    int qam_order = 4;
    double bandwidth_hz = 3e6;
    int span_symbols = 10;

    void validate() const;
    std::size_t point_count() const;
};

struct SweepPoint {
    std::size_t index = 0;
    ModemConfig config;
    std::optional<double> snr_db;
};

/// Points in output order: m outermost, then beta, alpha, snr.
std::vector<SweepPoint> expand(const SweepPlan& plan);

struct PointOutcome {
    SweepPoint point;
    std::optional<RunReport> report;
    std::string error;
};

struct SweepResult {
    std::vector<PointOutcome> outcomes;  // sorted by point index
    std::size_t failures() const;
};

using ProgressFn = std::function<void(const PointOutcome&)>;

/// Runs every point on `workers` threads. A failing point is captured in its
/// outcome and does not stop the sweep. `progress` may be called from worker
/// threads, one call at a time.
SweepResult run_sweep(const SweepPlan& plan, int workers = 1, const ProgressFn& progress = {});

inline constexpr const char* sweep_csv_header =
    "m,qam_order,beta,alpha,snr_db,subcarrier,ber,floor_flag,evm_pct,spec_eff,fec_pass,bits_tested,error";

/// Report rows plus a trailing `error` column (empty for successful points).
void write_sweep_csv(std::ostream& out, const SweepResult& result);

std::string summary_line(const PointOutcome& outcome);

}  // namespace nmcap
