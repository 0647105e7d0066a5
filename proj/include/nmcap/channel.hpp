// channel.hpp - LTI + AWGN stand-in for the LED / photodetector link
//
// The optical front end is modelled as a zero-phase magnitude response
// realised as a linear-phase FIR (the group delay is removed when applied),
// followed by white Gaussian noise scaled to an in-band SNR.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>

#include "nmcap/core.hpp"
#include "nmcap/filters.hpp"
#include "nmcap/txrx.hpp"

namespace nmcap {

struct ChannelModel {
    ImpulseResponse response;
    std::optional<double> snr_db;  // nullopt: noiseless
    std::uint64_t noise_seed = 0;
    // Band over which signal and noise power are compared. Unset means the
    // whole [0, fs/2] band.
    std::optional<OccupiedBand> band;

    bool noiseless() const { return !snr_db.has_value(); }
};

/// Single-tap passthrough at the given rate.
ChannelModel identity_channel(double sample_rate_hz);

/// |H(f)| of a first-order high-pass (corner cut_on_hz) cascaded with a
/// first-order low-pass (corner cut_off_hz). Nominal pass-band gain is 1.
double led_magnitude(double f_hz, double cut_on_hz, double cut_off_hz);

/// Odd-length linear-phase FIR whose DFT magnitude equals `magnitude(f)` at
/// the bin frequencies k * fs / taps.
ImpulseResponse frequency_sampling_fir(const std::function<double(double)>& magnitude,
                                       double sample_rate_hz, int taps);

/// Bias-tee cut-on times LED cut-off, see led_magnitude().
ChannelModel parametric_led_model(double cut_on_hz, double cut_off_hz, double sample_rate_hz,
                                  int taps);

/// Magnitude-only measurement (CSV header `freq_hz,mag_db`, ascending rows).
/// dB values are interpolated linearly and held flat outside the table.
ChannelModel measured_response_from_csv(std::istream& in, double sample_rate_hz, int taps);
ChannelModel measured_response_from_csv(const std::filesystem::path& path, double sample_rate_hz,
                                        int taps);

/// Delay-compensated filtering, then AWGN such that the filtered-signal power
/// over noise power inside the model's band equals snr_db. Output has the
/// input's length and rate.
Waveform apply_channel(const Waveform& w, const ChannelModel& model);

/// Noise standard deviation apply_channel() uses for a filtered signal of the
/// given mean power.
double noise_sigma(double signal_power, double sample_rate_hz, const ChannelModel& model);

struct RationalRatio {
    long long up = 1;
    long long down = 1;
};

/// Smallest-denominator fraction within relative tolerance `tol` of `ratio`.
/// Throws std::domain_error when none exists with denominator <= max_den.
RationalRatio rational_approximation(double ratio, double tol = 1e-9, long long max_den = 1000000);

/// Rational-ratio resampling with a Kaiser-windowed sinc anti-alias filter.
/// Output sample j sits at input time j * down / up, so timing is preserved.
Waveform resample(const Waveform& w, double target_rate_hz);

}  // namespace nmcap
