// dsp.hpp - FFT and convolution helpers shared by the modem blocks

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace nmcap::dsp {

using cplx = std::complex<double>;

/// Real-to-complex DFT of x zero-padded (or truncated) to n points.
/// Returns the n/2 + 1 non-negative-frequency bins.
std::vector<cplx> rfft(std::span<const double> x, std::size_t n);

/// Inverse of rfft: n real samples from n/2 + 1 bins, scaled by 1/n.
std::vector<double> irfft(std::span<const cplx> bins, std::size_t n);

/// Full linear convolution, length x.size() + h.size() - 1.
/// Short kernels use direct summation, long ones overlap-save via FFT.
std::vector<double> convolve(std::span<const double> x, std::span<const double> h);

std::size_t next_pow2(std::size_t n);

/// Zeroth-order modified Bessel function of the first kind.
double bessel_i0(double x);

/// Kaiser window of length n and shape parameter beta.
std::vector<double> kaiser_window(std::size_t n, double beta);

double energy(std::span<const double> x);
double mean_power(std::span<const double> x);

}  // namespace nmcap::dsp
