#include "nmcap/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include <fftw3.h>

namespace nmcap::dsp {

namespace {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using fftw_buffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
fftw_buffer<T> fftw_alloc(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
    if (p == nullptr) throw std::bad_alloc();
    return fftw_buffer<T>(p);
}

class Plan {
public:
    explicit Plan(fftw_plan p) : plan_(p) {
        if (plan_ == nullptr) throw std::runtime_error("FFTW planning failed");
    }
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

// Forward and inverse real transforms of one size over owned aligned buffers.
class RealFft {
public:
    explicit RealFft(std::size_t n)
        : n_(n), time_(fftw_alloc<double>(n)), freq_(fftw_alloc<fftw_complex>(n / 2 + 1)),
          forward_(make(n, true)), inverse_(make(n, false)) {}

    double* time() { return time_.get(); }
    cplx* freq() { return reinterpret_cast<cplx*>(freq_.get()); }
    std::size_t size() const { return n_; }
    void forward() const { forward_.execute(); }
    void inverse() const { inverse_.execute(); }

private:
    fftw_plan make(std::size_t n, bool fwd) {
        std::lock_guard lock(planner_mutex());
        const int len = static_cast<int>(n);
        return fwd ? fftw_plan_dft_r2c_1d(len, time_.get(), freq_.get(), FFTW_ESTIMATE)
                   : fftw_plan_dft_c2r_1d(len, freq_.get(), time_.get(), FFTW_ESTIMATE);
    }

    std::size_t n_;
    fftw_buffer<double> time_;
    fftw_buffer<fftw_complex> freq_;
    Plan forward_;
    Plan inverse_;
};

std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h) {
    std::vector<double> y(x.size() + h.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        double* out = y.data() + i;
        for (std::size_t k = 0; k < h.size(); ++k) out[k] += xi * h[k];
    }
    return y;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<cplx> rfft(std::span<const double> x, std::size_t n) {
    if (n == 0) return {};
    RealFft fft(n);
    std::fill_n(fft.time(), n, 0.0);
    std::copy_n(x.begin(), std::min(n, x.size()), fft.time());
    fft.forward();
    return {fft.freq(), fft.freq() + n / 2 + 1};
}

std::vector<double> irfft(std::span<const cplx> bins, std::size_t n) {
    if (n == 0) return {};
    if (bins.size() != n / 2 + 1) throw std::length_error("irfft: bin count must be n/2 + 1");
    RealFft fft(n);
    std::copy(bins.begin(), bins.end(), fft.freq());
    fft.inverse();
    std::vector<double> out(fft.time(), fft.time() + n);
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= scale;
    return out;
}

std::vector<double> convolve(std::span<const double> x, std::span<const double> h) {
    if (x.empty() || h.empty()) return {};
    if (h.size() < 64 || x.size() < 64) return convolve_direct(x, h);

    // Overlap-save: each block of `step` new samples costs one FFT pair.
    const std::size_t taps = h.size();
    const std::size_t n = next_pow2(4 * taps);
    const std::size_t step = n - taps + 1;
    const std::size_t out_len = x.size() + taps - 1;

    RealFft fft(n);
    std::fill_n(fft.time(), n, 0.0);
    std::copy(h.begin(), h.end(), fft.time());
    fft.forward();
    const std::vector<cplx> kernel(fft.freq(), fft.freq() + n / 2 + 1);

    std::vector<double> y(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t start = 0; start < out_len; start += step) {
        // Block covers input samples [start - (taps-1), start - (taps-1) + n).
        double* buf = fft.time();
        for (std::size_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::ptrdiff_t>(start + i) -
                             static_cast<std::ptrdiff_t>(taps - 1);
            buf[i] = (idx >= 0 && static_cast<std::size_t>(idx) < x.size()) ? x[idx] : 0.0;
        }
        fft.forward();
        cplx* f = fft.freq();
        for (std::size_t k = 0; k < n / 2 + 1; ++k) f[k] *= kernel[k];
        fft.inverse();
        const std::size_t count = std::min(step, out_len - start);
        for (std::size_t i = 0; i < count; ++i) y[start + i] = buf[taps - 1 + i] * scale;
    }
    return y;
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

std::vector<double> kaiser_window(std::size_t n, double beta) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    const double denom = bessel_i0(beta);
    const double half = static_cast<double>(n - 1) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (static_cast<double>(i) - half) / half;
        w[i] = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
    }
    return w;
}

double energy(std::span<const double> x) {
    return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double mean_power(std::span<const double> x) {
    return x.empty() ? 0.0 : energy(x) / static_cast<double>(x.size());
}

}  // namespace nmcap::dsp
