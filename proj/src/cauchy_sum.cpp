#include "cauchy_sum.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace rabi::detail {

namespace {

constexpr Eigen::Index kDirectLimit = 1 << 18;  // lx * ly below this: no FFT

// FFTW plans are created under a lock (the planner is not thread safe) and
// executed through the new-array interface, which is. FFTW_ESTIMATE keeps the
// chosen algorithm, and therefore the rounding, independent of timing.
struct PlanPair {
    fftw_plan forward{nullptr};
    fftw_plan backward{nullptr};
};

std::mutex plan_mutex;
std::map<int, PlanPair>& plan_cache() {
    static std::map<int, PlanPair> cache;
    return cache;
}

PlanPair plans_for(int size) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto& cache = plan_cache();
    auto it = cache.find(size);
    if (it != cache.end()) return it->second;
    double* real = fftw_alloc_real(std::size_t(size));
    fftw_complex* spec = fftw_alloc_complex(std::size_t(size / 2 + 1));
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_1d(size, real, spec, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r_1d(size, spec, real, FFTW_ESTIMATE);
    fftw_free(real);
    fftw_free(spec);
    cache.emplace(size, p);
    return p;
}

struct RealBuffer {
    explicit RealBuffer(int n) : data(fftw_alloc_real(std::size_t(n))) {}
    ~RealBuffer() { fftw_free(data); }
    double* data;
};

struct ComplexBuffer {
    explicit ComplexBuffer(int n) : data(fftw_alloc_complex(std::size_t(n))) {}
    ~ComplexBuffer() { fftw_free(data); }
    fftw_complex* data;
};

double direct_sum(const double* x, Eigen::Index lx, const double* y, Eigen::Index ly) {
    double total = 0.0;
    for (Eigen::Index m = 0; m < lx; ++m) {
        if (x[m] == 0.0) continue;
        double row = 0.0;
        // n - m odd only
        for (Eigen::Index n = (m + 1) % 2; n < ly; n += 2) row += y[n] / double(n - m);
        total += x[m] * row;
    }
    return total;
}

// Spectrum of c with c[j] = g(-j) (indices mod size), so that
// z = y (*) c is the wanted correlation. Built once per size.
const std::vector<std::complex<double>>& kernel_spectrum(int size) {
    static std::mutex mutex;
    static std::map<int, std::vector<std::complex<double>>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(size);
    if (it != cache.end()) return it->second;
    const PlanPair plans = plans_for(size);
    const int half = size / 2 + 1;
    RealBuffer c(size);
    ComplexBuffer fc(half);
    std::fill(c.data, c.data + size, 0.0);
    for (int j = 1; j < size / 2; j += 2) {
        c.data[j] = -1.0 / j;
        c.data[size - j] = 1.0 / j;
    }
    fftw_execute_dft_r2c(plans.forward, c.data, fc.data);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(half));
    for (int i = 0; i < half; ++i) out[std::size_t(i)] = {fc.data[i][0], fc.data[i][1]};
    return cache.emplace(size, std::move(out)).first->second;
}

}  // namespace

void cauchy_odd_apply(const double* y, Eigen::Index len, double* z) {
    Eigen::Index ly = len;
    while (ly > 0 && y[ly - 1] == 0.0) --ly;
    std::fill(z, z + len, 0.0);
    if (ly == 0) return;
    if (len * ly <= kDirectLimit) {
        for (Eigen::Index m = 0; m < len; ++m) {
            double row = 0.0;
            for (Eigen::Index n = (m + 1) % 2; n < ly; n += 2) row += y[n] / double(n - m);
            z[m] = row;
        }
        return;
    }
    // Lags run over (-ly, len); the cached kernel covers (-size/2, size/2).
    int size = 1;
    while (size < 2 * len) size <<= 1;
    const PlanPair plans = plans_for(size);
    const auto& kernel = kernel_spectrum(size);
    const int half = size / 2 + 1;
    RealBuffer by(size);
    ComplexBuffer fy(half);
    std::fill(by.data, by.data + size, 0.0);
    std::copy(y, y + ly, by.data);
    fftw_execute_dft_r2c(plans.forward, by.data, fy.data);
    for (int i = 0; i < half; ++i) {
        const double kr = kernel[std::size_t(i)].real(), ki = kernel[std::size_t(i)].imag();
        const double re = fy.data[i][0] * kr - fy.data[i][1] * ki;
        fy.data[i][1] = fy.data[i][0] * ki + fy.data[i][1] * kr;
        fy.data[i][0] = re;
    }
    fftw_execute_dft_c2r(plans.backward, fy.data, by.data);
    const double norm = 1.0 / double(size);
    for (Eigen::Index m = 0; m < len; ++m) z[m] = by.data[m] * norm;
}

double cauchy_odd_sum(const double* x, Eigen::Index lx, const double* y, Eigen::Index ly) {
    while (lx > 0 && x[lx - 1] == 0.0) --lx;
    while (ly > 0 && y[ly - 1] == 0.0) --ly;
    if (lx == 0 || ly == 0) return 0.0;
    if (lx * ly <= kDirectLimit) return direct_sum(x, lx, y, ly);

    // R(k) = sum_m x_m y_{m+k} for k in (-lx, ly); circular aliasing is
    // avoided once size >= lx + ly - 1.
    int size = 1;
    while (size < lx + ly - 1) size <<= 1;
    const PlanPair plans = plans_for(size);
    const int half = size / 2 + 1;
    RealBuffer bx(size), by(size);
    ComplexBuffer fx(half), fy(half);
    std::fill(bx.data, bx.data + size, 0.0);
    std::fill(by.data, by.data + size, 0.0);
    std::copy(x, x + lx, bx.data);
    std::copy(y, y + ly, by.data);
    fftw_execute_dft_r2c(plans.forward, bx.data, fx.data);
    fftw_execute_dft_r2c(plans.forward, by.data, fy.data);
    for (int i = 0; i < half; ++i) {
        // conj(X) * Y
        const double re = fx.data[i][0] * fy.data[i][0] + fx.data[i][1] * fy.data[i][1];
        const double im = fx.data[i][0] * fy.data[i][1] - fx.data[i][1] * fy.data[i][0];
        fx.data[i][0] = re;
        fx.data[i][1] = im;
    }
    fftw_execute_dft_c2r(plans.backward, fx.data, bx.data);
    const double norm = 1.0 / double(size);
    double total = 0.0;
    for (Eigen::Index k = 1; k < ly; k += 2) total += bx.data[k] / double(k);
    for (Eigen::Index k = 1; k < lx; k += 2) total -= bx.data[size - k] / double(k);
    return total * norm;
}

}  // namespace rabi::detail
