// cauchy_sum.hpp - odd-lag Cauchy sums through FFTW correlations
#pragma once

#include <Eigen/Core>

namespace rabi::detail {

// sum_{m, n} x_m y_n g(n - m) with g(k) = 1/k for odd k and 0 otherwise.
// Direct double loop for short inputs, one zero-padded FFT correlation
// otherwise.
double cauchy_odd_sum(const double* x, Eigen::Index lx, const double* y, Eigen::Index ly);

// z_m = sum_n y_n g(n - m) for m, n in [0, len). The kernel spectrum is
// cached per transform size, so one call costs a forward and a backward FFT.
void cauchy_odd_apply(const double* y, Eigen::Index len, double* z);

}  // namespace rabi::detail
