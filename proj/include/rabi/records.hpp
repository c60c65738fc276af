// records.hpp - one evaluated point of a sweep
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rabi {

inline constexpr int kGapCount = 10;

struct ObservableRecord {
    double ratio{0.0};        // omega0 / delta
    double lambda_rel{0.0};   // lambda / lambda_c
    int n_qubits{1};
    double temperature{0.0};  // units of delta, 0 for the ground state
    double entropy_S{0.0};    // bits
    double corr_C{0.0};       // |<sz sgn(x)>|, Jz/J for N > 1
    double squeeze_sp1{1.0};  // <p^2> / <p^2>_{lambda=0}
    double alpha_cond{0.0};   // |<x>| in the x > 0 branch, x = (a + a^dagger)/2
    double e0{0.0};
    std::array<double, kGapCount> gaps{};
    std::int64_t n_max_used{0};
    bool converged{false};

    static constexpr double missing = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace rabi
