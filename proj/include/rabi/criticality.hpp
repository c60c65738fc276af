// criticality.hpp - sweeps over (ratio, N, lambda, T) and the scaling
// analysis done on their records: log-log slopes, transition width, power laws
#pragma once

#include "rabi/eigensolver.hpp"
#include "rabi/model.hpp"
#include "rabi/records.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace rabi {

// start, ..., stop with `count` points (count = 1 gives start).
std::vector<double> linear_grid(double start, double stop, int count);

// lambda/lambda_c = 1 + 10^x for x evenly spaced on [start_exp, stop_exp].
std::vector<double> log_distance_grid(double start_exp, double stop_exp, int count);

struct SweepPoint {
    double ratio{0.0};
    double lambda_rel{0.0};
    int n_qubits{1};
    double temperature{0.0};
    bool thermal{false};
};

struct SweepGrid {
    std::vector<double> ratios;
    std::vector<double> lambda_rel;
    std::vector<int> n_qubits{1};
    std::vector<double> temperatures;  // empty: ground-state records
    double epsilon{0.0};

    // Throws std::invalid_argument on empty axes or out-of-range values.
    void validate() const;

    // Grid order: ratio, then N, then lambda, then temperature.
    std::vector<SweepPoint> points() const;
    std::size_t size() const;
};

struct SweepOptions {
    SolveOptions solve;
    int threads{0};  // 0: RABI_THREADS, else hardware concurrency
    std::function<void(std::size_t done, std::size_t total)> progress;
};

// Worker count from RABI_THREADS (if set and positive) capped by the
// hardware; at least 1.
int thread_limit();

// One record per grid point in grid order. Thermal points sharing
// (ratio, N, lambda) come from one decomposition at the cutoff of the
// highest temperature. A point that throws is recorded with converged = false
// and NaN observables; the sweep carries on.
std::vector<ObservableRecord> run_sweep(const SweepGrid& grid, const TruncationConfig& trunc,
                                        const SweepOptions& opts = {});

// Runs body(i) for i in [0, count) on up to `threads` workers (0: thread_limit).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// Lowest `levels` energies of both parity sectors at each ground-state grid
// point, after the truncation loop.
struct LevelRecord {
    double ratio{0.0};
    double lambda_rel{0.0};
    int n_qubits{1};
    std::vector<double> levels;
    std::int64_t n_max_used{0};
    bool converged{false};
};

std::vector<LevelRecord> run_spectrum(const SweepGrid& grid, const TruncationConfig& trunc, int levels,
                                      const SweepOptions& opts = {});

// One ground-state point through the truncation loop.
ObservableRecord evaluate_point(const SweepPoint& point, double epsilon, const TruncationConfig& trunc,
                                const SolveOptions& opts);

// x = log10(lambda/lambda_c - 1), y = log10 of an observable, slopes the
// centred differences at x[1..n-2].
struct SlopeSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> slopes;

    // Requires strictly increasing x and at least 3 points.
    static SlopeSeries from_points(std::vector<double> x, std::vector<double> y);
};

// Series of log10 S against log10(lambda/lambda_c - 1), from records above
// lambda_c with S > 0, sorted by lambda.
SlopeSeries entropy_slope_series(const std::vector<ObservableRecord>& records);

// Slope at the interior grid point nearest to at_x. Throws
// std::out_of_range when at_x lies outside (x.front(), x.back()).
double loglog_slope(const SlopeSeries& series, double at_x);

struct TransitionWidth {
    double width{0.0};
    double lambda_low{0.0};   // crossing of threshold_low * plateau
    double lambda_high{0.0};  // crossing of threshold_high * plateau
    bool defined{false};
};

inline constexpr double kPlateauLambda = 1.5;

// Width in lambda/lambda_c between the crossings of the two thresholds,
// relative to S at lambda/lambda_c = 1.5. Records must share one ratio.
TransitionWidth transition_width(const std::vector<ObservableRecord>& records, double threshold_low = 0.1,
                                 double threshold_high = 0.9);

// y = prefactor * x^exponent by least squares in log-log.
struct PowerLawFit {
    double exponent{0.0};
    double prefactor{0.0};
    double rms_log_residual{0.0};
};

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rabi
