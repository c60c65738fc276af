#include "rabi/criticality.hpp"

#include "rabi/observables.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace rabi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ObservableRecord failed_record(const SweepPoint& p) {
    ObservableRecord r;
    r.ratio = p.ratio;
    r.lambda_rel = p.lambda_rel;
    r.n_qubits = p.n_qubits;
    r.temperature = p.temperature;
    r.entropy_S = r.corr_C = r.squeeze_sp1 = r.alpha_cond = r.e0 = kNaN;
    r.gaps.fill(kNaN);
    r.n_max_used = 0;
    r.converged = false;
    return r;
}

void stamp(ObservableRecord& r, const SweepPoint& p) {
    r.ratio = p.ratio;
    r.lambda_rel = p.lambda_rel;
    r.n_qubits = p.n_qubits;
    r.temperature = p.temperature;
}

// Thermal records for points[first..first+count), which share ratio, N and
// lambda and differ only in temperature.
void thermal_group(const std::vector<SweepPoint>& points, std::size_t first, std::size_t count, double epsilon,
                   const TruncationConfig& trunc, const SolveOptions& opts,
                   std::vector<ObservableRecord>& out) {
    const SweepPoint& head = points[first];
    const ModelSpec spec = ModelSpec::from_ratios(head.ratio, head.lambda_rel, head.n_qubits, epsilon);
    std::vector<double> temps;
    double t_max = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        temps.push_back(points[first + i].temperature);
        t_max = std::max(t_max, temps.back());
    }
    const Index n_max = thermal_cutoff(spec, t_max, trunc);
    if (spec.spin_dim() * (n_max + 1) > trunc.max_dimension) {
        throw SolverError("thermal cutoff exceeds max_dimension");
    }
    if (epsilon == 0.0) {
        const std::vector<ThermalResult> res = thermal_observables(spec, n_max, temps, opts);
        for (std::size_t i = 0; i < count; ++i) {
            out[first + i] = res[i].record;
            stamp(out[first + i], points[first + i]);
        }
        return;
    }
    const OperatorMatrix H = build_hamiltonian(spec, n_max);
    const SpectrumResult spectrum = dense_eigh(H, true, opts.dense_cap);
    for (std::size_t i = 0; i < count; ++i) {
        const ThermalResult r = gibbs_observables(spectrum, spec, n_max + 1, temps[i]);
        out[first + i] = r.record;
        stamp(out[first + i], points[first + i]);
    }
}

}  // namespace

std::vector<double> linear_grid(double start, double stop, int count) {
    if (count < 1) throw std::invalid_argument("grid count must be >= 1");
    if (!std::isfinite(start) || !std::isfinite(stop)) throw std::invalid_argument("grid bounds must be finite");
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        v[std::size_t(i)] = count == 1 ? start : start + (stop - start) * double(i) / double(count - 1);
    }
    if (count > 1) v.back() = stop;
    return v;
}

std::vector<double> log_distance_grid(double start_exp, double stop_exp, int count) {
    std::vector<double> v = linear_grid(start_exp, stop_exp, count);
    for (double& x : v) x = 1.0 + std::pow(10.0, x);
    return v;
}

void SweepGrid::validate() const {
    if (ratios.empty() || lambda_rel.empty() || n_qubits.empty()) {
        throw std::invalid_argument("sweep grid needs at least one ratio, lambda and N");
    }
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("ratios must be finite and > 0");
    }
    for (double l : lambda_rel) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("lambda points must be finite and >= 0");
    }
    for (int n : n_qubits) {
        if (n < 1) throw std::invalid_argument("N must be >= 1");
    }
    for (double t : temperatures) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("temperatures must be finite and >= 0");
    }
    if (!std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be finite");
}

std::vector<SweepPoint> SweepGrid::points() const {
    std::vector<SweepPoint> out;
    out.reserve(size());
    const bool thermal = !temperatures.empty();
    for (double r : ratios) {
        for (int n : n_qubits) {
            for (double l : lambda_rel) {
                if (!thermal) {
                    out.push_back({r, l, n, 0.0, false});
                    continue;
                }
                for (double t : temperatures) out.push_back({r, l, n, t, true});
            }
        }
    }
    return out;
}

std::size_t SweepGrid::size() const {
    return ratios.size() * n_qubits.size() * lambda_rel.size() * std::max<std::size_t>(temperatures.size(), 1);
}

int thread_limit() {
    const int hw = std::max(1, int(std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("RABI_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return std::min(n, hw);
        } catch (const std::exception&) {
        }
    }
    return hw;
}

ObservableRecord evaluate_point(const SweepPoint& point, double epsilon, const TruncationConfig& trunc,
                                const SolveOptions& opts) {
    const ModelSpec spec = ModelSpec::from_ratios(point.ratio, point.lambda_rel, point.n_qubits, epsilon);
    PointEvaluator eval = [&](Index n_max) { return evaluate_ground_state(spec, n_max, opts); };
    PointSolution sol = converge_truncation(spec, trunc, eval);
    stamp(sol.record, point);
    return sol.record;
}

std::vector<ObservableRecord> run_sweep(const SweepGrid& grid, const TruncationConfig& trunc,
                                        const SweepOptions& opts) {
    grid.validate();
    trunc.validate();
    const std::vector<SweepPoint> points = grid.points();
    std::vector<ObservableRecord> out(points.size());

    // Work items: [first, first + count) of points.
    std::vector<std::pair<std::size_t, std::size_t>> items;
    const std::size_t per = std::max<std::size_t>(grid.temperatures.size(), 1);
    for (std::size_t i = 0; i < points.size(); i += per) items.emplace_back(i, per);

    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(items.size(), opts.threads, [&](std::size_t item) {
        const auto [first, count] = items[item];
        try {
            if (points[first].thermal) {
                thermal_group(points, first, count, grid.epsilon, trunc, opts.solve, out);
            } else {
                out[first] = evaluate_point(points[first], grid.epsilon, trunc, opts.solve);
            }
        } catch (const std::exception&) {
            for (std::size_t i = 0; i < count; ++i) out[first + i] = failed_record(points[first + i]);
        }
        const std::size_t finished = done.fetch_add(count) + count;
        if (opts.progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            opts.progress(finished, points.size());
        }
    });
    return out;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    const int workers = std::max(1, std::min<int>(threads > 0 ? threads : thread_limit(), int(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::vector<LevelRecord> run_spectrum(const SweepGrid& grid, const TruncationConfig& trunc, int levels,
                                      const SweepOptions& opts) {
    grid.validate();
    trunc.validate();
    if (levels < 1) throw std::invalid_argument("levels must be >= 1");
    if (!grid.temperatures.empty()) throw std::invalid_argument("spectrum takes no temperatures");
    const std::vector<SweepPoint> points = grid.points();
    std::vector<LevelRecord> out(points.size());
    SolveOptions solve = opts.solve;
    solve.levels = levels;
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(points.size(), opts.threads, [&](std::size_t i) {
        const SweepPoint& p = points[i];
        LevelRecord& rec = out[i];
        rec.ratio = p.ratio;
        rec.lambda_rel = p.lambda_rel;
        rec.n_qubits = p.n_qubits;
        try {
            const ModelSpec spec = ModelSpec::from_ratios(p.ratio, p.lambda_rel, p.n_qubits, grid.epsilon);
            PointEvaluator eval = [&](Index n_max) { return evaluate_ground_state(spec, n_max, solve); };
            const PointSolution sol = converge_truncation(spec, trunc, eval);
            rec.levels = sol.spectrum.eigenvalues;
            rec.n_max_used = sol.record.n_max_used;
            rec.converged = sol.record.converged;
        } catch (const std::exception&) {
            rec.converged = false;
        }
        rec.levels.resize(std::size_t(levels), kNaN);
        const std::size_t finished = done.fetch_add(1) + 1;
        if (opts.progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            opts.progress(finished, points.size());
        }
    });
    return out;
}

SlopeSeries SlopeSeries::from_points(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
    if (x.size() < 3) throw std::invalid_argument("slope series needs at least 3 points");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("non-finite point in slope series");
        if (i > 0 && !(x[i] > x[i - 1])) throw std::invalid_argument("x must be strictly increasing");
    }
    SlopeSeries s;
    s.x = std::move(x);
    s.y = std::move(y);
    for (std::size_t i = 1; i + 1 < s.x.size(); ++i) {
        s.slopes.push_back((s.y[i + 1] - s.y[i - 1]) / (s.x[i + 1] - s.x[i - 1]));
    }
    return s;
}

SlopeSeries entropy_slope_series(const std::vector<ObservableRecord>& records) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : records) {
        if (r.lambda_rel > 1.0 && r.entropy_S > 0.0 && std::isfinite(r.entropy_S)) {
            pts.emplace_back(std::log10(r.lambda_rel - 1.0), std::log10(r.entropy_S));
        }
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> x, y;
    for (const auto& [a, b] : pts) {
        if (!x.empty() && a == x.back()) continue;
        x.push_back(a);
        y.push_back(b);
    }
    return SlopeSeries::from_points(std::move(x), std::move(y));
}

double loglog_slope(const SlopeSeries& series, double at_x) {
    if (series.slopes.empty()) throw std::out_of_range("slope series has no interior points");
    if (!(at_x > series.x.front() && at_x < series.x.back())) {
        throw std::out_of_range("at_x outside the interior of the series");
    }
    std::size_t best = 1;
    for (std::size_t i = 1; i + 1 < series.x.size(); ++i) {
        if (std::abs(series.x[i] - at_x) < std::abs(series.x[best] - at_x)) best = i;
    }
    return series.slopes[best - 1];
}

TransitionWidth transition_width(const std::vector<ObservableRecord>& records, double threshold_low,
                                 double threshold_high) {
    if (!(threshold_low > 0.0 && threshold_low < threshold_high && threshold_high <= 1.0)) {
        throw std::invalid_argument("need 0 < threshold_low < threshold_high <= 1");
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : records) {
        if (!records.empty() && r.ratio != records.front().ratio) {
            throw std::invalid_argument("transition_width needs records at one ratio");
        }
        if (std::isfinite(r.entropy_S)) pts.emplace_back(r.lambda_rel, r.entropy_S);
    }
    std::sort(pts.begin(), pts.end());
    TransitionWidth out;
    double plateau = kNaN;
    for (const auto& [l, s] : pts) {
        if (std::abs(l - kPlateauLambda) <= 1e-9) plateau = s;
    }
    if (!(plateau > 0.0)) return out;

    auto crossing = [&](double level, double& at) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].second >= level) {
                if (i == 0) return false;  // already above at the first point
                const auto [l0, s0] = pts[i - 1];
                const auto [l1, s1] = pts[i];
                at = s1 == s0 ? l1 : l0 + (level - s0) * (l1 - l0) / (s1 - s0);
                return true;
            }
        }
        return false;
    };
    if (!crossing(threshold_low * plateau, out.lambda_low)) return out;
    if (!crossing(threshold_high * plateau, out.lambda_high)) return out;
    out.width = out.lambda_high - out.lambda_low;
    out.defined = true;
    return out;
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("power-law fit needs >= 2 paired points");
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("power-law fit needs positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / double(n), my = sy / double(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("power-law fit needs distinct x");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    fit.prefactor = std::exp(intercept);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + fit.exponent * lx[i]);
        ss += r * r;
    }
    fit.rms_log_residual = std::sqrt(ss / double(n));
    return fit;
}

}  // namespace rabi
