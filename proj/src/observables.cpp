#include "rabi/observables.hpp"

#include "cauchy_sum.hpp"
#include "rabi/semiclassics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rabi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Relative size below which trailing Fock amplitudes are dropped before the
// sign convolution.
constexpr double kSupportCut = 1e-17;

using ConstBlocks = Eigen::Map<const Eigen::MatrixXd>;

ConstBlocks spin_columns(const Vector& state, Index spin_dim, Index fock_dim) {
    if (state.size() != spin_dim * fock_dim) {
        throw std::invalid_argument("state has " + std::to_string(state.size()) + " entries, expected " +
                                    std::to_string(spin_dim * fock_dim));
    }
    // Column s holds the Fock amplitudes of spin state s.
    return ConstBlocks(state.data(), fock_dim, spin_dim);
}

Index support_length(const ConstBlocks& cols) {
    const double peak = cols.cwiseAbs().maxCoeff();
    const double cut = kSupportCut * peak;
    for (Index n = cols.rows() - 1; n >= 0; --n) {
        for (Index s = 0; s < cols.cols(); ++s) {
            if (std::abs(cols(n, s)) > cut) return n + 1;
        }
    }
    return 0;
}

double column_p_squared(const Eigen::Ref<const Vector>& v) {
    double diag = 0.0, off = 0.0;
    const Index len = v.size();
    for (Index n = 0; n < len; ++n) diag += v[n] * v[n] * (double(n) + 0.5);
    for (Index n = 0; n + 2 < len; ++n) off += v[n] * v[n + 2] * std::sqrt((n + 1.0) * (n + 2.0));
    return diag - off;
}

double column_field(const Eigen::Ref<const Vector>& v) {
    double x = 0.0;
    for (Index n = 0; n + 1 < v.size(); ++n) x += v[n] * v[n + 1] * std::sqrt(n + 1.0);
    return x;
}

// x v with x = (a + a^dagger)/2, kept to the first `len` Fock levels.
Vector apply_field(const Eigen::Ref<const Vector>& v, Index len) {
    Vector out = Vector::Zero(len);
    for (Index n = 0; n < len; ++n) {
        if (n > 0 && n - 1 < v.size()) out[n] += 0.5 * std::sqrt(double(n)) * v[n - 1];
        if (n + 1 < v.size()) out[n] += 0.5 * std::sqrt(n + 1.0) * v[n + 1];
    }
    return out;
}

struct ColumnSign {
    double sgn{0.0};        // <v| sgn |v>
    double branch_field{0.0};   // <v| x theta(x) |v>
    double branch_weight{0.0};  // <v| theta(x) |v>
};

// One S v serves <sgn>, <x sgn> and hence the branch moments, through
// theta = (1 + sgn)/2. With `even_only` the parts odd under x -> -x (<x>,
// <sgn>) are left out of the branch moments; they cancel between a column
// and its parity mirror.
ColumnSign column_sign(const Eigen::Ref<const Vector>& v, Index fock_dim, const SignOperator& sign,
                       bool even_only = false) {
    const Index len = std::min(v.size() + 1, fock_dim);
    Vector padded = Vector::Zero(len);
    padded.head(v.size()) = v;
    const Vector sv = sign.apply(padded);
    ColumnSign c;
    c.sgn = padded.dot(sv);
    double field = apply_field(v, len).dot(sv);
    double weight = v.squaredNorm();
    if (!even_only) {
        field += column_field(v);
        weight += c.sgn;
    }
    c.branch_field = 0.5 * field;
    c.branch_weight = 0.5 * weight;
    return c;
}

ObservableRecord base_record(const ModelSpec& spec) {
    ObservableRecord r;
    r.ratio = spec.delta > 0.0 ? spec.omega0 / spec.delta : kNaN;
    r.lambda_rel = spec.delta > 0.0 ? spec.lambda / lambda_c(spec.delta, spec.omega0) : kNaN;
    r.n_qubits = spec.n_qubits;
    r.gaps.fill(kNaN);
    return r;
}

void fill_gaps(const std::vector<double>& eigenvalues, ObservableRecord& r) {
    r.e0 = eigenvalues.empty() ? kNaN : eigenvalues.front();
    for (int i = 0; i < kGapCount; ++i) {
        const std::size_t k = std::size_t(i + 1);
        r.gaps[std::size_t(i)] = k < eigenvalues.size() ? eigenvalues[k] - eigenvalues.front() : kNaN;
    }
}

StateMoments zero_moments(Index spin_dim) {
    StateMoments m;
    m.spin_density = Eigen::MatrixXd::Zero(spin_dim, spin_dim);
    return m;
}

StateMoments moments_impl(const Vector& state, const ModelSpec& spec, Index fock_dim, const SignOperator& sign,
                          int parity) {
    const Index spin_dim = spec.spin_dim();
    const ConstBlocks cols = spin_columns(state, spin_dim, fock_dim);
    if (fock_dim > sign.n_max() + 1) throw std::invalid_argument("sign operator is smaller than the Fock space");
    StateMoments m;
    m.spin_density = cols.transpose() * cols;
    const Index len = support_length(cols);
    const double j = spec.total_spin();
    for (Index s = 0; s < spin_dim; ++s) {
        const double mz = j - double(s);
        const auto v = cols.col(s).head(len);
        m.p_squared += column_p_squared(v);
        // A parity eigenstate mirrors M onto -M with (-1)^n; both halves give
        // the same sign correlation and the same branch moments.
        if (parity != 0 && mz < 0.0) continue;
        const double mirror = parity != 0 && mz > 0.0 ? 2.0 : 1.0;
        const ColumnSign c = column_sign(v, fock_dim, sign, parity != 0);
        m.branch_field += mirror * c.branch_field;
        m.branch_weight += mirror * c.branch_weight;
        m.spin_sign += mirror * (mz / j) * c.sgn;
    }
    return m;
}

}  // namespace

Eigen::MatrixXd reduced_spin_density(const Vector& state, Index spin_dim, Index fock_dim) {
    const ConstBlocks cols = spin_columns(state, spin_dim, fock_dim);
    return cols.transpose() * cols;
}

Eigen::MatrixXd reduced_field_density(const Vector& state, Index spin_dim, Index fock_dim) {
    const ConstBlocks cols = spin_columns(state, spin_dim, fock_dim);
    return cols * cols.transpose();
}

double von_neumann_entropy(const Eigen::MatrixXd& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) throw std::invalid_argument("density matrix must be square");
    if (std::abs(rho.trace() - 1.0) > 1e-8) {
        throw std::invalid_argument("density matrix trace is " + std::to_string(rho.trace()));
    }
    const Eigen::MatrixXd sym = 0.5 * (rho + rho.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double p = es.eigenvalues()[i];
        if (p > 1e-15) s -= p * std::log2(p);
    }
    return std::max(s, 0.0);
}

SignOperator::SignOperator(Index n_max) {
    if (n_max < 1) throw std::invalid_argument("sign operator needs n_max >= 1");
    u_ = Vector::Zero(n_max + 1);
    w_ = Vector::Zero(n_max + 1);
    u_[0] = std::pow(M_PI, -0.25);
    for (Index m = 0; m + 2 <= n_max; m += 2) {
        u_[m + 2] = -std::sqrt((m + 1.0) / (m + 2.0)) * u_[m];
    }
    for (Index n = 1; n <= n_max; n += 2) w_[n] = std::sqrt(2.0 * n) * u_[n - 1];
}

double SignOperator::element(Index m, Index n) const {
    if (m < 0 || n < 0 || m > n_max() || n > n_max()) throw std::out_of_range("sign operator index");
    if ((m + n) % 2 == 0) return 0.0;
    if (m % 2 == 1) std::swap(m, n);
    return u_[m] * w_[n] / double(n - m);
}

Eigen::MatrixXd SignOperator::dense() const {
    const Index dim = n_max() + 1;
    Eigen::MatrixXd s(dim, dim);
    for (Index m = 0; m < dim; ++m) {
        for (Index n = 0; n < dim; ++n) s(m, n) = element(m, n);
    }
    return s;
}

double SignOperator::cauchy_sum(const Vector& x, const Vector& y) {
    return detail::cauchy_odd_sum(x.data(), x.size(), y.data(), y.size());
}

double SignOperator::bilinear(const Vector& a, const Vector& b) const {
    if (a.size() != b.size() || a.size() > n_max() + 1) throw std::invalid_argument("sign bilinear: size mismatch");
    const Index len = a.size();
    const Vector ua = u_.head(len).cwiseProduct(a);
    const Vector wb = w_.head(len).cwiseProduct(b);
    if (&a == &b) return 2.0 * cauchy_sum(ua, wb);
    const Vector ub = u_.head(len).cwiseProduct(b);
    const Vector wa = w_.head(len).cwiseProduct(a);
    return cauchy_sum(ua, wb) + cauchy_sum(ub, wa);
}

Vector SignOperator::apply(const Vector& v) const {
    if (v.size() > n_max() + 1) throw std::invalid_argument("sign apply: vector longer than the operator");
    const Index len = v.size();
    // S = diag(u) G diag(w) - diag(w) G diag(u) with G_mn = g(n - m).
    const Vector wv = w_.head(len).cwiseProduct(v);
    const Vector uv = u_.head(len).cwiseProduct(v);
    Vector gw(len), gu(len);
    detail::cauchy_odd_apply(wv.data(), len, gw.data());
    detail::cauchy_odd_apply(uv.data(), len, gu.data());
    return u_.head(len).cwiseProduct(gw) - w_.head(len).cwiseProduct(gu);
}

SignOperator sign_operator(Index n_max) { return SignOperator(n_max); }

double correlation_C(const Vector& state, const ModelSpec& spec, Index fock_dim, const SignOperator& sign) {
    return std::abs(moments_impl(state, spec, fock_dim, sign, 0).spin_sign);
}

double squeezing(const Vector& state, Index spin_dim, Index fock_dim) {
    const ConstBlocks cols = spin_columns(state, spin_dim, fock_dim);
    double p2 = 0.0;
    for (Index s = 0; s < spin_dim; ++s) p2 += column_p_squared(cols.col(s));
    return 2.0 * p2;
}

double squeezing(const Vector& state, const OperatorMatrix& p_squared) {
    if (state.size() != p_squared.dimension()) throw std::invalid_argument("squeezing: size mismatch");
    return 2.0 * state.dot(p_squared.matrix * state);
}

double conditional_field(const Vector& state, const ModelSpec& spec, Index fock_dim, const SignOperator& sign) {
    if (fock_dim > sign.n_max() + 1) throw std::invalid_argument("sign operator is smaller than the Fock space");
    const ConstBlocks cols = spin_columns(state, spec.spin_dim(), fock_dim);
    double field = 0.0, weight = 0.0;
    for (Index s = 0; s < spec.spin_dim(); ++s) {
        const ColumnSign c = column_sign(cols.col(s), fock_dim, sign);
        field += c.branch_field;
        weight += c.branch_weight;
    }
    return std::sqrt(weight) < 1e-12 ? 0.0 : std::abs(field / weight);
}

double conditional_field(const Vector& state, const ModelSpec& spec, Index fock_dim) {
    return conditional_field(state, spec, fock_dim, sign_operator(fock_dim - 1));
}

double field_expectation(const Vector& state, Index spin_dim, Index fock_dim) {
    const ConstBlocks cols = spin_columns(state, spin_dim, fock_dim);
    double x = 0.0;
    for (Index s = 0; s < spin_dim; ++s) x += column_field(cols.col(s));
    return x;
}

std::vector<double> energy_gaps(const std::vector<double>& eigenvalues, int count) {
    if (count < 0 || eigenvalues.size() < std::size_t(count) + 1) {
        throw std::invalid_argument("energy_gaps needs " + std::to_string(count + 1) + " eigenvalues, got " +
                                    std::to_string(eigenvalues.size()));
    }
    std::vector<double> gaps(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) gaps[std::size_t(i)] = eigenvalues[std::size_t(i + 1)] - eigenvalues[0];
    return gaps;
}

void StateMoments::add(const StateMoments& other, double weight) {
    if (spin_density.size() == 0) spin_density = Eigen::MatrixXd::Zero(other.spin_density.rows(), other.spin_density.cols());
    spin_density += weight * other.spin_density;
    spin_sign += weight * other.spin_sign;
    p_squared += weight * other.p_squared;
    branch_weight += weight * other.branch_weight;
    branch_field += weight * other.branch_field;
}

void StateMoments::scale(double factor) {
    spin_density *= factor;
    spin_sign *= factor;
    p_squared *= factor;
    branch_weight *= factor;
    branch_field *= factor;
}

StateMoments state_moments(const Vector& state, const ModelSpec& spec, Index fock_dim, const SignOperator& sign) {
    return moments_impl(state, spec, fock_dim, sign, 0);
}

void finish_record(const StateMoments& m, ObservableRecord& record) {
    record.entropy_S = von_neumann_entropy(m.spin_density);
    record.corr_C = std::min(std::abs(m.spin_sign), 1.0);
    record.squeeze_sp1 = 2.0 * m.p_squared;
    record.alpha_cond = std::sqrt(std::abs(m.branch_weight)) < 1e-12 ? 0.0 : std::abs(m.branch_field / m.branch_weight);
}

PointSolution evaluate_ground_state(const ModelSpec& spec, Index n_max, const SolveOptions& opts) {
    spec.validate();
    PointSolution sol;
    sol.record = base_record(spec);
    const int levels = std::max(opts.levels, 1);
    const SignOperator sign(n_max);
    const Index fock_dim = n_max + 1;

    Vector ground;
    std::vector<double> values;
    bool converged = true;
    int parity = 0;
    if (spec.epsilon == 0.0) {
        const ParityBlock even = build_parity_block(spec, n_max, +1);
        const ParityBlock odd = build_parity_block(spec, n_max, -1);
        const int k_even = int(std::min<Index>(levels, even.hamiltonian.dimension()));
        const int k_odd = int(std::min<Index>(levels, odd.hamiltonian.dimension()));
        const SpectrumResult se = lowest_eigenpairs(even.hamiltonian, k_even, 1, opts);
        const SpectrumResult so = lowest_eigenpairs(odd.hamiltonian, k_odd, 0, opts);
        converged = se.converged && so.converged;
        values = se.eigenvalues;
        values.insert(values.end(), so.eigenvalues.begin(), so.eigenvalues.end());
        std::sort(values.begin(), values.end());
        ground = even.embedding.embed(se.eigenvectors.col(0));
        sol.spectrum.residual_norms = se.residual_norms;
        parity = +1;
    } else {
        const OperatorMatrix h = build_hamiltonian(spec, n_max);
        const SpectrumResult s = lowest_eigenpairs(h, levels, 1, opts);
        converged = s.converged;
        values = s.eigenvalues;
        ground = s.eigenvectors.col(0);
        sol.spectrum.residual_norms = s.residual_norms;
    }
    if (values.size() > std::size_t(levels)) values.resize(std::size_t(levels));

    fill_gaps(values, sol.record);
    finish_record(moments_impl(ground, spec, fock_dim, sign, parity), sol.record);
    sol.record.n_max_used = n_max;
    sol.record.converged = converged;
    sol.spectrum.eigenvalues = values;
    sol.spectrum.eigenvectors = ground;
    sol.spectrum.n_max_used = n_max;
    sol.spectrum.converged = converged;
    return sol;
}

ThermalResult gibbs_observables(const SpectrumResult& spectrum, const ModelSpec& spec, Index fock_dim,
                                double temperature) {
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be non-negative");
    if (!spectrum.has_vectors() || spectrum.eigenvectors.cols() != Index(spectrum.size())) {
        throw std::invalid_argument("gibbs_observables needs every eigenvector");
    }
    const SignOperator sign(fock_dim - 1);
    const double e0 = spectrum.eigenvalues.front();
    ThermalResult out;
    out.record = base_record(spec);
    out.record.temperature = temperature;
    fill_gaps(spectrum.eigenvalues, out.record);

    StateMoments acc = zero_moments(spec.spin_dim());
    double z = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double de = spectrum.eigenvalues[i] - e0;
        const double w = temperature == 0.0 ? (de < 1e-12 ? 1.0 : 0.0) : std::exp(-de / temperature);
        if (w < 1e-17) continue;
        acc.add(moments_impl(spectrum.eigenvectors.col(Index(i)), spec, fock_dim, sign, 0), w);
        z += w;
        ++out.states_used;
    }
    acc.scale(1.0 / z);
    finish_record(acc, out.record);
    const double top = spectrum.eigenvalues.back() - e0;
    out.tail_weight = temperature == 0.0 ? 0.0 : std::exp(-top / temperature) / z;
    out.record.n_max_used = fock_dim - 1;
    out.record.converged = spectrum.converged && out.tail_weight <= kThermalTailLimit;
    return out;
}

namespace {

// j-th eigenvalue (0-based) of a block-tridiagonal operator by bisection.
double kth_eigenvalue(const BlockTridiagonal& bt, Index j) {
    double lo = bt.gershgorin_lower(), hi = bt.gershgorin_upper();
    const double pad = 4.0 * std::numeric_limits<double>::epsilon() * std::max(bt.norm_inf(), 1e-300);
    lo -= pad;
    hi += pad;
    while (true) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))) break;
        if (bt.count_below(mid) <= j) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo + 0.5 * (hi - lo);
}

struct BlockEigen {
    const ParityBlock* block{nullptr};
    bool scalar{false};
    Vector diag, off;              // scalar blocks
    BlockTridiagonal banded;       // general blocks
    std::vector<double> values;    // ascending; all (scalar) or those in the window
    double top{0.0};               // largest eigenvalue of the block
};

void extract_tridiagonal(const OperatorMatrix& h, Vector& diag, Vector& off) {
    const Index n = h.dimension();
    diag = Vector::Zero(n);
    off = Vector::Zero(std::max<Index>(n - 1, 0));
    for (Index col = 0; col < h.matrix.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(h.matrix, col); it; ++it) {
            if (it.row() == it.col()) diag[it.row()] = it.value();
            else if (it.row() + 1 == it.col()) off[it.row()] = it.value();
            else if (it.col() + 1 != it.row()) throw SolverError("block is not tridiagonal");
        }
    }
}

}  // namespace

std::vector<ThermalResult> thermal_observables(const ModelSpec& spec, Index n_max,
                                               const std::vector<double>& temperatures,
                                               const SolveOptions& opts) {
    spec.validate();
    if (spec.epsilon != 0.0) throw std::invalid_argument("thermal_observables needs epsilon = 0");
    if (temperatures.empty()) return {};
    double t_max = 0.0;
    for (double t : temperatures) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("temperatures must be finite and >= 0");
        t_max = std::max(t_max, t);
    }
    // States whose Boltzmann factor (relative to the ground state) is below
    // this are skipped; Z >= 1, so the neglected weight is tiny.
    constexpr double kSkip = 1e-13;
    const double window = t_max > 0.0 ? -std::log(kSkip) * t_max : 1e-12;

    const ParityBlock even = build_parity_block(spec, n_max, +1);
    const ParityBlock odd = build_parity_block(spec, n_max, -1);
    BlockEigen blocks[2];
    blocks[0].block = &even;
    blocks[1].block = &odd;
    for (BlockEigen& b : blocks) {
        const OperatorMatrix& h = b.block->hamiltonian;
        b.scalar = spec.n_qubits == 1;
        if (b.scalar) {
            extract_tridiagonal(h, b.diag, b.off);
            b.values = tridiagonal_eigenvalues(b.diag, b.off);
            b.top = b.values.back();
        } else {
            b.banded = BlockTridiagonal::from_operator(h);
            b.top = kth_eigenvalue(b.banded, b.banded.dimension() - 1);
        }
    }
    if (!blocks[0].scalar) {
        double e0 = std::numeric_limits<double>::infinity();
        for (BlockEigen& b : blocks) e0 = std::min(e0, kth_eigenvalue(b.banded, 0));
        for (BlockEigen& b : blocks) {
            BandedOptions bo;
            bo.k = int(std::max<Index>(std::min<Index>(b.banded.count_below(e0 + window), b.banded.dimension()),
                                       std::min<Index>(opts.levels, b.banded.dimension())));
            bo.vectors = 0;
            b.values = banded_lowest(b.banded, bo).eigenvalues;
        }
    }

    std::vector<double> merged = blocks[0].values;
    merged.insert(merged.end(), blocks[1].values.begin(), blocks[1].values.end());
    std::sort(merged.begin(), merged.end());
    const double e0 = merged.front();
    if (merged.size() > std::size_t(opts.levels)) merged.resize(std::size_t(opts.levels));

    const SignOperator sign(n_max);
    const Index fock_dim = n_max + 1;
    std::vector<StateMoments> acc(temperatures.size(), zero_moments(spec.spin_dim()));
    std::vector<double> z(temperatures.size(), 0.0);
    std::vector<Index> used(temperatures.size(), 0);
    bool vectors_ok = true;

    for (int bi = 0; bi < 2; ++bi) {
        BlockEigen& b = blocks[bi];
        const int parity = bi == 0 ? +1 : -1;
        const double scale = b.scalar ? std::max(b.diag.cwiseAbs().maxCoeff(), b.off.cwiseAbs().maxCoeff())
                                      : b.banded.norm_inf();
        for (std::size_t i = 0; i < b.values.size(); ++i) {
            const double de = b.values[i] - e0;
            if (de > window) break;
            Vector v;
            double residual = 0.0;
            if (b.scalar) {
                v = tridiagonal_eigenvector(b.diag, b.off, b.values[i]);
                Vector hv = b.diag.cwiseProduct(v);
                hv.head(v.size() - 1) += b.off.cwiseProduct(v.tail(v.size() - 1));
                hv.tail(v.size() - 1) += b.off.cwiseProduct(v.head(v.size() - 1));
                residual = (hv - b.values[i] * v).norm();
            } else {
                v = inverse_iteration(b.banded, b.values[i], Eigen::MatrixXd(), opts.seed + i, &residual);
            }
            if (residual > 1e-10 * std::max(scale, 1.0)) vectors_ok = false;
            const Vector full = b.block->embedding.embed(v);
            const StateMoments m = moments_impl(full, spec, fock_dim, sign, parity);
            for (std::size_t t = 0; t < temperatures.size(); ++t) {
                const double temp = temperatures[t];
                const double w = temp == 0.0 ? (de < 1e-12 ? 1.0 : 0.0) : std::exp(-de / temp);
                if (w < kSkip) continue;
                acc[t].add(m, w);
                z[t] += w;
                ++used[t];
            }
        }
    }

    std::vector<ThermalResult> out(temperatures.size());
    const double top = std::max(blocks[0].top, blocks[1].top) - e0;
    for (std::size_t t = 0; t < temperatures.size(); ++t) {
        ThermalResult& r = out[t];
        r.record = base_record(spec);
        r.record.temperature = temperatures[t];
        fill_gaps(merged, r.record);
        acc[t].scale(1.0 / z[t]);
        finish_record(acc[t], r.record);
        r.tail_weight = temperatures[t] == 0.0 ? 0.0 : std::exp(-top / temperatures[t]) / z[t];
        r.states_used = used[t];
        r.record.n_max_used = n_max;
        r.record.converged = vectors_ok && r.tail_weight <= kThermalTailLimit;
    }
    return out;
}

Index thermal_cutoff(const ModelSpec& spec, double temperature, const TruncationConfig& trunc) {
    // Classical turning point of the highest state in the Boltzmann window,
    // in photon number, for an oscillator displaced by `shift`; the Airy tail
    // past it spans ~n^(1/3) levels.
    const double n_top = temperature > 0.0 ? 30.0 * temperature / spec.omega0 : 0.0;
    const double shift = spec.lambda * std::sqrt(double(spec.n_qubits)) / spec.omega0;
    const double turning = std::pow(std::sqrt(n_top) + shift, 2);
    const double estimate = turning + 12.0 * std::cbrt(turning + 1.0) + 64.0;
    return std::max(initial_cutoff(spec, trunc), Index(std::ceil(estimate)));
}

}  // namespace rabi
