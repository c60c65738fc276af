#include "rabi/eigensolver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

extern "C" void dsterf_(int* n, double* d, double* e, int* info);

namespace rabi {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Smallest pivot magnitude allowed in the inertia recurrence.
constexpr double kPivMin = 1e-290;

using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                            BlockTridiagonal::kMaxBlock, BlockTridiagonal::kMaxBlock>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, BlockTridiagonal::kMaxBlock, 1>;
using RowMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Ritz pairs of the Lanczos tridiagonal T (alpha on the diagonal, beta below).
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tridiagonal_ritz(const std::vector<double>& alpha,
                                                               const std::vector<double>& beta,
                                                               Index m) {
    Vector d(m), e(std::max<Index>(m - 1, 0));
    for (Index i = 0; i < m; ++i) d[i] = alpha[std::size_t(i)];
    for (Index i = 0; i + 1 < m; ++i) e[i] = beta[std::size_t(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw SolverError("tridiagonal Ritz problem failed");
    return es;
}

// Symmetric factorisation of one pivot block. Falls back to an eigen
// decomposition when LDL^T meets a tiny pivot, which keeps the inertia exact.
struct PivotBlock {
    Small inverse;
    Index negatives{0};

    void factor(const Small& d, double floor, bool want_inverse) {
        const Index b = d.rows();
        Eigen::LDLT<Small> ldlt(d);
        bool ok = ldlt.info() == Eigen::Success;
        if (ok) {
            const auto piv = ldlt.vectorD();
            for (Index i = 0; i < b && ok; ++i) ok = std::abs(piv[i]) > floor;
        }
        if (ok) {
            negatives = 0;
            const auto piv = ldlt.vectorD();
            for (Index i = 0; i < b; ++i) negatives += piv[i] < 0.0 ? 1 : 0;
            if (want_inverse) inverse = ldlt.solve(Small::Identity(b, b));
            return;
        }
        Eigen::SelfAdjointEigenSolver<Small> es(d);
        SmallVec lam = es.eigenvalues();
        negatives = 0;
        for (Index i = 0; i < b; ++i) {
            if (std::abs(lam[i]) <= floor) lam[i] = lam[i] < 0.0 ? -floor : floor;
            negatives += lam[i] < 0.0 ? 1 : 0;
        }
        if (want_inverse) {
            inverse = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose();
        }
    }
};

}  // namespace

Vector seeded_vector(Index dim, std::uint64_t seed) {
    // splitmix64: fully specified, so runs are reproducible across platforms.
    std::uint64_t state = seed;
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        v[i] = 2.0 * (double(z >> 11) * 0x1.0p-53) - 1.0;
    }
    const double n = v.norm();
    if (n > 0.0) v /= n;
    return v;
}

SpectrumResult dense_eigh(const OperatorMatrix& H, bool want_vectors, Index max_dimension) {
    const Index dim = H.dimension();
    if (dim > max_dimension) {
        throw SolverError("dense_eigh: dimension " + std::to_string(dim) + " exceeds the cap of " +
                          std::to_string(max_dimension));
    }
    const Eigen::MatrixXd dense = Eigen::MatrixXd(H.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        dense, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolverError("dense_eigh: no convergence");

    SpectrumResult out;
    out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + dim);
    out.n_max_used = H.n_max();
    out.converged = true;
    if (want_vectors) {
        out.eigenvectors = es.eigenvectors();
        const Eigen::MatrixXd hv = H.matrix * out.eigenvectors;
        const double bound = 1e-9 * std::max(H.norm_inf(), 1.0);
        out.residual_norms.resize(std::size_t(dim));
        for (Index i = 0; i < dim; ++i) {
            const double r = (hv.col(i) - es.eigenvalues()[i] * out.eigenvectors.col(i)).norm();
            out.residual_norms[std::size_t(i)] = r;
            if (r > bound) out.converged = false;
        }
    }
    return out;
}

double estimate_norm(const MatVec& apply, Index dim, std::uint64_t seed, int iterations) {
    Vector v = seeded_vector(dim, seed ^ 0xA5A5A5A5ULL);
    Vector w(dim);
    double estimate = 0.0;
    for (int i = 0; i < iterations; ++i) {
        apply(v, w);
        estimate = w.norm();
        if (estimate == 0.0) return 0.0;
        v = w / estimate;
    }
    return estimate;
}

SpectrumResult lanczos_lowest(const MatVec& apply, Index dim, const LanczosOptions& opts) {
    if (opts.k < 1 || opts.k > 20) throw std::invalid_argument("lanczos_lowest: k must be in [1, 20]");
    if (dim < 1) throw std::invalid_argument("lanczos_lowest: empty operator");
    const Index k = std::min<Index>(opts.k, dim);
    const Index cap = opts.max_iterations > 0 ? std::min(opts.max_iterations, dim)
                                              : std::min<Index>(dim, 3000);

    double norm = estimate_norm(apply, dim, opts.seed);
    Eigen::MatrixXd basis(dim, std::min<Index>(cap, 64));
    std::vector<double> alpha, beta;
    Vector w(dim);
    basis.col(0) = seeded_vector(dim, opts.seed);
    int restarts = 0;

    auto orthogonalise = [&](Vector& x, Index used) {
        // Classical Gram-Schmidt, applied twice.
        for (int pass = 0; pass < 2; ++pass) {
            const Vector h = basis.leftCols(used).transpose() * x;
            x.noalias() -= basis.leftCols(used) * h;
        }
    };

    Index m = 0;
    Index next_check = k;
    bool done = false;
    while (!done) {
        apply(basis.col(m), w);
        const double a = basis.col(m).dot(w);
        alpha.push_back(a);
        orthogonalise(w, m + 1);
        double b = w.norm();
        ++m;

        const bool full = m >= dim;
        if (m >= next_check || full || m >= cap || b <= 1e-13 * std::max(norm, 1e-300)) {
            auto ritz = tridiagonal_ritz(alpha, beta, m);
            const auto& theta = ritz.eigenvalues();
            norm = std::max({norm, std::abs(theta[0]), std::abs(theta[m - 1])});
            const double tol = opts.tol * std::max(norm, 1e-300);
            bool all = m >= k;
            for (Index i = 0; i < std::min(k, m) && all; ++i) {
                all = std::abs(b * ritz.eigenvectors()(m - 1, i)) <= tol;
            }
            if (all || full) {
                SpectrumResult out;
                out.converged = true;
                const Index keep = std::min(k, m);
                out.eigenvalues.assign(theta.data(), theta.data() + keep);
                if (opts.want_vectors) out.eigenvectors.resize(dim, keep);
                for (Index i = 0; i < keep; ++i) {
                    Vector y = basis.leftCols(m) * ritz.eigenvectors().col(i).head(m);
                    y.normalize();
                    Vector hy(dim);
                    apply(y, hy);
                    const double r = (hy - theta[i] * y).norm();
                    out.residual_norms.push_back(r);
                    if (r > tol) out.converged = false;
                    if (opts.want_vectors) out.eigenvectors.col(i) = y;
                }
                if (!out.converged && !full && m < cap) {
                    next_check = m + 1;
                } else {
                    if (!out.converged) {
                        throw SolverError("lanczos_lowest: residuals above tolerance after " +
                                          std::to_string(m) + " iterations");
                    }
                    return out;
                }
            } else {
                next_check = m + std::max<Index>(5, m / 8);
            }
            if (m >= cap) {
                throw SolverError("lanczos_lowest: no convergence within " +
                                  std::to_string(cap) + " iterations");
            }
        }

        if (m >= basis.cols()) basis.conservativeResize(Eigen::NoChange, std::min(cap, 2 * basis.cols()));
        if (b <= 1e-13 * std::max(norm, 1e-300)) {
            // Invariant subspace: continue from a fresh vector orthogonal to it.
            ++restarts;
            Vector fresh = seeded_vector(dim, opts.seed + 0x9E37ULL * std::uint64_t(restarts));
            orthogonalise(fresh, m);
            const double fn = fresh.norm();
            if (fn <= 1e-8) throw SolverError("lanczos_lowest: breakdown restart failed");
            beta.push_back(0.0);
            basis.col(m) = fresh / fn;
        } else {
            beta.push_back(b);
            basis.col(m) = w / b;
        }
        done = false;
    }
    return {};
}

SpectrumResult lanczos_lowest(const OperatorMatrix& H, const LanczosOptions& opts) {
    const SparseMatrix& a = H.matrix;
    MatVec apply = [&a](const Vector& in, Vector& out) { out.noalias() = a * in; };
    SpectrumResult out = lanczos_lowest(apply, H.dimension(), opts);
    out.n_max_used = H.n_max();
    return out;
}

// ---------------------------------------------------------------------------
// Block-tridiagonal structure

BlockTridiagonal BlockTridiagonal::from_operator(const OperatorMatrix& H) {
    BlockTridiagonal bt;
    const Index dim = H.dimension();
    if (H.fock_major()) {
        bt.offsets_ = H.level_offsets;
        if (bt.offsets_.back() != dim) throw SolverError("level offsets do not cover the matrix");
    } else if (H.spin_dim > 0 && H.spin_dim * H.fock_dim == dim) {
        const Index spins = H.spin_dim;
        const Index fock = H.fock_dim;
        bt.offsets_.resize(std::size_t(fock + 1));
        for (Index n = 0; n <= fock; ++n) bt.offsets_[std::size_t(n)] = n * spins;
        bt.permutation_.resize(std::size_t(dim));
        bt.inverse_.resize(std::size_t(dim));
        for (Index n = 0; n < fock; ++n) {
            for (Index s = 0; s < spins; ++s) {
                const Index internal = n * spins + s;
                const Index original = s * fock + n;
                bt.permutation_[std::size_t(internal)] = original;
                bt.inverse_[std::size_t(original)] = internal;
            }
        }
    } else {
        bt.offsets_.resize(std::size_t(dim + 1));
        for (Index i = 0; i <= dim; ++i) bt.offsets_[std::size_t(i)] = i;
    }

    const Index levels = bt.levels();
    std::vector<Index> level_of(static_cast<std::size_t>(dim));
    bt.max_block_ = 0;
    bt.diag_pos_.resize(std::size_t(levels + 1));
    bt.upper_pos_.resize(std::size_t(levels + 1));
    bt.diag_pos_[0] = 0;
    bt.upper_pos_[0] = 0;
    for (Index k = 0; k < levels; ++k) {
        const Index b = bt.block_size(k);
        if (b < 1 || b > kMaxBlock) throw SolverError("block size out of range");
        bt.max_block_ = std::max(bt.max_block_, b);
        for (Index i = bt.offsets_[std::size_t(k)]; i < bt.offsets_[std::size_t(k + 1)]; ++i) {
            level_of[std::size_t(i)] = k;
        }
        const Index next = k + 1 < levels ? bt.block_size(k + 1) : 0;
        bt.diag_pos_[std::size_t(k + 1)] = bt.diag_pos_[std::size_t(k)] + std::size_t(b * b);
        bt.upper_pos_[std::size_t(k + 1)] = bt.upper_pos_[std::size_t(k)] + std::size_t(b * next);
    }
    bt.diag_.assign(bt.diag_pos_.back(), 0.0);
    bt.upper_.assign(bt.upper_pos_.back(), 0.0);

    Vector row_abs = Vector::Zero(dim);
    Vector row_diag = Vector::Zero(dim);
    for (Index col = 0; col < H.matrix.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(H.matrix, col); it; ++it) {
            const Index r = bt.to_internal(it.row());
            const Index c = bt.to_internal(it.col());
            const Index kr = level_of[std::size_t(r)];
            const Index kc = level_of[std::size_t(c)];
            const Index lr = r - bt.offsets_[std::size_t(kr)];
            const Index lc = c - bt.offsets_[std::size_t(kc)];
            if (r == c) {
                row_diag[r] = it.value();
            } else {
                row_abs[r] += std::abs(it.value());
            }
            if (kr == kc) {
                bt.diag_[bt.diag_pos_[std::size_t(kr)] + std::size_t(lr * bt.block_size(kr) + lc)] = it.value();
            } else if (kc == kr + 1) {
                bt.upper_[bt.upper_pos_[std::size_t(kr)] + std::size_t(lr * bt.block_size(kc) + lc)] = it.value();
            } else if (kc + 1 != kr) {
                throw SolverError("operator is not block tridiagonal in Fock-major order");
            }
        }
    }
    bt.norm_ = 0.0;
    bt.lower_ = std::numeric_limits<double>::infinity();
    bt.upper_bound_ = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < dim; ++i) {
        bt.norm_ = std::max(bt.norm_, std::abs(row_diag[i]) + row_abs[i]);
        bt.lower_ = std::min(bt.lower_, row_diag[i] - row_abs[i]);
        bt.upper_bound_ = std::max(bt.upper_bound_, row_diag[i] + row_abs[i]);
    }
    return bt;
}

Index BlockTridiagonal::count_below(double sigma) const {
    const Index levels = this->levels();
    Index negatives = 0;
    if (scalar()) {
        double d = diag_[0] - sigma;
        if (std::abs(d) < kPivMin) d = -kPivMin;
        negatives += d < 0.0 ? 1 : 0;
        for (Index k = 1; k < levels; ++k) {
            const double e = upper_[std::size_t(k - 1)];
            d = (diag_[std::size_t(k)] - sigma) - e * (e / d);
            if (std::abs(d) < kPivMin) d = -kPivMin;
            negatives += d < 0.0 ? 1 : 0;
        }
        return negatives;
    }
    // Unpivoted LDL^T inside each block, with the Schur correction carried as
    // S = Y^T D^-1 Y, Y = L^-1 B. Blocks with a small pivot go through the
    // pivoted factorisation instead.
    constexpr Index m = kMaxBlock;
    double s[m * m], d[m * m], y[m * m], piv[m];
    const double guard = 1e-6 * std::max(norm_, 1e-300);
    PivotBlock pivot;
    for (Index k = 0; k < levels; ++k) {
        const Index b = block_size(k);
        const double* a = diag_.data() + diag_pos_[std::size_t(k)];
        for (Index i = 0; i < b; ++i) {
            for (Index j = 0; j <= i; ++j) d[i * m + j] = a[i * b + j] - (k > 0 ? s[i * m + j] : 0.0);
            d[i * m + i] -= sigma;
        }
        bool ok = true;
        for (Index j = 0; j < b && ok; ++j) {
            double w[m];
            double dj = d[j * m + j];
            for (Index p = 0; p < j; ++p) {
                w[p] = d[j * m + p] * piv[p];
                dj -= d[j * m + p] * w[p];
            }
            if (std::abs(dj) < guard) {
                ok = false;
                break;
            }
            piv[j] = dj;
            for (Index i = j + 1; i < b; ++i) {
                double t = d[i * m + j];
                for (Index p = 0; p < j; ++p) t -= d[i * m + p] * w[p];
                d[i * m + j] = t / dj;
            }
        }
        const bool last = k + 1 == levels;
        const Index bn = last ? 0 : block_size(k + 1);
        const double* up = last ? nullptr : upper_.data() + upper_pos_[std::size_t(k)];
        if (ok) {
            for (Index j = 0; j < b; ++j) negatives += piv[j] < 0.0 ? 1 : 0;
            if (last) break;
            for (Index c = 0; c < bn; ++c) {
                for (Index i = 0; i < b; ++i) {
                    double t = up[i * bn + c];
                    for (Index p = 0; p < i; ++p) t -= d[i * m + p] * y[p * m + c];
                    y[i * m + c] = t;
                }
            }
            for (Index c1 = 0; c1 < bn; ++c1) {
                for (Index c2 = 0; c2 <= c1; ++c2) {
                    double t = 0.0;
                    for (Index i = 0; i < b; ++i) t += y[i * m + c1] * y[i * m + c2] / piv[i];
                    s[c1 * m + c2] = t;
                }
            }
            continue;
        }
        Small full(b, b);
        for (Index i = 0; i < b; ++i) {
            for (Index j = 0; j < b; ++j) {
                full(i, j) = a[i * b + j] - (k > 0 ? s[std::max(i, j) * m + std::min(i, j)] : 0.0);
            }
            full(i, i) -= sigma;
        }
        pivot.factor(full, kPivMin, !last);
        negatives += pivot.negatives;
        if (last) break;
        const RowMap upper(up, b, bn);
        const Small corr = upper.transpose() * pivot.inverse * upper;
        for (Index c1 = 0; c1 < bn; ++c1) {
            for (Index c2 = 0; c2 <= c1; ++c2) s[c1 * m + c2] = corr(c1, c2);
        }
    }
    return negatives;
}

void BlockTridiagonal::apply(const Vector& x, Vector& y) const {
    const Index dim = dimension();
    Vector in(dim), out = Vector::Zero(dim);
    for (Index i = 0; i < dim; ++i) in[i] = x[permutation_.empty() ? i : permutation_[std::size_t(i)]];
    const Index levels = this->levels();
    for (Index k = 0; k < levels; ++k) {
        const Index o = offsets_[std::size_t(k)];
        const Index b = block_size(k);
        const RowMap a(diag_.data() + diag_pos_[std::size_t(k)], b, b);
        out.segment(o, b).noalias() += a * in.segment(o, b);
        if (k + 1 < levels) {
            const Index on = offsets_[std::size_t(k + 1)];
            const Index bn = block_size(k + 1);
            const RowMap u(upper_.data() + upper_pos_[std::size_t(k)], b, bn);
            out.segment(o, b).noalias() += u * in.segment(on, bn);
            out.segment(on, bn).noalias() += u.transpose() * in.segment(o, b);
        }
    }
    y.resize(dim);
    for (Index i = 0; i < dim; ++i) y[permutation_.empty() ? i : permutation_[std::size_t(i)]] = out[i];
}

Vector BlockTridiagonal::solve_shifted(double sigma, const Vector& rhs) const {
    const Index dim = dimension();
    const Index levels = this->levels();
    // Pivots below this magnitude are clamped; the cap on amplification is
    // what inverse iteration needs near an eigenvalue.
    const double floor = kEps * std::max(norm_, 1e-300);
    Vector z(dim);
    for (Index i = 0; i < dim; ++i) z[i] = rhs[permutation_.empty() ? i : permutation_[std::size_t(i)]];

    if (scalar()) {
        std::vector<double> piv(static_cast<std::size_t>(levels));
        double d = diag_[0] - sigma;
        if (std::abs(d) < floor) d = d < 0.0 ? -floor : floor;
        piv[0] = d;
        for (Index k = 1; k < levels; ++k) {
            const double e = upper_[std::size_t(k - 1)];
            const double l = e / piv[std::size_t(k - 1)];
            d = (diag_[std::size_t(k)] - sigma) - l * e;
            if (std::abs(d) < floor) d = d < 0.0 ? -floor : floor;
            piv[std::size_t(k)] = d;
            z[k] -= l * z[k - 1];
        }
        z[levels - 1] /= piv[std::size_t(levels - 1)];
        for (Index k = levels - 2; k >= 0; --k) {
            z[k] = z[k] / piv[std::size_t(k)] - (upper_[std::size_t(k)] / piv[std::size_t(k)]) * z[k + 1];
        }
    } else {
        std::vector<Small> inverses(static_cast<std::size_t>(levels));
        std::vector<Small> xs(static_cast<std::size_t>(levels));
        Small d;
        PivotBlock pivot;
        for (Index k = 0; k < levels; ++k) {
            const Index b = block_size(k);
            Small a = RowMap(diag_.data() + diag_pos_[std::size_t(k)], b, b);
            a.diagonal().array() -= sigma;
            if (k == 0) {
                d = a;
            } else {
                const Index bp = block_size(k - 1);
                const RowMap upper(upper_.data() + upper_pos_[std::size_t(k - 1)], bp, b);
                d = a - upper.transpose() * xs[std::size_t(k - 1)];
                z.segment(offsets_[std::size_t(k)], b) -=
                    xs[std::size_t(k - 1)].transpose() * z.segment(offsets_[std::size_t(k - 1)], bp);
            }
            pivot.factor(d, floor, true);
            inverses[std::size_t(k)] = pivot.inverse;
            if (k + 1 < levels) {
                const RowMap upper(upper_.data() + upper_pos_[std::size_t(k)], b, block_size(k + 1));
                xs[std::size_t(k)] = pivot.inverse * upper;
            }
        }
        for (Index k = levels - 1; k >= 0; --k) {
            const Index o = offsets_[std::size_t(k)];
            const Index b = block_size(k);
            SmallVec w = inverses[std::size_t(k)] * z.segment(o, b);
            if (k + 1 < levels) {
                w -= xs[std::size_t(k)] * z.segment(offsets_[std::size_t(k + 1)], block_size(k + 1));
            }
            z.segment(o, b) = w;
        }
    }

    Vector x(dim);
    for (Index i = 0; i < dim; ++i) x[permutation_.empty() ? i : permutation_[std::size_t(i)]] = z[i];
    return x;
}

Vector inverse_iteration(const BlockTridiagonal& H, double eigenvalue, const Eigen::MatrixXd& deflate,
                         std::uint64_t seed, double* residual) {
    const Index dim = H.dimension();
    const double scale = std::max(H.norm_inf(), 1e-300);
    auto project_out = [&](Vector& v) {
        for (int pass = 0; pass < 2 && deflate.cols() > 0; ++pass) {
            v -= deflate * (deflate.transpose() * v);
        }
    };
    Vector x = seeded_vector(dim, seed);
    project_out(x);
    x.normalize();
    Vector hx(dim);
    double best = std::numeric_limits<double>::infinity();
    Vector best_x = x;
    double shift = eigenvalue;
    for (int it = 0; it < 8; ++it) {
        Vector y = H.solve_shifted(shift, x);
        if (!y.allFinite() || y.norm() == 0.0) {
            shift = eigenvalue + double(it + 1) * 16.0 * kEps * scale;
            continue;
        }
        project_out(y);
        x = y / y.norm();
        H.apply(x, hx);
        const double theta = x.dot(hx);
        const double r = (hx - theta * x).norm();
        if (r < best) {
            best = r;
            best_x = x;
        }
        if (it >= 1 && r <= 1e-13 * scale) break;
    }
    if (residual) *residual = best;
    return best_x;
}

SpectrumResult banded_lowest(const BlockTridiagonal& H, const BandedOptions& opts) {
    const Index dim = H.dimension();
    const Index k = std::min<Index>(std::max(opts.k, 1), dim);
    const Index nvec = std::clamp<Index>(opts.vectors, 0, k);
    const double scale = std::max(H.norm_inf(), 1e-300);

    // Probed shifts and their counts, used to bracket later eigenvalues.
    std::map<double, Index> probes;
    const double pad = 2.0 * kEps * scale + 1e-300;
    probes[H.gershgorin_lower() - pad] = 0;
    probes[H.gershgorin_upper() + pad] = dim;

    SpectrumResult out;
    out.eigenvalues.reserve(std::size_t(k));
    for (Index j = 0; j < k; ++j) {
        double lo = probes.begin()->first;
        double hi = probes.rbegin()->first;
        for (const auto& [sigma, count] : probes) {
            if (count <= j) lo = std::max(lo, sigma);
            if (count >= j + 1) hi = std::min(hi, sigma);
        }
        while (true) {
            const double width = hi - lo;
            const double tol = 2.0 * kEps * std::max(std::abs(lo), std::abs(hi)) + 1e-300;
            const double mid = lo + 0.5 * width;
            if (width <= tol || mid <= lo || mid >= hi) break;
            const Index c = H.count_below(mid);
            probes[mid] = c;
            if (c <= j) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.eigenvalues.push_back(lo + 0.5 * (hi - lo));
    }

    out.converged = true;
    if (nvec > 0) {
        out.eigenvectors.resize(dim, nvec);
        const double tol = opts.tol * scale;
        for (Index j = 0; j < nvec; ++j) {
            // Orthogonalise against earlier vectors whose eigenvalues are too
            // close for inverse iteration to separate.
            std::vector<Index> close;
            for (Index i = 0; i < j; ++i) {
                if (std::abs(out.eigenvalues[std::size_t(i)] - out.eigenvalues[std::size_t(j)]) <
                    1e-9 * scale) {
                    close.push_back(i);
                }
            }
            Eigen::MatrixXd deflate(dim, Index(close.size()));
            for (std::size_t c = 0; c < close.size(); ++c) deflate.col(Index(c)) = out.eigenvectors.col(close[c]);
            double r = 0.0;
            Vector v = inverse_iteration(H, out.eigenvalues[std::size_t(j)], deflate,
                                         opts.seed + std::uint64_t(j), &r);
            Vector hv;
            H.apply(v, hv);
            const double theta = v.dot(hv);
            // Rayleigh quotient is the sharper estimate; it never leaves the
            // bisection bracket by more than rounding.
            if (std::abs(theta - out.eigenvalues[std::size_t(j)]) <= 1e-12 * scale) {
                out.eigenvalues[std::size_t(j)] = theta;
            }
            out.eigenvectors.col(j) = v;
            out.residual_norms.push_back(r);
            if (r > tol) out.converged = false;
        }
    }
    // Rayleigh refinements can reorder values that agree to rounding.
    std::vector<Index> order(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) order[std::size_t(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return out.eigenvalues[std::size_t(a)] < out.eigenvalues[std::size_t(b)];
    });
    bool sorted = true;
    for (Index i = 0; i < k; ++i) sorted = sorted && order[std::size_t(i)] == i;
    if (!sorted) {
        std::vector<double> values(static_cast<std::size_t>(k));
        for (Index i = 0; i < k; ++i) values[std::size_t(i)] = out.eigenvalues[std::size_t(order[std::size_t(i)])];
        out.eigenvalues = values;
        if (nvec > 0) {
            // Only reorder vectors among the leading block that has them.
            Eigen::MatrixXd vecs = out.eigenvectors;
            std::vector<double> res = out.residual_norms;
            for (Index i = 0; i < nvec; ++i) {
                const Index src = order[std::size_t(i)];
                if (src < nvec) {
                    out.eigenvectors.col(i) = vecs.col(src);
                    out.residual_norms[std::size_t(i)] = res[std::size_t(src)];
                }
            }
        }
    }
    return out;
}

SpectrumResult banded_lowest(const OperatorMatrix& H, const BandedOptions& opts) {
    const BlockTridiagonal bt = BlockTridiagonal::from_operator(H);
    SpectrumResult out = banded_lowest(bt, opts);
    out.n_max_used = H.n_max();
    return out;
}

std::vector<double> tridiagonal_eigenvalues(const Vector& diag, const Vector& offdiag) {
    int n = int(diag.size());
    if (offdiag.size() + 1 != diag.size()) throw std::invalid_argument("tridiagonal_eigenvalues: size mismatch");
    std::vector<double> d(diag.data(), diag.data() + n);
    std::vector<double> e(std::size_t(std::max(n, 1)), 0.0);
    std::copy(offdiag.data(), offdiag.data() + offdiag.size(), e.begin());
    int info = 0;
    dsterf_(&n, d.data(), e.data(), &info);
    if (info != 0) throw SolverError("dsterf failed to converge (info " + std::to_string(info) + ")");
    return d;
}

Vector tridiagonal_eigenvector(const Vector& diag, const Vector& offdiag, double eigenvalue) {
    const Index n = diag.size();
    if (offdiag.size() + 1 != n) throw std::invalid_argument("tridiagonal_eigenvector: size mismatch");
    Vector z = Vector::Zero(n);
    if (n == 1) {
        z[0] = 1.0;
        return z;
    }
    double scale = 0.0;
    for (Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(diag[i]));
    for (Index i = 0; i + 1 < n; ++i) scale = std::max(scale, std::abs(offdiag[i]));
    const double pivmin = std::max(kEps * kEps * scale * scale, std::numeric_limits<double>::min());
    auto guard = [pivmin](double d) { return std::abs(d) < pivmin ? (d < 0.0 ? -pivmin : pivmin) : d; };

    // Stationary (top-down) and progressive (bottom-up) pivots of T - lambda.
    Vector dp(n), dm(n);
    dp[0] = guard(diag[0] - eigenvalue);
    for (Index i = 1; i < n; ++i) {
        dp[i] = guard((diag[i] - eigenvalue) - offdiag[i - 1] * (offdiag[i - 1] / dp[i - 1]));
    }
    dm[n - 1] = guard(diag[n - 1] - eigenvalue);
    for (Index i = n - 2; i >= 0; --i) {
        dm[i] = guard((diag[i] - eigenvalue) - offdiag[i] * (offdiag[i] / dm[i + 1]));
    }
    // Twist index: smallest |gamma_r| = |D+_r + D-_r - (a_r - lambda)|.
    Index r = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
        const double gamma = std::abs(dp[i] + dm[i] - (diag[i] - eigenvalue));
        if (gamma < best) {
            best = gamma;
            r = i;
        }
    }
    constexpr double kFlush = 1e-200;
    z[r] = 1.0;
    for (Index i = r - 1; i >= 0; --i) {
        z[i] = -(offdiag[i] / dp[i]) * z[i + 1];
        if (std::abs(z[i]) < kFlush) {
            z[i] = 0.0;
            break;
        }
    }
    for (Index i = r; i + 1 < n; ++i) {
        z[i + 1] = -(offdiag[i] / dm[i + 1]) * z[i];
        if (std::abs(z[i + 1]) < kFlush) {
            z[i + 1] = 0.0;
            break;
        }
    }
    return z / z.norm();
}

SolverKind parse_solver_kind(const std::string& name) {
    if (name == "auto" || name == "automatic") return SolverKind::automatic;
    if (name == "dense") return SolverKind::dense;
    if (name == "lanczos") return SolverKind::lanczos;
    if (name == "banded") return SolverKind::banded;
    throw std::invalid_argument("unknown solver: " + name);
}

const char* solver_name(SolverKind kind) {
    switch (kind) {
        case SolverKind::automatic: return "auto";
        case SolverKind::dense: return "dense";
        case SolverKind::lanczos: return "lanczos";
        case SolverKind::banded: return "banded";
    }
    return "?";
}

SpectrumResult lowest_eigenpairs(const OperatorMatrix& H, int k, int vectors,
                                 const SolveOptions& opts) {
    const Index dim = H.dimension();
    k = int(std::min<Index>(k, dim));
    vectors = std::clamp(vectors, 0, k);
    SolverKind kind = opts.solver;
    if (kind == SolverKind::automatic) {
        kind = dim <= opts.dense_auto_limit ? SolverKind::dense : SolverKind::banded;
    }
    SpectrumResult out;
    switch (kind) {
        case SolverKind::dense: {
            out = dense_eigh(H, vectors > 0, opts.dense_cap);
            out.eigenvalues.resize(std::size_t(k));
            if (vectors > 0) {
                out.eigenvectors.conservativeResize(Eigen::NoChange, vectors);
                out.residual_norms.resize(std::size_t(vectors));
            }
            break;
        }
        case SolverKind::lanczos: {
            LanczosOptions lo;
            lo.k = k;
            lo.tol = opts.lanczos_tol;
            lo.seed = opts.seed;
            lo.want_vectors = vectors > 0;
            out = lanczos_lowest(H, lo);
            if (vectors > 0) {
                out.eigenvectors.conservativeResize(Eigen::NoChange, vectors);
            }
            break;
        }
        case SolverKind::banded:
        case SolverKind::automatic: {
            BandedOptions bo;
            bo.k = k;
            bo.vectors = vectors;
            bo.tol = opts.banded_tol;
            bo.seed = opts.seed;
            out = banded_lowest(H, bo);
            break;
        }
    }
    out.n_max_used = H.n_max();
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive truncation

double cutoff_field_estimate(const ModelSpec& spec) {
    const double lc = 0.5 * std::sqrt(spec.omega0 * spec.delta);
    if (!(spec.lambda > lc) || spec.lambda <= 0.0) return 0.0;
    const double r = spec.lambda / lc;
    const double single = spec.delta / (4.0 * spec.lambda) * std::sqrt(r * r * r * r - 1.0);
    return single * std::sqrt(double(spec.n_qubits));
}

Index initial_cutoff(const ModelSpec& spec, const TruncationConfig& trunc) {
    const double a = cutoff_field_estimate(spec);
    const double estimate = std::ceil(4.0 * (a * a + 5.0 * a + 10.0));
    return std::max<Index>({trunc.n_max, Index(32), Index(estimate)});
}

PointSolution converge_truncation(const ModelSpec& spec, const TruncationConfig& trunc,
                                  const PointEvaluator& evaluate, ConvergenceTrace* trace) {
    spec.validate();
    trunc.validate();
    Index n_max = initial_cutoff(spec, trunc);
    ConvergenceTrace local;
    ConvergenceTrace& tr = trace ? *trace : local;

    auto finish = [&](PointSolution sol, Index used, bool converged) {
        sol.record.n_max_used = used;
        sol.record.converged = converged && sol.spectrum.converged;
        sol.spectrum.n_max_used = used;
        sol.spectrum.converged = sol.record.converged;
        return sol;
    };

    auto too_large = [&](Index n) { return spec.spin_dim() * (n + 1) > trunc.max_dimension; };
    if (too_large(n_max)) throw SolverError("first cutoff already exceeds max_dimension");

    if (spec.lambda == 0.0) {
        // Decoupled: the truncated spectrum and ground state are exact.
        PointSolution sol = evaluate(n_max);
        tr.cutoffs.push_back(n_max);
        tr.ground_energies.push_back(sol.record.e0);
        return finish(std::move(sol), n_max, true);
    }

    PointSolution previous;
    for (int round = 0; round < trunc.max_rounds; ++round) {
        PointSolution sol = evaluate(n_max);
        tr.cutoffs.push_back(n_max);
        tr.ground_energies.push_back(sol.record.e0);
        if (round > 0) {
            const ObservableRecord& a = previous.record;
            const ObservableRecord& b = sol.record;
            if (b.e0 > a.e0 + 64.0 * kEps * std::max(1.0, std::abs(a.e0))) tr.energy_monotone = false;
            auto close = [&](double x, double y) {
                return (std::isnan(x) && std::isnan(y)) || std::abs(x - y) <= trunc.tol_observable;
            };
            const bool energy_ok = std::abs(b.e0 - a.e0) <= trunc.tol_energy * std::abs(b.e0);
            if (energy_ok && close(a.entropy_S, b.entropy_S) && close(a.corr_C, b.corr_C) &&
                close(a.squeeze_sp1, b.squeeze_sp1)) {
                return finish(std::move(sol), n_max, true);
            }
        }
        previous = std::move(sol);
        const Index next = Index(std::ceil(double(n_max) * trunc.growth_factor));
        if (round + 1 == trunc.max_rounds || too_large(next)) break;
        n_max = next;
    }
    return finish(std::move(previous), n_max, false);
}

}  // namespace rabi
