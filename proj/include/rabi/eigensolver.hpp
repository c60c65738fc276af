// eigensolver.hpp - dense, Lanczos and block-tridiagonal eigensolvers plus the
// adaptive Fock-truncation loop
#pragma once

#include "rabi/model.hpp"
#include "rabi/records.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rabi {

struct SpectrumResult {
    std::vector<double> eigenvalues;  // ascending
    Eigen::MatrixXd eigenvectors;     // columns aligned with eigenvalues, or empty
    Index n_max_used{0};
    bool converged{false};
    std::vector<double> residual_norms;  // ||H v - E v|| per returned pair

    bool has_vectors() const { return eigenvectors.cols() > 0; }
    std::size_t size() const { return eigenvalues.size(); }
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr Index kDefaultDenseCap = 6000;
inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

// All eigenpairs through a dense symmetric decomposition. Throws SolverError
// when the dimension exceeds max_dimension.
SpectrumResult dense_eigh(const OperatorMatrix& H, bool want_vectors,
                          Index max_dimension = kDefaultDenseCap);

using MatVec = std::function<void(const Vector& in, Vector& out)>;

struct LanczosOptions {
    int k{1};
    double tol{1e-10};  // residual tolerance relative to ||H||
    std::uint64_t seed{kDefaultSeed};
    Index max_iterations{0};  // 0 picks min(dim, 3000)
    bool want_vectors{true};
};

// Lowest k eigenpairs by Lanczos with full reorthogonalisation. The start
// vector is a deterministic function of the seed. Throws SolverError when the
// iteration cap is reached before every requested pair meets the tolerance.
SpectrumResult lanczos_lowest(const MatVec& apply, Index dim, const LanczosOptions& opts);
SpectrumResult lanczos_lowest(const OperatorMatrix& H, const LanczosOptions& opts);

// Power-iteration estimate of the spectral norm.
double estimate_norm(const MatVec& apply, Index dim, std::uint64_t seed, int iterations = 30);

// Deterministic start vector in [-1, 1)^dim, normalised.
Vector seeded_vector(Index dim, std::uint64_t seed);

// Symmetric block-tridiagonal matrix. Built from a Fock-major parity block
// (partition given by level_offsets) or from a spin-major full-space operator,
// which is permuted to Fock-major order internally.
class BlockTridiagonal {
public:
    static constexpr Index kMaxBlock = 32;

    static BlockTridiagonal from_operator(const OperatorMatrix& H);

    Index dimension() const { return offsets_.back(); }
    Index levels() const { return Index(offsets_.size()) - 1; }
    double norm_inf() const { return norm_; }
    double gershgorin_lower() const { return lower_; }
    double gershgorin_upper() const { return upper_bound_; }

    // Number of eigenvalues strictly below sigma (Sylvester inertia of the
    // block LDL^T factorisation of H - sigma).
    Index count_below(double sigma) const;

    // y = H x, in the original (caller) ordering.
    void apply(const Vector& x, Vector& y) const;

    // Solves (H - sigma) x = rhs, both in the original ordering.
    Vector solve_shifted(double sigma, const Vector& rhs) const;

private:
    Index block_size(Index k) const { return offsets_[std::size_t(k + 1)] - offsets_[std::size_t(k)]; }
    bool scalar() const { return max_block_ == 1; }
    Index to_internal(Index original) const {
        return permutation_.empty() ? original : inverse_[std::size_t(original)];
    }

    std::vector<Index> offsets_;
    std::vector<double> diag_;        // packed row-major diagonal blocks
    std::vector<std::size_t> diag_pos_;
    std::vector<double> upper_;       // packed row-major B_k = H[k, k+1]
    std::vector<std::size_t> upper_pos_;
    std::vector<Index> permutation_;  // internal index -> original index
    std::vector<Index> inverse_;
    Index max_block_{1};
    double norm_{0.0};
    double lower_{0.0};
    double upper_bound_{0.0};
};

struct BandedOptions {
    int k{1};
    int vectors{1};  // eigenvectors for the lowest `vectors` pairs
    double tol{1e-12};  // residual tolerance relative to ||H||
    std::uint64_t seed{kDefaultSeed};
};

// Lowest k eigenpairs of a block-tridiagonal operator: bisection on inertia
// counts for the eigenvalues, inverse iteration for the vectors.
SpectrumResult banded_lowest(const OperatorMatrix& H, const BandedOptions& opts);
SpectrumResult banded_lowest(const BlockTridiagonal& H, const BandedOptions& opts);

// Every eigenvalue of a scalar tridiagonal matrix, ascending (LAPACK dsterf).
std::vector<double> tridiagonal_eigenvalues(const Vector& diag, const Vector& offdiag);

// Eigenvector of a scalar tridiagonal matrix for an accurately known,
// isolated eigenvalue, from one twisted factorisation (no iteration).
// Entries below ~1e-200 of the peak are flushed to zero, so the returned
// support ends where the state has decayed. Normalised.
Vector tridiagonal_eigenvector(const Vector& diag, const Vector& offdiag, double eigenvalue);

// Eigenvector for a known eigenvalue of a block-tridiagonal operator by
// inverse iteration, orthogonalised against `deflate` (columns). Returns the
// residual norm through `residual`.
Vector inverse_iteration(const BlockTridiagonal& H, double eigenvalue, const Eigen::MatrixXd& deflate,
                         std::uint64_t seed, double* residual = nullptr);

enum class SolverKind { automatic, dense, lanczos, banded };

SolverKind parse_solver_kind(const std::string& name);
const char* solver_name(SolverKind kind);

struct SolveOptions {
    SolverKind solver{SolverKind::automatic};
    Index dense_cap{kDefaultDenseCap};
    Index dense_auto_limit{400};  // automatic uses dense up to this block size
    int levels{kGapCount + 1};    // eigenvalues wanted in total
    double lanczos_tol{1e-10};
    double banded_tol{1e-12};
    std::uint64_t seed{kDefaultSeed};
};

// Lowest eigenpairs of one operator with the requested solver. `k` values,
// vectors for the first `vectors` of them.
SpectrumResult lowest_eigenpairs(const OperatorMatrix& H, int k, int vectors,
                                 const SolveOptions& opts);

struct PointSolution {
    SpectrumResult spectrum;
    ObservableRecord record;
};

// Evaluates the model at a given cutoff: spectrum plus observables.
using PointEvaluator = std::function<PointSolution(Index n_max)>;

struct ConvergenceTrace {
    std::vector<Index> cutoffs;
    std::vector<double> ground_energies;
    bool energy_monotone{true};  // E0 nonincreasing from round to round
};

// Semiclassical field amplitude used to size the first cutoff; 0 below
// lambda_c. Scales with sqrt(N) for the Dicke model.
double cutoff_field_estimate(const ModelSpec& spec);

// max(trunc.n_max, 32, ceil(4 (a^2 + 5 a + 10))) with a the field estimate.
Index initial_cutoff(const ModelSpec& spec, const TruncationConfig& trunc);

// Grows n_max by growth_factor until E0 (relative) and S, C, s_p+1
// (absolute) agree between consecutive rounds. When max_rounds or
// max_dimension runs out the last record is returned with converged = false;
// a first cutoff already above max_dimension throws SolverError.
PointSolution converge_truncation(const ModelSpec& spec, const TruncationConfig& trunc,
                                  const PointEvaluator& evaluate,
                                  ConvergenceTrace* trace = nullptr);

}  // namespace rabi
