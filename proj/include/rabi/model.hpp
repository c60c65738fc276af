// model.hpp - truncated Hilbert-space operators for the Rabi and Dicke models
//
// Energies are in units of the qubit gap (delta = 1 in everything the CLI
// builds), hbar = 1. The oscillator zero-point energy omega0/2 is left out of
// every Hamiltonian: it is a constant shift and nothing we report depends on
// it.
//
// Basis convention for full-space operators: spin index major, Fock index
// minor, i.e. index = s * (n_max + 1) + n. The spin index s = 0..N labels
// Jz eigenstates with M = N/2 - s, so for one qubit s = 0 is |up> and s = 1
// is |down> (sigma_z |up> = |up>).

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace rabi {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

inline constexpr Index kMinCutoff = 8;

struct ModelSpec {
    double delta{1.0};    // qubit gap
    double epsilon{0.0};  // qubit bias
    double omega0{0.1};   // oscillator frequency
    double lambda{0.0};   // qubit-oscillator coupling
    int n_qubits{1};

    // Throws std::invalid_argument on non-finite or out-of-range values.
    void validate() const;

    double total_spin() const { return 0.5 * n_qubits; }
    Index spin_dim() const { return n_qubits + 1; }

    // delta = 1, omega0 = ratio, lambda = lambda_rel * lambda_c.
    static ModelSpec from_ratios(double ratio, double lambda_rel, int n_qubits = 1,
                                 double epsilon = 0.0);
};

struct TruncationConfig {
    Index n_max{32};  // lower bound on the initial cutoff
    double growth_factor{2.0};
    double tol_energy{1e-10};     // relative, on E0
    double tol_observable{1e-8};  // absolute, on S, C and s_p+1
    int max_rounds{8};
    Index max_dimension{Index(1) << 22};  // spin_dim * (n_max + 1) never exceeds this; ~1 kB per state at N = 10

    void validate() const;
};

// Sparse real symmetric operator on a truncated spin (x) oscillator space.
//
// Full-space operators use the spin-major layout described above and leave
// level_offsets empty. Parity blocks are stored Fock-major: rows belonging to
// Fock level n are [level_offsets[n], level_offsets[n+1]), and the matrix is
// block tridiagonal with respect to that partition.
struct OperatorMatrix {
    SparseMatrix matrix;
    Index spin_dim{0};
    Index fock_dim{0};
    std::string basis_tag;
    std::vector<Index> level_offsets;

    Index dimension() const { return matrix.rows(); }
    Index n_max() const { return fock_dim - 1; }
    bool fock_major() const { return !level_offsets.empty(); }

    // Bit-exact symmetry of the stored entries.
    bool is_symmetric() const;
    // Largest absolute row sum (infinity norm).
    double norm_inf() const;
};

enum class OperatorKind {
    annihilate,
    create,
    field_x,    // (a + a^dagger) / 2
    p_squared,  // -(a^dagger - a)^2 / 2, so <0|p^2|0> = 1/2
    sigma_z,
    sigma_x,
    J_z,
    J_x,
    parity,     // spin flip M -> -M times (-1)^(a^dagger a)
};

OperatorKind parse_operator_kind(const std::string& name);

// -delta/2 sx - eps/2 sz + omega0 a^dagger a + lambda (a + a^dagger) sz
OperatorMatrix build_rabi_hamiltonian(const ModelSpec& spec, Index n_max);

// -delta Jx - eps Jz + omega0 a^dagger a + 2 lambda / sqrt(N) (a + a^dagger) Jz
// in the symmetric J = N/2 sector. Entry-for-entry identical to the Rabi
// matrix when N = 1.
OperatorMatrix build_dicke_hamiltonian(const ModelSpec& spec, Index n_max);

// Rabi builder for N = 1, Dicke builder otherwise.
OperatorMatrix build_hamiltonian(const ModelSpec& spec, Index n_max);

OperatorMatrix build_operator(OperatorKind kind, const ModelSpec& spec, Index n_max);

// Maps a parity block back into the full spin-major space: full = map * block.
struct BlockEmbedding {
    SparseMatrix map;
    int parity{+1};

    Vector embed(const Vector& block_vector) const { return map * block_vector; }
};

struct ParityBlock {
    OperatorMatrix hamiltonian;
    BlockEmbedding embedding;
};

struct ParitySplit {
    ParityBlock even;
    ParityBlock odd;
};

// Hamiltonian restricted to one eigenspace of the parity operator, built
// directly from the model parameters. Requires epsilon = 0. The spin part uses
// the symmetric/antisymmetric combinations (|M> +- |-M>)/sqrt(2), so one qubit
// gives the familiar tridiagonal block with diagonal omega0 n -+ delta/2.
ParityBlock build_parity_block(const ModelSpec& spec, Index n_max, int parity);

// Splits a full-space Hamiltonian into its two parity blocks. Throws
// std::invalid_argument if H does not commute with the parity operator
// (epsilon != 0) or the layout is not spin-major.
ParitySplit parity_block_split(const OperatorMatrix& H);

// Exact commutator [A, B] as a sparse matrix.
SparseMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);

}  // namespace rabi
