// observables.hpp - entanglement entropy, sign correlation, squeezing,
// conditional field, gaps and Gibbs averages computed from eigenvectors
//
// All state vectors are full-space vectors in the spin-major layout of
// model.hpp (use BlockEmbedding::embed for parity-block vectors).
#pragma once

#include "rabi/eigensolver.hpp"
#include "rabi/model.hpp"
#include "rabi/records.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace rabi {

// Spin reduced density matrix, (spin_dim x spin_dim), of a normalised state.
Eigen::MatrixXd reduced_spin_density(const Vector& state, Index spin_dim, Index fock_dim);

// Oscillator reduced density matrix. Only meant for small cutoffs.
Eigen::MatrixXd reduced_field_density(const Vector& state, Index spin_dim, Index fock_dim);

// -Tr rho log2 rho over eigenvalues above 1e-15. Throws std::invalid_argument
// when the trace is off by more than 1e-8.
double von_neumann_entropy(const Eigen::MatrixXd& rho);

// Matrix elements <m| sgn(x) |n> between oscillator eigenstates.
//
// For m even and n odd, Green's identity on the half line gives
//     <m|sgn|n> = phi_m(0) phi_n'(0) / (n - m),
// with phi_m(0) = u_m and phi_n'(0) = w_n from two-term recurrences. All
// other parity combinations vanish. The Cauchy-like structure lets a
// bilinear form run as one convolution.
class SignOperator {
public:
    explicit SignOperator(Index n_max);

    Index n_max() const { return Index(u_.size()) - 1; }
    double element(Index m, Index n) const;
    Eigen::MatrixXd dense() const;

    // a^T S b for two vectors over Fock levels 0..len-1 (len <= n_max + 1).
    double bilinear(const Vector& a, const Vector& b) const;
    double expectation(const Vector& v) const { return bilinear(v, v); }
    // S v over the first v.size() Fock levels.
    Vector apply(const Vector& v) const;

private:
    // sum_{m even, n odd} x_m y_n / (n - m) with x, y already scaled by u, w.
    static double cauchy_sum(const Vector& x, const Vector& y);

    Vector u_;  // phi_m(0), zero for odd m
    Vector w_;  // phi_n'(0), zero for even n
};

SignOperator sign_operator(Index n_max);

// |< (Jz/J) sgn(x) >|; for one qubit Jz/J = sigma_z.
double correlation_C(const Vector& state, const ModelSpec& spec, Index fock_dim,
                     const SignOperator& sign);

// 2 <p^2>, i.e. <p^2> relative to its vacuum value 1/2.
double squeezing(const Vector& state, Index spin_dim, Index fock_dim);
double squeezing(const Vector& state, const OperatorMatrix& p_squared);

// Field amplitude of one branch: |<x theta(x)>| / <theta(x)> with
// x = (a + a^dagger)/2, i.e. <x> in the state projected onto x > 0 and
// renormalised; 0 when the projected norm is below 1e-12. In the
// superradiant ground state this is the coherent amplitude of the x > 0
// branch, which carries the qubit state favoured by sz = -1.
double conditional_field(const Vector& state, const ModelSpec& spec, Index fock_dim, const SignOperator& sign);
double conditional_field(const Vector& state, const ModelSpec& spec, Index fock_dim);

// <x> in the full state; zero by symmetry in the exact ground state.
double field_expectation(const Vector& state, Index spin_dim, Index fock_dim);

// E_n - E_0 for n = 1..count. Throws std::invalid_argument on too few values.
std::vector<double> energy_gaps(const std::vector<double>& eigenvalues, int count = kGapCount);

// Linear moments of one state (or a weighted sum of states) from which every
// record observable follows. Thermal values are weighted sums of these.
struct StateMoments {
    Eigen::MatrixXd spin_density;
    double spin_sign{0.0};     // <(Jz/J) sgn(x)>, signed
    double p_squared{0.0};     // <p^2>
    double branch_weight{0.0};  // <theta(x)>
    double branch_field{0.0};   // <x theta(x)>

    void add(const StateMoments& other, double weight);
    void scale(double factor);
};

StateMoments state_moments(const Vector& state, const ModelSpec& spec, Index fock_dim,
                           const SignOperator& sign);

// Fills entropy_S, corr_C, squeeze_sp1 and alpha_cond from moments.
void finish_record(const StateMoments& m, ObservableRecord& record);

// Ground-state record at one cutoff: spectrum and vectors from the parity
// blocks when epsilon = 0, full space otherwise. The even block supplies the
// ground state; both blocks supply the gaps.
PointSolution evaluate_ground_state(const ModelSpec& spec, Index n_max, const SolveOptions& opts);

// Gibbs averages <A> = sum_i exp(-(E_i - E_0)/T) <v_i|A|v_i> / Z. At T = 0
// states within 1e-12 of E_0 are averaged with equal weight.
struct ThermalResult {
    ObservableRecord record;
    double tail_weight{0.0};  // Boltzmann weight of the highest retained state / Z
    Index states_used{0};
};

inline constexpr double kThermalTailLimit = 1e-12;

// From a spectrum with full-space eigenvectors (columns).
ThermalResult gibbs_observables(const SpectrumResult& spectrum, const ModelSpec& spec, Index fock_dim,
                                double temperature);

// Every eigenpair of both parity blocks, streamed: the scalar-block
// eigenvalues come from tridiagonal QR, the vectors from inverse iteration.
// Temperatures are evaluated together from one decomposition.
std::vector<ThermalResult> thermal_observables(const ModelSpec& spec, Index n_max,
                                               const std::vector<double>& temperatures,
                                               const SolveOptions& opts);

// Cutoff at which the Boltzmann tail at temperature T is negligible.
Index thermal_cutoff(const ModelSpec& spec, double temperature, const TruncationConfig& trunc);

}  // namespace rabi
