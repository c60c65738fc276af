// test_eigensolver.cpp - solver agreement and truncation convergence
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rabi/eigensolver.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace rabi;

namespace {

Eigen::VectorXd oracle_spectrum(const OperatorMatrix& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h.matrix), Eigen::EigenvaluesOnly};
    return es.eigenvalues();
}

}  // namespace

TEST_CASE("seeded vectors are reproducible and normalised") {
    const Vector a = seeded_vector(50, 7);
    const Vector b = seeded_vector(50, 7);
    const Vector c = seeded_vector(50, 8);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - c).norm() > 0.1);
    CHECK(a.norm() == doctest::Approx(1.0));
}

TEST_CASE("dense, Lanczos and banded solvers agree") {
    for (int n_qubits : {1, 3}) {
        for (double lr : {0.0, 0.7, 1.0, 1.8}) {
            const ModelSpec s = ModelSpec::from_ratios(0.2, lr, n_qubits);
            const OperatorMatrix h = build_hamiltonian(s, 60);
            const Eigen::VectorXd ref = oracle_spectrum(h);
            const double scale = h.norm_inf();

            LanczosOptions lo;
            lo.k = 6;
            const SpectrumResult lz = lanczos_lowest(h, lo);
            BandedOptions bo;
            bo.k = 6;
            bo.vectors = 6;
            const SpectrumResult bd = banded_lowest(h, bo);
            SolveOptions so;
            so.solver = SolverKind::dense;
            const SpectrumResult dn = lowest_eigenpairs(h, 6, 2, so);
            CHECK(lz.converged);
            CHECK(bd.converged);
            CHECK(dn.converged);
            for (int i = 0; i < 6; ++i) {
                CHECK(std::abs(lz.eigenvalues[std::size_t(i)] - ref[i]) < 1e-9 * scale);
                CHECK(std::abs(bd.eigenvalues[std::size_t(i)] - ref[i]) < 1e-12 * scale);
                CHECK(std::abs(dn.eigenvalues[std::size_t(i)] - ref[i]) < 1e-12 * scale);
                const Vector v = bd.eigenvectors.col(i);
                CHECK((h.matrix * v - ref[i] * v).norm() < 1e-10 * scale);
            }
            CHECK(std::abs((bd.eigenvectors.transpose() * bd.eigenvectors -
                            Eigen::MatrixXd::Identity(6, 6)).maxCoeff()) < 1e-8);
        }
    }
}

TEST_CASE("banded solver works on Fock-major parity blocks") {
    const ModelSpec s = ModelSpec::from_ratios(0.05, 1.2, 4);
    const ParityBlock block = build_parity_block(s, 150, +1);
    const Eigen::VectorXd ref = oracle_spectrum(block.hamiltonian);
    BandedOptions bo;
    bo.k = 5;
    bo.vectors = 5;
    const SpectrumResult r = banded_lowest(block.hamiltonian, bo);
    for (int i = 0; i < 5; ++i) {
        CHECK(r.eigenvalues[std::size_t(i)] == doctest::Approx(ref[i]).epsilon(1e-12).scale(1.0));
    }
    CHECK(r.converged);
}

TEST_CASE("inertia counts match the oracle spectrum") {
    const ModelSpec s = ModelSpec::from_ratios(0.3, 1.5, 2);
    const OperatorMatrix h = build_hamiltonian(s, 40);
    const BlockTridiagonal bt = BlockTridiagonal::from_operator(h);
    const Eigen::VectorXd ref = oracle_spectrum(h);
    for (double sigma : {ref[0] - 1.0, 0.5 * (ref[0] + ref[1]), 0.5 * (ref[10] + ref[11]), ref[ref.size() - 1] + 1.0}) {
        Index expected = 0;
        for (Index i = 0; i < ref.size(); ++i) expected += ref[i] < sigma ? 1 : 0;
        CHECK(bt.count_below(sigma) == expected);
    }
    CHECK(bt.gershgorin_lower() <= ref[0]);
    CHECK(bt.gershgorin_upper() >= ref[ref.size() - 1]);

    const Vector x = seeded_vector(h.dimension(), 3);
    Vector y;
    bt.apply(x, y);
    CHECK((y - h.matrix * x).norm() < 1e-12);
    const Vector z = bt.solve_shifted(ref[0] - 0.37, x);
    CHECK((h.matrix * z - (ref[0] - 0.37) * z - x).norm() < 1e-10);
}

TEST_CASE("nearly degenerate doublet is resolved with orthogonal vectors") {
    // Deep in the superradiant phase the two lowest states are split by far
    // less than the spacing to the next level.
    const ModelSpec s = ModelSpec::from_ratios(0.01, 1.5, 1);
    const OperatorMatrix h = build_hamiltonian(s, initial_cutoff(s, TruncationConfig{}));
    BandedOptions bo;
    bo.k = 4;
    bo.vectors = 2;
    const SpectrumResult r = banded_lowest(h, bo);
    CHECK(r.converged);
    CHECK(std::abs(r.eigenvectors.col(0).dot(r.eigenvectors.col(1))) < 1e-8);
    CHECK(r.eigenvalues[1] - r.eigenvalues[0] < 1e-6 * (r.eigenvalues[2] - r.eigenvalues[0]));
}

TEST_CASE("Lanczos recovers from an invariant start subspace") {
    // Diagonal operator, start vector overlaps every state: converges on full
    // Krylov space without error.
    const Index dim = 12;
    Vector d(dim);
    for (Index i = 0; i < dim; ++i) d[i] = double(i);
    MatVec apply = [&d](const Vector& in, Vector& out) { out = d.cwiseProduct(in); };
    LanczosOptions lo;
    lo.k = 3;
    const SpectrumResult r = lanczos_lowest(apply, dim, lo);
    CHECK(r.eigenvalues[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(r.eigenvalues[2] == doctest::Approx(2.0));
    CHECK_THROWS_AS(lanczos_lowest(apply, dim, LanczosOptions{21}), std::invalid_argument);
}

TEST_CASE("dense solver refuses oversize problems") {
    const ModelSpec s = ModelSpec::from_ratios(0.2, 0.5, 1);
    CHECK_THROWS_AS(dense_eigh(build_hamiltonian(s, 100), false, 50), SolverError);
}

TEST_CASE("tridiagonal eigenvalues of the free chain") {
    // Oracle: 2 - 2 cos(k pi / (n+1)).
    const Index n = 30;
    const Vector diag = Vector::Constant(n, 2.0);
    const Vector off = Vector::Constant(n - 1, -1.0);
    const std::vector<double> e = tridiagonal_eigenvalues(diag, off);
    for (Index k = 1; k <= n; ++k) {
        CHECK(e[std::size_t(k - 1)] == doctest::Approx(2.0 - 2.0 * std::cos(k * M_PI / (n + 1))));
    }
}

TEST_CASE("truncation loop grows the cutoff until E0 settles") {
    const ModelSpec s = ModelSpec::from_ratios(0.1, 1.3, 1);
    TruncationConfig t;
    ConvergenceTrace trace;
    PointEvaluator eval = [&](Index n_max) {
        PointSolution sol;
        sol.spectrum = banded_lowest(build_hamiltonian(s, n_max), BandedOptions{});
        sol.record.e0 = sol.spectrum.eigenvalues[0];
        return sol;
    };
    const PointSolution sol = converge_truncation(s, t, eval, &trace);
    CHECK(sol.record.converged);
    CHECK(trace.cutoffs.size() >= 2);
    CHECK(trace.energy_monotone);
    CHECK(sol.record.n_max_used == trace.cutoffs.back());
    CHECK(std::abs(trace.ground_energies.back() - trace.ground_energies[trace.ground_energies.size() - 2]) <=
          1e-10 * std::abs(sol.record.e0));
}

TEST_CASE("decoupled point converges in a single round") {
    const ModelSpec s = ModelSpec::from_ratios(0.1, 0.0, 1);
    ConvergenceTrace trace;
    PointEvaluator eval = [&](Index n_max) {
        PointSolution sol;
        sol.spectrum = banded_lowest(build_hamiltonian(s, n_max), BandedOptions{});
        sol.record.e0 = sol.spectrum.eigenvalues[0];
        return sol;
    };
    const PointSolution sol = converge_truncation(s, TruncationConfig{}, eval, &trace);
    CHECK(trace.cutoffs.size() == 1);
    CHECK(sol.record.converged);
    CHECK(sol.record.e0 == doctest::Approx(-0.5));
}

TEST_CASE("round cap leaves the point marked unconverged") {
    const ModelSpec s = ModelSpec::from_ratios(0.1, 1.3, 1);
    TruncationConfig t;
    t.max_rounds = 1;
    PointEvaluator eval = [&](Index n_max) {
        PointSolution sol;
        sol.spectrum = banded_lowest(build_hamiltonian(s, n_max), BandedOptions{});
        sol.record.e0 = sol.spectrum.eigenvalues[0];
        return sol;
    };
    CHECK_FALSE(converge_truncation(s, t, eval).record.converged);
}

TEST_CASE("dimension ceiling stops the cutoff growth") {
    const ModelSpec s = ModelSpec::from_ratios(0.1, 1.3, 1);
    TruncationConfig t;
    const Index first = initial_cutoff(s, t);
    // Room for the first round only.
    t.max_dimension = 2 * (first + 1) + 1;
    int calls = 0;
    PointEvaluator eval = [&](Index n_max) {
        ++calls;
        PointSolution sol;
        sol.spectrum = banded_lowest(build_hamiltonian(s, n_max), BandedOptions{});
        sol.record.e0 = sol.spectrum.eigenvalues[0];
        return sol;
    };
    const PointSolution sol = converge_truncation(s, t, eval);
    CHECK(calls == 1);
    CHECK_FALSE(sol.record.converged);
    CHECK(sol.record.n_max_used == first);

    t.max_dimension = 2 * (first + 1) - 1;
    CHECK_THROWS_AS(converge_truncation(s, t, eval), SolverError);
}
