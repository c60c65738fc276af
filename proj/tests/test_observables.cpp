// test_observables.cpp - observables against analytic states and quadrature
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rabi/observables.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace rabi;

TEST_CASE("sign operator matches adaptive quadrature up to n = 128") {
    const SignOperator s(128);
    double worst = 0.0;
    for (int m = 0; m <= 128; ++m) {
        for (int n = m + 1; n <= 128; n += 2) worst = std::max(worst, std::abs(s.element(m, n) - oracle::sign_element(m, n)));
    }
    CHECK(worst < 1e-10);
    CHECK(s.element(0, 1) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-14));
    CHECK(s.element(0, 1) == doctest::Approx(0.797885).epsilon(1e-6));
    CHECK(s.element(0, 0) == 0.0);
    CHECK(s.element(1, 2) == doctest::Approx(oracle::sign_element(1, 2)).epsilon(1e-12));
}

TEST_CASE("sign operator matches panel Gauss-Legendre quadrature as a whole matrix") {
    const Eigen::MatrixXd q = oracle::sign_matrix(128);
    const Eigen::MatrixXd d = SignOperator(128).dense();
    CHECK((q - d).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(q(3, 8) == doctest::Approx(oracle::sign_element(3, 8)).epsilon(1e-11));
}

TEST_CASE("sign operator symmetry and parity selection rule") {
    const SignOperator s(40);
    const Eigen::MatrixXd d = s.dense();
    CHECK((d - d.transpose()).norm() == 0.0);
    for (int m = 0; m <= 40; ++m) {
        for (int n = 0; n <= 40; ++n) {
            if ((m + n) % 2 == 0) CHECK(d(m, n) == 0.0);
        }
    }
}

TEST_CASE("sign operator apply matches the dense matrix and the bilinear form") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    const SignOperator small(40);
    Vector v(33);
    for (auto& x : v) x = gauss(rng);
    CHECK((small.apply(v) - small.dense().topLeftCorner(33, 33) * v).cwiseAbs().maxCoeff() < 1e-13);

    // Long enough for the FFT path.
    const SignOperator big(3000);
    Vector a(2501), b(2501);
    for (auto& x : a) x = gauss(rng);
    for (auto& x : b) x = gauss(rng);
    b.tail(2000).setZero();
    const Vector sb = big.apply(b);
    CHECK(a.dot(sb) == doctest::Approx(big.bilinear(a, b)).epsilon(1e-10));
    CHECK((sb - big.dense().topLeftCorner(2501, 2501) * b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("truncated sign operator squares to one only as the cutoff grows") {
    // The diagonal deficit of S^2 on a low state shrinks like n_max^(-1/2):
    // the tail sum_k S_0k^2 over odd k > K decays as K^(-1/2).
    auto deficit = [](Index n_max) {
        const SignOperator s(n_max);
        double sum = 0.0;
        for (Index k = 1; k <= n_max; k += 2) sum += s.element(0, k) * s.element(0, k);
        return 1.0 - sum;
    };
    const double d1 = deficit(1 << 12);
    const double d2 = deficit(1 << 14);
    CHECK(d1 > 0.0);
    CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("FFT and direct Cauchy sums agree") {
    const Index n = 3000;
    const SignOperator s(n);
    Vector a(n + 1), b(n + 1);
    for (Index i = 0; i <= n; ++i) {
        a[i] = std::exp(-double(i) / 700.0) * std::cos(0.37 * i);
        b[i] = std::sin(0.11 * i + 0.3) / std::sqrt(i + 1.0);
    }
    // The FFT path runs above 2^18 products; the dense matrix is the check.
    const Eigen::MatrixXd d = s.dense();
    CHECK(s.bilinear(a, b) == doctest::Approx(a.dot(d * b)).epsilon(1e-12));
    CHECK(s.expectation(a) == doctest::Approx(a.dot(d * a)).epsilon(1e-12));
}

TEST_CASE("entropy of standard density matrices") {
    CHECK(von_neumann_entropy(Eigen::Matrix2d::Identity() / 2.0) == doctest::Approx(1.0));
    Eigen::MatrixXd pure(2, 2);
    pure << 0.5, 0.5, 0.5, 0.5;
    CHECK(von_neumann_entropy(pure) < 1e-15);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(von_neumann_entropy(bad), std::invalid_argument);
}

TEST_CASE("cat state: reduced density, entropy, correlation and branch field") {
    const int n_max = 64;
    ModelSpec spec;
    for (double alpha : {1.0, 2.0, 3.0}) {
        const Vector cat = oracle::cat_state(alpha, n_max);
        const Eigen::MatrixXd rho = reduced_spin_density(cat, 2, n_max + 1);
        CHECK(rho.trace() == doctest::Approx(1.0));
        CHECK(rho(0, 1) == doctest::Approx(0.5 * std::exp(-2.0 * alpha * alpha)).epsilon(1e-10).scale(1.0));
        const double p = 0.5 * (1.0 + std::exp(-2.0 * alpha * alpha));
        CHECK(von_neumann_entropy(rho) == doctest::Approx(oracle::binary_entropy(p)).epsilon(1e-10));

        // Position density of |alpha> is a Gaussian at alpha with variance 1/4.
        const SignOperator sign(n_max);
        CHECK(correlation_C(cat, spec, n_max + 1, sign) == doctest::Approx(std::erf(std::sqrt(2.0) * alpha)).epsilon(1e-9));
        // The x > 0 branch of the even mixture of N(+-alpha, 1/4) has mean E|x|.
        const double abs_x = 0.5 * std::sqrt(2.0 / M_PI) * std::exp(-2.0 * alpha * alpha) +
                             alpha * std::erf(std::sqrt(2.0) * alpha);
        CHECK(conditional_field(cat, spec, n_max + 1) == doctest::Approx(abs_x).epsilon(1e-9));
        CHECK(conditional_field(cat, spec, n_max + 1, sign) == doctest::Approx(abs_x).epsilon(1e-9));
        CHECK(std::abs(field_expectation(cat, 2, n_max + 1)) < 1e-12);
    }
    const Vector cat1 = oracle::cat_state(1.0, n_max);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced_spin_density(cat1, 2, n_max + 1));
    CHECK(es.eigenvalues()[1] == doctest::Approx(0.5677).epsilon(1e-4));
    CHECK(es.eigenvalues()[0] == doctest::Approx(0.4323).epsilon(1e-4));
    CHECK(von_neumann_entropy(reduced_spin_density(cat1, 2, n_max + 1)) == doctest::Approx(0.9867).epsilon(1e-4));
    CHECK(correlation_C(oracle::cat_state(3.0, n_max), spec, n_max + 1, SignOperator(n_max)) > 0.99);
}

TEST_CASE("squeezing conventions") {
    const ModelSpec spec;
    const Index n_max = 20;
    Vector vac = Vector::Zero(2 * (n_max + 1));
    vac[0] = std::sqrt(0.5);
    vac[n_max + 1] = std::sqrt(0.5);
    CHECK(squeezing(vac, 2, n_max + 1) == doctest::Approx(1.0).epsilon(1e-15));
    const OperatorMatrix p2 = build_operator(OperatorKind::p_squared, spec, n_max);
    const Vector cat = oracle::cat_state(1.5, int(n_max));
    CHECK(squeezing(cat, p2) == doctest::Approx(squeezing(cat, 2, n_max + 1)).epsilon(1e-13));
    // Coherent states keep vacuum momentum noise: <p^2> = 1/2 for real alpha.
    CHECK(squeezing(oracle::cat_state(1.0, 64), 2, 65) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("energy gaps") {
    const std::vector<double> e{-1.0, -0.9, -0.5};
    const std::vector<double> g = energy_gaps(e, 2);
    CHECK(g[0] == doctest::Approx(0.1));
    CHECK(g[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(energy_gaps(e, 3), std::invalid_argument);
}

TEST_CASE("decoupled ground state is a product state for every N") {
    for (int n : {1, 2, 5}) {
        for (double ratio : {1e-1, 1e-2}) {
            const ModelSpec spec = ModelSpec::from_ratios(ratio, 0.0, n);
            const PointSolution sol = evaluate_ground_state(spec, 32, SolveOptions{});
            CHECK(std::abs(sol.record.entropy_S) <= 1e-12);
            CHECK(std::abs(sol.record.corr_C) <= 1e-12);
            CHECK(std::abs(sol.record.squeeze_sp1 - 1.0) <= 1e-12);
            // Vacuum: E|x| for x ~ N(0, 1/4).
            CHECK(sol.record.alpha_cond == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-9));
            CHECK(sol.record.e0 == doctest::Approx(-0.5 * n));
        }
    }
    const PointSolution sol = evaluate_ground_state(ModelSpec::from_ratios(1e-2, 0.0, 1), 32, SolveOptions{});
    for (int i = 0; i < 10; ++i) CHECK(sol.record.gaps[std::size_t(i)] == doctest::Approx(0.01 * (i + 1)));
}

TEST_CASE("parity-block ground state matches an unsplit dense oracle") {
    for (int n : {1, 3}) {
        for (double lr : {0.6, 1.0, 1.4}) {
            ModelSpec spec = ModelSpec::from_ratios(0.2, lr, n);
            const Index n_max = 40;
            const PointSolution sol = evaluate_ground_state(spec, n_max, SolveOptions{});

            const OperatorMatrix h = build_hamiltonian(spec, n_max);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h.matrix)};
            const Vector g = es.eigenvectors().col(0);
            CHECK(sol.record.e0 == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-12));
            for (int i = 0; i < 10; ++i) {
                CHECK(sol.record.gaps[std::size_t(i)] ==
                      doctest::Approx(es.eigenvalues()[i + 1] - es.eigenvalues()[0]).epsilon(1e-9).scale(1e-3));
            }
            const Eigen::MatrixXd rho = reduced_spin_density(g, n + 1, n_max + 1);
            CHECK(sol.record.entropy_S == doctest::Approx(von_neumann_entropy(rho)).epsilon(1e-9));
            // C from the explicit dense sign matrix, weights Jz/J.
            const Eigen::MatrixXd sign = SignOperator(n_max).dense();
            double c = 0.0;
            for (int s = 0; s <= n; ++s) {
                const Vector col = g.segment(s * (n_max + 1), n_max + 1);
                c += (0.5 * n - s) / (0.5 * n) * col.dot(sign * col);
            }
            CHECK(sol.record.corr_C == doctest::Approx(std::abs(c)).epsilon(1e-9).scale(1e-6));
            CHECK(sol.record.squeeze_sp1 ==
                  doctest::Approx(squeezing(g, build_operator(OperatorKind::p_squared, spec, n_max))).epsilon(1e-10));
        }
    }
}

TEST_CASE("field vanishes in the symmetric ground state while the branch field does not") {
    const ModelSpec spec = ModelSpec::from_ratios(0.05, 1.5, 1);
    const Index n_max = 200;
    const PointSolution sol = evaluate_ground_state(spec, n_max, SolveOptions{});
    const Vector g = sol.spectrum.eigenvectors.col(0);
    CHECK(std::abs(field_expectation(g, 2, n_max + 1)) < 1e-10);
    CHECK(sol.record.alpha_cond > 1.0);
}

TEST_CASE("spin and oscillator marginals carry the same entropy") {
    const ModelSpec spec = ModelSpec::from_ratios(0.3, 1.1, 2);
    const Index n_max = 30;
    const PointSolution sol = evaluate_ground_state(spec, n_max, SolveOptions{});
    const Vector g = sol.spectrum.eigenvectors.col(0);
    const double s_spin = von_neumann_entropy(reduced_spin_density(g, 3, n_max + 1));
    const double s_field = von_neumann_entropy(reduced_field_density(g, 3, n_max + 1));
    CHECK(s_spin == doctest::Approx(s_field).epsilon(1e-8));
    CHECK(s_spin > 0.1);
}

TEST_CASE("ground energy does not increase with coupling") {
    double previous = 1.0;
    for (double lr = 0.0; lr <= 2.0; lr += 0.1) {
        const PointSolution sol = evaluate_ground_state(ModelSpec::from_ratios(0.1, lr, 1), 120, SolveOptions{});
        CHECK(sol.record.e0 <= previous);
        previous = sol.record.e0;
    }
}

TEST_CASE("streamed thermal averages match dense Gibbs sums") {
    for (int n : {1, 2}) {
        const ModelSpec spec = ModelSpec::from_ratios(0.2, 1.3, n);
        const Index n_max = 60;
        const std::vector<double> temps{0.0, 0.3, 1.0};
        SolveOptions opts;
        const std::vector<ThermalResult> streamed = thermal_observables(spec, n_max, temps, opts);
        const SpectrumResult dense = dense_eigh(build_hamiltonian(spec, n_max), true);
        for (std::size_t t = 0; t < temps.size(); ++t) {
            const ThermalResult ref = gibbs_observables(dense, spec, n_max + 1, temps[t]);
            const ObservableRecord& a = streamed[t].record;
            CHECK(a.entropy_S == doctest::Approx(ref.record.entropy_S).epsilon(1e-9));
            CHECK(a.corr_C == doctest::Approx(ref.record.corr_C).epsilon(1e-9));
            CHECK(a.squeeze_sp1 == doctest::Approx(ref.record.squeeze_sp1).epsilon(1e-9));
            CHECK(a.alpha_cond == doctest::Approx(ref.record.alpha_cond).epsilon(1e-9));
            CHECK(a.e0 == doctest::Approx(ref.record.e0).epsilon(1e-12));
            CHECK(a.gaps[0] == doctest::Approx(ref.record.gaps[0]).epsilon(1e-9).scale(1e-6));
        }
    }
}

TEST_CASE("zero temperature Gibbs state is the ground state below the transition") {
    const ModelSpec spec = ModelSpec::from_ratios(0.1, 0.5, 1);
    const Index n_max = 80;
    const SpectrumResult dense = dense_eigh(build_hamiltonian(spec, n_max), true);
    const ThermalResult t0 = gibbs_observables(dense, spec, n_max + 1, 0.0);
    const PointSolution g = evaluate_ground_state(spec, n_max, SolveOptions{});
    CHECK(t0.record.corr_C == doctest::Approx(g.record.corr_C).epsilon(1e-8).scale(1e-8));
    CHECK(t0.states_used == 1);
    const ThermalResult cold = gibbs_observables(dense, spec, n_max + 1, 1e-4);
    CHECK(std::abs(cold.record.corr_C - g.record.corr_C) < 1e-8);
}

TEST_CASE("thermal correlation decreases with temperature above the transition") {
    const ModelSpec spec = ModelSpec::from_ratios(0.1, 1.5, 1);
    const std::vector<double> temps{0.0, 0.1, 1.0, 10.0};
    const Index n_max = thermal_cutoff(spec, 10.0, TruncationConfig{});
    const std::vector<ThermalResult> r = thermal_observables(spec, n_max, temps, SolveOptions{});
    for (std::size_t t = 1; t < temps.size(); ++t) CHECK(r[t].record.corr_C <= r[t - 1].record.corr_C);
    CHECK(r.back().record.corr_C < 0.5 * r.front().record.corr_C);
    for (const ThermalResult& x : r) CHECK(x.record.converged);
}

TEST_CASE("truncated thermal tail is flagged") {
    const ModelSpec spec = ModelSpec::from_ratios(0.1, 1.0, 1);
    const std::vector<ThermalResult> r = thermal_observables(spec, 40, {5.0}, SolveOptions{});
    CHECK(r[0].tail_weight > kThermalTailLimit);
    CHECK_FALSE(r[0].record.converged);
}
