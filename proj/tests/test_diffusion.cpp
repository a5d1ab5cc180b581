#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "friction/diffusion.hpp"

#include <cmath>

using namespace friction;

namespace {

// two-Gaussian mixture on a fine table (native spacing drives the
// finite-difference path of the A coefficient)
MeasurementDistribution mixture_mu() {
    const double dq = 0.003, span = 12.0;
    const int n = (int)std::lround(2 * span / dq) + 1;
    VectorXd q(n), w(n);
    auto g = [](double x, double m, double s) {
        return std::exp(-(x - m) * (x - m) / (2 * s * s)) / (s * std::sqrt(2 * std::numbers::pi));
    };
    for (int i = 0; i < n; ++i) {
        q[i] = -span + i * dq;
        w[i] = 0.6 * g(q[i], -1.0, 0.7) + 0.4 * g(q[i], 1.5, 1.2);
    }
    return MeasurementDistribution::tabulated(q, w);
}

} // namespace

TEST_CASE("diffusion coefficients") {
    SUBCASE("Gaussian mu, linear feedback") {
        auto mu = MeasurementDistribution::gaussian1d(1.3, 0.5);
        auto d = diffusion_coefficients(mu, FeedbackLaw::linear(0.4), 2.0);
        CHECK(d.A == doctest::Approx(1.0 / (8 * 1.69)).epsilon(1e-10));
        CHECK(d.B == doctest::Approx(0.2).epsilon(1e-10));
        CHECK(d.C == doctest::Approx(0.16 * (1.69 + 0.25) / 2).epsilon(1e-8));
        CHECK(d.F == doctest::Approx(2.0 * 0.4 * 0.5).epsilon(1e-8));

        auto d0 = diffusion_coefficients(MeasurementDistribution::gaussian1d(1.3),
                                         FeedbackLaw::linear(0.4), 2.0);
        CHECK(std::abs(d0.F) < 1e-12); // unbiased: vanishing drift
    }

    SUBCASE("constant and quadratic feedback") {
        auto mu = MeasurementDistribution::gaussian1d(1.0);
        auto dc = diffusion_coefficients(mu, FeedbackLaw::constant(0.3));
        CHECK(dc.B == doctest::Approx(0.3 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-10));
        CHECK(dc.C == doctest::Approx(0.09 / 2).epsilon(1e-8));

        auto dq = diffusion_coefficients(mu, FeedbackLaw::quadratic(0.2));
        // |q| kink limits the generic quadrature here
        CHECK(dq.B == doctest::Approx(0.2 * std::sqrt(2 / std::numbers::pi)).epsilon(1e-3));
        CHECK(dq.C == doctest::Approx(0.04 * 3.0 / 2).epsilon(1e-6));
    }

    SUBCASE("dual-formula identity on a non-Gaussian mixture") {
        auto mu = mixture_mu();
        // the call itself asserts the two A-paths agree to 1e-6
        auto d = diffusion_coefficients(mu, FeedbackLaw::linear(0.3));
        CHECK(d.A == doctest::Approx(conjugate_nu(mu).moment(2) / 2).epsilon(1e-12));
        CHECK(d.A > 0);
        CHECK(d.C == doctest::Approx(0.09 * dist_moment(mu, 2) / 2).epsilon(1e-8));
    }

    SUBCASE("3D Gaussian") {
        VectorXd s(3), b(3);
        s << 1.0, 2.0, 0.5;
        b << 0.0, 0.1, 0.0;
        auto mu = MeasurementDistribution::gaussian3d(s, b);
        auto d = diffusion_coefficients(mu, FeedbackLaw::linear(0.5), 1.5);
        CHECK(d.A3(1, 1) == doctest::Approx(1.0 / 32).epsilon(1e-12));
        CHECK(d.B3(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(d.C3(2, 2) == doctest::Approx(0.25 * 0.25 / 2).epsilon(1e-12));
        CHECK(d.C3(1, 1) == doctest::Approx(0.25 * (4 + 0.01) / 2).epsilon(1e-12));
        CHECK(d.F3(1) == doctest::Approx(1.5 * 0.5 * 0.1).epsilon(1e-12));
    }
}

TEST_CASE("Lindblad form reproduces the double-commutator generator") {
    Grid g = make_grid(32, 6.0);
    double Gamma = 0.7, alpha = 0.3, sigma = 1.4;
    auto lb = caldeira_leggett_lindblads(Gamma, alpha, sigma);
    auto rho = random_mixed_state(g, 3, 4242);

    MatrixXcd d1 = cl_dissipator(lb, rho);

    double A = 1.0 / (8 * sigma * sigma);
    double B = alpha / 2;
    double C = alpha * alpha * sigma * sigma / 2;
    MatrixXcd X = position_matrix(g);
    MatrixXcd P = MatrixXcd(g.pv.cast<cplx>().asDiagonal());
    auto comm = [](const MatrixXcd& a, const MatrixXcd& b) { return a * b - b * a; };
    MatrixXcd d2 = -Gamma * (A * comm(P, comm(P, rho.rho)) +
                             cplx(0, 1) * B * comm(X, MatrixXcd(P * rho.rho + rho.rho * P)) +
                             C * comm(X, comm(X, rho.rho)));

    double scale = d2.cwiseAbs().maxCoeff();
    CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-10 * scale);
}

TEST_CASE("evolve_CL: unitary limit, free-particle drift and diffusion") {
    Grid g = make_grid(64, 6.0);
    auto h = Hamiltonian::free_particle(1.0);
    auto rho0 = to_density(gaussian_state(g, 0.0, 1.0, 1.0));

    SUBCASE("Gamma = 0 is unitary") {
        auto lb = caldeira_leggett_lindblads(0.0, 0.2, 1.5);
        auto res = evolve_CL(h, lb, rho0, 1.0, 2e-3, 500);
        CHECK(std::abs(res.energy[res.energy.size() - 1] - res.energy[0]) < 1e-10);
        // free spreading: <p> constant, <x> = <p> t / m
        CHECK(std::abs(res.moments.back().m1.p - 1.0) < 1e-9);
        CHECK(std::abs(res.moments.back().m1.x - 1.0) < 1e-9);
    }

    SUBCASE("momentum drift and position diffusion rates") {
        double Gamma = 0.5, alpha = 0.2, sigma = 1.5;
        auto lb = caldeira_leggett_lindblads(Gamma, alpha, sigma);
        auto res = evolve_CL(h, lb, rho0, 2.0, 2e-3, 50);

        // d<p>/dt = -2 Gamma hbar B <p> = -Gamma alpha <p>
        double p_expect = std::exp(-Gamma * alpha * 2.0);
        CHECK(std::abs(res.moments.back().m1.p - p_expect) < 1e-4);

        // d<x^2>/dt = <{x,p}>/m + 2 Gamma hbar^2 A
        double A = 1.0 / (8 * sigma * sigma);
        long k = res.times.size() / 2;
        double dtk = res.times[k + 1] - res.times[k - 1];
        double lhs = (res.moments[k + 1].m1.xx - res.moments[k - 1].m1.xx) / dtk;
        double rhs = res.moments[k].m1.xp + 2 * Gamma * A;
        CHECK(std::abs(lhs - rhs) < 1e-2 * std::abs(rhs));
    }
}

TEST_CASE("evolve_CL: positivity, trace and Hermiticity over 10 periods") {
    Grid g = make_grid(32, 6.0);
    auto h = Hamiltonian::harmonic(1.0, 1.0);
    auto lb = caldeira_leggett_lindblads(0.5, 0.1, 3.0);
    auto rho0 = to_density(gaussian_state(g, 0.0, 0.0, std::sqrt(0.5)));

    double t_final = 10 * 2 * std::numbers::pi;
    auto res = evolve_CL(h, lb, rho0, t_final, 1.8e-3, 1 << 20, 1 << 20);
    REQUIRE(res.snapshots.size() == 1);
    const GridState& fin = res.snapshots.back();
    CHECK(std::abs(fin.trace().real() - 1.0) < 1e-8);
    CHECK(fin.hermiticity_error() < 1e-11); // structural, rounding only
    CHECK(fin.min_eigenvalue() > -1e-7);
}

TEST_CASE("full channel vs diffusion limit") {
    Grid g = make_grid(64, 6.0);
    auto h = Hamiltonian::free_particle(1.0);
    auto rho0 = to_density(gaussian_state(g, 0.0, 0.0, 1.0)); // Delta p = 0.5

    auto spec_for = [&](double alpha, double sigma) {
        ChannelSpec spec;
        spec.mu = MeasurementDistribution::gaussian1d(sigma);
        spec.feedback = FeedbackLaw::linear(alpha);
        spec.rate = 1.0;
        return spec;
    };

    SUBCASE("broad mu, weak feedback: < 1% over one relaxation time") {
        auto spec = spec_for(0.05, 5.0); // sigma / Delta p_state = 10
        double t_rel = 1.0 / (spec.rate * 0.05 * (2 - 0.05));
        auto cmp = compare_full_vs_diffusion(h, spec, rho0, t_rel);
        CHECK(cmp.max_rel_second < 0.01);
        CHECK(cmp.trace_dist.maxCoeff() < 0.1);
    }

    SUBCASE("sharp mu, strong feedback: diffusion limit invalid") {
        auto spec = spec_for(0.8, 0.5);
        auto cmp = compare_full_vs_diffusion(h, spec, rho0, 1.0);
        CHECK(cmp.max_rel_second > 0.02);
    }

    SUBCASE("halving alpha and doubling broadness shrinks the error") {
        double e1 = compare_full_vs_diffusion(h, spec_for(0.2, 2.5), rho0, 2.0).max_rel_second;
        double e2 = compare_full_vs_diffusion(h, spec_for(0.1, 5.0), rho0, 2.0).max_rel_second;
        double e3 = compare_full_vs_diffusion(h, spec_for(0.05, 10.0), rho0, 2.0).max_rel_second;
        CHECK(e1 > e2);
        CHECK(e2 > e3);
    }
}
