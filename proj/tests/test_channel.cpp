#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "friction/channel.hpp"

#include <numbers>

using namespace friction;

namespace {

Grid grid_for_channel() { return make_grid(128, 10.0); }

ChannelSpec gaussian_spec(double alpha, double sigma = 1.0, double bias = 0.0) {
    return {MeasurementDistribution::gaussian1d(sigma, bias), FeedbackLaw::linear(alpha),
            1.0, 1};
}

// Gaussian mu on a uniform table, for exercising the tabulated code paths
MeasurementDistribution gaussian_table(int n, double span, double sigma,
                                       double bias = 0.0) {
    VectorXd q(n), w(n);
    for (int j = 0; j < n; ++j) {
        q[j] = -span / 2 + span * j / (n - 1);
        const double u = (q[j] - bias) / sigma;
        w[j] = std::exp(-0.5 * u * u);
    }
    return MeasurementDistribution::tabulated(q, w);
}

// position-index reversal (parity) of a density matrix, exact on the grid
GridState parity_flip(const GridState& s) {
    const int n = s.grid.n;
    MatrixXcd rx, flipped(n, n);
    const Fourier& ft = fourier_for(s.grid);
    ft.rho_to_position(s.grid, s.rho, rx);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r)
            flipped(r, c) = rx((n - r) % n, (n - c) % n);
    GridState out{s.grid, MatrixXcd(n, n)};
    ft.rho_to_momentum(s.grid, flipped, out.rho);
    return out;
}

} // namespace

TEST_CASE("spec validation") {
    ChannelSpec bad = gaussian_spec(0.5);
    bad.rate = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ChannelSpec s = gaussian_spec(0.5);
    CHECK(s.alpha() == doctest::Approx(0.5));
    ChannelSpec c{MeasurementDistribution::gaussian1d(1.0), FeedbackLaw::constant(0.3),
                  1.0, 1};
    CHECK_THROWS_AS(c.alpha(), std::invalid_argument);
}

TEST_CASE("apply_L basics") {
    Grid g = grid_for_channel();
    ChannelSpec spec = gaussian_spec(0.0);
    WavefunctionState psi = gaussian_state(g, 0.4, 1.0, 1.2);

    SUBCASE("f = 0 is multiplication by sqrt(mu)") {
        WavefunctionState post = apply_L(spec, 0.7, psi);
        for (int j = 0; j < g.n; j += 7)
            CHECK(std::abs(post.psi[j] -
                           spec.mu.sqrt_density(g.p(j) - 0.7) * psi.psi[j]) < 1e-14);
    }

    SUBCASE("norm^2 integrates to one (POVM completeness)") {
        double total = 0;
        const double dq = g.dp;
        for (double q = -g.p_max - 8; q < g.p_max + 8; q += dq) {
            WavefunctionState post = apply_L(spec, q + dq / 2, psi);
            const double nn = post.norm();
            total += nn * nn * dq;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(completeness_error(spec, g) < 1e-8);
    }

    SUBCASE("narrow mu at the packet momentum kicks by -alpha p") {
        ChannelSpec narrow = gaussian_spec(0.4, 0.3);
        WavefunctionState packet = gaussian_state(g, 0.0, 2.0, 2.5);
        WavefunctionState post = apply_L(narrow, 2.0, packet);
        post.normalize();
        CHECK(moments_of(post).p == doctest::Approx(2.0 - 0.4 * 2.0).epsilon(1e-3));
    }

    SUBCASE("psi and rho applications agree") {
        ChannelSpec fb = gaussian_spec(0.6);
        WavefunctionState post = apply_L(fb, 1.3, psi);
        GridState postr = apply_L(fb, 1.3, to_density(psi));
        GridState ref = to_density(post);
        ref.rho *= postr.trace().real() / ref.trace().real();
        CHECK((postr.rho - ref.rho).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("oversized kick errors") {
        ChannelSpec wild{MeasurementDistribution::gaussian1d(1.0),
                         FeedbackLaw::linear(30.0), 1.0, 1};
        CHECK_THROWS_AS(apply_L(wild, 1.0, psi), std::runtime_error);
    }
}

TEST_CASE("apply_channel properties") {
    Grid g = grid_for_channel();
    GridState rho = random_mixed_state(g, 3, 77);

    SUBCASE("trace, hermiticity, positivity") {
        GridState out = apply_channel(gaussian_spec(0.5), rho);
        CHECK(std::abs(out.trace().real() - 1.0) < 1e-8);
        CHECK(out.hermiticity_error() < 1e-10);
        CHECK(out.min_eigenvalue() > -1e-10);
    }

    SUBCASE("f = 0: pure momentum-basis decoherence, diagonal preserved") {
        GridState out = apply_channel(gaussian_spec(0.0), rho);
        for (int j = 0; j < g.n; j += 9)
            CHECK(std::abs(out.rho(j, j) - rho.rho(j, j)) < 1e-10);
        // off-diagonal damping e^{-(p-p')^2/(8 sigma^2)}
        const double damp = std::exp(-std::pow(10 * g.dp, 2) / 8.0);
        for (int j = 20; j < g.n - 30; j += 13)
            CHECK(std::abs(out.rho(j + 10, j) - damp * rho.rho(j + 10, j)) < 1e-10);
    }

    SUBCASE("translation covariance") {
        const double z = 4 * g.dx;
        ChannelSpec spec = gaussian_spec(0.45);
        VectorXcd u(g.n);
        for (int j = 0; j < g.n; ++j)
            u[j] = std::polar(1.0, z * g.p(j) / g.hbar);
        GridState shifted{g, MatrixXcd(g.n, g.n)};
        shifted.rho = u.asDiagonal() * rho.rho * u.asDiagonal().inverse();
        GridState lhs = apply_channel(spec, shifted);
        GridState r0 = apply_channel(spec, rho);
        GridState rhs{g, u.asDiagonal() * r0.rho * u.asDiagonal().inverse()};
        CHECK(trace_distance(lhs, rhs) < 1e-8);
    }

    SUBCASE("mean momentum contracts by 1 - alpha") {
        for (double alpha : {0.3, 1.0, 1.6}) {
            GridState out = apply_channel(gaussian_spec(alpha), rho);
            // alpha > 1 expands the momentum support, so edge tails cost a
            // little extra on a finite grid
            const double tol = alpha <= 1.0 ? 1e-8 : 1e-7;
            CHECK(std::abs(moments_of(out).p - (1 - alpha) * moments_of(rho).p) < tol);
        }
    }

    SUBCASE("generic quadrature path matches the Gaussian fast path") {
        MeasurementDistribution tab = gaussian_table(801, 16.0, 0.9);
        VectorXd fq(9), ff(9);
        for (int i = 0; i < 9; ++i) {
            fq[i] = 2.5 * i; // magnitude table, odd extension is implicit
            ff[i] = 0.35 * fq[i];
        }
        ChannelSpec tab_spec{tab, FeedbackLaw::tabulated(fq, ff), 1.0, 1};
        ChannelSpec fast_spec = gaussian_spec(0.35, 0.9);
        GridState a = apply_channel(tab_spec, rho);
        GridState b = apply_channel(fast_spec, rho);
        // limited by the linear interpolation of the tabulated density
        CHECK(trace_distance(a, b) < 5e-5);
    }
}

TEST_CASE("Kraus equivalence of the two representations") {
    Grid g = grid_for_channel();

    SUBCASE("alpha sweep on random mixed states") {
        for (double alpha : {0.3, 0.5, 0.9, 1.5}) {
            for (unsigned long long seed : {11ull, 12ull, 13ull}) {
                GridState rho = random_mixed_state(g, 3, seed);
                ChannelSpec spec = gaussian_spec(alpha);
                GridState viaL = apply_channel(spec, rho);
                GridState viaK = apply_channel_via_K(spec, rho);
                CAPTURE(alpha);
                CAPTURE(seed);
                CHECK(trace_distance(viaL, viaK) < 1e-6);
            }
        }
    }

    SUBCASE("biased mu") {
        GridState rho = random_mixed_state(g, 2, 21);
        ChannelSpec spec = gaussian_spec(0.6, 0.8, 0.5);
        CHECK(trace_distance(apply_channel(spec, rho), apply_channel_via_K(spec, rho)) <
              1e-6);
    }

    SUBCASE("alpha = 1: sharp position measurement") {
        GridState rho = random_mixed_state(g, 3, 5);
        ChannelSpec spec = gaussian_spec(1.0);
        CHECK(trace_distance(apply_channel(spec, rho), apply_channel_via_K(spec, rho)) <
              1e-6);
    }

    SUBCASE("alpha > 1 requires the parity flip") {
        GridState rho = random_mixed_state(g, 3, 31);
        ChannelSpec spec = gaussian_spec(1.5);
        GridState viaK = apply_channel_via_K(spec, rho);
        GridState mirrored = parity_flip(viaK);
        // undoing the parity on the K result must break the equivalence
        CHECK(trace_distance(apply_channel(spec, rho), mirrored) > 1e-2);
    }

    SUBCASE("tabulated mu") {
        GridState rho = random_mixed_state(g, 2, 42);
        MeasurementDistribution tab = gaussian_table(901, 18.0, 1.1);
        ChannelSpec tspec{tab, FeedbackLaw::linear(0.5), 1.0, 1};
        ChannelSpec gspec = gaussian_spec(0.5, 1.1);
        CHECK(trace_distance(apply_channel_via_K(tspec, rho),
                             apply_channel(gspec, rho)) < 1e-5);
    }

    SUBCASE("alpha <= 0 rejected") {
        GridState rho = random_mixed_state(g, 2, 2);
        CHECK_THROWS_AS(apply_channel_via_K(gaussian_spec(0.0), rho),
                        std::invalid_argument);
        CHECK_THROWS_AS(apply_channel_via_K(gaussian_spec(-0.4), rho),
                        std::invalid_argument);
    }

    SUBCASE("channel equals the quadrature over single K(y)") {
        WavefunctionState psi = gaussian_state(g, 0.5, 1.0, 1.3);
        GridState rho = to_density(psi);
        ChannelSpec spec = gaussian_spec(0.5);
        MatrixXcd acc = MatrixXcd::Zero(g.n, g.n);
        const double dy = g.dx / 4;
        for (double y = -14.0; y < 14.0; y += dy) {
            WavefunctionState ky = apply_K(spec, y + dy / 2, psi);
            acc += dy * ky.psi * ky.psi.adjoint();
        }
        GridState viaOps{g, acc};
        CHECK(trace_distance(viaOps, apply_channel(spec, rho)) < 1e-7);
    }
}

TEST_CASE("squeeze") {
    Grid g = grid_for_channel();

    // widths below keep the compressed momentum spread above ~2 grid samples,
    // the resolution limit of the band-limited rescaling
    SUBCASE("variance scaling and unitarity") {
        WavefunctionState psi = gaussian_state(g, 0.3, 0.5, 0.7);
        WavefunctionState sq = squeeze(0.5, psi);
        CHECK(std::abs(sq.norm() - 1.0) < 1e-8);
        Moments1D m0 = moments_of(psi), m1 = moments_of(sq);
        CHECK(m1.xx - m1.x * m1.x ==
              doctest::Approx((m0.xx - m0.x * m0.x) * 4.0).epsilon(1e-8));
        CHECK(m1.pp - m1.p * m1.p ==
              doctest::Approx((m0.pp - m0.p * m0.p) * 0.25).epsilon(1e-8));
        CHECK(m1.x == doctest::Approx(m0.x * 2.0).epsilon(1e-8));
        CHECK(m1.p == doctest::Approx(m0.p * 0.5).epsilon(1e-8));
    }

    SUBCASE("alpha > 1 flips parity") {
        WavefunctionState psi = gaussian_state(g, 0.6, 0.8, 1.0);
        Moments1D m = moments_of(squeeze(1.5, psi));
        CHECK(m.x == doctest::Approx(-0.6 / 0.5).epsilon(1e-8));
        CHECK(m.p == doctest::Approx(-0.8 * 0.5).epsilon(1e-8));
    }

    SUBCASE("composition multiplies the scales") {
        WavefunctionState psi = gaussian_state(g, 0.0, 0.0, 0.4);
        WavefunctionState two = squeeze(0.4, squeeze(0.5, psi));
        Moments1D m0 = moments_of(psi), m2 = moments_of(two);
        const double sx = 1.0 / (0.6 * 0.5);
        CHECK(m2.xx == doctest::Approx(m0.xx * sx * sx).epsilon(1e-8));
    }

    SUBCASE("density-matrix squeeze matches the pure-state one") {
        WavefunctionState psi = gaussian_state(g, -0.4, 0.7, 0.45);
        GridState a = squeeze(0.7, to_density(psi));
        GridState b = to_density(squeeze(0.7, psi));
        CHECK(trace_distance(a, b) < 1e-8);
    }

    SUBCASE("support leaving the grid errors") {
        WavefunctionState wide = gaussian_state(g, 0.0, 0.0, 4.0);
        CHECK_THROWS_AS(squeeze(0.9, wide), std::runtime_error); // x stretched 10x
        CHECK_THROWS_AS(squeeze(1.0, wide), std::invalid_argument);
    }
}

TEST_CASE("sample_outcome statistics and determinism") {
    Grid g = grid_for_channel();
    WavefunctionState psi = gaussian_state(g, 0.0, 1.5, 1.0);
    ChannelSpec spec = gaussian_spec(0.5, 0.8, 0.2);

    std::mt19937_64 rng(2024);
    const int ns = 20000;
    double mean = 0, sqsum = 0;
    for (int i = 0; i < ns; ++i) {
        const double q = sample_outcome(spec, psi, rng);
        mean += q;
        sqsum += q * q;
    }
    mean /= ns;
    const double var = sqsum / ns - mean * mean;
    Moments1D m = moments_of(psi);
    // outcome density is mu convolved with |psi~|^2; mu peaking at p-q = bias
    // shifts outcomes to <p> - bias
    const double expect_mean = m.p - 0.2;
    const double expect_var = (m.pp - m.p * m.p) + 0.8 * 0.8;
    CHECK(std::abs(mean - expect_mean) < 4 * std::sqrt(expect_var / ns));
    CHECK(var == doctest::Approx(expect_var).epsilon(0.05));

    std::mt19937_64 r1(7), r2(7);
    for (int i = 0; i < 10; ++i)
        CHECK(sample_outcome(spec, psi, r1) == sample_outcome(spec, psi, r2));
}

TEST_CASE("adjoint moment maps against the grid") {
    Grid g = grid_for_channel();
    GridState rho = random_mixed_state(g, 3, 99);
    MomentState before = MomentState::from_state(rho);

    SUBCASE("linear feedback, biased Gaussian") {
        ChannelSpec spec = gaussian_spec(0.7, 0.9, 0.3);
        MomentState pred = adjoint_moment_map(spec, before);
        MomentState meas = MomentState::from_state(apply_channel(spec, rho));
        CHECK(std::abs(meas.m1.x - pred.m1.x) < 1e-6);
        CHECK(std::abs(meas.m1.p - pred.m1.p) < 1e-6);
        CHECK(std::abs(meas.m1.xx - pred.m1.xx) < 1e-6);
        CHECK(std::abs(meas.m1.xp - pred.m1.xp) < 1e-6);
        CHECK(std::abs(meas.m1.pp - pred.m1.pp) < 1e-6);
        pred.check_uncertainty(g.hbar);
    }

    SUBCASE("alpha = 0 leaves p and adds position diffusion") {
        ChannelSpec spec = gaussian_spec(0.0, 1.2);
        MomentState pred = adjoint_moment_map(spec, before);
        CHECK(pred.m1.p == doctest::Approx(before.m1.p));
        CHECK(pred.m1.xx ==
              doctest::Approx(before.m1.xx + std::pow(g.hbar / (2 * 1.2), 2)));
    }

    SUBCASE("nonlinear feedback: first moments only, from the outcome average") {
        ChannelSpec spec{MeasurementDistribution::gaussian1d(0.8),
                         FeedbackLaw::constant(0.6), 1.0, 1};
        // closure at the mean is approximate: use a packet well displaced
        // from p = 0 so sgn(q) is nearly constant over the outcome spread
        GridState disp = to_density(gaussian_state(g, 0.0, 3.0, 1.5));
        MomentState pred = adjoint_moment_map(spec, MomentState::from_state(disp), false);
        MomentState meas = MomentState::from_state(apply_channel(spec, disp));
        CHECK(std::abs(meas.m1.p - pred.m1.p) < 0.01);
        CHECK_THROWS_AS(adjoint_moment_map(spec, before, true), std::invalid_argument);
    }

    SUBCASE("diagonal observable form of the adjoint") {
        ChannelSpec spec{MeasurementDistribution::gaussian1d(0.7),
                         FeedbackLaw::quadratic(0.1), 1.0, 1};
        VectorXd d = adjoint_p_diag(spec, g);
        const double lhs = expectation(apply_channel(spec, rho), Observable::p()).real();
        const double rhs = expectation(rho, Observable::diag_p(d)).real();
        // limited by the q-quadrature resolving the feedback phases
        CHECK(std::abs(lhs - rhs) < 1e-5);
    }

    SUBCASE("3D factorizing mu: mixed moments stay uncorrelated") {
        MeasurementDistribution mu3 = MeasurementDistribution::gaussian3d(
            Eigen::Vector3d(1.0, 0.8, 1.2), Eigen::Vector3d::Zero());
        ChannelSpec spec{mu3, FeedbackLaw::linear(0.4), 1.0, 3};
        MomentState m;
        m.dims = 3;
        m.x3 << 0.5, -0.2, 0.1;
        m.p3 << 1.0, 0.3, -0.4;
        m.Rpp << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.8;
        m.Rxx = Eigen::Matrix3d::Identity();
        m.Rxp.setZero();
        MomentState out = adjoint_moment_map(spec, m);
        const double s = 1 - 0.4;
        CHECK(out.Rpp(0, 1) == doctest::Approx(s * s * m.Rpp(0, 1)));
        CHECK(out.Rpp(0, 0) ==
              doctest::Approx(s * s * m.Rpp(0, 0) + 0.4 * 0.4 * 1.0 * 1.0));
        CHECK(out.p3[1] == doctest::Approx(s * m.p3[1]));
        CHECK(out.Rxx(2, 2) == doctest::Approx(1.0 + std::pow(1.0 / (2 * 1.2), 2)));
    }
}

TEST_CASE("uncertainty guard") {
    MomentState bad = MomentState::from_1d({0, 0, 0.01, 0, 0.01});
    CHECK_THROWS_AS(bad.check_uncertainty(1.0), std::runtime_error);
    MomentState ok = MomentState::from_1d({0, 0, 1.0, 0, 1.0});
    CHECK_NOTHROW(ok.check_uncertainty(1.0));
}
