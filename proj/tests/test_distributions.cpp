#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "friction/distributions.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

using namespace friction;

namespace {

// uniform gaussian table on [-L, L]
MeasurementDistribution gaussian_table(int n, double L, double sigma, double bias = 0.0) {
    VectorXd q(n), w(n);
    for (int j = 0; j < n; ++j) {
        q[j] = -L + 2.0 * L * j / (n - 1);
        const double u = (q[j] - bias) / sigma;
        w[j] = std::exp(-0.5 * u * u);
    }
    return MeasurementDistribution::tabulated(q, w);
}

MeasurementDistribution mixture_table(int n, double L, double s, double sep) {
    VectorXd q(n), w(n);
    for (int j = 0; j < n; ++j) {
        q[j] = -L + 2.0 * L * j / (n - 1);
        const double a = (q[j] - sep) / s, b = (q[j] + sep) / s;
        w[j] = std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b);
    }
    return MeasurementDistribution::tabulated(q, w);
}

} // namespace

TEST_CASE("construction and validation") {
    CHECK_THROWS_AS(MeasurementDistribution::gaussian1d(-1.0), std::invalid_argument);
    // non-decaying tails rejected
    VectorXd q = VectorXd::LinSpaced(32, -3, 3);
    VectorXd w = VectorXd::Constant(32, 1.0);
    CHECK_THROWS_AS(MeasurementDistribution::tabulated(q, w), std::invalid_argument);
    // negative density rejected
    VectorXd w2 = (-q.array().square()).exp();
    w2[5] = -0.1;
    CHECK_THROWS_AS(MeasurementDistribution::tabulated(q, w2), std::invalid_argument);
    // gaussian normalization
    auto mu = MeasurementDistribution::gaussian1d(2.0, 0.3);
    CHECK(expectation_mu(mu, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("moments") {
    CHECK(dist_moment(MeasurementDistribution::gaussian1d(2.0), 2) == doctest::Approx(4.0));
    CHECK(dist_moment(MeasurementDistribution::gaussian1d(1.0, 0.5), 1) == doctest::Approx(0.5));
    // two-point symmetric density at +-1
    VectorXd q = VectorXd::LinSpaced(41, -2, 2), w = VectorXd::Zero(41);
    w[10] = 1.0; // q = -1
    w[30] = 1.0; // q = +1
    auto mu = MeasurementDistribution::tabulated(q, w);
    CHECK(dist_moment(mu, 1) == doctest::Approx(0.0));
    CHECK(dist_moment(mu, 2) == doctest::Approx(1.0));
    // tabulated gaussian matches analytic moments
    auto gt = gaussian_table(801, 12.0, 1.3, 0.4);
    CHECK(dist_moment(gt, 1) == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(dist_moment(gt, 2) == doctest::Approx(1.3 * 1.3 + 0.16).epsilon(1e-8));
}

TEST_CASE("conjugate distribution nu") {
    SUBCASE("gaussian: variance hbar^2 / 4 sigma^2") {
        for (double s : {0.5, 1.0, 2.0}) {
            auto nu = conjugate_nu(MeasurementDistribution::gaussian1d(s));
            CHECK(nu.moment(0) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(nu.moment(1) == doctest::Approx(0.0));
            CHECK(nu.moment(2) == doctest::Approx(0.25 / (s * s)).epsilon(1e-10));
        }
    }
    SUBCASE("bias does not affect nu") {
        auto a = conjugate_nu(MeasurementDistribution::gaussian1d(1.0, 0.0));
        auto b = conjugate_nu(MeasurementDistribution::gaussian1d(1.0, 0.7));
        CHECK((a.ws - b.ws).cwiseAbs().maxCoeff() < 1e-14);
        // and numerically through the tabulated path
        auto nt = conjugate_nu(gaussian_table(1025, 14.0, 1.0, 0.7));
        CHECK(nt.moment(2) == doctest::Approx(0.25).epsilon(1e-6));
    }
    SUBCASE("tabulated gaussian matches the analytic values") {
        auto nt = conjugate_nu(gaussian_table(1025, 14.0, 0.8));
        // evenness and normalization
        CHECK(nt.moment(0) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(nt.ws.minCoeff() > -1e-12);
        for (Eigen::Index j = 0; j < nt.ys.size(); ++j) {
            const double sy = 1.0 / (2.0 * 0.8);
            const double ref = std::exp(-0.5 * nt.ys[j] * nt.ys[j] / (sy * sy)) /
                               (sy * std::sqrt(2 * std::numbers::pi));
            CHECK(std::abs(nt.ws[j] - ref) < 1e-8);
        }
    }
    SUBCASE("delta-like mu (narrow but table-resolved) gives near-uniform nu") {
        auto nu = conjugate_nu(gaussian_table(2049, 16.0, 0.1));
        // flat to a couple percent over a window wide on the scale of mu
        double lo = 1e300, hi = 0;
        for (Eigen::Index j = 0; j < nu.ys.size(); ++j)
            if (std::abs(nu.ys[j]) < 1.0) {
                lo = std::min(lo, nu.ws[j]);
                hi = std::max(hi, nu.ws[j]);
            }
        CHECK((hi - lo) / hi < 0.03);
    }
    SUBCASE("coarse table rejected by Plancherel check") {
        CHECK_THROWS_AS(conjugate_nu(gaussian_table(33, 24.0, 0.4)), std::runtime_error);
    }
    SUBCASE("evenness") {
        auto nu = conjugate_nu(mixture_table(1025, 16.0, 0.9, 2.0));
        const Eigen::Index n = nu.ys.size();
        for (Eigen::Index j = 1; j < n; ++j)
            CHECK(std::abs(nu.ws[j] - nu.ws[n - j]) < 1e-10); // y_{n-j} = -y_j
    }
}

TEST_CASE("generalized square root of nu") {
    auto mu = MeasurementDistribution::gaussian1d(1.2, 0.5);
    // |sqrt_nu|^2 equals the (bias-independent) nu density
    auto nu = conjugate_nu(mu);
    for (double z : {-1.0, 0.0, 0.3, 2.0}) {
        cplx r = sqrt_nu_general(mu, z);
        const double sy = 1.0 / (2.0 * 1.2);
        const double ref = std::exp(-0.5 * z * z / (sy * sy)) /
                           (sy * std::sqrt(2 * std::numbers::pi));
        CHECK(std::norm(r) == doctest::Approx(ref).epsilon(1e-10));
    }
    // tabulated path agrees with the analytic gaussian expression
    auto gt = gaussian_table(1025, 16.0, 1.2, 0.5);
    for (double z : {-0.8, 0.0, 1.1}) {
        cplx a = sqrt_nu_general(mu, z);
        cplx b = sqrt_nu_general(gt, z);
        CHECK(std::abs(a - b) < 1e-7);
    }
}

TEST_CASE("uncertainty product") {
    // gaussian saturates hbar^2/4
    CHECK(uncertainty_product(MeasurementDistribution::gaussian1d(0.7)) ==
          doctest::Approx(0.25).epsilon(1e-9));
    CHECK(uncertainty_product(MeasurementDistribution::gaussian1d(3.0, 1.0)) ==
          doctest::Approx(0.25).epsilon(1e-9));
    // mixtures exceed the bound strictly
    CHECK(uncertainty_product(mixture_table(1025, 16.0, 0.8, 1.5)) > 0.25 * 1.01);
}

TEST_CASE("3d gaussian factorizes per axis") {
    VectorXd s(3), b(3);
    s << 0.5, 1.0, 2.0;
    b << 0.1, 0.0, -0.3;
    auto mu3 = MeasurementDistribution::gaussian3d(s, b);
    for (int ax = 0; ax < 3; ++ax) {
        auto n3 = conjugate_nu(mu3, ax);
        auto n1 = conjugate_nu(MeasurementDistribution::gaussian1d(s[ax], b[ax]));
        CHECK((n3.ws - n1.ws).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(dist_moment(mu3, 2, ax) == doctest::Approx(s[ax] * s[ax] + b[ax] * b[ax]));
    }
    CHECK_THROWS_AS(dist_moment(mu3, 2, 3), std::invalid_argument);
}

TEST_CASE("feedback laws") {
    auto lin = FeedbackLaw::linear(0.5);
    CHECK(lin(2.0) == doctest::Approx(1.0));
    CHECK(lin(-2.0) == doctest::Approx(-1.0));
    auto con = FeedbackLaw::constant(0.3);
    CHECK(con(5.0) == doctest::Approx(0.3));
    CHECK(con(-5.0) == doctest::Approx(-0.3));
    CHECK(con(0.0) == doctest::Approx(0.0));
    auto quad = FeedbackLaw::quadratic(0.2);
    CHECK(quad(3.0) == doctest::Approx(1.8));
    CHECK(quad(-3.0) == doctest::Approx(-1.8));
    VectorXd q = VectorXd::LinSpaced(11, 0, 10), f = q * 0.25;
    auto tab = FeedbackLaw::tabulated(q, f);
    CHECK(tab(4.4) == doctest::Approx(1.1));
    CHECK(tab(-4.4) == doctest::Approx(-1.1));
    CHECK_THROWS_AS(FeedbackLaw::constant(-1.0), std::invalid_argument);
}

TEST_CASE("csv round trip") {
    auto mu = mixture_table(257, 12.0, 0.9, 1.5);
    const char* path = "dist_roundtrip.csv";
    write_distribution_csv(path, mu);
    auto back = read_distribution_csv(path);
    CHECK((mu.qs - back.qs).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((mu.ws - back.ws).cwiseAbs().maxCoeff() < 1e-12);
    std::remove(path);
}
