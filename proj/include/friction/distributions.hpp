#pragma once
// Measurement outcome densities mu over momentum, their conjugate
// displacement densities nu (back-action), and feedback laws f(q).
//
// Square-root convention: the real non-negative root of mu is used
// everywhere; complex root phases are out of scope.

#include "friction/grid.hpp"

#include <functional>
#include <string>

namespace friction {

struct MeasurementDistribution {
    enum class Kind { Gaussian, Tabulated };
    Kind kind = Kind::Gaussian;
    int dims = 1;
    double hbar = 1.0;
    VectorXd sigma; // per axis (Gaussian)
    VectorXd bias;  // per axis (Gaussian)
    VectorXd qs;    // tabulated support (uniform, 1D)
    VectorXd ws;    // tabulated density values, normalized on construction

    static MeasurementDistribution gaussian1d(double sigma, double bias = 0.0,
                                              double hbar = 1.0);
    static MeasurementDistribution gaussian3d(const VectorXd& sigma, const VectorXd& bias,
                                              double hbar = 1.0);
    // Uniformly spaced table; normalized here. Rejects negative values and
    // tables whose tails violate q^2 mu(q) < 1e-10 max(mu) at the edges.
    static MeasurementDistribution tabulated(VectorXd q, VectorXd w, double hbar = 1.0);

    double density(double q, int axis = 0) const;      // tabulated: linear interp
    double sqrt_density(double q, int axis = 0) const; // real non-negative root
    bool is_gaussian() const { return kind == Kind::Gaussian; }

    // quadrature bounds and step that resolve the density on the given axis
    void support(int axis, double& lo, double& hi, double& step) const;
};

struct DisplacementDistribution {
    VectorXd ys;    // displacement grid
    VectorXd ws;    // nu values
    double hbar = 1.0;
    double moment(int order) const; // quadrature of y^k nu(y)
};

// nu = |FT(sqrt mu)|^2 on the conjugate grid. Gaussian mu uses the analytic
// form (variance hbar^2/4 sigma^2, centered, bias-independent); tabulated mu
// a direct transform. Errors when the Plancherel norm of the transform
// deviates from 1 by more than 1e-6 (table too coarse).
DisplacementDistribution conjugate_nu(const MeasurementDistribution& mu, int axis = 0);

// Complex-valued generalized root of nu,
//   sqrt_nu(z) = (2 pi hbar)^(-1/2) int dq exp(i q z / hbar) sqrt(mu(q)),
// whose modulus square is nu. Gaussian mu: analytic (bias enters as a phase).
cplx sqrt_nu_general(const MeasurementDistribution& mu, double z, int axis = 0);

// E[q^k] for k in {1,2}
double dist_moment(const MeasurementDistribution& mu, int order, int axis = 0);

// E_mu[g(q)] by quadrature over the resolved support
double expectation_mu(const MeasurementDistribution& mu,
                      const std::function<double(double)>& g, int axis = 0);

// Var_mu(q) * E_nu[y^2] per axis; always >= hbar^2/4 (asserted with 1e-6 slack)
double uncertainty_product(const MeasurementDistribution& mu, int axis = 0);

struct FeedbackLaw {
    enum class Kind { Linear, Constant, Quadratic, Tabulated };
    Kind kind = Kind::Linear;
    double coeff = 0.0; // alpha / alpha_C / alpha_S
    VectorXd qs, fs;    // tabulated

    static FeedbackLaw linear(double alpha) { return {Kind::Linear, alpha, {}, {}}; }
    static FeedbackLaw constant(double alpha_c);
    static FeedbackLaw quadratic(double alpha_s);
    static FeedbackLaw tabulated(VectorXd q, VectorXd f);

    // central in 1D: f(-q) = -f(q)
    double operator()(double q) const;
    bool is_linear() const { return kind == Kind::Linear; }
};

// two-column CSV (q, mu) I/O for tabulated distributions
MeasurementDistribution read_distribution_csv(const std::string& path, double hbar = 1.0);
void write_distribution_csv(const std::string& path, const MeasurementDistribution& mu);

} // namespace friction
