#pragma once
// The measurement-feedback channel Lambda in both Kraus representations:
// momentum-measurement operators L(q) = U(q) M(q) with M(q) = sqrt(mu(p-q))
// and the feedback kick U(q) = exp(-i f(q) x / hbar), and (for linear
// feedback) position-displacement operators K(y).

#include "friction/distributions.hpp"
#include "friction/moment_state.hpp"
#include "friction/state.hpp"

#include <random>

namespace friction {

struct ChannelSpec {
    MeasurementDistribution mu;
    FeedbackLaw feedback;
    double rate = 1.0; // Gamma
    int dims = 1;      // grid operations are 1D only

    void validate() const; // throws on inconsistent parameters
    double alpha() const;  // linear feedback coefficient; throws otherwise
};

// Single Kraus operator L(q) applied to a state; result is unnormalized,
// with norm^2 (resp. trace) the outcome probability density.
WavefunctionState apply_L(const ChannelSpec& spec, double q, const WavefunctionState& s);
GridState apply_L(const ChannelSpec& spec, double q, const GridState& s);

// Lambda[rho] = int dq L(q) rho L(q)^dagger. Gaussian mu with linear feedback
// uses an exact diagonal-convolution fast path; otherwise the q-quadrature
// runs operator by operator. Trace-preserving to 1e-8 (checked).
GridState apply_channel(const ChannelSpec& spec, const GridState& s);

// Outcome q drawn from P(q) = int dp mu(p-q) |psi(p)|^2 by inverse CDF.
double sample_outcome(const ChannelSpec& spec, const WavefunctionState& s,
                      std::mt19937_64& rng);

// Position-representation Kraus operators (linear feedback, alpha > 0):
//   K(y) = sqrt(alpha/|1-alpha|) W(alpha) e^{i alpha p y/hbar}
//          sqrt_nu((alpha/(1-alpha))(x - y))
// where W(alpha) is the squeeze. alpha = 1 uses the sharp-position formula.
WavefunctionState apply_K(const ChannelSpec& spec, double y, const WavefunctionState& s);
GridState apply_K(const ChannelSpec& spec, double y, const GridState& s);
GridState apply_channel_via_K(const ChannelSpec& spec, const GridState& s);

// Dense momentum-basis kernel of K(y) (for operator-level comparisons).
MatrixXcd kraus_K_matrix(const ChannelSpec& spec, double y, const Grid& g);

// Squeeze W(alpha): x -> x/(1-alpha), p -> (1-alpha)p with the signed scale
// (alpha > 1 includes the parity flip). Errors when the rescaled state
// leaks past the grid (norm loss beyond 1e-8).
WavefunctionState squeeze(double alpha, const WavefunctionState& s);
GridState squeeze(double alpha, const GridState& s);

// Adjoint channel on moments. First moments close for any central feedback
// (evaluated at the mean); second moments require linear feedback.
MomentState adjoint_moment_map(const ChannelSpec& spec, const MomentState& m,
                               bool second_moments = true);

// Diagonal (in p) observable Lambda^dagger[p] = p - E_mu(u)[f(p - u)].
VectorXd adjoint_p_diag(const ChannelSpec& spec, const Grid& g);

// max_j |int dq mu(p_j - q) - 1| over the grid (POVM completeness).
double completeness_error(const ChannelSpec& spec, const Grid& g);

} // namespace friction
