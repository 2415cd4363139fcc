#ifndef COVERTFBL_COVERT_HPP
#define COVERTFBL_COVERT_HPP

#include <cstdint>
#include <vector>

namespace covertfbl::covert {

// The experiment tuple. Noise variances are fixed to 1 on both channels;
// other variances are the caller's rescaling problem.
struct CovertParams {
    long long n = 500;     // blocklength
    double epsilon = 0.01; // target decoding error, in (0,1)
    double delta = 0.1;    // TVD budget, in (0,1)
    double mu = 0.8;       // shell parameter, in (0,1]
    double tol = 1e-10;    // KL residual tolerance, nats

    void validate() const;
};

struct KlDivergence {
    double nats = 0.0;
    double bits = 0.0;
};

struct PowerSolution {
    double power = 0.0;           // P(n), per-symbol, noise-variance units
    double trunc_mass = 0.0;      // Delta(n, mu)
    double trunc_complement = 0.0;// 1 - Delta, computed without cancellation
    double kl_nats = 0.0;         // D(P1 || P0) at the solved power
    double kl_bits = 0.0;
    double tvd_certificate = 0.0; // (1 - Delta) + sqrt(kl_nats / 2)
    double residual = 0.0;        // |kl_nats - target|
    bool truncation_neglected = false;
};

// Delta(n, mu) = P(n/2, n/(2 mu)) - P(n/2, n mu / 2): the probability that an
// i.i.d. N(0, mu P) vector lands in the shell mu^2 nP <= |x|^2 <= nP
// (P-invariant by scaling).
double truncation_mass(long long n, double mu);

// 1 - Delta as Q(n/2, n/(2 mu)) + P(n/2, n mu / 2); accurate when Delta ~ 1.
double truncation_complement(long long n, double mu);

// D(P1 || P0) for P1 = N(0, (1+P) I_n) vs P0 = N(0, I_n):
// nats = (n/2) (P - ln(1+P)), bits = nats * log2(e).
KlDivergence kl_output_vs_noise(long long n, double power);

// Asymptotic KL-constraint reference power 2 sqrt(delta / n). This is not
// the TVD solution; it is the large-n schedule under a KL budget.
double asymptotic_power(long long n, double delta);

// Solves (n/2)(P - ln(1+P)) = 2 (delta + Delta - 1)^2 for P by bisection on
// a bracket expanded geometrically from 4 sqrt(delta / n). With
// neglect_truncation the right-hand side is 2 delta^2 instead (Delta treated
// as 1 in the equation only); the reported certificate then exceeds delta.
PowerSolution solve_power(const CovertParams& params, bool neglect_truncation = false);

struct TvdEstimate {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t samples = 0;
};

// Monte Carlo estimate of V_T(P1bar, P0), the TVD between the output of the
// shell-truncated Gaussian input and pure noise, at oracle scale n <= 64.
// Both laws are spherically symmetric, so the TVD equals the TVD of the
// radius^2 laws; the alternative radius^2 density is a Poisson-type mixture
// of central chi-square densities obtained by integrating the noncentral
// chi-square over the shell radius law. Returns mean and 95% CI of
// E_{P0} |L - 1| / 2 with L the radius^2 likelihood ratio.
TvdEstimate tvd_monte_carlo_oracle(long long n, double power, double mu,
                                   std::uint64_t samples, std::uint64_t seed);

// Mixture weights of the radius^2 law under the alternative:
// density(s) = sum_j w[j] * chi2_{n+2j}(s). Exposed for the deterministic
// low-dimensional cross-checks.
std::vector<double> radial_mixture_weights(long long n, double power, double mu);

// Radius^2 likelihood ratio L(s) of the truncated-input output law against
// chi-square_n noise, evaluated from the mixture weights.
double radial_likelihood_ratio(long long n, const std::vector<double>& weights, double s);

}  // namespace covertfbl::covert

#endif
