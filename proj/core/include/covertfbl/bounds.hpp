#ifndef COVERTFBL_BOUNDS_HPP
#define COVERTFBL_BOUNDS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "covertfbl/covert.hpp"
#include "covertfbl/hypotest.hpp"

namespace covertfbl::bounds {

struct SamplingConfig {
    std::uint64_t count = 200000;  // per sample set
    std::uint64_t seed = 1;
};

struct ApproxTerms {
    double capacity_c = 0.0;     // C (or C_mu) in bits/symbol
    double dispersion_v = 0.0;   // V in bits^2
    double vhat = 0.0;           // Vhat_mu(P, R) in bits^2
    double third_moment_t = 0.0; // T_mu(P, R) in bits^3
    double be_constant_b = 0.0;  // B_mu = 6 T / Vhat^{3/2}, dimensionless
};

// C = (1/2) log2(1+P); V computed through both closed forms,
//   V = P(P+2)/(2(P+1)^2) log2^2(e)  and  V = [P log e / (2(1+P))]^2 (2 + 4/P),
// asserted equal to 1e-12.
ApproxTerms dispersion_terms(double power);

// Vhat_mu(P,R) = [log e / (2(1+mu P))]^2 (4R + 2 mu^2 P^2) by closed form;
// T_mu by Gaussian quadrature of |mu P + 2 sqrt(R) z - mu P z^2|^3 with panel
// splits at the roots of the quadratic; B = 6T / Vhat^{3/2}.
// capacity_c/dispersion_v are filled with C_mu and V(mu P).
ApproxTerms berry_esseen_constants(double power, double mu, double radius_sq);

struct ConverseResult {
    double bits = 0.0;
    bool degenerate = false;  // epsilon -> 1 limit: beta -> 0, bound unbounded
    hypotest::BetaEstimate beta;
};

// -log2 beta_{1-eps}(x^{n+1}, N(0, (1+P) I_{n+1})) at the equal-coordinate
// codeword of radius sqrt((n+1) P); upper-bounds log2 M under the maximal
// power constraint.
ConverseResult converse_equal_power(long long n, double epsilon, double power,
                                    const SamplingConfig& mc);

struct NormalApproxResult {
    double bits = 0.0;
    bool clamped = false;
};

// n C(n) - sqrt(n V(n)) Qinv(eps) + (1/2) log2 n, the O(1) term set to 0.
NormalApproxResult converse_normal_approx(long long n, double epsilon, double power);

struct AchievabilityResult {
    double bits = 0.0;
    double tau_star = 0.0;
    double r_star = 0.0;
    bool clamped = false;
    hypotest::BetaEstimate beta;  // at (tau_star, r_star)
};

// max over a log grid of tau in (0, eps) of
//   log2(tau) - log2( sup_{R in [mu^2 P, P]} beta_{1-eps+tau}(R) ),
// clamped below at 0 bits. beta is evaluated at the equal-coordinate
// representative for each R; threshold and estimate sample sets are shared
// across the whole grid but use independent seeds.
AchievabilityResult achievability_mc(const covert::CovertParams& params, double power,
                                     const SamplingConfig& mc, int tau_grid = 16,
                                     int r_grid = 16);

struct NaObjective {
    double bits = 0.0;
    double qinv_arg = 0.0;  // 1 - eps + 2 B / sqrt(n)
    bool alpha_valid = false;
};

// One evaluation of the achievability normal-approximation display at fixed
// (R, tau0); no feasibility filtering.
NaObjective achievability_na_objective(const covert::CovertParams& params, double power,
                                       double radius_sq, double tau0);

struct AchievabilityNaResult {
    double bits = 0.0;
    bool feasible = false;  // some (tau0, R) satisfied the constraints
    bool clamped = false;
    double tau0_star = 0.0;
    double r_star = 0.0;
};

// Full display: maximize the R-dependent part over R in [mu^2 P, P] subject
// to tau0 <= B_mu(P,R)/sqrt(n) <= n eps/(n+1) (and a proper Qinv argument),
// then over the tau0 grid. Ties in R break to the largest R.
AchievabilityNaResult achievability_normal_approx(const covert::CovertParams& params,
                                                  double power, int tau0_grid = 16);

enum class SweepAxis { n, delta, epsilon };

struct BoundPoint {
    covert::CovertParams params;
    bool ok = false;
    std::string status;  // error text for failed rows

    double power = 0.0;
    double trunc_mass = 0.0;
    double kl_nats = 0.0;
    double tvd_certificate = 0.0;

    double achievability_bits = 0.0;
    double converse_bits = 0.0;
    double achievability_na_bits = 0.0;
    double converse_na_bits = 0.0;

    double tau_star = 0.0;
    double r_star = 0.0;
    double tau0_star = 0.0;

    bool ach_clamped = false;
    bool conv_degenerate = false;
    bool na_feasible = false;
    bool conv_na_clamped = false;

    hypotest::BetaEstimate ach_beta;
    hypotest::BetaEstimate conv_beta;
};

struct SweepConfig {
    SamplingConfig mc;
    int tau_grid = 16;
    int r_grid = 16;
    int tau0_grid = 16;
    bool neglect_truncation = false;
};

// One BoundPoint per axis value: solve_power then all four bounds. Rows
// where the solve or a bound fails carry the error text, never fabricated
// values. Row seeds derive from (mc.seed, axis, value).
std::vector<BoundPoint> sweep(const covert::CovertParams& base, SweepAxis axis,
                              const std::vector<double>& values, const SweepConfig& cfg);

// Single point evaluated with the same machinery as sweep.
BoundPoint evaluate_point(const covert::CovertParams& params, const SweepConfig& cfg,
                          std::uint64_t row_seed);

}  // namespace covertfbl::bounds

#endif
