#ifndef COVERTFBL_HYPOTEST_HPP
#define COVERTFBL_HYPOTEST_HPP

#include <cstdint>
#include <vector>

namespace covertfbl::hypotest {

// Hypothesis pair for the equal-coordinate codeword x = (sqrt(R),...,sqrt(R)):
// alternative P_{Y|X=x} = N(x, I_n), null Q_Y = N(0, (1 + mu P) I_n).
// Q_Y stands in for the exact truncated-input output law P_{Y^n}; every
// consumer of these statistics inherits that substitution.
struct InfoDensitySpec {
    long long n = 1;
    double power = 0.0;      // P
    double mu = 1.0;         // shell parameter
    double radius_sq = 0.0;  // R, per symbol; 0 <= R <= P

    void validate() const;
    double sigma_sq() const { return 1.0 + mu * power; }  // null variance
};

// Information density (nats) evaluated from the sums of the per-coordinate
// standard normals: sum_z = sum Z_i, sum_z2 = sum Z_i^2. Under the
// alternative, Y_i = sqrt(R) + Z_i; under the null, Y_i = sigma Z_i.
double h_from_sums(const InfoDensitySpec& spec, double sum_z, double sum_z2);
double g_from_sums(const InfoDensitySpec& spec, double sum_z, double sum_z2);

// Closed-form moments of the per-symbol summand S_i (nats):
// E S_i = mu P / (2 (1 + mu P)), Var S_i = (4R + 2 mu^2 P^2) / (2(1+mu P))^2.
double summand_mean_nats(const InfoDensitySpec& spec);
double summand_var_nats(const InfoDensitySpec& spec);

struct SumStats {
    std::vector<double> sum_z;
    std::vector<double> sum_z2;
};

// Literal path: n standard normals per draw.
SumStats draw_sum_stats_literal(long long n, std::uint64_t count, std::uint64_t seed);

// Radial path: the pair (sum Z_i, sum Z_i^2) is sampled exactly through
// sum Z ~ N(0, n) and sum Z^2 - (sum Z)^2 / n ~ chi2_{n-1}, independent.
// Identical law to the literal path at O(1) cost per draw.
SumStats draw_sum_stats_radial(long long n, std::uint64_t count, std::uint64_t seed);

enum class SampleMode { literal, radial };

// i.i.d. draws of H_n(R) / G_n(R) in nats.
std::vector<double> sample_h(const InfoDensitySpec& spec, std::uint64_t count,
                             std::uint64_t seed, SampleMode mode = SampleMode::literal);
std::vector<double> sample_g(const InfoDensitySpec& spec, std::uint64_t count,
                             std::uint64_t seed, SampleMode mode = SampleMode::literal);

struct ThresholdSolve {
    double log_gamma = 0.0;      // natural-log threshold on the information density
    double alpha_achieved = 0.0; // recomputed on a fresh seed
    std::uint64_t samples = 0;
};

// Empirical (1 - alpha)-quantile of H_n(R): P[H >= log_gamma] ~ alpha.
ThresholdSolve solve_threshold(const InfoDensitySpec& spec, double alpha,
                               std::uint64_t count, std::uint64_t seed,
                               SampleMode mode = SampleMode::radial);

struct BetaEstimate {
    double value = 0.0;
    double log2_value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t samples = 0;
    double alpha_achieved = 0.0;
};

// Neyman-Pearson false-alarm probability beta = Q_Y[i >= log gamma],
// estimated under the alternative through the exact change of measure
// beta = E_P[ e^{-i} 1{i >= log gamma} ]. The threshold comes from
// solve_threshold on an independent seed; log2_value is accumulated in the
// log domain so it stays finite whenever any sample clears the threshold.
BetaEstimate beta_at_alpha(const InfoDensitySpec& spec, double alpha,
                           std::uint64_t count, std::uint64_t seed,
                           SampleMode mode = SampleMode::radial);

// beta from a caller-supplied natural-log threshold (shared-threshold
// dual-estimator checks).
BetaEstimate beta_at_threshold(const InfoDensitySpec& spec, double log_gamma,
                               std::uint64_t count, std::uint64_t seed,
                               SampleMode mode = SampleMode::radial);

// Direct null-measure estimate Q_Y[i >= log gamma] from G-samples; only
// usable when beta is moderate.
BetaEstimate beta_direct_null(const InfoDensitySpec& spec, double log_gamma,
                              std::uint64_t count, std::uint64_t seed,
                              SampleMode mode = SampleMode::radial);

// n = 1 oracle: the log-likelihood ratio between N(sqrt(R), 1) and
// N(0, 1 + mu P) is a quadratic in y, so the acceptance region is an
// interval whose endpoints come from solving that quadratic; alpha and beta
// are then Gaussian tail expressions, solved to 1e-12 in alpha.
double beta_exact_1d(double power, double mu, double radius_sq, double alpha);

// Spread of beta across bootstrap-resampled thresholds (paired: the
// estimate sample set is held fixed). Diagnoses threshold-selection bias.
struct BootstrapDiagnostic {
    double beta_mean = 0.0;
    double beta_sd = 0.0;
    int replicates = 0;
};
BootstrapDiagnostic beta_threshold_bootstrap(const InfoDensitySpec& spec, double alpha,
                                             std::uint64_t count, std::uint64_t seed,
                                             int replicates = 32);

}  // namespace covertfbl::hypotest

#endif
