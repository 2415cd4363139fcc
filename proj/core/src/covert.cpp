#include "covertfbl/covert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "covertfbl/errors.hpp"
#include "covertfbl/rng.hpp"
#include "covertfbl/specfun.hpp"

namespace covertfbl::covert {

using specfun::kLog2E;

void CovertParams::validate() const {
    if (n < 1) throw domain_error("CovertParams: n must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw domain_error("CovertParams: epsilon must lie in (0,1)");
    if (!(delta > 0.0 && delta < 1.0))
        throw domain_error("CovertParams: delta must lie in (0,1)");
    if (!(mu > 0.0 && mu <= 1.0))
        throw domain_error("CovertParams: mu must lie in (0,1]");
    if (!(tol > 0.0)) throw domain_error("CovertParams: tol must be positive");
}

namespace {
void check_shell_args(long long n, double mu) {
    if (n < 1) throw domain_error("truncation_mass: n must be >= 1");
    if (!(mu > 0.0 && mu <= 1.0))
        throw domain_error("truncation_mass: mu must lie in (0,1]");
}
}  // namespace

double truncation_mass(long long n, double mu) {
    check_shell_args(n, mu);
    const double a = 0.5 * static_cast<double>(n);
    const double z_hi = 0.5 * static_cast<double>(n) / mu;
    const double z_lo = 0.5 * static_cast<double>(n) * mu;
    const double d = specfun::reg_lower_inc_gamma(a, z_hi) -
                     specfun::reg_lower_inc_gamma(a, z_lo);
    return std::clamp(d, 0.0, 1.0);
}

double truncation_complement(long long n, double mu) {
    check_shell_args(n, mu);
    const double a = 0.5 * static_cast<double>(n);
    const double z_hi = 0.5 * static_cast<double>(n) / mu;
    const double z_lo = 0.5 * static_cast<double>(n) * mu;
    return std::clamp(specfun::reg_upper_inc_gamma(a, z_hi) +
                          specfun::reg_lower_inc_gamma(a, z_lo),
                      0.0, 1.0);
}

KlDivergence kl_output_vs_noise(long long n, double power) {
    if (!(power >= 0.0) || !std::isfinite(power))
        throw domain_error("kl_output_vs_noise: power must be nonnegative");
    KlDivergence d;
    d.nats = 0.5 * static_cast<double>(n) * (power - std::log1p(power));
    d.bits = d.nats * kLog2E;
    return d;
}

double asymptotic_power(long long n, double delta) {
    if (n < 1) throw domain_error("asymptotic_power: n must be >= 1");
    if (!(delta > 0.0)) throw domain_error("asymptotic_power: delta must be positive");
    return 2.0 * std::sqrt(delta / static_cast<double>(n));
}

PowerSolution solve_power(const CovertParams& params, bool neglect_truncation) {
    params.validate();
    const double one_minus_delta_mass = truncation_complement(params.n, params.mu);
    if (one_minus_delta_mass >= params.delta)
        throw budget_exhausted(params.n, params.mu, params.delta, one_minus_delta_mass);

    const double margin =
        neglect_truncation ? params.delta : params.delta - one_minus_delta_mass;
    const double target = 2.0 * margin * margin;  // nats

    const auto kl = [&](double p) { return kl_output_vs_noise(params.n, p).nats; };

    double hi = 4.0 * std::sqrt(params.delta / static_cast<double>(params.n));
    int expansions = 0;
    while (kl(hi) < target) {
        hi *= 2.0;
        if (++expansions > 200)
            throw solver_error("solve_power: bracket expansion failed at n=" +
                               std::to_string(params.n));
    }
    double lo = 0.0;
    // D is strictly increasing in P, so plain bisection converges.
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (kl(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (std::abs(kl(0.5 * (lo + hi)) - target) <= params.tol * 0.25) break;
    }
    const double p = 0.5 * (lo + hi);

    PowerSolution sol;
    sol.power = p;
    sol.trunc_mass = truncation_mass(params.n, params.mu);
    sol.trunc_complement = one_minus_delta_mass;
    const KlDivergence d = kl_output_vs_noise(params.n, p);
    sol.kl_nats = d.nats;
    sol.kl_bits = d.bits;
    sol.tvd_certificate = one_minus_delta_mass + std::sqrt(0.5 * d.nats);
    sol.residual = std::abs(d.nats - target);
    sol.truncation_neglected = neglect_truncation;
    if (sol.residual > params.tol)
        throw solver_error("solve_power: residual " + std::to_string(sol.residual) +
                           " above tolerance at n=" + std::to_string(params.n));
    return sol;
}

namespace {

// Poisson-mixture weights: w[j] = E_r[ e^{-r^2/2} (r^2/2)^j / j! ] with r
// drawn from the shell radius law h(r). Then the alternative radius^2
// density is sum_j w[j] chi2_{n+2j}(s), and the likelihood ratio against
// chi2_n is the cancellation-free series
//   L(s) = sum_j w[j] (s/2)^j Gamma(n/2) / Gamma(n/2 + j).
std::vector<double> mixture_weights_impl(long long n, double power, double mu) {
    const double nP = static_cast<double>(n) * power;
    const double r_lo = mu * std::sqrt(nP);
    const double r_hi = std::sqrt(nP);
    const double lambda_max = r_hi * r_hi;

    // enough Poisson terms to push the tail below 1e-18
    int j_max = static_cast<int>(0.5 * lambda_max + 12.0 * std::sqrt(0.5 * lambda_max + 1.0) + 40.0);

    std::vector<double> w(static_cast<std::size_t>(j_max) + 1, 0.0);
    if (mu >= 1.0 || r_hi - r_lo < 1e-14 * r_hi) {
        // zero-width shell: conditioning on the radius sphere r = sqrt(nP)
        const double half_lam = 0.5 * lambda_max;
        for (int j = 0; j <= j_max; ++j)
            w[static_cast<std::size_t>(j)] =
                std::exp(-half_lam + j * std::log(half_lam > 0 ? half_lam : 1.0) -
                         std::lgamma(j + 1.0));
        if (half_lam == 0.0) {
            std::fill(w.begin(), w.end(), 0.0);
            w[0] = 1.0;
        }
        return w;
    }

    const double var = mu * power;  // per-coordinate input variance
    const auto& gl = specfun::gauss_legendre(64);
    const int n_panels = 32;
    const double h = (r_hi - r_lo) / n_panels;
    const double log_norm = std::log(2.0) - std::lgamma(0.5 * n) -
                            0.5 * n * std::log(2.0 * var);
    for (int p = 0; p < n_panels; ++p) {
        const double a = r_lo + p * h, mid = a + 0.5 * h, half = 0.5 * h;
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double r = mid + half * gl.nodes[k];
            const double log_h = log_norm + (n - 1.0) * std::log(r) -
                                 r * r / (2.0 * var);
            const double wh = gl.weights[k] * half * std::exp(log_h);
            const double half_lam = 0.5 * r * r;
            const double log_hl = std::log(half_lam);
            double log_pois = -half_lam;  // j = 0
            for (int j = 0; j <= j_max; ++j) {
                w[static_cast<std::size_t>(j)] += wh * std::exp(log_pois);
                log_pois += log_hl - std::log1p(static_cast<double>(j));
            }
        }
    }
    // the unnormalized mass integrates to Delta(n, mu); renormalize so the
    // weights form a probability vector
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0))
        throw solver_error("radial_mixture_weights: degenerate shell mass");
    for (double& x : w) x /= total;
    return w;
}

}  // namespace

std::vector<double> radial_mixture_weights(long long n, double power, double mu) {
    check_shell_args(n, mu);
    if (!(power >= 0.0)) throw domain_error("radial_mixture_weights: power must be >= 0");
    if (power == 0.0) return {1.0};
    return mixture_weights_impl(n, power, mu);
}

double radial_likelihood_ratio(long long n, const std::vector<double>& weights, double s) {
    const double a = 0.5 * static_cast<double>(n);
    const double lg_a = std::lgamma(a);
    const double log_s2 = std::log(0.5 * s);
    double L = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] <= 0.0) continue;
        const double t = std::log(weights[j]) + static_cast<double>(j) * log_s2 +
                         lg_a - std::lgamma(a + static_cast<double>(j));
        L += std::exp(t);
    }
    return L;
}

TvdEstimate tvd_monte_carlo_oracle(long long n, double power, double mu,
                                   std::uint64_t samples, std::uint64_t seed) {
    check_shell_args(n, mu);
    if (n > 64)
        throw scale_error("tvd_monte_carlo_oracle: n=" + std::to_string(n) +
                          " beyond oracle scale (n <= 64)");
    if (samples < 100000)
        throw domain_error("tvd_monte_carlo_oracle: need at least 1e5 samples");
    if (!(power >= 0.0)) throw domain_error("tvd_monte_carlo_oracle: power must be >= 0");

    const std::vector<double> w = radial_mixture_weights(n, power, mu);
    const double shape = 0.5 * static_cast<double>(n);

    const auto est = rng::chunked_mean(samples, seed, [&](std::mt19937_64& eng) {
        std::gamma_distribution<double> chi2(shape, 2.0);
        const double s = chi2(eng);
        return 0.5 * std::abs(radial_likelihood_ratio(n, w, s) - 1.0);
    });

    TvdEstimate out;
    out.mean = est.mean;
    out.ci_low = std::max(0.0, est.mean - est.half95);
    out.ci_high = std::min(1.0, est.mean + est.half95);
    out.samples = est.count;
    return out;
}

}  // namespace covertfbl::covert
