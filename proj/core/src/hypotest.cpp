#include "covertfbl/hypotest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "covertfbl/errors.hpp"
#include "covertfbl/rng.hpp"
#include "covertfbl/specfun.hpp"

namespace covertfbl::hypotest {

namespace {
constexpr std::uint64_t kThresholdStream = 0xA11CE;
constexpr std::uint64_t kEstimateStream = 0xB0B;
constexpr std::uint64_t kAlphaCheckStream = 0xC4EC;
}  // namespace

void InfoDensitySpec::validate() const {
    if (n < 1) throw domain_error("InfoDensitySpec: n must be >= 1");
    if (!(power >= 0.0) || !std::isfinite(power))
        throw domain_error("InfoDensitySpec: power must be nonnegative");
    if (!(mu > 0.0 && mu <= 1.0))
        throw domain_error("InfoDensitySpec: mu must lie in (0,1]");
    if (!(radius_sq >= 0.0 && radius_sq <= power + 1e-12 * std::max(1.0, power)))
        throw domain_error("InfoDensitySpec: need 0 <= R <= P");
}

double h_from_sums(const InfoDensitySpec& spec, double sum_z, double sum_z2) {
    const double sp = spec.mu * spec.power;
    const double c = 1.0 / (2.0 * (1.0 + sp));
    const double n = static_cast<double>(spec.n);
    return 0.5 * n * std::log1p(sp) + n * spec.radius_sq * c +
           c * (2.0 * std::sqrt(spec.radius_sq) * sum_z - sp * sum_z2);
}

double g_from_sums(const InfoDensitySpec& spec, double sum_z, double sum_z2) {
    const double sp = spec.mu * spec.power;
    const double n = static_cast<double>(spec.n);
    return 0.5 * n * std::log1p(sp) - 0.5 * n * spec.radius_sq +
           0.5 * (2.0 * std::sqrt(spec.radius_sq * (1.0 + sp)) * sum_z - sp * sum_z2);
}

double summand_mean_nats(const InfoDensitySpec& spec) {
    const double sp = spec.mu * spec.power;
    return sp / (2.0 * (1.0 + sp));
}

double summand_var_nats(const InfoDensitySpec& spec) {
    const double sp = spec.mu * spec.power;
    const double c = 1.0 / (2.0 * (1.0 + sp));
    return c * c * (4.0 * spec.radius_sq + 2.0 * sp * sp);
}

SumStats draw_sum_stats_literal(long long n, std::uint64_t count, std::uint64_t seed) {
    SumStats out;
    out.sum_z.resize(count);
    out.sum_z2.resize(count);
    rng::for_each_chunk(count, seed,
                        [&](std::uint64_t, std::mt19937_64& eng, std::uint64_t first,
                            std::uint64_t c) {
                            std::normal_distribution<double> normal(0.0, 1.0);
                            for (std::uint64_t i = 0; i < c; ++i) {
                                double s = 0.0, s2 = 0.0;
                                for (long long k = 0; k < n; ++k) {
                                    const double z = normal(eng);
                                    s += z;
                                    s2 += z * z;
                                }
                                out.sum_z[first + i] = s;
                                out.sum_z2[first + i] = s2;
                            }
                        });
    return out;
}

SumStats draw_sum_stats_radial(long long n, std::uint64_t count, std::uint64_t seed) {
    SumStats out;
    out.sum_z.resize(count);
    out.sum_z2.resize(count);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double shape = 0.5 * static_cast<double>(n - 1);
    rng::for_each_chunk(count, seed,
                        [&](std::uint64_t, std::mt19937_64& eng, std::uint64_t first,
                            std::uint64_t c) {
                            std::normal_distribution<double> normal(0.0, 1.0);
                            std::gamma_distribution<double> chi2(shape, 2.0);
                            for (std::uint64_t i = 0; i < c; ++i) {
                                const double a = sqrt_n * normal(eng);
                                const double w = (n > 1) ? chi2(eng) : 0.0;
                                out.sum_z[first + i] = a;
                                out.sum_z2[first + i] = w + a * a / static_cast<double>(n);
                            }
                        });
    return out;
}

namespace {

SumStats draw_sums(const InfoDensitySpec& spec, std::uint64_t count, std::uint64_t seed,
                   SampleMode mode) {
    return mode == SampleMode::literal ? draw_sum_stats_literal(spec.n, count, seed)
                                       : draw_sum_stats_radial(spec.n, count, seed);
}

std::vector<double> map_sums(const InfoDensitySpec& spec, const SumStats& s,
                             double (*f)(const InfoDensitySpec&, double, double)) {
    std::vector<double> v(s.sum_z.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = f(spec, s.sum_z[i], s.sum_z2[i]);
    return v;
}

}  // namespace

std::vector<double> sample_h(const InfoDensitySpec& spec, std::uint64_t count,
                             std::uint64_t seed, SampleMode mode) {
    spec.validate();
    if (count < 1) throw domain_error("sample_h: count must be >= 1");
    return map_sums(spec, draw_sums(spec, count, seed, mode), h_from_sums);
}

std::vector<double> sample_g(const InfoDensitySpec& spec, std::uint64_t count,
                             std::uint64_t seed, SampleMode mode) {
    spec.validate();
    if (count < 1) throw domain_error("sample_g: count must be >= 1");
    return map_sums(spec, draw_sums(spec, count, seed, mode), g_from_sums);
}

ThresholdSolve solve_threshold(const InfoDensitySpec& spec, double alpha,
                               std::uint64_t count, std::uint64_t seed, SampleMode mode) {
    spec.validate();
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("solve_threshold: alpha must lie in (0,1)");
    if (count < 10000) throw domain_error("solve_threshold: count must be >= 1e4");

    std::vector<double> h =
        sample_h(spec, count, rng::derive(seed, kThresholdStream), mode);
    const auto k = static_cast<std::size_t>(
        std::clamp<double>(std::floor((1.0 - alpha) * static_cast<double>(count)), 0.0,
                           static_cast<double>(count - 1)));
    std::nth_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(k), h.end());
    ThresholdSolve out;
    out.log_gamma = h[k];
    out.samples = count;

    const std::vector<double> fresh =
        sample_h(spec, count, rng::derive(seed, kAlphaCheckStream), mode);
    std::uint64_t above = 0;
    for (double x : fresh) above += (x >= out.log_gamma);
    out.alpha_achieved = static_cast<double>(above) / static_cast<double>(count);
    return out;
}

namespace {

// Tilted-mean beta from H-samples and a fixed threshold. Weights
// e^{-H} are accumulated with a max-shift so the log value never
// underflows while any sample clears the threshold.
BetaEstimate beta_from_h(const std::vector<double>& h, double log_gamma) {
    const std::uint64_t n = h.size();
    double max_neg = -std::numeric_limits<double>::infinity();
    std::uint64_t above = 0;
    for (double x : h)
        if (x >= log_gamma) {
            ++above;
            max_neg = std::max(max_neg, -x);
        }
    if (above < 100) throw insufficient_tail_samples(above, n);

    double s1 = 0.0, s2 = 0.0;
    for (double x : h)
        if (x >= log_gamma) {
            const double w = std::exp(-x - max_neg);
            s1 += w;
            s2 += w * w;
        }
    const double nn = static_cast<double>(n);
    BetaEstimate out;
    out.samples = n;
    out.alpha_achieved = static_cast<double>(above) / nn;
    const double log_beta = max_neg + std::log(s1 / nn);
    out.log2_value = log_beta * specfun::kLog2E;
    out.value = std::exp(log_beta);
    // normal CI on the mean of the (mostly zero) weight variable
    const double var = std::max(0.0, (s2 - s1 * s1 / nn) / (nn - 1.0));
    const double hw = 1.959963984540054 * std::exp(max_neg) * std::sqrt(var / nn);
    out.ci_low = std::max(0.0, out.value - hw);
    out.ci_high = std::min(1.0, out.value + hw);
    return out;
}

}  // namespace

BetaEstimate beta_at_threshold(const InfoDensitySpec& spec, double log_gamma,
                               std::uint64_t count, std::uint64_t seed, SampleMode mode) {
    spec.validate();
    const std::vector<double> h =
        sample_h(spec, count, rng::derive(seed, kEstimateStream), mode);
    return beta_from_h(h, log_gamma);
}

BetaEstimate beta_at_alpha(const InfoDensitySpec& spec, double alpha,
                           std::uint64_t count, std::uint64_t seed, SampleMode mode) {
    const ThresholdSolve t = solve_threshold(spec, alpha, count, seed, mode);
    return beta_at_threshold(spec, t.log_gamma, count, seed, mode);
}

BetaEstimate beta_direct_null(const InfoDensitySpec& spec, double log_gamma,
                              std::uint64_t count, std::uint64_t seed, SampleMode mode) {
    spec.validate();
    const std::vector<double> g =
        sample_g(spec, count, rng::derive(seed, kEstimateStream + 1), mode);
    std::uint64_t above = 0;
    for (double x : g) above += (x >= log_gamma);
    const auto p = rng::wilson(above, count);
    BetaEstimate out;
    out.value = p.p;
    out.log2_value = p.p > 0.0 ? std::log2(p.p) : -std::numeric_limits<double>::infinity();
    out.ci_low = p.lo;
    out.ci_high = p.hi;
    out.samples = count;
    out.alpha_achieved = std::numeric_limits<double>::quiet_NaN();
    return out;
}

double beta_exact_1d(double power, double mu, double radius_sq, double alpha) {
    if (!(power >= 0.0)) throw domain_error("beta_exact_1d: power must be >= 0");
    if (!(mu > 0.0 && mu <= 1.0)) throw domain_error("beta_exact_1d: mu in (0,1]");
    if (!(radius_sq >= 0.0 && radius_sq <= power + 1e-12))
        throw domain_error("beta_exact_1d: need 0 <= R <= P");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw domain_error("beta_exact_1d: alpha must lie in (0,1]");
    if (alpha == 1.0) return 1.0;

    const double sp = mu * power;
    const double root_r = std::sqrt(radius_sq);

    if (sp == 0.0) {
        // pure mean-shift test between N(sqrt(R),1) and N(0,1)
        if (radius_sq == 0.0) return alpha;  // identical hypotheses
        const double y0 = root_r + specfun::gaussian_tail_q_inv(alpha);
        return specfun::gaussian_tail_q(y0);
    }

    const double s2 = 1.0 + sp;
    const double s = std::sqrt(s2);
    // i(y) = ln s - (y - sqrt(R))^2/2 + y^2/(2 s^2): a downward parabola, so
    // {i >= t} is the interval between its roots.
    const double curv = sp / (2.0 * s2);           // -d2i/dy2 / 2
    const double y_peak = root_r * s2 / sp;        // vertex
    const double i_peak = std::log(s) - 0.5 * (y_peak - root_r) * (y_peak - root_r) +
                          y_peak * y_peak / (2.0 * s2);

    const auto alpha_of = [&](double t) {
        if (t >= i_peak) return 0.0;
        const double half = std::sqrt((i_peak - t) / curv);
        const double y1 = y_peak - half, y2 = y_peak + half;
        return specfun::gaussian_tail_q(y1 - root_r) - specfun::gaussian_tail_q(y2 - root_r);
    };

    double lo = i_peak - 1.0, hi = i_peak;
    while (alpha_of(lo) < alpha) {
        lo = i_peak - 2.0 * (i_peak - lo);
        if (i_peak - lo > 1e8) throw solver_error("beta_exact_1d: alpha bracket failed");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (alpha_of(mid) >= alpha)
            lo = mid;
        else
            hi = mid;
        if (std::abs(alpha_of(0.5 * (lo + hi)) - alpha) <= 1e-13) break;
    }
    const double t = 0.5 * (lo + hi);
    const double half = std::sqrt(std::max(0.0, i_peak - t) / curv);
    const double y1 = y_peak - half, y2 = y_peak + half;
    return specfun::gaussian_tail_q(y1 / s) - specfun::gaussian_tail_q(y2 / s);
}

BootstrapDiagnostic beta_threshold_bootstrap(const InfoDensitySpec& spec, double alpha,
                                             std::uint64_t count, std::uint64_t seed,
                                             int replicates) {
    spec.validate();
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("beta_threshold_bootstrap: alpha must lie in (0,1)");
    if (replicates < 2) throw domain_error("beta_threshold_bootstrap: replicates >= 2");

    const std::vector<double> base =
        sample_h(spec, count, rng::derive(seed, kThresholdStream), SampleMode::radial);
    const std::vector<double> est =
        sample_h(spec, count, rng::derive(seed, kEstimateStream), SampleMode::radial);
    const auto k = static_cast<std::size_t>(
        std::clamp<double>(std::floor((1.0 - alpha) * static_cast<double>(count)), 0.0,
                           static_cast<double>(count - 1)));

    double sum = 0.0, sum2 = 0.0;
    std::mt19937_64 eng(rng::derive(seed, 0xB0075));
    std::uniform_int_distribution<std::uint64_t> pick(0, count - 1);
    std::vector<double> resampled(count);
    for (int b = 0; b < replicates; ++b) {
        for (std::uint64_t i = 0; i < count; ++i) resampled[i] = base[pick(eng)];
        std::nth_element(resampled.begin(), resampled.begin() + static_cast<std::ptrdiff_t>(k),
                         resampled.end());
        const double beta = beta_from_h(est, resampled[k]).value;
        sum += beta;
        sum2 += beta * beta;
    }
    BootstrapDiagnostic out;
    out.replicates = replicates;
    out.beta_mean = sum / replicates;
    out.beta_sd = std::sqrt(std::max(0.0, (sum2 - sum * sum / replicates) / (replicates - 1)));
    return out;
}

}  // namespace covertfbl::hypotest
