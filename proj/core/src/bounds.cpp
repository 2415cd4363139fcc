#include "covertfbl/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "covertfbl/errors.hpp"
#include "covertfbl/rng.hpp"
#include "covertfbl/specfun.hpp"

namespace covertfbl::bounds {

using specfun::kLog2E;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kConvStream = 11;
constexpr std::uint64_t kAchThresholdStream = 12;
constexpr std::uint64_t kAchEstimateStream = 13;
}  // namespace

ApproxTerms dispersion_terms(double power) {
    if (!(power > 0.0) || !std::isfinite(power))
        throw domain_error("dispersion_terms: power must be positive");
    ApproxTerms t;
    t.capacity_c = 0.5 * std::log1p(power) * kLog2E;
    const double v1 =
        power * (power + 2.0) / (2.0 * (power + 1.0) * (power + 1.0)) * kLog2E * kLog2E;
    const double c = power * kLog2E / (2.0 * (1.0 + power));
    const double v2 = c * c * (2.0 + 4.0 / power);
    if (std::abs(v1 - v2) > 1e-12 * std::max(1.0, std::abs(v1)))
        throw solver_error("dispersion_terms: V(P) closed forms disagree");
    t.dispersion_v = v1;
    t.vhat = v1;
    return t;
}

ApproxTerms berry_esseen_constants(double power, double mu, double radius_sq) {
    if (!(power > 0.0)) throw domain_error("berry_esseen_constants: power must be > 0");
    if (!(mu > 0.0 && mu <= 1.0))
        throw domain_error("berry_esseen_constants: mu must lie in (0,1]");
    if (!(radius_sq >= 0.0 && radius_sq <= power + 1e-12 * power))
        throw domain_error("berry_esseen_constants: need 0 <= R <= P");

    const double sp = mu * power;
    const double c_nats = 1.0 / (2.0 * (1.0 + sp));
    const double vhat_nats = c_nats * c_nats * (4.0 * radius_sq + 2.0 * sp * sp);

    // |S_i - E S_i|^3 with S centered: the argument mu P + 2 sqrt(R) z - mu P z^2
    // is quadratic; split the quadrature at its real roots (the |.|^3 kink).
    const double root_r = std::sqrt(radius_sq);
    specfun::QuadratureSpec qs;
    qs.node_count = 32;
    qs.domain_half_width = 16.0;
    if (sp > 0.0) {
        const double disc = std::sqrt(radius_sq + sp * sp);
        qs.split_points = {(root_r - disc) / sp, (root_r + disc) / sp};
        std::sort(qs.split_points.begin(), qs.split_points.end());
    } else if (radius_sq > 0.0) {
        qs.split_points = {0.0};
    }
    const double t_nats =
        c_nats * c_nats * c_nats *
        specfun::normal_expectation(
            [&](double z) {
                const double q = sp + 2.0 * root_r * z - sp * z * z;
                return std::abs(q * q * q);
            },
            qs);

    ApproxTerms out;
    out.capacity_c = 0.5 * std::log1p(sp) * kLog2E;
    out.dispersion_v = sp > 0.0 ? dispersion_terms(sp).dispersion_v : 0.0;
    out.vhat = vhat_nats * kLog2E * kLog2E;
    out.third_moment_t = t_nats * kLog2E * kLog2E * kLog2E;
    out.be_constant_b =
        vhat_nats > 0.0 ? 6.0 * t_nats / std::pow(vhat_nats, 1.5) : 0.0;
    return out;
}

ConverseResult converse_equal_power(long long n, double epsilon, double power,
                                    const SamplingConfig& mc) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw domain_error("converse_equal_power: epsilon must lie in (0,1)");
    ConverseResult out;
    const double alpha = 1.0 - epsilon;
    if (alpha * static_cast<double>(mc.count) < 200.0) {
        // epsilon -> 1: beta -> 0 and the bound blows up
        out.degenerate = true;
        out.bits = kInf;
        return out;
    }
    hypotest::InfoDensitySpec spec{n + 1, power, 1.0, power};
    out.beta = hypotest::beta_at_alpha(spec, alpha, mc.count,
                                       rng::derive(mc.seed, kConvStream));
    out.bits = std::max(0.0, -out.beta.log2_value);
    return out;
}

NormalApproxResult converse_normal_approx(long long n, double epsilon, double power) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw domain_error("converse_normal_approx: epsilon must lie in (0,1)");
    const ApproxTerms t = dispersion_terms(power);
    const double nn = static_cast<double>(n);
    const double bits = nn * t.capacity_c -
                        std::sqrt(nn * t.dispersion_v) * specfun::gaussian_tail_q_inv(epsilon) +
                        0.5 * std::log2(nn);
    NormalApproxResult out;
    out.clamped = bits < 0.0;
    out.bits = std::max(0.0, bits);
    return out;
}

namespace {

// Sorted H values plus suffix log-sum-exp tables of e^{-H}; beta at any
// threshold is then a binary search away.
struct TiltedTable {
    std::vector<double> h;     // ascending
    std::vector<double> lse1;  // lse1[j] = log sum_{i >= j} exp(-h[i])
    std::vector<double> lse2;  // same for exp(-2 h[i])

    static double log_add(double a, double b) {
        if (a == -kInf) return b;
        if (b == -kInf) return a;
        const double m = std::max(a, b);
        return m + std::log1p(std::exp(std::min(a, b) - m));
    }

    void build(std::vector<double> values) {
        h = std::move(values);
        std::sort(h.begin(), h.end());
        const std::size_t n = h.size();
        lse1.assign(n + 1, -kInf);
        lse2.assign(n + 1, -kInf);
        for (std::size_t j = n; j-- > 0;) {
            lse1[j] = log_add(-h[j], lse1[j + 1]);
            lse2[j] = log_add(-2.0 * h[j], lse2[j + 1]);
        }
    }

    std::size_t first_at_or_above(double t) const {
        return static_cast<std::size_t>(
            std::lower_bound(h.begin(), h.end(), t) - h.begin());
    }

    // log2 of the tilted-mean beta estimate at threshold t; count_above out.
    double log2_beta(double t, std::size_t& count_above) const {
        const std::size_t j = first_at_or_above(t);
        count_above = h.size() - j;
        if (count_above == 0) return -kInf;
        const double log_beta = lse1[j] - std::log(static_cast<double>(h.size()));
        return std::min(0.0, log_beta * kLog2E);
    }
};

hypotest::BetaEstimate beta_from_sorted(const TiltedTable& table, double t) {
    const std::size_t n = table.h.size();
    const std::size_t j = table.first_at_or_above(t);
    const std::size_t above = n - j;
    if (above < 100) throw insufficient_tail_samples(above, n);
    const double nn = static_cast<double>(n);
    const double log_s1 = table.lse1[j];
    const double log_s2 = table.lse2[j];
    hypotest::BetaEstimate out;
    out.samples = n;
    out.alpha_achieved = static_cast<double>(above) / nn;
    const double log_beta = log_s1 - std::log(nn);
    out.log2_value = std::min(0.0, log_beta * kLog2E);
    out.value = std::min(1.0, std::exp(log_beta));
    // Var = (S2 - S1^2/N) / (N-1), assembled in the log domain
    const double log_m2 = log_s2 - std::log(nn - 1.0);
    const double log_m1sq = 2.0 * log_s1 - std::log(nn) - std::log(nn - 1.0);
    double var = 0.0;
    if (log_m2 > log_m1sq)
        var = std::exp(log_m2 + std::log1p(-std::exp(log_m1sq - log_m2)));
    const double hw = 1.959963984540054 * std::sqrt(var / nn);
    out.ci_low = std::max(0.0, out.value - hw);
    out.ci_high = std::min(1.0, out.value + hw);
    return out;
}

}  // namespace

AchievabilityResult achievability_mc(const covert::CovertParams& params, double power,
                                     const SamplingConfig& mc, int tau_grid, int r_grid) {
    params.validate();
    if (tau_grid < 8) throw domain_error("achievability_mc: tau_grid must be >= 8");
    if (r_grid < 8) throw domain_error("achievability_mc: r_grid must be >= 8");
    if (!(power > 0.0)) throw domain_error("achievability_mc: power must be > 0");

    const double eps = params.epsilon;
    std::vector<double> taus(tau_grid);
    const double lo = std::log(1e-3), hi = std::log(0.97);
    for (int i = 0; i < tau_grid; ++i)
        taus[i] = eps * std::exp(lo + (hi - lo) * i / (tau_grid - 1.0));

    const double r_lo = params.mu * params.mu * power;
    std::vector<double> radii(r_grid);
    for (int i = 0; i < r_grid; ++i)
        radii[i] = r_lo + (power - r_lo) * i / (r_grid - 1.0);

    const hypotest::SumStats thr_sums = hypotest::draw_sum_stats_radial(
        params.n, mc.count, rng::derive(mc.seed, kAchThresholdStream));
    const hypotest::SumStats est_sums = hypotest::draw_sum_stats_radial(
        params.n, mc.count, rng::derive(mc.seed, kAchEstimateStream));

    const std::size_t nr = radii.size(), nt = taus.size();
    std::vector<std::vector<double>> log2_beta(nr, std::vector<double>(nt, -kInf));
    std::vector<std::vector<bool>> valid(nr, std::vector<bool>(nt, false));

    const auto process_radius = [&](std::size_t ri) {
        hypotest::InfoDensitySpec spec{params.n, power, params.mu, radii[ri]};
        std::vector<double> h_thr(mc.count);
        for (std::uint64_t i = 0; i < mc.count; ++i)
            h_thr[i] = hypotest::h_from_sums(spec, thr_sums.sum_z[i], thr_sums.sum_z2[i]);
        std::sort(h_thr.begin(), h_thr.end());

        std::vector<double> h_est(mc.count);
        for (std::uint64_t i = 0; i < mc.count; ++i)
            h_est[i] = hypotest::h_from_sums(spec, est_sums.sum_z[i], est_sums.sum_z2[i]);
        TiltedTable table;
        table.build(std::move(h_est));

        for (std::size_t ti = 0; ti < nt; ++ti) {
            const double alpha = 1.0 - eps + taus[ti];
            const auto k = static_cast<std::size_t>(std::clamp<double>(
                std::floor((1.0 - alpha) * static_cast<double>(mc.count)), 0.0,
                static_cast<double>(mc.count - 1)));
            const double t = h_thr[k];
            std::size_t above = 0;
            const double lb = table.log2_beta(t, above);
            if (above >= 100) {
                log2_beta[ri][ti] = lb;
                valid[ri][ti] = true;
            }
        }
    };

    // radii are independent work items; results land in per-index slots so
    // the outcome does not depend on the thread partition
    {
        const unsigned n_threads =
            std::min<unsigned>(rng::thread_count(), static_cast<unsigned>(nr));
        if (n_threads <= 1) {
            for (std::size_t ri = 0; ri < nr; ++ri) process_radius(ri);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < n_threads; ++t)
                pool.emplace_back([&] {
                    for (;;) {
                        const std::size_t ri = next.fetch_add(1);
                        if (ri >= nr) break;
                        process_radius(ri);
                    }
                });
            for (auto& th : pool) th.join();
        }
    }

    AchievabilityResult out;
    double best = -kInf;
    bool any_valid = false;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        double sup_log2_beta = -kInf;
        std::size_t arg_r = 0;
        bool tau_ok = true;
        for (std::size_t ri = 0; ri < nr; ++ri) {
            if (!valid[ri][ti]) {
                tau_ok = false;
                break;
            }
            if (log2_beta[ri][ti] >= sup_log2_beta) {  // ties -> largest R
                sup_log2_beta = log2_beta[ri][ti];
                arg_r = ri;
            }
        }
        if (!tau_ok) continue;
        any_valid = true;
        const double bits = std::log2(taus[ti]) - sup_log2_beta;
        if (bits > best) {
            best = bits;
            out.tau_star = taus[ti];
            out.r_star = radii[arg_r];
        }
    }
    if (!any_valid)
        throw insufficient_tail_samples(0, mc.count);

    out.clamped = best < 0.0;
    out.bits = std::max(0.0, best);

    // diagnostics at the selected pair
    {
        hypotest::InfoDensitySpec spec{params.n, power, params.mu, out.r_star};
        std::vector<double> h_thr(mc.count);
        for (std::uint64_t i = 0; i < mc.count; ++i)
            h_thr[i] = hypotest::h_from_sums(spec, thr_sums.sum_z[i], thr_sums.sum_z2[i]);
        const double alpha = 1.0 - eps + out.tau_star;
        const auto k = static_cast<std::size_t>(std::clamp<double>(
            std::floor((1.0 - alpha) * static_cast<double>(mc.count)), 0.0,
            static_cast<double>(mc.count - 1)));
        std::nth_element(h_thr.begin(), h_thr.begin() + static_cast<std::ptrdiff_t>(k),
                         h_thr.end());
        std::vector<double> h_est(mc.count);
        for (std::uint64_t i = 0; i < mc.count; ++i)
            h_est[i] = hypotest::h_from_sums(spec, est_sums.sum_z[i], est_sums.sum_z2[i]);
        TiltedTable table;
        table.build(std::move(h_est));
        out.beta = beta_from_sorted(table, h_thr[k]);
    }
    return out;
}

NaObjective achievability_na_objective(const covert::CovertParams& params, double power,
                                       double radius_sq, double tau0) {
    const ApproxTerms be = berry_esseen_constants(power, params.mu, radius_sq);
    const double n = static_cast<double>(params.n);
    const double sp = params.mu * power;

    NaObjective out;
    out.qinv_arg = 1.0 - params.epsilon + 2.0 * be.be_constant_b / std::sqrt(n);
    out.alpha_valid = out.qinv_arg > 0.0 && out.qinv_arg < 1.0;
    if (!out.alpha_valid || !(tau0 > 0.0)) {
        out.bits = -kInf;
        return out;
    }
    const double bracket =
        2.0 / std::sqrt(2.0 * std::numbers::pi * be.vhat) + 4.0 * be.be_constant_b;
    out.bits = n * be.capacity_c +
               n * (radius_sq - sp) * kLog2E / (2.0 * (1.0 + sp)) +
               std::sqrt(n * be.vhat) * specfun::gaussian_tail_q_inv(out.qinv_arg) +
               std::log2(tau0) + 0.5 * std::log2(n) - std::log2(bracket);
    return out;
}

AchievabilityNaResult achievability_normal_approx(const covert::CovertParams& params,
                                                  double power, int tau0_grid) {
    params.validate();
    if (tau0_grid < 8) throw domain_error("achievability_normal_approx: tau0_grid >= 8");
    if (!(power > 0.0))
        throw domain_error("achievability_normal_approx: power must be > 0");

    const double n = static_cast<double>(params.n);
    const double eps = params.epsilon;
    const double tau_cap = n * eps / (n + 1.0);

    const int r_grid = 129;
    const double r_lo = params.mu * params.mu * power;
    std::vector<double> radii(r_grid), tau_n(r_grid);
    std::vector<NaObjective> obj_cache(r_grid);
    for (int i = 0; i < r_grid; ++i) {
        radii[i] = r_lo + (power - r_lo) * i / (r_grid - 1.0);
        const ApproxTerms be = berry_esseen_constants(power, params.mu, radii[i]);
        tau_n[i] = be.be_constant_b / std::sqrt(n);
    }

    std::vector<double> taus(tau0_grid);
    const double lo = std::log(1e-4), hi = std::log(0.97);
    for (int i = 0; i < tau0_grid; ++i)
        taus[i] = eps * std::exp(lo + (hi - lo) * i / (tau0_grid - 1.0));

    AchievabilityNaResult out;
    double best = -kInf;
    for (double tau0 : taus) {
        for (int ri = 0; ri < r_grid; ++ri) {
            if (!(tau0 <= tau_n[ri] && tau_n[ri] <= tau_cap)) continue;
            const NaObjective ob = achievability_na_objective(params, power, radii[ri], tau0);
            if (!ob.alpha_valid) continue;
            out.feasible = true;
            if (ob.bits >= best) {  // ties -> largest R by scan order
                best = ob.bits;
                out.tau0_star = tau0;
                out.r_star = radii[ri];
            }
        }
    }
    if (!out.feasible) {
        out.bits = 0.0;
        return out;
    }
    out.clamped = best < 0.0;
    out.bits = std::max(0.0, best);
    return out;
}

BoundPoint evaluate_point(const covert::CovertParams& params, const SweepConfig& cfg,
                          std::uint64_t row_seed) {
    BoundPoint row;
    row.params = params;
    try {
        const covert::PowerSolution sol =
            covert::solve_power(params, cfg.neglect_truncation);
        row.power = sol.power;
        row.trunc_mass = sol.trunc_mass;
        row.kl_nats = sol.kl_nats;
        row.tvd_certificate = sol.tvd_certificate;

        SamplingConfig mc{cfg.mc.count, row_seed};
        const ConverseResult conv =
            converse_equal_power(params.n, params.epsilon, sol.power, mc);
        row.converse_bits = conv.bits;
        row.conv_degenerate = conv.degenerate;
        row.conv_beta = conv.beta;

        const NormalApproxResult cna =
            converse_normal_approx(params.n, params.epsilon, sol.power);
        row.converse_na_bits = cna.bits;
        row.conv_na_clamped = cna.clamped;

        const AchievabilityResult ach =
            achievability_mc(params, sol.power, mc, cfg.tau_grid, cfg.r_grid);
        row.achievability_bits = ach.bits;
        row.ach_clamped = ach.clamped;
        row.tau_star = ach.tau_star;
        row.r_star = ach.r_star;
        row.ach_beta = ach.beta;

        const AchievabilityNaResult ana =
            achievability_normal_approx(params, sol.power, cfg.tau0_grid);
        row.achievability_na_bits = ana.bits;
        row.na_feasible = ana.feasible;
        row.tau0_star = ana.tau0_star;

        row.ok = true;
        row.status = "ok";
    } catch (const std::exception& e) {
        row.ok = false;
        row.status = e.what();
    }
    return row;
}

std::vector<BoundPoint> sweep(const covert::CovertParams& base, SweepAxis axis,
                              const std::vector<double>& values, const SweepConfig& cfg) {
    std::vector<BoundPoint> rows;
    rows.reserve(values.size());
    for (double v : values) {
        covert::CovertParams p = base;
        switch (axis) {
            case SweepAxis::n: p.n = static_cast<long long>(std::llround(v)); break;
            case SweepAxis::delta: p.delta = v; break;
            case SweepAxis::epsilon: p.epsilon = v; break;
        }
        const std::uint64_t row_seed = rng::derive(
            cfg.mc.seed, rng::tag_from_double(v) ^ (static_cast<std::uint64_t>(axis) + 1));
        rows.push_back(evaluate_point(p, cfg, row_seed));
    }
    return rows;
}

}  // namespace covertfbl::bounds
