#include "covertfbl/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "covertfbl/errors.hpp"

namespace covertfbl::specfun {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

double gaussian_tail_q(double x) {
    if (!std::isfinite(x)) throw domain_error("gaussian_tail_q: non-finite argument");
    return 0.5 * std::erfc(x / kSqrt2);
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

namespace {

// Acklam's rational approximation to the standard normal quantile,
// used only as the Newton seed.
double norm_quantile_seed(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double gaussian_tail_q_inv(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw domain_error("gaussian_tail_q_inv: p must lie in (0,1)");
    // Q(x) = p  <=>  x = -Phi^{-1}(p)
    double x = -norm_quantile_seed(p);
    // Newton on Q(x) - p; Q' = -phi. The seed is within ~1e-9 so a few
    // steps reach machine precision even deep in the tails.
    for (int it = 0; it < 6; ++it) {
        const double f = gaussian_tail_q(x) - p;
        const double df = normal_pdf(x);
        if (df <= 0.0) break;
        const double step = f / df;
        x += step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

namespace {

constexpr int kGammaMaxIter = 20000;
constexpr double kGammaEps = 1e-16;

// P(a,z) by the power series, valid/efficient for z < a+1.
double gammp_series(double a, double z) {
    if (z <= 0.0) return 0.0;
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int i = 0; i < kGammaMaxIter; ++i) {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaEps)
            return sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
    }
    throw solver_error("reg_lower_inc_gamma: series failed to converge (a=" +
                       std::to_string(a) + ", z=" + std::to_string(z) + ")");
}

// Q(a,z) by the continued fraction (modified Lentz), valid for z >= a+1.
double gammq_cf(double a, double z) {
    const double kFpMin = 1e-300;
    double b = z + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kGammaMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kGammaEps) {
            const double lg = -z + a * std::log(z) - std::lgamma(a);
            return std::exp(lg) * h;
        }
    }
    throw solver_error("reg_upper_inc_gamma: continued fraction failed to converge (a=" +
                       std::to_string(a) + ", z=" + std::to_string(z) + ")");
}

void check_gamma_args(double a, double z) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw domain_error("incomplete gamma: a must be positive");
    if (!(z >= 0.0) || !std::isfinite(z))
        throw domain_error("incomplete gamma: z must be nonnegative");
}

}  // namespace

double reg_lower_inc_gamma(double a, double z) {
    check_gamma_args(a, z);
    if (z == 0.0) return 0.0;
    if (z < a + 1.0) return std::min(1.0, gammp_series(a, z));
    return std::max(0.0, 1.0 - gammq_cf(a, z));
}

double reg_upper_inc_gamma(double a, double z) {
    check_gamma_args(a, z);
    if (z == 0.0) return 1.0;
    if (z < a + 1.0) return std::max(0.0, 1.0 - gammp_series(a, z));
    return std::min(1.0, gammq_cf(a, z));
}

const GaussLegendre& gauss_legendre(int order) {
    static std::mutex mtx;
    static std::map<int, GaussLegendre> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    // Newton on Legendre P_n with the Chebyshev-like initial guess.
    GaussLegendre gl;
    gl.nodes.resize(order);
    gl.weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        gl.nodes[i] = -x;
        gl.nodes[order - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        gl.weights[i] = w;
        gl.weights[order - 1 - i] = w;
    }
    return cache.emplace(order, std::move(gl)).first->second;
}

double normal_expectation(const std::function<double(double)>& integrand,
                          const QuadratureSpec& spec) {
    if (spec.node_count < 16)
        throw domain_error("normal_expectation: node_count must be >= 16");
    if (!(spec.domain_half_width >= 8.0))
        throw domain_error("normal_expectation: domain_half_width must be >= 8");
    if (!std::is_sorted(spec.split_points.begin(), spec.split_points.end()))
        throw domain_error("normal_expectation: split_points must be sorted ascending");

    const double w = spec.domain_half_width;
    std::vector<double> edges;
    edges.push_back(-w);
    for (double s : spec.split_points)
        if (s > -w && s < w) edges.push_back(s);
    edges.push_back(w);

    const auto& gl = gauss_legendre(std::min(spec.node_count, 64));
    constexpr double kMaxPanelWidth = 0.5;

    double total = 0.0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        const double lo = edges[e], hi = edges[e + 1];
        if (hi <= lo) continue;
        const int n_panels =
            std::max(1, static_cast<int>(std::ceil((hi - lo) / kMaxPanelWidth)));
        const double h = (hi - lo) / n_panels;
        for (int p = 0; p < n_panels; ++p) {
            const double a = lo + p * h, mid = a + 0.5 * h, half = 0.5 * h;
            double s = 0.0;
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                const double z = mid + half * gl.nodes[k];
                s += gl.weights[k] * integrand(z) * normal_pdf(z);
            }
            total += s * half;
        }
    }
    return total;
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace covertfbl::specfun
