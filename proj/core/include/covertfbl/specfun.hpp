#ifndef COVERTFBL_SPECFUN_HPP
#define COVERTFBL_SPECFUN_HPP

#include <functional>
#include <span>
#include <vector>

namespace covertfbl::specfun {

inline constexpr double kLog2E = 1.4426950408889634074;  // log2(e)
inline constexpr double kLn2 = 0.6931471805599453094;

// Gaussian upper-tail probability Q(x) = P[Z >= x], Z ~ N(0,1).
// Computed through erfc so small tails keep full relative accuracy.
double gaussian_tail_q(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse of gaussian_tail_q on (0,1); |Q(result) - p| <= 1e-12.
double gaussian_tail_q_inv(double p);

// Regularized lower incomplete gamma P(a,z) = gamma(a,z)/Gamma(a).
// Series for z < a+1, continued fraction otherwise, log-domain prefactor;
// stable for shape parameters at least up to a = 5000.
double reg_lower_inc_gamma(double a, double z);

// Q(a,z) = 1 - P(a,z), computed from whichever branch avoids cancellation.
double reg_upper_inc_gamma(double a, double z);

struct QuadratureSpec {
    int node_count = 32;              // Gauss-Legendre nodes per panel, >= 16
    double domain_half_width = 16.0;  // truncation of the Gaussian weight, >= 8
    std::vector<double> split_points; // integrand kink locations, sorted ascending
};

// Integral of integrand(z) * phi(z) over [-w, w] with fixed-order panels
// between split points. Relative error <= 1e-8 for piecewise-smooth
// integrands of polynomial growth up to degree 6.
double normal_expectation(const std::function<double(double)>& integrand,
                          const QuadratureSpec& spec);

// log(sum(exp(v))) without overflow; -inf for an empty span.
double log_sum_exp(std::span<const double> v);

// Gauss-Legendre nodes/weights on [-1, 1] (cached per order).
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int order);

}  // namespace covertfbl::specfun

#endif
