#ifndef COVERTFBL_ERRORS_HPP
#define COVERTFBL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace covertfbl {

// Invalid argument or parameter outside its documented domain. CLI maps
// these to exit code 2.
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

// Bad experiment parameterization (e.g. a shell of zero measure).
class parameter_error : public domain_error {
public:
    explicit parameter_error(const std::string& what) : domain_error(what) {}
};

// The truncation mass alone exhausts the TVD budget: 1 - Delta(n, mu) >= delta.
class budget_exhausted : public domain_error {
public:
    budget_exhausted(long long n, double mu, double delta, double one_minus_delta_mass)
        : domain_error("covert budget exhausted: 1 - Delta(n=" + std::to_string(n) +
                       ", mu=" + std::to_string(mu) + ") = " +
                       std::to_string(one_minus_delta_mass) +
                       " >= delta = " + std::to_string(delta)),
          n(n), mu(mu), delta(delta), one_minus_delta_mass(one_minus_delta_mass) {}
    long long n;
    double mu;
    double delta;
    double one_minus_delta_mass;
};

// Numerical failure (root bracketing, divergence, ...). CLI exit code 3.
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

// Too few Monte Carlo samples above the decision threshold to form a
// usable beta estimate; callers should increase the sample count.
class insufficient_tail_samples : public solver_error {
public:
    insufficient_tail_samples(std::size_t above, std::size_t total)
        : solver_error("only " + std::to_string(above) + " of " + std::to_string(total) +
                       " samples above threshold (need >= 100)"),
          above(above), total(total) {}
    std::size_t above;
    std::size_t total;
};

// Operation requested outside its supported scale (e.g. the TVD oracle
// beyond n = 64).
class scale_error : public domain_error {
public:
    explicit scale_error(const std::string& what) : domain_error(what) {}
};

}  // namespace covertfbl

#endif
