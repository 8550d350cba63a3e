#pragma once

#include <limits>
#include <optional>
#include <string>

#include "hlda/heston_core.hpp"

namespace hlda {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Interval of the extended real line. Infinite endpoints are always open.
struct DomainInterval {
    double lo = -kInfinity;
    double hi = kInfinity;
    bool lo_closed = false;
    bool hi_closed = false;

    static DomainInterval real_line() { return {}; }
    static DomainInterval closed(double lo, double hi) { return {lo, hi, true, true}; }
    static DomainInterval open(double lo, double hi) { return {lo, hi, false, false}; }
    static DomainInterval at_most(double hi) { return {-kInfinity, hi, false, true}; }
    static DomainInterval at_least(double lo) { return {lo, kInfinity, true, false}; }

    bool is_real_line() const { return lo == -kInfinity && hi == kInfinity; }
    bool contains(double x) const;
    bool interior_contains(double x) const { return x > lo && x < hi; }
    bool closure_contains(double x) const { return x >= lo && x <= hi; }

    // Interval notation, e.g. "[-1.125, 0.5]" or "(-inf, 0.5]".
    std::string to_string() const;

    bool operator==(const DomainInterval&) const = default;
};

// Effective domain of the limiting CGF for X^{., beta, delta}.
// Requires a > sigma when delta != 0.
DomainInterval domain_of(double beta, double delta, const ModelParams& p);

// Limiting cumulant generating function Lambda^{beta,delta}(u). The b = 0 case
// needs no separate branch: the general expression reduces to it.
double cgf_limit(double u, double beta, double delta, const ModelParams& p);

struct CgfDerivatives {
    double first;
    double second;
};

// Closed-form first and second derivatives on the interior of the domain.
CgfDerivatives cgf_derivative(double u, double beta, double delta, const ModelParams& p);

// Image of the interior of the domain under the first derivative.
DomainInterval derivative_image(double beta, double delta, const ModelParams& p);

struct RateEval {
    double x = 0.0;
    double value = 0.0;  // +inf outside the derivative image
    std::optional<double> u_star;
};

// Fenchel-Legendre transform sup_u { u x - Lambda(u) }.
//
// Inside the derivative image the maximiser is the unique root of
// Lambda'(u) = x, found by a bracketed Newton iteration with bisection
// fallback. Outside the open image the supremum is +inf. For delta = 0 the
// result is checked against (b x - a beta)^2 / (4 sigma |beta x|).
RateEval legendre_transform(double x, double beta, double delta, const ModelParams& p);

// (b x - a beta)^2 / (4 sigma |beta x|) for x with beta x > 0, +inf otherwise.
double legendre_closed_form(double x, double beta, const ModelParams& p);

struct RateMinimum {
    double x_min;
    double value;
    bool attained_zero;
};

/// Minimum of the rate function over x.
///
/// Uses min_x Lambda*(x) = -Lambda(0). When 0 is interior to the domain the
/// minimiser is x = Lambda'(0), which for b > 0 is the ergodic mean
/// beta a/b + delta b/(a - sigma). When 0 is a domain endpoint (b = 0) the
/// infimum is only approached, x_min is +/-inf and attained_zero is false.
RateMinimum rate_minimum(double beta, double delta, const ModelParams& p);

}  // namespace hlda
