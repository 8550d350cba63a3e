#include "hlda/rate_functions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hlda/errors.hpp"

namespace hlda {

bool DomainInterval::contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
}

std::string DomainInterval::to_string() const {
    const auto num = [](double v) {
        if (v == kInfinity) return std::string("+inf");
        if (v == -kInfinity) return std::string("-inf");
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    return std::string(lo_closed ? "[" : "(") + num(lo) + ", " + num(hi) + (hi_closed ? "]" : ")");
}

namespace {

void require_feller_for_delta(double delta, const ModelParams& p) {
    if (delta != 0.0 && !p.feller_strict())
        throw DomainError("delta != 0 requires the Feller condition a > sigma");
}

// b = 0 and beta = 0 make the limiting CGF vanish identically.
bool degenerate(double beta, const ModelParams& p) { return p.b == 0.0 && beta == 0.0; }

// Square-root arguments Q = b^2 - 4 sigma beta u and P = (a-sigma)^2 - 4 sigma delta u.
struct SqrtArgs {
    double q;
    double pp;
};

SqrtArgs sqrt_args(double u, double beta, double delta, const ModelParams& p) {
    const double q_scale = p.b * p.b + std::abs(4.0 * p.sigma * beta * u);
    const double am = p.a - p.sigma;
    const double p_scale = am * am + std::abs(4.0 * p.sigma * delta * u);
    double q = p.b * p.b - 4.0 * p.sigma * beta * u;
    double pp = am * am - 4.0 * p.sigma * delta * u;
    // Closed endpoints are evaluable; rounding at them must not push outside.
    constexpr double slack = 1e-13;
    if (q < -slack * q_scale || (delta != 0.0 && pp < -slack * p_scale) || !std::isfinite(u))
        throw DomainError("u outside the effective domain");
    return {std::max(q, 0.0), std::max(pp, 0.0)};
}

}  // namespace

DomainInterval domain_of(double beta, double delta, const ModelParams& p) {
    require_feller_for_delta(delta, p);
    if (beta == 0.0 && delta == 0.0) return DomainInterval::real_line();
    const double am = p.a - p.sigma;
    // Bounds from Q >= 0 and P >= 0; a zero coefficient imposes no bound.
    double lo = -kInfinity;
    double hi = kInfinity;
    if (beta > 0.0) hi = std::min(hi, p.b * p.b / (4.0 * p.sigma * beta));
    if (beta < 0.0) lo = std::max(lo, p.b * p.b / (4.0 * p.sigma * beta));
    if (delta > 0.0) hi = std::min(hi, am * am / (4.0 * p.sigma * delta));
    if (delta < 0.0) lo = std::max(lo, am * am / (4.0 * p.sigma * delta));
    return {lo, hi, std::isfinite(lo), std::isfinite(hi)};
}

double cgf_limit(double u, double beta, double delta, const ModelParams& p) {
    require_feller_for_delta(delta, p);
    const SqrtArgs s = sqrt_args(u, beta, delta, p);
    const double sq = std::sqrt(s.q);
    if (delta == 0.0) return p.a / (2.0 * p.sigma) * (p.b - sq);
    return p.a * p.b / (2.0 * p.sigma) - std::sqrt(s.pp * s.q) / (2.0 * p.sigma) - 0.5 * sq;
}

CgfDerivatives cgf_derivative(double u, double beta, double delta, const ModelParams& p) {
    require_feller_for_delta(delta, p);
    if (degenerate(beta, p)) {
        (void)sqrt_args(u, beta, delta, p);
        return {0.0, 0.0};
    }
    const SqrtArgs s = sqrt_args(u, beta, delta, p);
    if (!(s.q > 0.0) || (delta != 0.0 && !(s.pp > 0.0)))
        throw DomainError("cgf_derivative: u at or beyond the domain boundary");
    const double sq = std::sqrt(s.q);
    if (delta == 0.0) {
        return {beta * p.a / sq, 2.0 * beta * beta * p.sigma * p.a / (s.q * sq)};
    }
    const double am2 = (p.a - p.sigma) * (p.a - p.sigma);
    const double root_pq = std::sqrt(s.pp * s.q);
    const double numer = delta * p.b * p.b + beta * am2 - 8.0 * p.sigma * beta * delta * u;
    const double first = p.sigma * beta / sq + numer / root_pq;
    const double skew = delta * p.b * p.b - beta * am2;
    const double second = 2.0 * p.sigma * p.sigma * beta * beta / (s.q * sq) +
                          2.0 * p.sigma * skew * skew / (root_pq * root_pq * root_pq);
    return {first, second};
}

DomainInterval derivative_image(double beta, double delta, const ModelParams& p) {
    if (beta == 0.0 && delta == 0.0) throw ValidationError({"beta and delta are both zero"});
    require_feller_for_delta(delta, p);
    if (degenerate(beta, p)) throw DomainError("Lambda vanishes identically when b = 0 and beta = 0");
    if (beta * delta < 0.0) return DomainInterval::real_line();
    const double edge = 2.0 * std::sqrt(beta * delta);
    if (beta > 0.0 || delta > 0.0) return DomainInterval::open(edge, kInfinity);
    return DomainInterval::open(-kInfinity, -edge);
}

double legendre_closed_form(double x, double beta, const ModelParams& p) {
    if (!(beta * x > 0.0)) return kInfinity;
    const double d = p.b * x - p.a * beta;
    return d * d / (4.0 * p.sigma * std::abs(beta * x));
}

namespace {

constexpr int kMaxIterations = 200;

// Unique root of Lambda'(u) = x on the interior of dom.
double solve_slope(double x, double beta, double delta, const ModelParams& p, const DomainInterval& dom) {
    const auto slope = [&](double u) { return cgf_derivative(u, beta, delta, p); };
    const double tol = 1e-12 * std::max(1.0, std::abs(x));

    // Bracket [lo, hi] with slope(lo) < x < slope(hi). A finite domain endpoint
    // is a valid bracket end (the slope is infinite there) but is never evaluated.
    double lo = dom.lo;
    double hi = dom.hi;
    double u;
    if (std::isfinite(lo) && std::isfinite(hi)) {
        u = 0.5 * (lo + hi);
    } else if (std::isfinite(hi)) {
        double step = std::max(1.0, std::abs(hi));
        u = hi - step;
        while (slope(u).first >= x) {
            hi = u;
            step *= 2.0;
            u = dom.hi - step;
            if (!std::isfinite(u)) throw InternalError("legendre_transform: bracket expansion diverged");
        }
        lo = u;
        u = std::isfinite(hi) && hi != dom.hi ? 0.5 * (lo + hi) : u;
    } else if (std::isfinite(lo)) {
        double step = std::max(1.0, std::abs(lo));
        u = lo + step;
        while (slope(u).first <= x) {
            lo = u;
            step *= 2.0;
            u = dom.lo + step;
            if (!std::isfinite(u)) throw InternalError("legendre_transform: bracket expansion diverged");
        }
        hi = u;
        u = lo != dom.lo ? 0.5 * (lo + hi) : u;
    } else {
        throw InternalError("legendre_transform: unbounded domain on both sides");
    }

    for (int it = 0; it < kMaxIterations; ++it) {
        const CgfDerivatives d = slope(u);
        const double f = d.first - x;
        if (std::abs(f) <= tol) return u;
        if (f < 0.0) lo = u;
        else hi = u;
        double next = u - f / d.second;
        if (!(next > lo && next < hi) || !std::isfinite(next)) {
            next = 0.5 * (lo + hi);
        }
        // Bracket collapsed to adjacent doubles: the root is resolved.
        if (next == u || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(lo), std::abs(hi)}))
            return u;
        u = next;
    }
    throw InternalError("legendre_transform: root-finder did not converge in 200 iterations");
}

// Degenerate b = 0, beta = 0: Lambda is zero on dom, so the transform is the
// support function of dom.
RateEval degenerate_transform(double x, const DomainInterval& dom) {
    if (x == 0.0) return {x, 0.0, 0.0};
    const double end = x > 0.0 ? dom.hi : dom.lo;
    if (!std::isfinite(end)) return {x, kInfinity, std::nullopt};
    return {x, end * x, end};
}

}  // namespace

RateEval legendre_transform(double x, double beta, double delta, const ModelParams& p) {
    require_feller_for_delta(delta, p);
    const DomainInterval dom = domain_of(beta, delta, p);
    if (beta == 0.0 && delta == 0.0) {
        // Lambda is constant; only x = 0 has a finite transform.
        if (x != 0.0) return {x, kInfinity, std::nullopt};
        return {x, -cgf_limit(0.0, 0.0, 0.0, p), 0.0};
    }
    if (degenerate(beta, p)) return degenerate_transform(x, dom);

    const DomainInterval image = derivative_image(beta, delta, p);
    // Outside the open image u x - Lambda(u) is monotone towards an infinite
    // end of the domain, where it diverges.
    if (!image.interior_contains(x)) return {x, kInfinity, std::nullopt};

    const double u = solve_slope(x, beta, delta, p, dom);
    const double value = std::max(0.0, u * x - cgf_limit(u, beta, delta, p));
    if (delta == 0.0) {
        const double closed = legendre_closed_form(x, beta, p);
        if (std::abs(closed - value) > 1e-8 * std::max(1.0, closed))
            throw InternalError("legendre_transform: numerical value disagrees with the closed form");
    }
    return {x, value, u};
}

RateMinimum rate_minimum(double beta, double delta, const ModelParams& p) {
    if (beta == 0.0 && delta == 0.0) throw ValidationError({"beta and delta are both zero"});
    require_feller_for_delta(delta, p);
    const DomainInterval dom = domain_of(beta, delta, p);
    if (degenerate(beta, p)) return {0.0, 0.0, true};
    const double lambda0 = cgf_limit(0.0, beta, delta, p);
    const double zero_tol = 1e-12 * (1.0 + std::abs(p.a * p.b / (2.0 * p.sigma)));
    const double value = std::abs(lambda0) <= zero_tol ? 0.0 : -lambda0;
    if (dom.interior_contains(0.0)) {
        const double x_min = cgf_derivative(0.0, beta, delta, p).first;
        return {x_min, value, value == 0.0};
    }
    // 0 is a domain endpoint where the slope is infinite: the infimum is
    // approached as x runs off to the matching infinity.
    const double x_min = dom.hi == 0.0 ? kInfinity : -kInfinity;
    return {x_min, value, false};
}

}  // namespace hlda
