#include "hlda/finite_mgf.hpp"

#include <cmath>
#include <numbers>

#include "hlda/errors.hpp"
#include "hlda/rate_functions.hpp"

namespace hlda {

double log_mgf_alpha_beta(double alpha, double beta, double t, const ModelParams& p, PsiDenominator psi) {
    if (!(t > 0.0)) throw DomainError("log_mgf_alpha_beta: t must be positive");
    if (alpha == 0.0 && beta == 0.0) return 0.0;
    const double disc = p.b * p.b - 4.0 * p.sigma * beta;
    if (disc < 0.0) throw DomainError("log_mgf_alpha_beta: chi = sqrt(b^2 - 4 sigma beta) is complex");
    const double chi = std::sqrt(disc);
    const double decay = std::exp(-chi * t);
    // (1 - e^{-chi t}) / chi, continuous at chi = 0.
    const double g = chi > 0.0 ? -std::expm1(-chi * t) / chi : t;

    // Common denominator divided by chi:
    //   [(chi + b - 2 sigma alpha)(1 - e^{-chi t}) + 2 chi e^{-chi t}] / chi.
    // It is monotone in t and equals 2 at t = 0, so positivity at t covers [0, t].
    const double denom = 2.0 * decay + (chi + p.b - 2.0 * p.sigma * alpha) * g;
    if (!(denom > 0.0)) throw DomainError("mgf explodes before t");
    const double affine = p.a / p.sigma * (std::numbers::ln2 + 0.5 * t * (p.b - chi) - std::log(denom));

    if (psi == PsiDenominator::corrected) {
        const double numer = alpha * ((1.0 + decay) - p.b * g) + 2.0 * beta * g;
        return affine + p.v0 * numer / denom;
    }
    const double one_minus = -std::expm1(-chi * t);
    const double numer = alpha * ((chi + p.b) * decay + (chi - p.b)) + 2.0 * beta * one_minus;
    const double literal_denom = -2.0 * p.sigma * alpha * one_minus + (chi - p.b) * decay + (chi - p.b);
    if (!(literal_denom > 0.0)) throw DomainError("mgf explodes before t");
    return affine + p.v0 * numer / literal_denom;
}

double kummer_1f1(double u, double v, double z) {
    if (!(v > 0.0)) throw DomainError("kummer_1f1: v must be positive");
    if (!(std::abs(z) <= 50.0)) throw DomainError("kummer_1f1: series cap exceeded (|z| > 50)");
    if (z < 0.0) return std::exp(z) * kummer_1f1(v - u, v, -z);
    double term = 1.0;
    double sum = 1.0;
    for (int n = 0; n < 10000; ++n) {
        term *= (u + n) / (v + n) * z / (n + 1);
        sum += term;
        if (term == 0.0 || std::abs(term) < 1e-15 * std::abs(sum)) return sum;
    }
    throw InternalError("kummer_1f1: series did not converge in 10^4 terms");
}

namespace {

double log_sinh(double x) {
    if (x > 20.0) return x - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * x));
    return std::log(std::sinh(x));
}

double log_cosh(double x) { return x - std::numbers::ln2 + std::log1p(std::exp(-2.0 * x)); }

}  // namespace

double log_mgf_full(const MgfQuery& q, const ModelParams& p) {
    if (p.b == 0.0) throw DomainError("log_mgf_full: b = 0 has no finite-t form here; use the b=0 branch of cgf_limit only");
    if (!(q.t > 0.0)) throw DomainError("log_mgf_full: t must be positive");
    const double alpha = q.coeffs.alpha * q.u;
    const double beta = q.coeffs.beta * q.u;
    const double delta = q.coeffs.delta * q.u;
    if (q.coeffs.delta != 0.0 && !p.feller_strict())
        throw DomainError("log_mgf_full: delta != 0 requires the Feller condition a > sigma");
    if (alpha == 0.0 && beta == 0.0 && delta == 0.0) return 0.0;

    const double t = q.t;
    const double s = p.sigma;
    const double kappa = p.a / (2.0 * s);
    const double a_sq = p.b * p.b - 4.0 * s * beta;
    if (a_sq < 0.0) throw DomainError("log_mgf_full: A is complex");
    const double big_a = std::sqrt(a_sq);
    double nu;
    if (delta == 0.0) {
        // Without the 1/V term the order is (a - sigma)/sigma, sign included.
        nu = (p.a - s) / s;
    } else {
        const double nu_sq = (p.a - s) * (p.a - s) - 4.0 * s * delta;
        if (nu_sq < 0.0) throw DomainError("log_mgf_full: nu is complex");
        nu = std::sqrt(nu_sq) / s;
    }

    // Factor e^{At/2} out of every sinh/cosh; small-A limits taken explicitly.
    const double x = 0.5 * big_a * t;
    const bool small = x < 1e-8;
    const double a_coth = small ? 2.0 / t : big_a / std::tanh(x);
    const double log_a_over_sinh = small ? std::log(2.0 / t) : std::log(big_a) - log_sinh(x);
    const double tanh_over_a = small ? 0.5 * t : std::tanh(x) / big_a;
    const double drift = p.b - 2.0 * s * alpha;
    const double w = 1.0 + drift * tanh_over_a;
    if (!(w > 0.0)) throw DomainError("mgf explodes before t");
    // log[(drift/A) sinh + cosh]
    const double log_b = log_cosh(x) + std::log(w);

    const double half = 0.5 * (nu + 1.0);
    const double log_v0_scale = std::log(p.v0 / (2.0 * s));
    const double z = std::exp(log_v0_scale + log_a_over_sinh - log_b);

    double out = std::lgamma(kappa + half) - std::lgamma(nu + 1.0);
    out += p.b / (2.0 * s) * (p.a * t + p.v0) - p.v0 / (2.0 * s) * a_coth;
    out += (half - kappa) * (log_v0_scale + log_a_over_sinh);
    out -= (half + kappa) * log_b;
    out += std::log(kummer_1f1(kappa + half, nu + 1.0, z));
    return out;
}

std::vector<ConvergencePoint> convergence_gap(double u, const FunctionalCoeffs& coeffs, const std::vector<double>& t_grid,
                                              const ModelParams& p) {
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("convergence_gap: t_grid must be increasing");
    const double limit = cgf_limit(u, coeffs.beta, coeffs.delta, p);
    std::vector<ConvergencePoint> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        const double lm = coeffs.delta == 0.0 ? log_mgf_alpha_beta(u * coeffs.alpha, u * coeffs.beta, t, p)
                                              : log_mgf_full({coeffs, t, u}, p);
        out.push_back({t, lm, std::abs(lm / t - limit)});
    }
    return out;
}

}  // namespace hlda
