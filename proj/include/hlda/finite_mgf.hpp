#pragma once

#include <vector>

#include "hlda/heston_core.hpp"

namespace hlda {

// Which denominator the psi term of the affine (Riccati) solution uses.
// `corrected` shares the phi denominator and is the right one; `literal`
// reproduces the (chi - b) misprint so the two can be compared against
// simulation.
enum class PsiDenominator { corrected, literal };

/// log E[exp(alpha V_t + beta int_0^t V ds)] from the closed-form solution of
/// the CIR Riccati equations.
///
/// Requires chi = sqrt(b^2 - 4 sigma beta) to be real. Throws DomainError
/// ("mgf explodes before t") when the denominator of the solution reaches zero
/// on [0, t]. Evaluated with exp(-chi t) and expm1 only, so it does not
/// overflow for large t.
double log_mgf_alpha_beta(double alpha, double beta, double t, const ModelParams& p,
                          PsiDenominator psi = PsiDenominator::corrected);

// Kummer's confluent hypergeometric series 1F1(u; v; z) for v > 0, |z| <= 50.
// Negative z goes through Kummer's transformation e^z 1F1(v-u; v; -z).
double kummer_1f1(double u, double v, double z);

struct MgfQuery {
    FunctionalCoeffs coeffs;
    double t = 1.0;
    double u = 0.0;  // evaluates log E[exp(u X_t)]
};

/// log E[exp(u X_t)] for X = alpha V_t + beta int V + delta int 1/V, via the
/// Gamma / sinh / cosh / 1F1 product form, computed in log space.
///
/// b must be nonzero; a > sigma when delta != 0. The 1F1 argument is
/// A^2 V0 / (2 sigma sinh(At/2) [(b - 2 sigma alpha u) sinh(At/2) + A cosh(At/2)]),
/// with A = sqrt(b^2 - 4 sigma beta u).
double log_mgf_full(const MgfQuery& q, const ModelParams& p);

struct ConvergencePoint {
    double t;
    double log_mgf;  // log E[exp(u X_t)]
    double gap;      // |log_mgf / t - Lambda(u)|
};

// Distance between t^{-1} log E[exp(u X_t)] and the limiting CGF along t_grid.
// delta = 0 uses the Riccati form, otherwise the 1F1 form.
std::vector<ConvergencePoint> convergence_gap(double u, const FunctionalCoeffs& coeffs, const std::vector<double>& t_grid,
                                              const ModelParams& p);

}  // namespace hlda
