#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "hlda/random.hpp"

namespace hlda {

// Heston model under the reference measure:
//   dS/S = mu dt + sqrt(V) (rho dW1 + sqrt(1 - rho^2) dW2)
//   dV   = (a - b V) dt + sqrt(2 sigma V) dW1
// plus the risk parameter lambda selecting gamma_1 = lambda sqrt(V).
struct ModelParams {
    double mu = 0.0;
    double r = 0.0;
    double a = 2.0;
    double b = 1.0;
    double sigma = 0.5;
    double rho = 0.0;
    double v0 = 1.0;
    double s0 = 1.0;
    double lambda = 0.0;

    // Strict Feller condition; required by every 1/V functional.
    bool feller_strict() const { return a > sigma; }

    bool operator==(const ModelParams&) const = default;
};

// Returns p unchanged, or throws ValidationError naming every violated bound.
ModelParams validate_params(const ModelParams& p);

// Selects X = alpha V_t + beta int_0^t V ds + delta int_0^t 1/V ds.
struct FunctionalCoeffs {
    double alpha = 0.0;
    double beta = 0.0;
    double delta = 0.0;

    bool operator==(const FunctionalCoeffs&) const = default;
};

struct PathRecord {
    double t = 0.0;
    std::size_t n_steps = 0;
    double v_terminal = 0.0;
    double int_v = 0.0;
    std::optional<double> int_inv_v;
    double v_min = 0.0;
    double v_max = 0.0;

    bool operator==(const PathRecord&) const = default;
};

// Parameters of the exact transition V_{t+dt} | V_t = v, which is
// scale * (noncentral chi-square with `dof` degrees of freedom and
// noncentrality `noncentrality`).
struct CirTransition {
    double scale;
    double dof;
    double noncentrality;

    double mean() const { return scale * (dof + noncentrality); }
    double variance() const { return scale * scale * (2.0 * dof + 4.0 * noncentrality); }
};

CirTransition cir_transition(double v, double dt, const ModelParams& p);

// One exact draw of V_{t+dt} given V_t = v.
double cir_step(double v, double dt, const ModelParams& p, Rng& rng);

// Repeated exact transitions over a fixed dt, with the constants computed once.
// For dof > 1 the noncentral chi-square splits as (Z + sqrt(nc))^2 plus a
// central chi-square, otherwise the Poisson mixture is used.
class CirStepper {
public:
    CirStepper(const ModelParams& p, double dt);

    double operator()(double v, Rng& rng);
    double dt() const { return dt_; }

private:
    double dt_;
    CirTransition unit_;  // transition from v = 1
    std::gamma_distribution<double> central_;
    std::normal_distribution<double> normal_;
};

/// Simulates V on a uniform grid of n_steps exact transitions over [0, t].
/// The time integrals use the trapezoidal rule on that grid, so they carry an
/// O(h^2) bias while V itself is exact at the nodes. The 1/V integral is only
/// accumulated when want_inv is set, which requires a > sigma.
PathRecord simulate_variance_path(const ModelParams& p, double t, std::size_t n_steps, bool want_inv,
                                  Rng& rng);

/// Same simulation, recording a PathRecord at each checkpoint. Checkpoints
/// must be increasing multiples of 1/steps_per_unit; the path is shared, so the
/// record at checkpoint k is a prefix of the record at k + 1.
std::vector<PathRecord> simulate_variance_checkpoints(const ModelParams& p, const std::vector<double>& checkpoints,
                                                      std::size_t steps_per_unit, bool want_inv, Rng& rng);

// alpha V_t + beta int V + delta int 1/V.
double functional_value(const PathRecord& rec, const FunctionalCoeffs& c);

struct GirsanovKernels {
    double gamma1;
    double gamma2;
};

GirsanovKernels girsanov_kernels(double v, const ModelParams& p);

// Stochastic integral int_0^t sqrt(V) dW1 recovered from the path through the
// SDE identity (V_t - V_0 - a t + b int V) / sqrt(2 sigma).
double stochastic_integral_sqrt_v(double v_terminal, double int_v, double t, const ModelParams& p);

// gamma_1 part of the density process, evaluated pathwise.
double radon_nikodym_gamma1(const PathRecord& rec, const ModelParams& p);

struct PricePoint {
    double t;
    double s;
    double v;
};

// Log-Euler S path driven by exact V transitions and correlated Gaussian
// increments for the price. Convenience only; nothing downstream relies on it.
std::vector<PricePoint> simulate_price_path(const ModelParams& p, double t, std::size_t n_steps, Rng& rng);

}  // namespace hlda
