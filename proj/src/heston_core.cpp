#include "hlda/heston_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hlda/errors.hpp"

namespace hlda {

ModelParams validate_params(const ModelParams& p) {
    std::vector<std::string> problems;
    const auto finite = [&](double v, const char* name) {
        if (!std::isfinite(v)) problems.push_back(std::string(name) + " must be finite");
        return std::isfinite(v);
    };
    finite(p.mu, "mu");
    finite(p.r, "r");
    finite(p.b, "b");
    finite(p.lambda, "lambda");
    if (finite(p.a, "a") && !(p.a > 0.0)) problems.emplace_back("a must be positive");
    if (finite(p.sigma, "sigma") && !(p.sigma > 0.0)) problems.emplace_back("sigma must be positive");
    if (finite(p.rho, "rho") && !(std::abs(p.rho) < 1.0)) problems.emplace_back("rho out of (-1,1)");
    if (finite(p.v0, "v0") && !(p.v0 > 0.0)) problems.emplace_back("v0 must be positive");
    if (finite(p.s0, "s0") && !(p.s0 > 0.0)) problems.emplace_back("s0 must be positive");
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return p;
}

CirTransition cir_transition(double v, double dt, const ModelParams& p) {
    if (!(v > 0.0)) throw DomainError("cir_step: v must be positive");
    if (!(dt > 0.0)) throw DomainError("cir_step: dt must be positive");
    // scale = sigma (1 - e^{-b dt}) / (2 b), with the b -> 0 limit sigma dt / 2.
    const double bdt = p.b * dt;
    const double one_minus_decay = -std::expm1(-bdt);
    const double scale = p.b == 0.0 ? 0.5 * p.sigma * dt : 0.5 * p.sigma * one_minus_decay / p.b;
    const double dof = 2.0 * p.a / p.sigma;
    const double noncentrality = v * std::exp(-bdt) / scale;
    return {scale, dof, noncentrality};
}

CirStepper::CirStepper(const ModelParams& p, double dt)
    : dt_(dt), unit_(cir_transition(1.0, dt, p)), central_(unit_.dof > 1.0 ? 0.5 * (unit_.dof - 1.0) : 1.0, 1.0) {}

double CirStepper::operator()(double v, Rng& rng) {
    if (!(v > 0.0)) throw DomainError("cir_step: v must be positive");
    const double nc = v * unit_.noncentrality;
    for (;;) {
        double x;
        if (unit_.dof > 1.0) {
            const double shifted = normal_(rng) + std::sqrt(nc);
            x = shifted * shifted + 2.0 * central_(rng);
        } else {
            std::poisson_distribution<long long> poisson(0.5 * nc);
            const long long n = poisson(rng);
            std::gamma_distribution<double> gamma(0.5 * unit_.dof + static_cast<double>(n), 1.0);
            x = 2.0 * gamma(rng);
        }
        // Guard: a zero draw would break the positivity of the path.
        x *= unit_.scale;
        if (x > 0.0) return x;
    }
}

double cir_step(double v, double dt, const ModelParams& p, Rng& rng) {
    (void)cir_transition(v, dt, p);
    CirStepper step(p, dt);
    return step(v, rng);
}

namespace {

void require_path_inputs(const ModelParams& p, double t, std::size_t n_steps, bool want_inv) {
    if (!(t > 0.0)) throw DomainError("simulate_variance_path: t must be positive");
    if (n_steps == 0) throw DomainError("simulate_variance_path: n_steps must be positive");
    if (want_inv && !p.feller_strict())
        throw DomainError("Feller condition a>sigma required for 1/V integrals");
}

struct PathAccumulator {
    double v;
    double int_v = 0.0;
    double int_inv_v = 0.0;
    double v_min;
    double v_max;

    explicit PathAccumulator(double v0) : v(v0), v_min(v0), v_max(v0) {}

    void step(double v_next, double dt, bool want_inv) {
        int_v += 0.5 * dt * (v + v_next);
        if (want_inv) int_inv_v += 0.5 * dt * (1.0 / v + 1.0 / v_next);
        v_min = std::min(v_min, v_next);
        v_max = std::max(v_max, v_next);
        v = v_next;
    }

    PathRecord record(double t, std::size_t n_steps, bool want_inv) const {
        PathRecord rec;
        rec.t = t;
        rec.n_steps = n_steps;
        rec.v_terminal = v;
        rec.int_v = int_v;
        if (want_inv) rec.int_inv_v = int_inv_v;
        rec.v_min = v_min;
        rec.v_max = v_max;
        return rec;
    }
};

}  // namespace

PathRecord simulate_variance_path(const ModelParams& p, double t, std::size_t n_steps, bool want_inv,
                                  Rng& rng) {
    require_path_inputs(p, t, n_steps, want_inv);
    const double dt = t / static_cast<double>(n_steps);
    CirStepper draw(p, dt);
    PathAccumulator acc(p.v0);
    for (std::size_t k = 0; k < n_steps; ++k) acc.step(draw(acc.v, rng), dt, want_inv);
    return acc.record(t, n_steps, want_inv);
}

std::vector<PathRecord> simulate_variance_checkpoints(const ModelParams& p, const std::vector<double>& checkpoints,
                                                      std::size_t steps_per_unit, bool want_inv, Rng& rng) {
    if (checkpoints.empty()) throw DomainError("simulate_variance_checkpoints: no checkpoints");
    if (steps_per_unit == 0) throw DomainError("simulate_variance_checkpoints: steps_per_unit must be positive");
    std::vector<std::size_t> node_index;
    double prev = 0.0;
    for (double c : checkpoints) {
        require_path_inputs(p, c, 1, want_inv);
        if (!(c > prev)) throw DomainError("simulate_variance_checkpoints: checkpoints must be increasing");
        const double nodes = c * static_cast<double>(steps_per_unit);
        const auto rounded = static_cast<std::size_t>(std::llround(nodes));
        if (std::abs(nodes - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, nodes))
            throw DomainError("simulate_variance_checkpoints: checkpoint not on the grid");
        node_index.push_back(rounded);
        prev = c;
    }
    const double dt = 1.0 / static_cast<double>(steps_per_unit);
    CirStepper draw(p, dt);
    PathAccumulator acc(p.v0);
    std::vector<PathRecord> out;
    out.reserve(checkpoints.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        for (; k < node_index[i]; ++k) acc.step(draw(acc.v, rng), dt, want_inv);
        out.push_back(acc.record(checkpoints[i], node_index[i], want_inv));
    }
    return out;
}

double functional_value(const PathRecord& rec, const FunctionalCoeffs& c) {
    double x = c.alpha * rec.v_terminal + c.beta * rec.int_v;
    if (c.delta != 0.0) {
        if (!rec.int_inv_v) throw DomainError("functional_value: int_inv_v missing but delta != 0");
        x += c.delta * *rec.int_inv_v;
    }
    return x;
}

GirsanovKernels girsanov_kernels(double v, const ModelParams& p) {
    if (!(v > 0.0)) throw DomainError("girsanov_kernels: v must be positive");
    const double sv = std::sqrt(v);
    const double gamma1 = p.lambda * sv;
    const double gamma2 = ((p.mu - p.r) / sv - p.lambda * p.rho * sv) / std::sqrt(1.0 - p.rho * p.rho);
    return {gamma1, gamma2};
}

double stochastic_integral_sqrt_v(double v_terminal, double int_v, double t, const ModelParams& p) {
    return (v_terminal - p.v0 - p.a * t + p.b * int_v) / std::sqrt(2.0 * p.sigma);
}

double radon_nikodym_gamma1(const PathRecord& rec, const ModelParams& p) {
    if (p.lambda == 0.0) return 1.0;
    const double dw = stochastic_integral_sqrt_v(rec.v_terminal, rec.int_v, rec.t, p);
    return std::exp(-p.lambda * dw - 0.5 * p.lambda * p.lambda * rec.int_v);
}

std::vector<PricePoint> simulate_price_path(const ModelParams& p, double t, std::size_t n_steps, Rng& rng) {
    require_path_inputs(p, t, n_steps, false);
    const double dt = t / static_cast<double>(n_steps);
    const double rho_perp = std::sqrt(1.0 - p.rho * p.rho);
    std::normal_distribution<double> normal;
    CirStepper draw(p, dt);
    std::vector<PricePoint> out;
    out.reserve(n_steps + 1);
    double v = p.v0;
    double log_s = std::log(p.s0);
    out.push_back({0.0, p.s0, v});
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double v_next = draw(v, rng);
        // W1 part over the step, consistent with the exact V transition.
        const double dw1 = (v_next - v - p.a * dt + p.b * 0.5 * dt * (v + v_next)) / std::sqrt(2.0 * p.sigma);
        const double dw2 = std::sqrt(v * dt) * normal(rng);
        log_s += (p.mu - 0.5 * v) * dt + p.rho * dw1 + rho_perp * dw2;
        v = v_next;
        out.push_back({static_cast<double>(k + 1) * dt, std::exp(log_s), v});
    }
    return out;
}

}  // namespace hlda
