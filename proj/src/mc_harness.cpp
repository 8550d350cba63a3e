#include "hlda/mc_harness.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "hlda/errors.hpp"
#include "hlda/finite_mgf.hpp"

namespace hlda {

void RunningStats::push(double x) {
    RunningStats one;
    one.n_ = 1;
    one.mean_ = x;
    merge(one);
}

// Pairwise update of central moment sums (Chan et al.; Pebay for m3, m4).
void RunningStats::merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double d = o.mean_ - mean_;
    const double d_n = d / n;
    const double d_n2 = d_n * d_n;
    const double cross = d * d_n * na * nb;
    const double m4 = m4_ + o.m4_ + cross * d_n2 * (na * na - na * nb + nb * nb) +
                      6.0 * d_n2 * (na * na * o.m2_ + nb * nb * m2_) + 4.0 * d_n * (na * o.m3_ - nb * m3_);
    const double m3 = m3_ + o.m3_ + cross * d_n * (na - nb) + 3.0 * d_n * (na * o.m2_ - nb * m2_);
    m2_ += o.m2_ + cross;
    m3_ = m3;
    m4_ = m4;
    mean_ += d_n * nb;
    n_ += o.n_;
}

double RunningStats::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

double RunningStats::stderr_mean() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

double RunningStats::stderr_variance() const {
    if (n_ < 4) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(n_);
    const double mu4 = m4_ / n;
    const double s2 = m2_ / n;
    return std::sqrt(std::max(0.0, (mu4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n));
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

const char* to_string(Direction d) { return d == Direction::at_least ? "at_least" : "below"; }

namespace {

struct Count {
    std::size_t hits = 0;
    std::size_t n = 0;
    void merge(const Count& o) {
        hits += o.hits;
        n += o.n;
    }
};

std::size_t grid_steps(double t, std::size_t steps_per_unit) {
    if (steps_per_unit == 0) throw ValidationError({"steps_per_unit must be positive"});
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t * static_cast<double>(steps_per_unit))));
}

ProbEstimate make_estimate(const Count& c) {
    return {static_cast<double>(c.hits) / static_cast<double>(c.n), c.hits, c.n, wilson_interval(c.hits, c.n)};
}

}  // namespace

void validate_query(const TailQuery& q) {
    std::vector<std::string> problems;
    if (!(q.t > 0.0)) problems.emplace_back("t must be positive");
    if (q.n_paths < 100) problems.emplace_back("n_paths must be at least 100");
    if (q.n_steps == 0) problems.emplace_back("n_steps must be positive");
    if (std::isnan(q.threshold)) problems.emplace_back("threshold must not be NaN");
    if (q.speed == Speed::custom && !q.f_of_t) problems.emplace_back("f_of_t required for custom speed");
    if (q.speed == Speed::linear && q.f_of_t) problems.emplace_back("f_of_t only allowed for custom speed");
    if (q.f_of_t && !(*q.f_of_t > 0.0)) problems.emplace_back("f_of_t must be positive");
    if (!problems.empty()) throw ValidationError(std::move(problems));
}

WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double z) {
    if (n == 0) throw DomainError("wilson_interval: n must be positive");
    const double nn = static_cast<double>(n);
    const double ph = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (ph + z2 / (2.0 * nn)) / denom;
    const double half = z / denom * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn));
    return {hits == 0 ? 0.0 : std::max(0.0, centre - half), hits == n ? 1.0 : std::min(1.0, centre + half)};
}

ProbEstimate estimate_prob(const TailQuery& q, const ModelParams& p, unsigned threads) {
    validate_query(q);
    validate_params(p);
    const bool want_inv = q.coeffs.delta != 0.0;
    if (want_inv && !p.feller_strict()) throw DomainError("Feller condition a>sigma required for 1/V integrals");
    const double denom = q.speed == Speed::custom ? *q.f_of_t : q.t;
    const Count total = reduce_paths<Count>(q.n_paths, threads, [&](std::size_t begin, std::size_t end) {
        Count c;
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng = path_stream(q.seed, i);
            const double x = functional_value(simulate_variance_path(p, q.t, q.n_steps, want_inv, rng), q.coeffs) / denom;
            const bool hit = q.direction == Direction::at_least ? x >= q.threshold : x < q.threshold;
            c.hits += hit ? 1 : 0;
            ++c.n;
        }
        return c;
    });
    return make_estimate(total);
}

DecayPoint make_decay_point(double t, std::size_t hits, std::size_t n) {
    const WilsonInterval ci = wilson_interval(hits, n);
    const double ph = static_cast<double>(hits) / static_cast<double>(n);
    const double log_p = hits == 0 ? -std::numeric_limits<double>::infinity() : std::log(ph);
    const double half = hits == 0 ? std::numeric_limits<double>::infinity() : 0.5 * (std::log(ci.hi) - std::log(ci.lo));
    return {t, ph, n, log_p, half, ci.lo, ci.hi};
}

namespace {

LineFit weighted_fit(const std::vector<DecayPoint>& pts) {
    double sw = 0.0, swt = 0.0, swy = 0.0;
    std::vector<double> w(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& q = pts[i];
        // Delta method: Var(log p_hat) ~ (1 - p) / (n p).
        w[i] = static_cast<double>(q.n) * q.p_hat / (1.0 - q.p_hat);
        sw += w[i];
        swt += w[i] * q.t;
        swy += w[i] * -q.log_p_hat;
    }
    const double t_bar = swt / sw;
    const double y_bar = swy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double dt = pts[i].t - t_bar;
        const double dy = -pts[i].log_p_hat - y_bar;
        sxx += w[i] * dt * dt;
        sxy += w[i] * dt * dy;
        syy += w[i] * dy * dy;
    }
    const double slope = sxy / sxx;
    const double intercept = y_bar - slope * t_bar;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = -pts[i].log_p_hat - (intercept + slope * pts[i].t);
        chi2 += w[i] * r * r;
    }
    const std::size_t dof = pts.size() > 2 ? pts.size() - 2 : 0;
    const double inflate = dof > 0 ? std::max(1.0, chi2 / static_cast<double>(dof)) : 1.0;
    const double r2 = syy > 0.0 ? std::clamp(1.0 - chi2 / syy, 0.0, 1.0) : 1.0;
    return {slope, intercept, std::sqrt(inflate / sxx), r2, pts.size()};
}

}  // namespace

DecayEstimate decay_slope_from_points(const std::vector<DecayPoint>& points) {
    std::set<double> distinct;
    std::size_t min_n = std::numeric_limits<std::size_t>::max();
    for (const auto& q : points) {
        distinct.insert(q.t);
        min_n = std::min(min_n, q.n);
    }
    if (distinct.size() < 4) throw ValidationError({"decay_slope needs at least 4 distinct t values"});

    DecayEstimate est;
    est.points = points;
    est.resolution_floor = 1.0 / static_cast<double>(min_n);
    std::vector<DecayPoint> inside;
    for (const auto& q : points)
        if (q.p_hat > 0.0 && q.p_hat < 1.0) inside.push_back(q);
    est.censored = inside.size() != points.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (est.censored) {
        est.slope = est.stderr_slope = est.r_squared = est.intercept = nan;
        std::set<double> ts;
        for (const auto& q : inside) ts.insert(q.t);
        if (ts.size() >= 2) est.resolvable_fit = weighted_fit(inside);
        return est;
    }
    const LineFit fit = weighted_fit(points);
    est.slope = fit.slope;
    est.stderr_slope = fit.stderr_slope;
    est.r_squared = fit.r_squared;
    est.intercept = fit.intercept;
    return est;
}

DecayEstimate decay_slope(const std::vector<TailQuery>& queries, const ModelParams& p, unsigned threads) {
    if (queries.empty()) throw ValidationError({"decay_slope needs at least 4 distinct t values"});
    const TailQuery& first = queries.front();
    std::vector<std::string> problems;
    for (const auto& q : queries) {
        if (!(q.coeffs == first.coeffs) || q.threshold != first.threshold || q.direction != first.direction ||
            q.speed != first.speed || q.n_paths != first.n_paths) {
            problems.emplace_back("decay_slope queries must differ only in t, n_steps, f_of_t and seed");
            break;
        }
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    std::vector<DecayPoint> pts;
    pts.reserve(queries.size());
    for (const auto& q : queries) {
        const ProbEstimate e = estimate_prob(q, p, threads);
        pts.push_back(make_decay_point(q.t, e.hits, e.n));
    }
    return decay_slope_from_points(pts);
}

LdpReport ldp_check(const FunctionalCoeffs& coeffs, double x, const std::vector<double>& t_grid, std::size_t n_paths,
                    const ModelParams& p, const McOptions& opt) {
    validate_params(p);
    if (!(p.b > 0.0)) throw ValidationError({"ldp_check requires b > 0"});
    LdpReport rep;
    rep.coeffs = coeffs;
    rep.x = x;
    const DomainInterval image = derivative_image(coeffs.beta, coeffs.delta, p);
    if (!image.interior_contains(x))
        throw ValidationError({"x = " + std::to_string(x) + " is not inside the derivative image " + image.to_string()});
    rep.x_min = rate_minimum(coeffs.beta, coeffs.delta, p).x_min;
    if (std::abs(x - rep.x_min) <= 1e-12 * std::max(1.0, std::abs(x))) {
        rep.skipped = true;
        rep.theory = 0.0;
        rep.notes.emplace_back("zero-rate point: x is the minimiser of the rate function, no decay to compare");
        return rep;
    }
    // The rate function is convex with its zero at x_min, so the infimum over
    // the tail set away from x_min sits at x itself.
    rep.direction = x > rep.x_min ? Direction::at_least : Direction::below;
    rep.theory = legendre_transform(x, coeffs.beta, coeffs.delta, p).value;

    std::vector<TailQuery> queries;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        TailQuery q;
        q.coeffs = coeffs;
        q.threshold = x;
        q.direction = rep.direction;
        q.t = t_grid[i];
        q.n_paths = n_paths;
        q.n_steps = grid_steps(t_grid[i], opt.steps_per_unit);
        // Independent path sets per t keep the regression points independent.
        q.seed = opt.seed + i;
        queries.push_back(q);
    }
    rep.empirical = decay_slope(queries, p, opt.threads);
    if (!rep.empirical->censored) {
        rep.relative_deviation = std::abs(rep.empirical->slope - rep.theory) / rep.theory;
    } else {
        rep.notes.emplace_back("censored: some p_hat outside (0,1) at resolution 1/n_paths; no slope reported");
    }
    return rep;
}

namespace {

struct ErgodicAcc {
    RunningStats v, inv, term;
    void merge(const ErgodicAcc& o) {
        v.merge(o.v);
        inv.merge(o.inv);
        term.merge(o.term);
    }
};

struct StatsAcc {
    RunningStats s;
    void merge(const StatsAcc& o) { s.merge(o.s); }
};

}  // namespace

ErgodicReport ergodic_check(double t, std::size_t n_paths, const ModelParams& p, const McOptions& opt) {
    validate_params(p);
    std::vector<std::string> problems;
    if (!(p.b > 0.0)) problems.emplace_back("ergodic_check requires b > 0");
    if (!p.feller_strict()) problems.emplace_back("ergodic_check requires a > sigma for the inverse integral");
    if (!(t > 0.0)) problems.emplace_back("t must be positive");
    if (n_paths < 2) problems.emplace_back("n_paths must be at least 2");
    if (!problems.empty()) throw ValidationError(std::move(problems));
    const std::size_t steps = grid_steps(t, opt.steps_per_unit);
    const ErgodicAcc acc = reduce_paths<ErgodicAcc>(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        ErgodicAcc a;
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng = path_stream(opt.seed, i);
            const PathRecord rec = simulate_variance_path(p, t, steps, true, rng);
            a.v.push(rec.int_v / t);
            a.inv.push(*rec.int_inv_v / t);
            a.term.push(rec.v_terminal);
        }
        return a;
    });
    return {t, n_paths, acc.v, acc.inv, acc.term, p.a / p.b, p.b / (p.a - p.sigma), p.a * p.sigma / (p.b * p.b)};
}

RunningStats cir_law_sample(double v, double dt, std::size_t n_draws, const ModelParams& p, const McOptions& opt) {
    validate_params(p);
    (void)cir_transition(v, dt, p);
    const StatsAcc acc = reduce_paths<StatsAcc>(n_draws, opt.threads, [&](std::size_t begin, std::size_t end) {
        StatsAcc a;
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng = path_stream(opt.seed, i);
            CirStepper step(p, dt);
            a.s.push(step(v, rng));
        }
        return a;
    });
    return acc.s;
}

double MartingaleReport::z_score_vs_one() const {
    const double se = z.stderr_mean();
    if (se == 0.0) return z.mean() == 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return (z.mean() - 1.0) / se;
}

std::optional<double> MartingaleReport::z_score_vs_closed_form() const {
    if (!closed_form) return std::nullopt;
    const double se = z.stderr_mean();
    if (se == 0.0) return z.mean() == *closed_form ? 0.0 : std::numeric_limits<double>::infinity();
    return (z.mean() - *closed_form) / se;
}

MartingaleReport martingale_check(double t, std::size_t n_paths, const ModelParams& p, const McOptions& opt) {
    validate_params(p);
    if (!(t > 0.0)) throw ValidationError({"t must be positive"});
    if (n_paths < 2) throw ValidationError({"n_paths must be at least 2"});
    MartingaleReport rep;
    rep.t = t;
    rep.n_paths = n_paths;

    const double s = std::sqrt(2.0 * p.sigma);
    const double lam = p.lambda;
    try {
        const double lm = log_mgf_alpha_beta(-lam / s, -p.b * lam / s - 0.5 * lam * lam, t, p);
        rep.closed_form = std::exp(lam * p.v0 / s + p.a * lam * t / s + lm);
    } catch (const DomainError& e) {
        rep.closed_form_error = e.what();
    }

    const std::size_t steps = grid_steps(t, opt.steps_per_unit);
    const StatsAcc acc = reduce_paths<StatsAcc>(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        StatsAcc a;
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng = path_stream(opt.seed, i);
            a.s.push(radon_nikodym_gamma1(simulate_variance_path(p, t, steps, false, rng), p));
        }
        return a;
    });
    rep.z = acc.s;
    return rep;
}

namespace {

struct StopAcc {
    Count event, not_stopped;
    void merge(const StopAcc& o) {
        event.merge(o.event);
        not_stopped.merge(o.not_stopped);
    }
};

}  // namespace

StoppingTimeReport stopping_time_experiment(double gamma, double gamma_bar, double f_of_t, double t,
                                            std::size_t n_paths, const ModelParams& p, const McOptions& opt,
                                            std::optional<double> gamma_prime) {
    validate_params(p);
    std::vector<std::string> problems;
    if (!(gamma > 0.0)) problems.emplace_back("gamma must be positive");
    if (!(gamma < gamma_bar)) problems.emplace_back("gamma < gamma_bar required");
    if (!(f_of_t > 0.0)) problems.emplace_back("f_of_t must be positive");
    if (!(t > 0.0)) problems.emplace_back("t must be positive");
    if (n_paths < 100) problems.emplace_back("n_paths must be at least 100");
    const bool trivial = p.lambda == 0.0;
    double half_c1 = kInfinity;
    if (!trivial) {
        if (!(p.b > 0.0)) problems.emplace_back("b > 0 required for the threshold c_1");
        else {
            half_c1 = 0.5 * p.a * p.lambda * p.lambda / p.b;
            if (!(gamma_bar < half_c1)) problems.emplace_back("gamma_bar < c_1 / 2 required");
        }
    }
    double gp = trivial ? 2.0 * gamma_bar : 0.5 * (gamma_bar + half_c1);
    if (gamma_prime) {
        gp = *gamma_prime;
        if (!(gp > gamma_bar && gp < half_c1)) problems.emplace_back("gamma_prime must lie in (gamma_bar, c_1 / 2)");
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));

    StoppingTimeReport rep;
    rep.gamma = gamma;
    rep.gamma_bar = gamma_bar;
    rep.gamma_prime = gp;
    rep.f_of_t = f_of_t;
    rep.t = t;
    const double d = gp - gamma + gamma_bar;
    rep.chebychev_bound = 2.0 * gp / (d * d * f_of_t);
    if (trivial) rep.notes.emplace_back("lambda = 0: Z is identically 1 and the event is decided by the sign of gamma_bar - gamma");
    rep.notes.emplace_back("P-side only: the Q-probability of the complement is not simulated");

    const std::size_t steps = grid_steps(t, opt.steps_per_unit);
    const double dt = t / static_cast<double>(steps);
    const double lam2 = p.lambda * p.lambda;
    const double stop_level = 2.0 * gp * f_of_t;      // for int gamma_1^2
    const double log_level = (gamma_bar - gamma) * f_of_t;
    const double s = std::sqrt(2.0 * p.sigma);

    const StopAcc acc = reduce_paths<StopAcc>(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        StopAcc a;
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng = path_stream(opt.seed, i);
            CirStepper step(p, dt);
            double v = p.v0;
            double int_v = 0.0;
            double tau = t;
            for (std::size_t k = 0; k < steps; ++k) {
                const double v_next = step(v, rng);
                int_v += 0.5 * dt * (v + v_next);
                v = v_next;
                // tau_1 is monitored on the simulation grid.
                if (!trivial && lam2 * int_v >= stop_level) {
                    tau = static_cast<double>(k + 1) * dt;
                    break;
                }
            }
            const double log_z =
                trivial ? 0.0 : -p.lambda * (v - p.v0 - p.a * tau + p.b * int_v) / s - 0.5 * lam2 * int_v;
            a.event.hits += log_z >= log_level ? 1 : 0;
            ++a.event.n;
            a.not_stopped.hits += 0.5 * lam2 * int_v <= gp * f_of_t ? 1 : 0;
            ++a.not_stopped.n;
        }
        return a;
    });
    rep.event = make_estimate(acc.event);
    rep.not_stopped = make_estimate(acc.not_stopped);
    return rep;
}

}  // namespace hlda
