#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hlda/heston_core.hpp"
#include "hlda/rate_functions.hpp"

namespace hlda {

// ---------------------------------------------------------------------------
// Deterministic parallel reduction

// Mean / central moments up to order four, mergeable in any fixed order.
class RunningStats {
public:
    void push(double x);
    void merge(const RunningStats& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased
    double stderr_mean() const;
    // Standard error of the variance estimate, from the fourth moment.
    double stderr_variance() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
};

inline constexpr std::size_t kChunkPaths = 4096;

unsigned resolve_threads(unsigned requested);

/// Runs `chunk(begin, end)` over [0, n) in fixed chunks of kChunkPaths and
/// merges the chunk results in chunk order. The result depends only on n and
/// the chunk function, never on the number of threads.
template <class Acc, class ChunkFn>
Acc reduce_paths(std::size_t n, unsigned threads, ChunkFn chunk) {
    const std::size_t n_chunks = (n + kChunkPaths - 1) / kChunkPaths;
    std::vector<Acc> parts(n_chunks);
    const unsigned workers = std::max(1u, std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(n_chunks)));
    const auto run = [&](unsigned w) {
        for (std::size_t c = w; c < n_chunks; c += workers)
            parts[c] = chunk(c * kChunkPaths, std::min(n, (c + 1) * kChunkPaths));
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    }
    Acc total{};
    for (const Acc& part : parts) total.merge(part);
    return total;
}

struct McOptions {
    std::uint64_t seed = 42;
    unsigned threads = 0;  // 0: hardware concurrency
    std::size_t steps_per_unit = 10;
};

// ---------------------------------------------------------------------------
// Tail probabilities

enum class Direction { at_least, below };
enum class Speed { linear, custom };

const char* to_string(Direction d);

struct TailQuery {
    FunctionalCoeffs coeffs;
    double threshold = 0.0;
    Direction direction = Direction::at_least;
    double t = 1.0;
    Speed speed = Speed::linear;
    std::optional<double> f_of_t;  // required iff speed == custom
    std::size_t n_paths = 100000;
    std::size_t n_steps = 10;
    std::uint64_t seed = 42;
};

// Throws ValidationError naming every problem with the query.
void validate_query(const TailQuery& q);

struct WilsonInterval {
    double lo;
    double hi;
};

inline constexpr double kZ95 = 1.959963984540054;

WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double z = kZ95);

struct ProbEstimate {
    double p_hat;
    std::size_t hits;
    std::size_t n;
    WilsonInterval ci;
};

/// Fraction of paths with X_t / t (or X_t / f(t)) >= threshold (at_least) or
/// < threshold (below). Path i draws from path_stream(q.seed, i).
ProbEstimate estimate_prob(const TailQuery& q, const ModelParams& p, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Decay slopes

struct DecayPoint {
    double t;
    double p_hat;
    std::size_t n;
    double log_p_hat;       // -inf when p_hat = 0
    double ci_half_width;   // of log p_hat, from the Wilson interval
    double ci_lo;
    double ci_hi;
};

struct LineFit {
    double slope;
    double intercept;
    double stderr_slope;
    double r_squared;
    std::size_t n_points;
};

struct DecayEstimate {
    // -t^{-1} log P estimate: slope of -log p_hat against t. NaN when censored.
    double slope;
    double stderr_slope;
    double r_squared;
    double intercept;
    std::vector<DecayPoint> points;
    bool censored = false;
    double resolution_floor = 0.0;  // 1 / n_paths
    // Fit over the points with p_hat strictly inside (0, 1), reported
    // separately whenever some point is censored.
    std::optional<LineFit> resolvable_fit;
    bool exponential_regime() const { return !censored && r_squared >= 0.95; }
};

/// Weighted least squares of -log p_hat on t, weights from the delta-method
/// variance (1 - p) / (n p). The slope's standard error is inflated by the
/// reduced chi-square when the points scatter more than binomial noise allows.
DecayEstimate decay_slope_from_points(const std::vector<DecayPoint>& points);

// Builds a DecayPoint from a count.
DecayPoint make_decay_point(double t, std::size_t hits, std::size_t n);

// Estimates every query (>= 4 distinct t, otherwise identical) and fits.
DecayEstimate decay_slope(const std::vector<TailQuery>& queries, const ModelParams& p, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Experiments

struct LdpReport {
    FunctionalCoeffs coeffs;
    double x = 0.0;
    Direction direction = Direction::at_least;
    double x_min = 0.0;      // zero of the rate function
    double theory = 0.0;     // inf of Lambda^* over the tail set
    bool skipped = false;
    std::optional<DecayEstimate> empirical;
    std::optional<double> relative_deviation;
    std::vector<std::string> notes;
};

/// Compares the empirical decay rate of P(X_t / t in tail set) with the
/// infimum of the rate function over that set. The tail set is [x, inf) when
/// x lies above the zero of the rate function and (-inf, x) when below.
LdpReport ldp_check(const FunctionalCoeffs& coeffs, double x, const std::vector<double>& t_grid, std::size_t n_paths,
                    const ModelParams& p, const McOptions& opt = {});

struct ErgodicReport {
    double t;
    std::size_t n_paths;
    RunningStats avg_v;       // int V / t
    RunningStats avg_inv_v;   // int 1/V / t
    RunningStats terminal_v;  // V_t
    double target_v;          // a / b
    double target_inv_v;      // b / (a - sigma)
    double target_var_v;      // a sigma / b^2, stationary variance
};

ErgodicReport ergodic_check(double t, std::size_t n_paths, const ModelParams& p, const McOptions& opt = {});

// n_draws exact transitions from v over dt, each on its own stream.
RunningStats cir_law_sample(double v, double dt, std::size_t n_draws, const ModelParams& p, const McOptions& opt = {});

struct MartingaleReport {
    double t;
    std::size_t n_paths;
    RunningStats z;
    std::optional<double> closed_form;
    std::optional<std::string> closed_form_error;  // explosion, reported apart from MC
    double z_score_vs_one() const;
    std::optional<double> z_score_vs_closed_form() const;
};

/// MC mean of the gamma_1 density Z_t against 1 and against
/// exp(lambda V0 / s + a lambda t / s) E[exp(-lambda / s V_t + beta' int V)],
/// s = sqrt(2 sigma), beta' = -b lambda / s - lambda^2 / 2.
MartingaleReport martingale_check(double t, std::size_t n_paths, const ModelParams& p, const McOptions& opt = {});

struct StoppingTimeReport {
    double gamma;
    double gamma_bar;
    double gamma_prime;
    double f_of_t;
    double t;
    ProbEstimate event;          // P(Z_{tau_1} >= exp((gamma_bar - gamma) f(t)))
    ProbEstimate not_stopped;    // P(1/2 int_0^tau gamma_1^2 <= gamma' f(t))
    double chebychev_bound;      // 2 gamma' / ((gamma' - gamma + gamma_bar)^2 f(t))
    double bound() const { return chebychev_bound + not_stopped.p_hat; }
    std::vector<std::string> notes;
};

/// tau_1 is the first grid node where int_0^s gamma_1^2 reaches 2 gamma' f(t),
/// capped at t. gamma' defaults to the midpoint of gamma_bar and c_1 / 2.
/// Requires 0 < gamma < gamma_bar < c_1 / 2; with lambda = 0 (Z = 1) only
/// 0 < gamma < gamma_bar is required. Measures P only; Q is not simulated.
StoppingTimeReport stopping_time_experiment(double gamma, double gamma_bar, double f_of_t, double t,
                                            std::size_t n_paths, const ModelParams& p, const McOptions& opt = {},
                                            std::optional<double> gamma_prime = std::nullopt);

}  // namespace hlda
