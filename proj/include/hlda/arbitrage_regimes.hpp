#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hlda/heston_core.hpp"
#include "hlda/rate_functions.hpp"

namespace hlda {

enum class RegimeKind {
    gamma1_average_mpr,    // average squared gamma_1 above a threshold, linear speed
    gamma2_average_mpr,    // same for gamma_2
    linear_arbitrage,      // strong asymptotic arbitrage with speed t
    sublinear_thresholds,  // thresholds c_1, c_2 at sublinear speed
    sublinear_arbitrage,   // strong asymptotic arbitrage with sublinear speed
};

// The propositions give sufficient conditions. `fails` means the stated
// condition fails (e.g. "no average squared MPR above c"); it never asserts
// more than the corresponding statement does.
enum class Verdict { holds, fails, boundary, not_covered_by_paper };

const char* to_string(RegimeKind k);
const char* to_string(Verdict v);

struct ArbitrageConstants {
    double c;        // multiplicative constant C
    double lambda1;  // decay rate of the failure probability
    double lambda2;  // decay rate of the lower wealth bound
};

struct RegimeReport {
    RegimeKind query{};
    Verdict verdict = Verdict::not_covered_by_paper;
    std::string basis;  // which case of the statement decided the verdict
    std::map<std::string, double> thresholds;
    std::vector<DomainInterval> lambda_intervals;
    std::optional<ArbitrageConstants> constants;
    // Linear-speed arbitrage only: verdict of the interval form of the
    // condition in zeta_+/-, kept next to the exact inequality.
    std::optional<Verdict> interval_verdict;
    std::vector<std::string> notes;
};

// Average squared gamma_1 above c at linear speed.
RegimeReport classify_gamma1(double c, const ModelParams& p);

// Average squared gamma_2 above c at linear speed, cases (i)-(v) in order.
RegimeReport classify_gamma2(double c, const ModelParams& p);

/// Strong asymptotic arbitrage with speed t and exponentially decaying failure.
///
/// The default decision is the exact inequality
///   a lambda / sqrt(2 sigma) + gamma + Lambda^{beta'}(1) < 0,
///   beta' = -b lambda / sqrt(2 sigma) - lambda^2 / 2,
/// with Lambda taken from cgf_limit. The zeta_+/- interval form is evaluated
/// as well and any disagreement is noted. lambda_intervals[0] is the exact set
/// of lambda, lambda_intervals[1..] the interval-form set.
RegimeReport classify_linear_arbitrage(double gamma, const ModelParams& p);

// c_1 = a lambda^2 / b and the gamma_2 threshold c_2 at sublinear speed.
RegimeReport sublinear_thresholds(const ModelParams& p);

// Strong asymptotic arbitrage at sublinear speed f(t); needs a > sigma,
// lambda rho (mu - r) <= 0, gamma > 0 and b > 0.
RegimeReport classify_sublinear_arbitrage(double gamma, const ModelParams& p);

}  // namespace hlda
