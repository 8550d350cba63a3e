#include <doctest.h>

#include <cmath>
#include <random>

#include "hlda/errors.hpp"
#include "hlda/rate_functions.hpp"

using namespace hlda;

namespace {

ModelParams base() {
    ModelParams p;
    p.a = 2.0;
    p.b = 1.0;
    p.sigma = 0.5;
    return p;
}

}  // namespace

TEST_CASE("effective domains") {
    const ModelParams p = base();
    CHECK(domain_of(1.0, -1.0, p) == DomainInterval::closed(-1.125, 0.5));
    CHECK(domain_of(1.0, 0.0, p) == DomainInterval::at_most(0.5));
    CHECK(domain_of(0.0, 0.0, p).is_real_line());
    CHECK(domain_of(-1.0, 0.0, p) == DomainInterval::at_least(-0.5));
    CHECK(domain_of(1.0, 1.0, p) == DomainInterval::at_most(0.5));
    CHECK(domain_of(0.25, 1.0, p) == DomainInterval::at_most(1.125));

    ModelParams weak = p;
    weak.a = 0.5;
    CHECK_THROWS_AS(domain_of(1.0, 1.0, weak), DomainError);
    CHECK_NOTHROW(domain_of(1.0, 0.0, weak));
    CHECK(domain_of(1.0, -1.0, p).to_string() == "[-1.125, 0.5]");
    CHECK(domain_of(1.0, 0.0, p).to_string() == "(-inf, 0.5]");
}

TEST_CASE("limiting cgf") {
    const ModelParams p = base();
    CHECK(cgf_limit(0.0, 1.0, -1.0, p) == doctest::Approx(0.0));
    CHECK(cgf_limit(0.0, 0.3, 0.0, p) == 0.0);
    CHECK(cgf_limit(0.25, 1.0, 0.0, p) == doctest::Approx(2.0 * (1.0 - std::sqrt(0.5))).epsilon(1e-14));
    CHECK(cgf_limit(0.25, 1.0, 0.0, p) == doctest::Approx(0.585786).epsilon(1e-6));
    CHECK(cgf_limit(0.25, 1.0, -1.0, p) == doctest::Approx(2.0 - std::sqrt(1.375) - 0.5 * std::sqrt(0.5)).epsilon(1e-14));
    CHECK(cgf_limit(0.25, 1.0, -1.0, p) == doctest::Approx(0.473843).epsilon(1e-6));
    // Closed endpoints are evaluable, beyond them is an error.
    CHECK_NOTHROW(cgf_limit(0.5, 1.0, 0.0, p));
    CHECK_THROWS_AS(cgf_limit(0.5000001, 1.0, 0.0, p), DomainError);

    SUBCASE("b = 0 reduces to the special-case formula") {
        ModelParams q = p;
        q.b = 0.0;
        const double u = -0.7, beta = 1.0, delta = -0.4;
        const double root = std::sqrt(-q.sigma * beta * u);
        const double expected = -root - root / q.sigma * std::sqrt((q.a - q.sigma) * (q.a - q.sigma) - 4.0 * q.sigma * delta * u);
        CHECK(cgf_limit(u, beta, delta, q) == doctest::Approx(expected).epsilon(1e-13));
    }
}

TEST_CASE("cgf derivatives") {
    const ModelParams p = base();
    CHECK(cgf_derivative(0.375, 1.0, 0.0, p).first == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(cgf_derivative(0.0, 1.0, 0.0, p).first == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(cgf_derivative(0.5, 1.0, 0.0, p), DomainError);

    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        const double beta = coef(gen), delta = coef(gen);
        const DomainInterval dom = domain_of(beta, delta, p);
        const double lo = std::isfinite(dom.lo) ? dom.lo : -5.0;
        const double hi = std::isfinite(dom.hi) ? dom.hi : 5.0;
        for (int i = 1; i < 50; ++i) {
            const double u = lo + (hi - lo) * i / 50.0;
            const CgfDerivatives d = cgf_derivative(u, beta, delta, p);
            CHECK(d.second >= 0.0);
            const double h = 1e-6 * std::max(1.0, std::abs(u));
            const double fd = (cgf_limit(u + h, beta, delta, p) - cgf_limit(u - h, beta, delta, p)) / (2.0 * h);
            CHECK(d.first == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("derivative images") {
    const ModelParams p = base();
    CHECK(derivative_image(1.0, -1.0, p).is_real_line());
    CHECK(derivative_image(1.0, 1.0, p) == DomainInterval::open(2.0, kInfinity));
    CHECK(derivative_image(1.0, 0.0, p) == DomainInterval::open(0.0, kInfinity));
    CHECK(derivative_image(-1.0, -4.0, p) == DomainInterval::open(-kInfinity, -4.0));
    CHECK_THROWS_AS(derivative_image(0.0, 0.0, p), ValidationError);

    // Endpoint of the image is the limit of the slope towards the far end of the domain.
    double prev = kInfinity;
    for (double u : {-1e3, -1e6, -1e9, -1e12, -1e14}) {
        const double slope = cgf_derivative(u, 1.0, 1.0, p).first;
        CHECK(slope < prev);
        CHECK(slope > 2.0);
        prev = slope;
    }
    CHECK(prev == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(cgf_derivative(0.5 - 1e-12, 1.0, 1.0, p).first > 1e5);
}

TEST_CASE("legendre transform") {
    const ModelParams p = base();
    CHECK(legendre_transform(2.0, 1.0, 0.0, p).value == doctest::Approx(0.0));
    const RateEval r = legendre_transform(4.0, 1.0, 0.0, p);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(r.u_star);
    CHECK(*r.u_star == doctest::Approx(0.375).epsilon(1e-10));
    CHECK(legendre_transform(-1.0, 1.0, 0.0, p).value == kInfinity);
    CHECK_FALSE(legendre_transform(-1.0, 1.0, 0.0, p).u_star);
    CHECK(legendre_transform(2.0, 1.0, 1.0, p).value == kInfinity);

    SUBCASE("closed form for delta = 0") {
        for (double beta : {1.0, -1.0, 0.3}) {
            for (int i = 1; i <= 100; ++i) {
                const double x = (beta > 0 ? 1.0 : -1.0) * 0.1 * i;
                CHECK(legendre_transform(x, beta, 0.0, p).value ==
                      doctest::Approx(legendre_closed_form(x, beta, p)).epsilon(1e-10));
            }
        }
    }
    SUBCASE("fenchel-young") {
        for (auto [beta, delta] : {std::pair{1.0, -1.0}, {1.0, 1.0}, {-0.5, 0.7}, {-1.0, -0.2}}) {
            const DomainInterval img = derivative_image(beta, delta, p);
            const DomainInterval dom = domain_of(beta, delta, p);
            for (double x : {-3.0, -1.0, 0.5, 2.5, 4.0, 7.0}) {
                if (!img.interior_contains(x)) continue;
                const RateEval e = legendre_transform(x, beta, delta, p);
                REQUIRE(e.u_star);
                CHECK(dom.interior_contains(*e.u_star));
                CHECK(e.value == doctest::Approx(*e.u_star * x - cgf_limit(*e.u_star, beta, delta, p)).epsilon(1e-9));
                for (int k = 1; k < 40; ++k) {
                    const double lo = std::isfinite(dom.lo) ? dom.lo : -20.0;
                    const double hi = std::isfinite(dom.hi) ? dom.hi : 20.0;
                    const double u = lo + (hi - lo) * k / 40.0;
                    CHECK(e.value >= u * x - cgf_limit(u, beta, delta, p) - 1e-12);
                }
            }
        }
    }
}

TEST_CASE("rate minimum") {
    const ModelParams p = base();
    // The zero sits at the ergodic mean beta a / b + delta b / (a - sigma).
    const RateMinimum full = rate_minimum(1.0, -1.0, p);
    CHECK(full.x_min == doctest::Approx(2.0 - 1.0 / 1.5));
    CHECK(full.value == 0.0);
    CHECK(full.attained_zero);

    const RateMinimum mean = rate_minimum(1.0, 0.0, p);
    CHECK(mean.x_min == doctest::Approx(2.0));
    CHECK(mean.value == 0.0);
    CHECK(mean.attained_zero);
    CHECK(legendre_transform(mean.x_min, 1.0, 0.0, p).value == doctest::Approx(0.0));

    const RateMinimum pos = rate_minimum(1.0, 1.0, p);
    CHECK(pos.x_min == doctest::Approx(2.0 + 1.0 / 1.5));
    CHECK(legendre_transform(pos.x_min, 1.0, 1.0, p).value == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(rate_minimum(0.0, 0.0, p), ValidationError);

    SUBCASE("non-ergodic drift keeps the formula value") {
        ModelParams q = p;
        q.b = -1.0;
        const RateMinimum m = rate_minimum(1.0, 0.0, q);
        CHECK(m.value == doctest::Approx(-q.a * q.b / q.sigma));
        CHECK_FALSE(m.attained_zero);
    }
}
