#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "cbm/reliability/hazard.hpp"
#include "cbm/reliability/pf_interval.hpp"
#include "cbm/reliability/weibull.hpp"
#include "cbm/sim/random.hpp"
#include "oracles.hpp"

using namespace cbm::reliability;
using cbm::sim::Random;

namespace {

std::vector<double> draws(std::uint64_t seed, double beta, double eta, std::size_t n) {
    Random rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = rng.weibull(beta, eta);
    return out;
}

HazardCurve curve_from(double (*h)(double), std::size_t points = 41) {
    std::vector<HazardCurve::Point> grid;
    for (std::size_t i = 0; i < points; ++i) {
        const double a = static_cast<double>(i) / static_cast<double>(points - 1);
        grid.push_back({a, h(a)});
    }
    return HazardCurve(grid);
}

double bathtub(double a) {
    if (a <= 0.3) return 0.05 - (0.04 / 0.3) * a;
    if (a <= 0.7) return 0.01;
    return 0.01 + (0.05 / 0.3) * (a - 0.7);
}
double constant(double) { return 0.01; }
double infant(double a) { return a <= 0.3 ? 0.05 - (0.04 / 0.3) * a : 0.01; }

/// vector<bool> is not contiguous; fit_weibull takes a span of bool.
struct Flags {
    explicit Flags(const std::vector<bool>& v) : n(v.size()), data(std::make_unique<bool[]>(v.size())) {
        for (std::size_t i = 0; i < n; ++i) data[i] = v[i];
    }
    operator std::span<const bool>() const { return {data.get(), n}; }
    std::size_t n;
    std::unique_ptr<bool[]> data;
};

}  // namespace

TEST_SUITE("reliability") {

TEST_CASE("hazard closed-form values") {
    CHECK(weibull_hazard(7.0, WeibullModel(1.0, 200.0)) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(weibull_hazard(3000.0, WeibullModel(1.0, 200.0)) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(weibull_hazard(100.0, WeibullModel(2.0, 100.0)) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(weibull_hazard(50.0, WeibullModel(0.5, 50.0)) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("hazard domain") {
    CHECK_THROWS_AS(weibull_hazard(0.0, WeibullModel(0.5, 50.0)), DomainError);
    CHECK_THROWS_AS(weibull_hazard(-1.0, WeibullModel(2.0, 50.0)), DomainError);
    CHECK_THROWS_AS(WeibullModel(0.0, 10.0), InvalidModel);
    CHECK_THROWS_AS(WeibullModel(1.0, -1.0), InvalidModel);
    CHECK_THROWS_AS(WeibullModel(NAN, 1.0), InvalidModel);
}

TEST_CASE("hazard monotonicity follows beta") {
    const WeibullModel up(1.7, 40.0), flat(1.0, 40.0), down(0.6, 40.0);
    for (double t = 1.0; t < 200.0; t += 7.5) {
        CHECK(weibull_hazard(t + 1, up) > weibull_hazard(t, up));
        CHECK(weibull_hazard(t + 1, down) < weibull_hazard(t, down));
        CHECK(weibull_hazard(t + 1, flat) == doctest::Approx(weibull_hazard(t, flat)).epsilon(1e-14));
    }
}

TEST_CASE("conditional probability examples") {
    CHECK(conditional_failure_probability(WeibullModel(2.3, 10.0), 5.0, 0.0) == 0.0);
    const WeibullModel expo(1.0, 100.0);
    for (double age : {0.0, 13.0, 250.0, 1e4}) {
        CHECK(conditional_failure_probability(expo, age, 100.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    }
    const WeibullModel wear(2.0, 100.0);
    const double expected = 1.0 - std::exp(-1.25);
    CHECK(conditional_failure_probability(wear, 100.0, 50.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.7135).epsilon(1e-4));
}

TEST_CASE("conditional probability agrees with Monte Carlo") {
    Random rng(99);
    std::size_t survived = 0, failed = 0;
    for (int i = 0; i < 2'000'000; ++i) {
        const double t = rng.weibull(2.0, 100.0);
        if (t > 100.0) {
            ++survived;
            if (t <= 150.0) ++failed;
        }
    }
    const double p = static_cast<double>(failed) / static_cast<double>(survived);
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(survived));
    CHECK(std::fabs(p - conditional_failure_probability(WeibullModel(2.0, 100.0), 100.0, 50.0)) < 5 * se);
}

TEST_CASE("cdf is monotone and consistent with hazard") {
    Random rng(3);
    for (int m = 0; m < 200; ++m) {
        const WeibullModel model(rng.uniform(0.3, 6.0), rng.uniform(1.0, 1000.0));
        const double t1 = rng.uniform(0.0, 3 * model.scale());
        const double t2 = t1 + rng.uniform(0.0, model.scale());
        CHECK(weibull_cdf(t2, model) >= weibull_cdf(t1, model));
        CHECK(conditional_failure_probability(model, 0.0, t1) == weibull_cdf(t1, model));

        const double t = rng.uniform(0.05, 1.5) * model.scale();
        const double h = t * 1e-5;
        const double f = (weibull_cdf(t + h, model) - weibull_cdf(t - h, model)) / (2 * h);
        const double numeric = f / model.survival(t);
        CHECK(oracle::close_rel(weibull_hazard(t, model), numeric, 1e-5));
        CHECK(oracle::close_rel(weibull_hazard(t, model), model.density(t) / model.survival(t), 1e-9));
    }
}

TEST_CASE("fit recovers parameters and matches grid oracle") {
    const auto x = draws(7, 1.5, 300.0, 5000);
    const auto fit = fit_weibull(x);
    CHECK(fit.shape() >= 1.45);
    CHECK(fit.shape() <= 1.55);
    CHECK(fit.scale() >= 291.0);
    CHECK(fit.scale() <= 309.0);
    CHECK(fit.fit_n() == 5000);
    REQUIRE(fit.log_likelihood().has_value());

    const auto grid = oracle::weibull_grid(x);
    CHECK(std::fabs(fit.shape() - grid.beta) <= 0.001);
    CHECK(*fit.log_likelihood() >= grid.log_likelihood - 1e-6);
    CHECK(*fit.log_likelihood() == doctest::Approx(weibull_log_likelihood(fit, x)).epsilon(1e-9));
}

TEST_CASE("censored fit matches grid oracle") {
    auto x = draws(11, 2.2, 120.0, 800);
    std::vector<bool> cens(x.size(), false);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 150.0) {
            x[i] = 150.0;
            cens[i] = true;
        }
    }
    const auto fit = fit_weibull(x, Flags(cens));
    const auto grid = oracle::weibull_grid(x, cens);
    CHECK(std::fabs(fit.shape() - grid.beta) <= 0.001);
    CHECK(oracle::close_rel(fit.scale(), grid.eta, 1e-3));
}

TEST_CASE("fit is scale-equivariant") {
    const auto x = draws(21, 0.9, 40.0, 400);
    const auto base = fit_weibull(x);
    for (double c : {0.5, 10.0}) {
        std::vector<double> y(x);
        for (auto& v : y) v *= c;
        const auto scaled = fit_weibull(y);
        CHECK(std::fabs(scaled.shape() - base.shape()) <= 1e-6);
        CHECK(oracle::close_rel(scaled.scale(), base.scale() * c, 1e-6));
    }
}

TEST_CASE("fit errors") {
    CHECK_THROWS_AS(fit_weibull(std::vector<double>{}), InsufficientData);
    CHECK_THROWS_AS(fit_weibull(std::vector<double>{1.0, 2.0}), InsufficientData);
    CHECK_THROWS_AS(fit_weibull(std::vector<double>{100, 100, 100}), DegenerateSample);
    std::vector<double> three{5, 6, 7, 8};
    std::vector<bool> cens{true, true, false, false};
    CHECK_THROWS_AS(fit_weibull(three, Flags(cens)), InsufficientData);
    CHECK_THROWS(fit_weibull(std::vector<double>{1.0, -2.0, 3.0}));
}

TEST_CASE("pattern fixtures") {
    CHECK(classify_hazard_shape(curve_from(bathtub)).id == PatternClass::E);
    CHECK(classify_hazard_shape(curve_from(constant)).id == PatternClass::D);
    CHECK(classify_hazard_shape(curve_from(infant)).id == PatternClass::F);
    CHECK(classify_hazard_shape(hazard_curve(WeibullModel(1.0, 50.0))).id == PatternClass::D);
    CHECK(classify_hazard_shape(hazard_curve(WeibullModel(0.5, 50.0))).id == PatternClass::F);
}

TEST_CASE("classification ignores hazard scale") {
    for (auto* h : {bathtub, constant, infant}) {
        const auto base = curve_from(h);
        for (double c : {1e-4, 3.0, 1e5}) {
            std::vector<HazardCurve::Point> g = base.grid();
            for (auto& p : g) p.hazard *= c;
            CHECK(classify_hazard_shape(HazardCurve(g)).id == classify_hazard_shape(base).id);
        }
    }
}

TEST_CASE("curve validation") {
    CHECK_THROWS_AS(HazardCurve({{0.0, 1.0}, {0.0, 1.0}}), InvalidCurve);
    CHECK_THROWS_AS(HazardCurve({{0.0, -1.0}, {0.5, 1.0}}), InvalidCurve);
    CHECK_THROWS_AS(classify_hazard_shape(HazardCurve({{0.0, 1.0}, {0.5, 1.0}, {1.0, 1.0}})), InvalidCurve);
    // Rising through the middle then collapsing: contradicts every class.
    std::vector<HazardCurve::Point> g;
    for (int i = 0; i <= 20; ++i) {
        const double a = i / 20.0;
        g.push_back({a, a < 0.25 ? 1.0 - a : (a < 0.75 ? 0.75 + 2 * (a - 0.25) : 1.75 - 3 * (a - 0.75))});
    }
    CHECK_THROWS_AS(classify_hazard_shape(HazardCurve(g)), UnclassifiableShape);
}

TEST_CASE("P-F interval") {
    CHECK_THROWS_AS(PFInterval(0.0), InvalidInterval);
    CHECK_THROWS_AS(PFInterval(-3.0), InvalidInterval);
    CHECK_THROWS_AS(PFInterval(std::numeric_limits<double>::infinity()), InvalidInterval);
    CHECK(PFInterval(200.0).to_clock() == cbm::Millis{200 * 3'600'000LL});
    CHECK(PFInterval(100.0, UsageUnit::cycles).to_clock(4.0) == cbm::Millis{25 * 3'600'000LL});
}

}
