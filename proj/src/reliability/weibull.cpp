#include "cbm/reliability/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cbm::reliability {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

WeibullModel::WeibullModel(double shape_beta, double scale_eta) : shape_(shape_beta), scale_(scale_eta) {
    if (!positive_finite(shape_beta) || !positive_finite(scale_eta)) {
        throw InvalidModel("shape and scale must be finite and positive (beta=" + std::to_string(shape_beta) +
                           ", eta=" + std::to_string(scale_eta) + ")");
    }
}

WeibullModel WeibullModel::fitted(double shape_beta, double scale_eta, std::size_t fit_n, double log_likelihood) {
    if (fit_n > 0 && !std::isfinite(log_likelihood)) {
        throw InvalidModel("fitted model requires a finite log-likelihood");
    }
    WeibullModel m(shape_beta, scale_eta);
    m.fit_n_ = fit_n;
    if (fit_n > 0) m.log_likelihood_ = log_likelihood;
    return m;
}

double WeibullModel::cumulative_hazard(double t) const {
    if (t <= 0.0) return 0.0;
    return std::pow(t / scale_, shape_);
}

double WeibullModel::survival(double t) const { return std::exp(-cumulative_hazard(t)); }

double WeibullModel::density(double t) const { return weibull_hazard(t, *this) * survival(t); }

double WeibullModel::quantile(double p) const {
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("quantile probability must be in [0, 1)");
    return scale_ * std::pow(-std::log1p(-p), 1.0 / shape_);
}

double weibull_cdf(double t, const WeibullModel& model) {
    if (!(t >= 0.0)) throw DomainError("weibull_cdf requires t >= 0");
    return -std::expm1(-model.cumulative_hazard(t));
}

double weibull_hazard(double t, const WeibullModel& model) {
    const double beta = model.shape();
    const double eta = model.scale();
    if (!(t >= 0.0)) throw DomainError("hazard requires t >= 0");
    if (t == 0.0) {
        if (beta < 1.0) throw DomainError("hazard diverges at t = 0 when beta < 1");
        return beta == 1.0 ? 1.0 / eta : 0.0;
    }
    return (beta / eta) * std::pow(t / eta, beta - 1.0);
}

double conditional_failure_probability(const WeibullModel& model, double age, double horizon) {
    if (!(age >= 0.0) || !(horizon >= 0.0)) {
        throw DomainError("age and horizon must be non-negative");
    }
    if (horizon == 0.0) return 0.0;
    const double h_age = model.cumulative_hazard(age);
    const double h_end = model.cumulative_hazard(age + horizon);
    if (!std::isfinite(h_end)) return 1.0;
    // 1 - S(a+h)/S(a) with S = exp(-H); written so age 0 reduces to the CDF.
    return std::clamp(-std::expm1(-(h_end - h_age)), 0.0, 1.0);
}

double weibull_log_likelihood(const WeibullModel& model, std::span<const double> lifetimes,
                              std::span<const bool> censored) {
    const double beta = model.shape();
    const double eta = model.scale();
    const double log_beta = std::log(beta);
    const double log_eta = std::log(eta);
    double ll = 0.0;
    for (std::size_t i = 0; i < lifetimes.size(); ++i) {
        const double t = lifetimes[i];
        const bool is_censored = !censored.empty() && censored[i];
        if (!is_censored) ll += log_beta - beta * log_eta + (beta - 1.0) * std::log(t);
        ll -= std::pow(t / eta, beta);
    }
    return ll;
}

namespace {

/// Profile score in beta after eliminating eta, on lifetimes rescaled to
/// (0, 1] so every power stays bounded:
///   g(beta) = sum u^b ln u / sum u^b - 1/b - mean_uncensored(ln u)
/// g is strictly increasing, so its single root is the MLE.
struct ProfileScore {
    std::span<const double> log_u;  // ln(t_i / t_max), all samples
    double mean_log_uncensored;

    struct Value {
        double g;
        double dg;
        double sum_pow;
    };

    Value operator()(double beta) const {
        double a0 = 0.0, a1 = 0.0, a2 = 0.0;
        for (double lu : log_u) {
            const double w = std::exp(beta * lu);
            a0 += w;
            a1 += w * lu;
            a2 += w * lu * lu;
        }
        const double m1 = a1 / a0;
        return {m1 - 1.0 / beta - mean_log_uncensored, a2 / a0 - m1 * m1 + 1.0 / (beta * beta), a0};
    }
};

constexpr int kMaxIterations = 200;
constexpr double kBetaTolerance = 1e-10;

}  // namespace

WeibullModel fit_weibull(std::span<const double> lifetimes, std::span<const bool> censored) {
    if (!censored.empty() && censored.size() != lifetimes.size()) {
        throw DomainError("censoring flags must parallel the lifetimes");
    }
    std::size_t uncensored = 0;
    double t_max = 0.0;
    double first_uncensored = std::numeric_limits<double>::quiet_NaN();
    bool all_equal = true;
    for (std::size_t i = 0; i < lifetimes.size(); ++i) {
        const double t = lifetimes[i];
        if (!positive_finite(t)) throw DomainError("lifetimes must be finite and positive");
        t_max = std::max(t_max, t);
        if (!censored.empty() && censored[i]) continue;
        if (uncensored == 0) first_uncensored = t;
        else if (t != first_uncensored) all_equal = false;
        ++uncensored;
    }
    if (uncensored < 3) {
        throw InsufficientData("need at least 3 uncensored lifetimes, got " + std::to_string(uncensored));
    }
    if (all_equal) throw DegenerateSample("all uncensored lifetimes are identical; shape is unbounded");

    std::vector<double> log_u(lifetimes.size());
    double sum_log_uncensored = 0.0;
    for (std::size_t i = 0; i < lifetimes.size(); ++i) {
        log_u[i] = std::log(lifetimes[i] / t_max);
        if (censored.empty() || !censored[i]) sum_log_uncensored += log_u[i];
    }
    const ProfileScore score{log_u, sum_log_uncensored / static_cast<double>(uncensored)};

    double lo = 1e-3;
    while (score(lo).g >= 0.0) {
        lo *= 0.1;
        if (lo < 1e-12) throw NonConvergence("could not bracket the shape from below");
    }
    double hi = 1.0;
    while (score(hi).g <= 0.0) {
        hi *= 2.0;
        if (hi > 1e6) throw NonConvergence("could not bracket the shape from above");
    }

    double beta = 0.5 * (lo + hi);
    bool converged = false;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const auto v = score(beta);
        if (v.g == 0.0) {
            converged = true;
            break;
        }
        if (v.g < 0.0) lo = beta;
        else hi = beta;

        double next = beta - v.g / v.dg;
        // Newton only while it stays strictly inside the bracket.
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - beta);
        beta = next;
        if (step < kBetaTolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NonConvergence("shape root-find exceeded " + std::to_string(kMaxIterations) + " iterations");

    const double sum_pow = score(beta).sum_pow;
    const double eta = t_max * std::pow(sum_pow / static_cast<double>(uncensored), 1.0 / beta);
    const WeibullModel shape_only(beta, eta);
    return WeibullModel::fitted(beta, eta, lifetimes.size(), weibull_log_likelihood(shape_only, lifetimes, censored));
}

}  // namespace cbm::reliability
