#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cbm/common.hpp"

namespace cbm::reliability {

CBM_DEFINE_ERROR(InvalidModel);
CBM_DEFINE_ERROR(DomainError);
CBM_DEFINE_ERROR(InsufficientData);
CBM_DEFINE_ERROR(DegenerateSample);
CBM_DEFINE_ERROR(NonConvergence);

/**
 * Two-parameter Weibull lifetime model.
 *
 *    S(t) = exp(-(t/eta)^beta)        F(t) = 1 - S(t)
 *    h(t) = (beta/eta) (t/eta)^(beta-1)
 *
 * beta < 1 describes infant mortality, beta = 1 a memoryless (random) failure
 * process and beta > 1 wear-out. Time is in whatever operating unit the
 * lifetimes were recorded in; the engine uses hours throughout.
 */
class WeibullModel {
  public:
    /// Throws InvalidModel unless both parameters are finite and positive.
    WeibullModel(double shape_beta, double scale_eta);

    static WeibullModel fitted(double shape_beta, double scale_eta, std::size_t fit_n,
                               double log_likelihood);

    double shape() const { return shape_; }
    double scale() const { return scale_; }
    std::size_t fit_n() const { return fit_n_; }
    const std::optional<double>& log_likelihood() const { return log_likelihood_; }

    /// Cumulative hazard (t/eta)^beta.
    double cumulative_hazard(double t) const;
    double survival(double t) const;
    double density(double t) const;
    /// Inverse CDF; p in [0, 1).
    double quantile(double p) const;

  private:
    double shape_;
    double scale_;
    std::size_t fit_n_ = 0;
    std::optional<double> log_likelihood_;
};

double weibull_cdf(double t, const WeibullModel& model);

/// Throws DomainError for t < 0, and for t == 0 when beta < 1.
double weibull_hazard(double t, const WeibullModel& model);

/// Probability of failing within `horizon` given survival to `age`.
double conditional_failure_probability(const WeibullModel& model, double age, double horizon);

/// Right-censored maximum-likelihood fit. `censored[i]` marks lifetimes[i] as
/// a survival time (still running when observed). An empty `censored` span
/// means no censoring.
WeibullModel fit_weibull(std::span<const double> lifetimes, std::span<const bool> censored = {});

/// Log-likelihood of a censored sample under `model`.
double weibull_log_likelihood(const WeibullModel& model, std::span<const double> lifetimes,
                              std::span<const bool> censored = {});

}  // namespace cbm::reliability
