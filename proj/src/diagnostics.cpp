#include <cmath>
#include <random>

#include "numeric_util.hpp"
#include "snfit/errors.hpp"
#include "snfit/inference.hpp"
#include "snfit/random.hpp"

namespace snfit {
namespace {

using detail::kInf;

double sample_life(const ModelSpec& m, double se, std::mt19937_64& rng) {
  const double eps = draw_std(m.dist(), rng);
  const double sigma = sigma_at(m, se);
  if (m.orientation() == Orientation::LifeSpecified) {
    const double lg = m.rel().log_g(se);
    return std::isfinite(lg) ? std::exp(lg + sigma * eps) : kInf;
  }
  // The unit's strength curve sits sigma*eps above the median one, so it
  // fails at S when the median curve reaches S exp(-sigma eps).
  return std::exp(m.rel().log_g(se * std::exp(-sigma * eps)));
}

}  // namespace

std::vector<Residual> residuals(const FittedModel& fit, const Dataset& d) {
  std::vector<Residual> out;
  out.reserve(d.size());
  if (const auto* m = std::get_if<ModelSpec>(&fit.model)) {
    for (const auto& o : d.observations()) {
      double r;
      if (m->orientation() == Orientation::LifeSpecified)
        r = (std::log(o.cycles) - m->rel().log_g(o.stress)) / sigma_at(*m, o.stress);
      else
        r = (std::log(o.stress) - m->rel().log_h(o.cycles)) / sigma_at(*m, o.stress);
      out.push_back({r, o.status == Status::Runout});
    }
    return out;
  }
  const auto& r = std::get<RflModel>(fit.model);
  for (const auto& o : d.observations()) {
    const double p = rfl_life_cdf(r, o.cycles, o.stress);
    const double v = p <= 0.0 ? -kInf : p >= 1.0 ? kInf : std_quantile(r.dist_n, p);
    out.push_back({v, o.status == Status::Runout});
  }
  return out;
}

ExtendedQuantile fitted_value(const FittedModel& fit, Axis axis, double at) {
  const Query q = axis == Axis::Life ? Query::life_quantile(0.5, at) : Query::strength_quantile(0.5, at);
  try {
    return evaluate(fit.model, q);
  } catch (const RangeError&) {
    return ExtendedQuantile::infinite();
  }
}

Dataset simulate_dataset(const AnyModel& model, std::span<const DesignPoint> design, double censor_at,
                         std::uint64_t seed) {
  if (!(censor_at > 0.0)) throw DomainError("censoring time must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Observation> obs;
  for (const auto& dp : design) {
    if (!(dp.stress > 0.0) || dp.count < 0) throw DomainError("design points need positive stress and count");
    for (int i = 0; i < dp.count; ++i) {
      double t;
      if (const auto* m = std::get_if<ModelSpec>(&model)) t = sample_life(*m, dp.stress, rng);
      else t = rfl_sample_life(std::get<RflModel>(model), dp.stress, rng);
      if (!(t < censor_at)) obs.push_back({dp.stress, censor_at, Status::Runout});
      else obs.push_back({dp.stress, t, Status::Failure});
    }
  }
  return Dataset(std::move(obs));
}

}  // namespace snfit
