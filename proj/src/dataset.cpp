#include "snfit/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "snfit/errors.hpp"

namespace snfit {

Dataset::Dataset(std::vector<Observation> obs, std::string stress_units, std::string cycles_units)
    : obs_(std::move(obs)), stress_units_(std::move(stress_units)), cycles_units_(std::move(cycles_units)) {
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const auto& o = obs_[i];
    if (!(o.stress > 0.0) || !std::isfinite(o.stress))
      throw DataError("stress must be positive and finite", static_cast<long>(i));
    if (!(o.cycles > 0.0) || !std::isfinite(o.cycles))
      throw DataError("cycles must be positive and finite", static_cast<long>(i));
    s_max_ = std::max(s_max_, o.stress);
    n_max_ = std::max(n_max_, o.cycles);
    if (o.status == Status::Failure) ++failures_;
  }
}

Dataset Dataset::scaled(double ms, double mn) const {
  std::vector<Observation> out = obs_;
  for (auto& o : out) {
    o.stress /= ms;
    o.cycles /= mn;
  }
  return Dataset(std::move(out), stress_units_, cycles_units_);
}

}  // namespace snfit
