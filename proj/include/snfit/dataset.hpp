#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace snfit {

enum class Status { Failure, Runout };

struct Observation {
  double stress;
  double cycles;
  Status status;
};

/// Validated S-N observations. s_max and n_max are recomputed from the data.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DataError (with the 0-based row) for nonpositive or non-finite
  /// stress or cycles.
  explicit Dataset(std::vector<Observation> obs, std::string stress_units = "", std::string cycles_units = "");

  const std::vector<Observation>& observations() const noexcept { return obs_; }
  std::size_t size() const noexcept { return obs_.size(); }
  bool empty() const noexcept { return obs_.empty(); }
  std::size_t failures() const noexcept { return failures_; }
  double s_max() const noexcept { return s_max_; }
  double n_max() const noexcept { return n_max_; }
  const std::string& stress_units() const noexcept { return stress_units_; }
  const std::string& cycles_units() const noexcept { return cycles_units_; }

  /// Stresses divided by ms and cycles by mn.
  Dataset scaled(double ms, double mn) const;

 private:
  std::vector<Observation> obs_;
  std::string stress_units_;
  std::string cycles_units_;
  std::size_t failures_ = 0;
  double s_max_ = 0.0;
  double n_max_ = 0.0;
};

}  // namespace snfit
