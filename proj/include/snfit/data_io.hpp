#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snfit/dataset.hpp"
#include "snfit/inference.hpp"

namespace snfit {

struct ParseOptions {
  std::string stress_units;
  std::string cycles_units;
};

/// Reads CSV with header `stress,cycles,status` (columns in any order,
/// extra columns ignored). Status is failure/runout, case-insensitive, or
/// 1/0. DataError carries the line index, counting the header as line 0.
Dataset parse_dataset(std::istream& in, const ParseOptions& opt = {});
Dataset read_dataset(const std::string& path, const ParseOptions& opt = {});

/// Canonical CSV of a dataset, 17 significant digits.
std::string dataset_csv(const Dataset& d);

/// Stresses over s_max and cycles over n_max.
Dataset scale_dataset(const Dataset& d);
Dataset unscale_dataset(const Dataset& scaled, double s_max, double n_max);

/// 64-bit FNV-1a over the canonical CSV, as 16 hex digits.
std::string dataset_digest(const Dataset& d);

struct KmStep {
  double cycles;
  double fraction;      // estimated fraction failing at and after this step
  double position;      // midpoint plotting position (F(t-) + F(t)) / 2
  int censored_before;  // runouts in [previous step, this step)
};

struct GroupEstimate {
  double stress;
  int units;
  int runouts;
  std::vector<KmStep> steps;
};

/// Kaplan-Meier estimate of the fraction failing per stress group. Stresses
/// within `rel_tol` of the group's first stress join the group; runouts
/// tied with failures count as still at risk.
std::vector<GroupEstimate> group_nonparametric_cdf(const Dataset& d, double rel_tol = 1e-9);

enum class SeriesKind { ProbabilityPlot, QuantileCurve, Density, ResidualScatter };
std::string to_string(SeriesKind k);

struct PlotAxis {
  std::string name;
  std::string scale;  // "linear" or "log"
  std::string units;
};

struct PlotPoint {
  double x;
  double y;
  std::optional<std::string> group;
  std::optional<bool> censored;
};

struct PlotSeries {
  SeriesKind kind;
  PlotAxis x_axis;
  PlotAxis y_axis;
  std::vector<PlotPoint> points;
  std::map<std::string, std::string> notes;
};

/// x = log cycles, y = linearized plotting position (Phi^-1 for the normal
/// kernel, log(-log(1-F)) for SEV), one group per stress level.
PlotSeries probability_plot(const Dataset& d, StdDist dist, double rel_tol = 1e-9);

/// Life quantile curves (x = stress, y = cycles) on a log grid of `n`
/// stresses over [s_lo, s_hi], one group per probability. Each curve stops
/// where its quantile becomes infinite; the stress is recorded in notes.
PlotSeries quantile_curves(const FittedModel& fit, const std::vector<double>& probs, double s_lo, double s_hi,
                           int n = 100);

/// Life density at stress `se`, 200 points spanning quantiles 0.001 to
/// 0.999 of the finite part of the distribution.
PlotSeries life_density(const FittedModel& fit, double se, int n = 200);

/// x = stress, y = standardized residual, censored flag for runouts.
PlotSeries residual_scatter(const FittedModel& fit, const Dataset& d);

std::string series_csv(const PlotSeries& s);
std::string series_json(const std::vector<PlotSeries>& all);

struct FitRecord {
  FittedModel fit;
  std::string dataset_digest;
  std::optional<std::uint64_t> seed;
};

std::string fit_record_json(const FitRecord& r);
/// Throws DataError for malformed records.
FitRecord parse_fit_record(const std::string& text);

}  // namespace snfit
