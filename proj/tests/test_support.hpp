#pragma once

// Random parameter draws and evaluation grids shared by the unit and
// acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include "snfit/relationships.hpp"

namespace snfit::testing {

inline double unif(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

/// A random valid curve of the family, in scaled units (stress near 1,
/// cycles anywhere).
inline Relationship random_relationship(Family f, std::mt19937_64& rng) {
  switch (f) {
    case Family::Basquin: return Relationship(Basquin{unif(rng, 5, 15), unif(rng, -8, -1.5)});
    case Family::Stromeyer: return Relationship(Stromeyer{unif(rng, 5, 15), unif(rng, -4, -1), unif(rng, 0.05, 0.3)});
    case Family::BoxCox: return Relationship(BoxCox{unif(rng, 5, 15), unif(rng, -6, -1), unif(rng, -3, 0)});
    case Family::CoffinManson:
      return Relationship(
          CoffinManson{unif(rng, 0.3, 1.0), unif(rng, 1, 50), unif(rng, -0.15, -0.02), unif(rng, -1.0, -0.4)});
    case Family::Nishijima: {
      const double a = unif(rng, 0.05, 0.3), e = unif(rng, -2, -1), c = unif(rng, 0.01, 0.5);
      return Relationship(Nishijima{a, e + a * unif(rng, 3, 7), c, e});
    }
    case Family::RectHyperbola: return Relationship(RectHyperbola{unif(rng, 0, 5), unif(rng, 0.5, 5), unif(rng, -2, -1)});
    case Family::ModifiedBastenaire:
      return Relationship(
          ModifiedBastenaire{std::exp(unif(rng, 8, 15)), unif(rng, 0.1, 1), unif(rng, 0.5, 3), unif(rng, 0.05, 0.3)});
  }
  return Relationship(Basquin{10, -2});
}

/// Log-spaced cycles strictly inside the domain of h.
inline std::vector<double> cycles_grid(const Relationship& r, int n, double lo = 1e2, double hi = 1e10) {
  const double thr = r.cycles_lower();
  if (thr > 0.0) lo = std::max(lo, thr * 1.5);
  if (hi <= lo) hi = lo * 1e6;
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
  return out;
}

/// Stresses on the curve at the cycles grid, hence inside the domain of g.
inline std::vector<double> stress_grid(const Relationship& r, int n) {
  std::vector<double> out;
  for (double c : cycles_grid(r, n)) out.push_back(std::exp(r.log_h(c)));
  return out;
}

}  // namespace snfit::testing
