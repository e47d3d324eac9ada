#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "snfit/errors.hpp"
#include "snfit/models.hpp"
#include "test_support.hpp"

using namespace snfit;
using boost::math::quadrature::gauss_kronrod;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Integral of a density in t over (lo, inf) through t = e^u.
template <class F>
double integrate_log(F f, double log_lo = -50.0) {
  auto g = [&](double u) {
    const double t = std::exp(u);
    return std::isfinite(t) && t > 0.0 ? f(t) * t : 0.0;
  };
  return gauss_kronrod<double, 61>::integrate(g, log_lo, std::numeric_limits<double>::infinity(), 15, 1e-12);
}

}  // namespace

TEST_CASE("sigma_at") {
  const Relationship b(Basquin{10, -2});
  CHECK(sigma_at(ModelSpec(Orientation::LifeSpecified, b, StdDist::Normal, ConstantSpread{0.3}), 17.0) == 0.3);
  CHECK(sigma_at(ModelSpec(Orientation::LifeSpecified, b, StdDist::Normal, LogLinearSpread{0, 0}), 5.0) == 1.0);
  CHECK(sigma_at(ModelSpec(Orientation::LifeSpecified, b, StdDist::Normal, LogLinearSpread{1, -1}), std::exp(1.0)) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(ModelSpec(Orientation::StrengthSpecified, b, StdDist::Normal, LogLinearSpread{0, 0}), DomainError);
}

TEST_CASE("life_cdf examples") {
  ModelSpec m(Orientation::LifeSpecified, Relationship(Basquin{10, -2}), StdDist::Normal, ConstantSpread{0.5});
  CHECK(life_cdf(m, std::exp(8.0), std::exp(1.0)) == doctest::Approx(0.5).epsilon(1e-14));
  ModelSpec rh(Orientation::StrengthSpecified, Relationship(RectHyperbola{0, 1, 0}), StdDist::Normal,
               ConstantSpread{0.1});
  CHECK(life_cdf(rh, 1.0, 2.0) == 0.0);
  CHECK(life_cdf(rh, 0.5, 2.0) == 0.0);
  // log h approaches E like C / (A log t), so the plateau check uses a small C.
  Nishijima np{1.0, 1.0, 1e-8, -1.0};
  ModelSpec n(Orientation::StrengthSpecified, Relationship(np), StdDist::Normal, ConstantSpread{0.1});
  const double se = std::exp(-0.9);
  CHECK(std::abs(life_cdf(n, 1e30, se) - phi((std::log(se) - np.e) / 0.1)) < 1e-9);
  CHECK(life_cdf(n, 1e30, se) > life_cdf(n, 1e20, se));
}

TEST_CASE("life_cdf domain errors") {
  ModelSpec m(Orientation::LifeSpecified, Relationship(Stromeyer{5, -1, 2}), StdDist::Normal, ConstantSpread{0.5});
  CHECK_THROWS_AS(life_cdf(m, 10.0, 1.5), DomainError);
  CHECK_THROWS_AS(life_cdf(m, -1.0, 3.0), DomainError);
}

TEST_CASE("life_pdf examples") {
  ModelSpec m(Orientation::LifeSpecified, Relationship(Basquin{10, -2}), StdDist::Normal, ConstantSpread{0.5});
  const double t = std::exp(8.0);
  CHECK(life_pdf(m, t, std::exp(1.0)) == doctest::Approx(1.0 / std::sqrt(2 * M_PI) / (t * 0.5)).epsilon(1e-13));
  ModelSpec cm(Orientation::StrengthSpecified, Relationship(CoffinManson{0.8, 20, -0.05, -0.7}), StdDist::Normal,
               ConstantSpread{0.1});
  const double se = 0.9;
  CHECK(integrate_log([&](double x) { return life_pdf(cm, x, se); }) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("life_quantile examples") {
  ModelSpec m(Orientation::LifeSpecified, Relationship(Basquin{10, -2}), StdDist::Normal, ConstantSpread{0.5});
  auto q = life_quantile(m, 0.5, std::exp(1.0));
  CHECK(q.kind == ExtendedQuantile::Kind::Finite);
  CHECK(q.value == doctest::Approx(std::exp(8.0)).epsilon(1e-14));
  Nishijima np{0.2, 1.0, 0.1, -1.0};
  ModelSpec n(Orientation::StrengthSpecified, Relationship(np), StdDist::Normal, ConstantSpread{0.1});
  const double se = std::exp(np.e + 0.05);
  CHECK(life_quantile(n, 0.8, se).kind == ExtendedQuantile::Kind::Infinite);
  CHECK(life_quantile(n, 0.6, se).kind == ExtendedQuantile::Kind::Finite);
  CHECK(atom_probability(n, Axis::Life, se) == doctest::Approx(0.308537538725987).epsilon(1e-12));
  CHECK_THROWS_AS(life_quantile(m, 1.0, 2.0), DomainError);
}

TEST_CASE("strength_cdf examples") {
  ModelSpec m(Orientation::StrengthSpecified, Relationship(CoffinManson{0.8, 20, -0.05, -0.7}), StdDist::SEV,
              ConstantSpread{0.1});
  const double ne = 1e5;
  CHECK(strength_cdf(m, std::exp(m.rel().eval_log_h(ne)), ne) == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-14));
  ModelSpec s(Orientation::LifeSpecified, Relationship(Stromeyer{5, -1, 2}), StdDist::Normal, ConstantSpread{0.5});
  CHECK(strength_cdf(s, 2.0, 100.0) == 0.0);
  CHECK(strength_cdf(s, 1.0, 100.0) == 0.0);
}

TEST_CASE("strength side of life-specified basquin is log-location-scale") {
  const double b0 = 12.0, b1 = -3.0, sn = 0.4;
  for (StdDist d : {StdDist::Normal, StdDist::SEV}) {
    ModelSpec m(Orientation::LifeSpecified, Relationship(Basquin{b0, b1}), d, ConstantSpread{sn});
    const double bd0 = b0 / std::abs(b1), bd1 = -1.0 / std::abs(b1), sx = sn / std::abs(b1);
    for (double ne : {1e2, 1e4, 1e7}) {
      for (double x : {0.3, 1.0, 5.0, 20.0}) {
        const double z = (std::log(x) - (bd0 + bd1 * std::log(ne))) / sx;
        const double cdf = d == StdDist::Normal ? phi(z) : -std::expm1(-std::exp(z));
        CHECK(strength_cdf(m, x, ne) == doctest::Approx(cdf).epsilon(1e-12));
        const double pdf = std_pdf(d, z) / (x * sx);
        CHECK(strength_pdf(m, x, ne) == doctest::Approx(pdf).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("strength_pdf of life-specified box-cox integrates to the non-atom mass") {
  const BoxCox p{3.0, -2.0, -1.0};
  ModelSpec m(Orientation::LifeSpecified, Relationship(p), StdDist::Normal, ConstantSpread{0.3});
  const double big_b = p.beta0 - p.beta1 / p.lambda;
  for (double ne : {std::exp(big_b + 0.2), std::exp(big_b + 1.0)}) {
    const double integral = integrate_log([&](double x) { return strength_pdf(m, x, ne); });
    CHECK(integral == doctest::Approx(phi((std::log(ne) - big_b) / 0.3)).epsilon(1e-6));
    CHECK(atom_probability(m, Axis::Strength, ne) == doctest::Approx(1 - phi((std::log(ne) - big_b) / 0.3)));
    CHECK(strength_quantile(m, 0.9999, ne).kind == ExtendedQuantile::Kind::Infinite);
  }
}

TEST_CASE("strength_quantile examples") {
  ModelSpec m(Orientation::StrengthSpecified, Relationship(Nishijima{0.2, 1.0, 0.1, -1.0}), StdDist::Normal,
              ConstantSpread{0.1});
  const double ne = 1e4;
  CHECK(strength_quantile(m, 0.5, ne).value == doctest::Approx(std::exp(m.rel().eval_log_h(ne))).epsilon(1e-14));
  // Approach to gamma from above for a life-specified Stromeyer model.
  ModelSpec s(Orientation::LifeSpecified, Relationship(Stromeyer{5, -1, 2}), StdDist::Normal, ConstantSpread{0.5});
  double prev = INFINITY;
  for (double p : {0.1, 0.01, 1e-3, 1e-6, 1e-30, 1e-100, 1e-300}) {
    const auto q = strength_quantile(s, p, 10.0);
    REQUIRE(q.kind != ExtendedQuantile::Kind::Infinite);
    CHECK(q.value > 2.0);
    CHECK(q.value < prev);
    prev = q.value;
  }
  CHECK(prev - 2.0 < 0.02);
}

TEST_CASE("atom_probability") {
  ModelSpec cm(Orientation::StrengthSpecified, Relationship(CoffinManson{0.8, 20, -0.05, -0.7}), StdDist::Normal,
               ConstantSpread{0.1});
  for (double se : {0.1, 0.5, 2.0}) CHECK(atom_probability(cm, Axis::Life, se) == 0.0);
}

TEST_CASE("log-linear spread strength quantile round trip and monotone range") {
  ModelSpec m(Orientation::LifeSpecified, Relationship(BoxCox{8.0, -4.0, -1.5}), StdDist::Normal,
              LogLinearSpread{-1.5, -1.0});
  for (double ne : {1e2, 1e3, 1e4}) {
    for (double p : {0.01, 0.1, 0.5}) {
      const auto q = strength_quantile(m, p, ne);
      if (q.kind != ExtendedQuantile::Kind::Finite) continue;
      CHECK(strength_cdf(m, q.value, ne) == doctest::Approx(p).epsilon(1e-9));
    }
  }
  auto r = monotone_range(m, 0.2, 1.0);
  REQUIRE(r.has_value());
  CHECK(r->s_lo >= 0.2);
  CHECK(r->s_hi <= 1.0 + 1e-12);
  ModelSpec c(Orientation::LifeSpecified, Relationship(BoxCox{8.0, -4.0, -1.5}), StdDist::Normal, ConstantSpread{0.3});
  CHECK(monotone_range(c, 0.2, 1.0)->full);
}

namespace {

ModelSpec random_model(Family f, Orientation o, StdDist d, std::mt19937_64& rng) {
  Relationship r = testing::random_relationship(f, rng);
  const double s = o == Orientation::LifeSpecified ? testing::unif(rng, 0.1, 1.0) : testing::unif(rng, 0.03, 0.3);
  return ModelSpec(o, r, d, ConstantSpread{s});
}

}  // namespace

TEST_CASE("property: quantile curves agree between life and strength readings") {
  std::mt19937_64 rng(99);
  for (Family f : kAllFamilies) {
    for (Orientation o : {Orientation::LifeSpecified, Orientation::StrengthSpecified}) {
      for (StdDist d : {StdDist::Normal, StdDist::SEV}) {
        CAPTURE(to_string(f));
        CAPTURE(to_string(o));
        for (int k = 0; k < 20; ++k) {
          ModelSpec m = random_model(f, o, d, rng);
          for (double se : testing::stress_grid(m.rel(), 10)) {
            for (double p : {0.01, 0.1, 0.5, 0.9, 0.99}) {
              const auto t = life_quantile(m, p, se);
              if (t.kind != ExtendedQuantile::Kind::Finite) continue;
              const auto x = strength_quantile(m, p, t.value);
              REQUIRE(x.kind == ExtendedQuantile::Kind::Finite);
              CHECK(std::abs(std::log(x.value) - std::log(se)) < 1e-8);
              CHECK(life_cdf(m, t.value, se) == doctest::Approx(p).epsilon(1e-9));
            }
          }
        }
      }
    }
  }
}

TEST_CASE("property: densities match cdf finite differences") {
  std::mt19937_64 rng(5);
  for (Family f : kAllFamilies) {
    for (Orientation o : {Orientation::LifeSpecified, Orientation::StrengthSpecified}) {
      CAPTURE(to_string(f));
      CAPTURE(to_string(o));
      ModelSpec m = random_model(f, o, StdDist::Normal, rng);
      const auto ss = testing::stress_grid(m.rel(), 5);
      const auto ns = testing::cycles_grid(m.rel(), 5);
      for (int i = 1; i < 4; ++i) {
        for (double p : {0.2, 0.5}) {
          const auto tq = life_quantile(m, p, ss[i]);
          if (tq.kind == ExtendedQuantile::Kind::Finite) {
            const double t = tq.value, h = 1e-6 * t;
            const double fd = (life_cdf(m, t + h, ss[i]) - life_cdf(m, t - h, ss[i])) / (2 * h);
            CHECK(life_pdf(m, t, ss[i]) == doctest::Approx(fd).epsilon(1e-6));
          }
          const auto xq = strength_quantile(m, p, ns[i]);
          if (xq.kind == ExtendedQuantile::Kind::Finite) {
            const double x = xq.value, h = 1e-6 * (x - m.rel().stress_lower());
            const double fd = (strength_cdf(m, x + h, ns[i]) - strength_cdf(m, x - h, ns[i])) / (2 * h);
            CHECK(strength_pdf(m, x, ns[i]) == doctest::Approx(fd).epsilon(1e-6));
          }
        }
      }
    }
  }
}

TEST_CASE("property: basquin self-duality") {
  const double b0 = 14.0, b1 = -2.5, sn = 0.6;
  const Relationship r(Basquin{b0, b1});
  for (StdDist d : {StdDist::Normal, StdDist::SEV}) {
    ModelSpec life(Orientation::LifeSpecified, r, d, ConstantSpread{sn});
    ModelSpec str(Orientation::StrengthSpecified, r, d, ConstantSpread{sn / std::abs(b1)});
    for (double s : {0.2, 1.0, 3.0}) {
      for (double t : {1e2, 1e5, 1e8}) {
        CHECK(life_cdf(life, t, s) == doctest::Approx(life_cdf(str, t, s)).epsilon(1e-12));
        CHECK(strength_cdf(life, s, t) == doctest::Approx(strength_cdf(str, s, t)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("property: life spread grows as stress falls for strength-specified curves") {
  std::mt19937_64 rng(31);
  for (Family f : {Family::CoffinManson, Family::Nishijima, Family::RectHyperbola}) {
    CAPTURE(to_string(f));
    for (int k = 0; k < 20; ++k) {
      ModelSpec m = random_model(f, Orientation::StrengthSpecified, StdDist::Normal, rng);
      const auto ss = testing::stress_grid(m.rel(), 50);
      double prev = -INFINITY;
      // Stress grid is decreasing; the spread must increase along it.
      for (double se : ss) {
        const auto lo = life_quantile(m, 0.1, se), hi = life_quantile(m, 0.9, se);
        if (lo.kind != ExtendedQuantile::Kind::Finite || hi.kind != ExtendedQuantile::Kind::Finite) continue;
        const double w = std::log(hi.value) - std::log(lo.value);
        CHECK(w > prev);
        prev = w;
      }
    }
  }
}

TEST_CASE("property: life cdf increases with stress at fixed cycles") {
  std::mt19937_64 rng(41);
  for (Family f : kAllFamilies) {
    for (Orientation o : {Orientation::LifeSpecified, Orientation::StrengthSpecified}) {
      ModelSpec m = random_model(f, o, StdDist::SEV, rng);
      const auto ns = testing::cycles_grid(m.rel(), 5);
      auto ss = testing::stress_grid(m.rel(), 40);
      for (double t : ns) {
        double prev = -1.0;
        for (auto it = ss.rbegin(); it != ss.rend(); ++it) {
          const double c = life_cdf(m, t, *it);
          CHECK(c >= prev);
          prev = c;
        }
      }
    }
  }
}

TEST_CASE("property: generative sampler matches life_cdf") {
  // Strength-specified: X(t) = h(t) exp(sigma eps); life N solves h(N) = Se e^{-sigma eps}.
  std::mt19937_64 rng(77);
  const Nishijima np{0.25, 0.5, 0.2, -1.2};
  ModelSpec m(Orientation::StrengthSpecified, Relationship(np), StdDist::Normal, ConstantSpread{0.08});
  const double se = std::exp(np.e + 0.1);
  std::normal_distribution<double> eps;
  const int n = 100000;
  std::vector<double> lives;
  int never = 0;
  for (int i = 0; i < n; ++i) {
    const double s = se * std::exp(-0.08 * eps(rng));
    const double lg = m.rel().log_g(s);
    if (!std::isfinite(lg)) {
      ++never;
      continue;
    }
    if (lg < 700.0) lives.push_back(lg);
  }
  std::sort(lives.begin(), lives.end());
  double sup = 0.0;
  for (std::size_t i = 0; i < lives.size(); i += 97) {
    const double emp = static_cast<double>(i + 1) / n;
    sup = std::max(sup, std::abs(emp - life_cdf(m, std::exp(lives[i]), se)));
  }
  CHECK(sup < 0.01);
  const double atom = atom_probability(m, Axis::Life, se);
  CHECK(std::abs(static_cast<double>(never) / n - atom) < 3 * std::sqrt(atom * (1 - atom) / n));
}
