#include "snfit/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "snfit/errors.hpp"

namespace snfit {
namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, long line, const char* what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end)
    throw DataError("line " + std::to_string(line) + ": " + what + " '" + s + "' is not a number", line);
  return v;
}

Status parse_status(const std::string& s, long line) {
  const std::string t = lower(s);
  if (t == "failure" || t == "1") return Status::Failure;
  if (t == "runout" || t == "0") return Status::Runout;
  throw DataError("line " + std::to_string(line) + ": unknown status '" + s + "' (expected failure or runout)", line);
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double num_from(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(num_or_null(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (j[i].size() != j.size()) throw DataError("fit record: matrix is not square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = num_from(j[i][k]);
  }
  return m;
}

double linearize(StdDist dist, double f) {
  return dist == StdDist::Normal ? std_quantile(StdDist::Normal, f) : std::log(-std::log1p(-f));
}

PlotSeries empty_series(SeriesKind k, PlotAxis x, PlotAxis y) { return PlotSeries{k, std::move(x), std::move(y), {}, {}}; }

}  // namespace

Dataset parse_dataset(std::istream& in, const ParseOptions& opt) {
  std::string line;
  long index = 0;
  if (!std::getline(in, line)) throw DataError("empty input: expected header stress,cycles,status", 0);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(line);
  int cs = -1, cc = -1, ct = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    if (h == "stress") cs = static_cast<int>(i);
    if (h == "cycles") cc = static_cast<int>(i);
    if (h == "status") ct = static_cast<int>(i);
  }
  if (cs < 0 || cc < 0 || ct < 0) throw DataError("header must name the columns stress, cycles and status", 0);
  const std::size_t need = static_cast<std::size_t>(std::max({cs, cc, ct})) + 1;
  std::vector<Observation> obs;
  while (std::getline(in, line)) {
    ++index;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (f.size() < need) throw DataError("line " + std::to_string(index) + ": too few fields", index);
    const double s = parse_number(f[cs], index, "stress");
    const double c = parse_number(f[cc], index, "cycles");
    if (!(s > 0.0) || !std::isfinite(s))
      throw DataError("line " + std::to_string(index) + ": stress must be positive", index);
    if (!(c > 0.0) || !std::isfinite(c))
      throw DataError("line " + std::to_string(index) + ": cycles must be positive", index);
    obs.push_back({s, c, parse_status(f[ct], index)});
  }
  return Dataset(std::move(obs), opt.stress_units, opt.cycles_units);
}

Dataset read_dataset(const std::string& path, const ParseOptions& opt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return parse_dataset(in, opt);
}

std::string dataset_csv(const Dataset& d) {
  std::string out = "stress,cycles,status\n";
  for (const auto& o : d.observations())
    out += fmt17(o.stress) + "," + fmt17(o.cycles) + "," + (o.status == Status::Failure ? "failure" : "runout") + "\n";
  return out;
}

Dataset scale_dataset(const Dataset& d) { return d.scaled(d.s_max(), d.n_max()); }

Dataset unscale_dataset(const Dataset& scaled, double s_max, double n_max) {
  std::vector<Observation> obs = scaled.observations();
  for (auto& o : obs) {
    o.stress *= s_max;
    o.cycles *= n_max;
  }
  return Dataset(std::move(obs), scaled.stress_units(), scaled.cycles_units());
}

std::string dataset_digest(const Dataset& d) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : dataset_csv(d)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::vector<GroupEstimate> group_nonparametric_cdf(const Dataset& d, double rel_tol) {
  std::vector<Observation> obs = d.observations();
  std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.stress < b.stress; });
  std::vector<GroupEstimate> out;
  for (std::size_t i = 0; i < obs.size();) {
    std::size_t j = i;
    while (j < obs.size() && obs[j].stress - obs[i].stress <= rel_tol * obs[i].stress) ++j;
    std::vector<Observation> g(obs.begin() + static_cast<long>(i), obs.begin() + static_cast<long>(j));
    // Failures before runouts at tied cycles: tied runouts remain at risk.
    std::stable_sort(g.begin(), g.end(), [](const auto& a, const auto& b) {
      if (a.cycles != b.cycles) return a.cycles < b.cycles;
      return a.status == Status::Failure && b.status == Status::Runout;
    });
    GroupEstimate ge{obs[i].stress, static_cast<int>(g.size()), 0, {}};
    double surv = 1.0;
    int at_risk = static_cast<int>(g.size()), censored = 0;
    for (std::size_t k = 0; k < g.size();) {
      if (g[k].status == Status::Runout) {
        ++censored;
        ++ge.runouts;
        --at_risk;
        ++k;
        continue;
      }
      int deaths = 0;
      const double t = g[k].cycles;
      while (k < g.size() && g[k].cycles == t && g[k].status == Status::Failure) {
        ++deaths;
        ++k;
      }
      const double before = 1.0 - surv;
      surv *= 1.0 - static_cast<double>(deaths) / at_risk;
      at_risk -= deaths;
      const double after = 1.0 - surv;
      ge.steps.push_back({t, after, 0.5 * (before + after), censored});
      censored = 0;
    }
    out.push_back(std::move(ge));
    i = j;
  }
  return out;
}

std::string to_string(SeriesKind k) {
  switch (k) {
    case SeriesKind::ProbabilityPlot: return "probability-plot";
    case SeriesKind::QuantileCurve: return "quantile-curve";
    case SeriesKind::Density: return "density";
    case SeriesKind::ResidualScatter: return "residual-scatter";
  }
  return "unknown";
}

PlotSeries probability_plot(const Dataset& d, StdDist dist, double rel_tol) {
  PlotSeries s = empty_series(SeriesKind::ProbabilityPlot, {"log cycles", "linear", d.cycles_units()},
                              {dist == StdDist::Normal ? "normal quantile" : "sev quantile", "linear", ""});
  for (const auto& g : group_nonparametric_cdf(d, rel_tol))
    for (const auto& st : g.steps)
      s.points.push_back({std::log(st.cycles), linearize(dist, st.position), fmt17(g.stress), false});
  return s;
}

PlotSeries quantile_curves(const FittedModel& fit, const std::vector<double>& probs, double s_lo, double s_hi, int n) {
  if (!(s_lo > 0.0 && s_hi > s_lo) || n < 2) throw DomainError("quantile curves need 0 < s_lo < s_hi and n >= 2");
  PlotSeries s = empty_series(SeriesKind::QuantileCurve, {"stress", "log", ""}, {"cycles", "log", ""});
  for (double p : probs) {
    const std::string label = fmt17(p);
    for (int i = 0; i < n; ++i) {
      const double st = std::exp(std::log(s_lo) + (std::log(s_hi) - std::log(s_lo)) * i / (n - 1));
      double q;
      try {
        const auto e = evaluate(fit.model, Query::life_quantile(p, st));
        q = e.is_finite() ? e.value : std::numeric_limits<double>::infinity();
      } catch (const RangeError&) {
        q = std::numeric_limits<double>::infinity();
      } catch (const DomainError&) {
        // Below a deterministic fatigue limit: no finite quantile either.
        q = std::numeric_limits<double>::infinity();
      }
      if (!std::isfinite(q)) {
        // Walking up in stress, the infinite region is the low-stress end.
        s.points.erase(std::remove_if(s.points.begin(), s.points.end(),
                                      [&](const PlotPoint& pt) { return pt.group == label; }),
                       s.points.end());
        s.notes["truncated_below_stress p=" + label] = fmt17(st);
        continue;
      }
      s.points.push_back({st, q, label, std::nullopt});
    }
  }
  return s;
}

PlotSeries life_density(const FittedModel& fit, double se, int n) {
  PlotSeries s = empty_series(SeriesKind::Density, {"cycles", "log", ""}, {"density", "linear", ""});
  double p_hi = 0.999;
  if (const auto* m = std::get_if<ModelSpec>(&fit.model)) {
    const double atom = atom_probability(*m, Axis::Life, se);
    p_hi = std::min(p_hi, 0.999 * (1.0 - atom));
  } else {
    const auto& r = std::get<RflModel>(fit.model);
    const double sup = std_cdf(r.dist_gamma, (std::log(se) - r.mu_log_gamma) / r.sigma_log_gamma);
    p_hi = std::min(p_hi, 0.999 * sup);
  }
  const double p_lo = std::min(0.001, 0.5 * p_hi);
  const double lo = evaluate(fit.model, Query::life_quantile(p_lo, se)).value;
  double hi = evaluate(fit.model, Query::life_quantile(p_hi, se)).value;
  // Near an atom the upper quantiles can overflow; pull p_hi in until the
  // quantile is representable.
  for (int k = 0; k < 60 && !(hi < 1e300); ++k) {
    p_hi = p_lo + 0.8 * (p_hi - p_lo);
    hi = evaluate(fit.model, Query::life_quantile(p_hi, se)).value;
  }
  if (!(hi < 1e300)) throw RangeError("no finite life quantiles at this stress", RangeError::Side::AboveSupremum, se);
  for (int i = 0; i < n; ++i) {
    const double t = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
    double f;
    if (const auto* m = std::get_if<ModelSpec>(&fit.model)) f = life_pdf(*m, t, se);
    else f = rfl_life_pdf(std::get<RflModel>(fit.model), t, se);
    s.points.push_back({t, f, fmt17(se), std::nullopt});
  }
  s.notes["p_range"] = fmt17(p_lo) + " " + fmt17(p_hi);
  return s;
}

PlotSeries residual_scatter(const FittedModel& fit, const Dataset& d) {
  PlotSeries s = empty_series(SeriesKind::ResidualScatter, {"stress", "log", d.stress_units()},
                              {"standardized residual", "linear", ""});
  const auto r = residuals(fit, d);
  for (std::size_t i = 0; i < r.size(); ++i)
    s.points.push_back({d.observations()[i].stress, r[i].value, std::nullopt, r[i].censored});
  return s;
}

std::string series_csv(const PlotSeries& s) {
  std::string out = "x,y,group,censored\n";
  for (const auto& p : s.points) {
    out += fmt17(p.x) + "," + fmt17(p.y) + "," + p.group.value_or("") + ",";
    if (p.censored) out += *p.censored ? "true" : "false";
    out += "\n";
  }
  return out;
}

std::string series_json(const std::vector<PlotSeries>& all) {
  auto str = [](const std::string& v) { return json(v).dump(); };
  auto num = [](double v) { return std::isfinite(v) ? fmt17(v) : std::string("null"); };
  auto axis = [&](const PlotAxis& a) {
    return "{\"name\":" + str(a.name) + ",\"scale\":" + str(a.scale) + ",\"units\":" + str(a.units) + "}";
  };
  std::string out = "{\"series\":[";
  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto& s = all[k];
    if (k) out += ",";
    out += "\n{\"kind\":" + str(to_string(s.kind)) + ",\"x_axis\":" + axis(s.x_axis) + ",\"y_axis\":" + axis(s.y_axis);
    out += ",\"notes\":" + json(s.notes).dump() + ",\"points\":[";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto& p = s.points[i];
      if (i) out += ",";
      out += "\n{\"x\":" + num(p.x) + ",\"y\":" + num(p.y);
      if (p.group) out += ",\"group\":" + str(*p.group);
      if (p.censored) out += std::string(",\"censored\":") + (*p.censored ? "true" : "false");
      out += "}";
    }
    out += "]}";
  }
  out += "\n]}\n";
  return out;
}

std::string fit_record_json(const FitRecord& r) {
  const FittedModel& f = r.fit;
  json j;
  j["format"] = "snfit-fit-record";
  j["version"] = 1;
  j["rfl"] = f.spec.rfl;
  j["family"] = f.spec.rfl ? "random-fatigue-limit" : std::string(to_string(f.spec.family));
  j["orientation"] = std::string(to_string(f.spec.orientation));
  j["distribution"] = std::string(to_string(f.spec.dist));
  j["spread"] = f.spec.spread == SpreadKind::Constant ? "constant" : "loglinear";
  j["rfl_gamma_distribution"] = std::string(to_string(f.spec.rfl_gamma_dist));
  json nat = json::array();
  for (std::size_t i = 0; i < f.natural.size(); ++i)
    nat.push_back({{"name", f.names[i]}, {"value", f.natural[i]}, {"se", num_or_null(f.natural_se[i])}});
  j["natural"] = nat;
  const auto sn = stable_names(f.spec);
  json st = json::array();
  for (std::size_t i = 0; i < f.stable.size(); ++i) st.push_back({{"name", sn[i]}, {"value", f.stable[i]}});
  j["stable"] = st;
  j["anchors"] = {{"s_low", f.anchors.s_low},
                  {"s_high", f.anchors.s_high},
                  {"n_low", f.anchors.n_low},
                  {"n_high", f.anchors.n_high},
                  {"n_mid", f.anchors.n_mid}};
  j["scaling"] = {{"s_max", f.s_max}, {"n_max", f.n_max}};
  j["loglik"] = num_or_null(f.loglik);
  j["converged"] = f.converged;
  j["hessian_ok"] = f.hessian_ok;
  j["iterations"] = f.iterations;
  j["evaluations"] = f.evaluations;
  j["hessian"] = matrix_json(f.hessian);
  j["covariance"] = matrix_json(f.covariance);
  j["note"] = f.note;
  j["provenance"] = {{"dataset_digest", r.dataset_digest},
                     {"observations", f.observations},
                     {"failures", f.failures},
                     {"seed", r.seed ? json(*r.seed) : json(nullptr)}};
  return j.dump(2) + "\n";
}

FitRecord parse_fit_record(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "snfit-fit-record") throw DataError("not an snfit fit record");
    FitSpec spec;
    spec.rfl = j.at("rfl").get<bool>();
    if (!spec.rfl) spec.family = family_from_string(j.at("family").get<std::string>());
    spec.orientation = orientation_from_string(j.at("orientation").get<std::string>());
    spec.dist = std_dist_from_string(j.at("distribution").get<std::string>());
    spec.spread = j.at("spread") == "loglinear" ? SpreadKind::LogLinear : SpreadKind::Constant;
    spec.rfl_gamma_dist = std_dist_from_string(j.at("rfl_gamma_distribution").get<std::string>());
    std::vector<double> natural, se;
    std::vector<std::string> names;
    for (const auto& p : j.at("natural")) {
      names.push_back(p.at("name").get<std::string>());
      natural.push_back(p.at("value").get<double>());
      se.push_back(num_from(p.at("se")));
    }
    if (names != natural_names(spec)) throw DataError("fit record: parameter names do not match the model");
    FittedModel f(spec, build_model(spec, natural));
    f.names = names;
    f.natural = natural;
    f.natural_se = se;
    for (const auto& p : j.at("stable")) f.stable.push_back(p.at("value").get<double>());
    const auto& a = j.at("anchors");
    f.anchors = {a.at("s_low").get<double>(), a.at("s_high").get<double>(), a.at("n_low").get<double>(),
                 a.at("n_high").get<double>(), a.at("n_mid").get<double>()};
    f.s_max = j.at("scaling").at("s_max").get<double>();
    f.n_max = j.at("scaling").at("n_max").get<double>();
    f.loglik = num_from(j.at("loglik"));
    f.converged = j.at("converged").get<bool>();
    f.hessian_ok = j.at("hessian_ok").get<bool>();
    f.iterations = j.at("iterations").get<int>();
    f.evaluations = j.at("evaluations").get<int>();
    f.hessian = matrix_from(j.at("hessian"));
    f.covariance = matrix_from(j.at("covariance"));
    f.note = j.at("note").get<std::string>();
    const auto& pv = j.at("provenance");
    f.observations = pv.at("observations").get<std::size_t>();
    f.failures = pv.at("failures").get<std::size_t>();
    FitRecord r{std::move(f), pv.at("dataset_digest").get<std::string>(), std::nullopt};
    if (!pv.at("seed").is_null()) r.seed = pv.at("seed").get<std::uint64_t>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit record: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("fit record holds an invalid model: ") + e.what());
  }
}

}  // namespace snfit
