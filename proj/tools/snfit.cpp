// snfit command-line tool: fit S-N models, query quantiles with intervals,
// and emit residual, plot and simulated data.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "snfit/data_io.hpp"
#include "snfit/errors.hpp"
#include "snfit/inference.hpp"

using namespace snfit;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNoConvergence = 3, kUnattainable = 4, kProvenance = 5 };

struct ProvenanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string output_path(const std::string& given, const std::string& fallback) {
  if (!given.empty()) return given;
  const char* dir = std::getenv("SNFIT_OUTPUT_DIR");
  return dir && *dir ? (fs::path(dir) / fallback).string() : fallback;
}

// Write-then-rename so readers never see a partial file.
void write_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw std::runtime_error("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Which variable each relationship is conventionally specified for.
const char* recommended(Family f) {
  switch (f) {
    case Family::Basquin: return "life";
    case Family::BoxCox:
    case Family::Stromeyer: return "either";
    default: return "strength";
  }
}

FitSpec make_spec(const std::string& relationship, const std::string& distribution, std::string orientation,
                  const std::string& spread, const std::string& gamma_dist) {
  FitSpec spec;
  spec.dist = std_dist_from_string(distribution);
  spec.spread = spread == "loglinear" ? SpreadKind::LogLinear : SpreadKind::Constant;
  if (spread != "loglinear" && spread != "constant") throw UsageError("--spread must be constant or loglinear");
  if (relationship == "rfl" || relationship == "random-fatigue-limit") {
    spec.rfl = true;
    spec.rfl_gamma_dist = std_dist_from_string(gamma_dist);
    return spec;
  }
  spec.family = family_from_string(relationship);
  const std::string rec = recommended(spec.family);
  if (orientation.empty()) orientation = rec == "strength" ? "strength" : "life";
  spec.orientation = orientation_from_string(orientation);
  if (rec != "either" && rec != std::string(to_string(spec.orientation)))
    std::cerr << "warning: " << to_string(spec.family) << " is usually specified for fatigue " << rec
              << "; fitting the " << to_string(spec.orientation) << " orientation as requested\n";
  return spec;
}

void check_digest(const FitRecord& rec, const Dataset& d, const std::string& path) {
  const std::string digest = dataset_digest(d);
  if (digest != rec.dataset_digest)
    throw ProvenanceError("dataset '" + path + "' (digest " + digest + ") is not the data the fit used (digest " +
                          rec.dataset_digest + ")");
}

void print_fit(const FittedModel& f, std::ostream& os) {
  os << "model: " << (f.spec.rfl ? std::string("random-fatigue-limit") : std::string(to_string(f.spec.family)))
     << ", " << to_string(f.spec.dist);
  if (!f.spec.rfl) os << ", " << to_string(f.spec.orientation) << "-specified";
  os << "\nobservations: " << f.observations << " (" << f.failures << " failures)\n";
  for (std::size_t i = 0; i < f.natural.size(); ++i)
    os << "  " << f.names[i] << " = " << num(f.natural[i]) << "  (se " << num(f.natural_se[i]) << ")\n";
  os << "loglik: " << std::setprecision(10) << f.loglik << "\n";
  os << "converged: " << (f.converged ? "yes" : "no") << " (" << f.iterations << " iterations, " << f.evaluations
     << " evaluations)\n";
  if (!f.note.empty()) os << "note: " << f.note << "\n";
}

int cmd_fit(const std::string& data, const std::string& relationship, const std::string& distribution,
            const std::string& orientation, const std::string& spread, const std::string& gamma_dist,
            const std::string& out, std::optional<std::uint64_t> seed) {
  const Dataset d = read_dataset(data);
  const FitSpec spec = make_spec(relationship, distribution, orientation, spread, gamma_dist);
  const FittedModel f = fit_mle(spec, d);
  const std::string path = output_path(out, "fit.json");
  write_atomic(path, fit_record_json({f, dataset_digest(d), seed}));
  print_fit(f, std::cout);
  std::cout << "record: " << path << "\n";
  if (!f.converged) {
    std::cerr << "error: the optimizer did not reach a verified maximum; the best point was written\n";
    return kNoConvergence;
  }
  return kOk;
}

double atom_at(const FittedModel& f, const Query& q) {
  if (const auto* m = std::get_if<ModelSpec>(&f.model))
    return atom_probability(*m, q.kind == Query::Kind::LifeQuantile ? Axis::Life : Axis::Strength, q.at);
  const auto& r = std::get<RflModel>(f.model);
  return 1.0 - std_cdf(r.dist_gamma, (std::log(q.at) - r.mu_log_gamma) / r.sigma_log_gamma);
}

int cmd_quantile(const std::string& fit_path, const std::string& data, std::optional<double> p,
                 std::optional<double> value, std::optional<double> at_stress, std::optional<double> at_cycles,
                 const std::string& method, double level) {
  const FitRecord rec = parse_fit_record(read_text(fit_path));
  if (at_stress.has_value() == at_cycles.has_value()) throw UsageError("give exactly one of --at-stress, --at-cycles");
  if (p.has_value() == value.has_value()) throw UsageError("give exactly one of --p, --value");
  const bool life = at_stress.has_value();
  const double at = life ? *at_stress : *at_cycles;
  const Query q = p ? (life ? Query::life_quantile(*p, at) : Query::strength_quantile(*p, at))
                    : (life ? Query::life_cdf(*value, at) : Query::strength_cdf(*value, at));
  std::optional<Dataset> d;
  if (!data.empty()) {
    d = read_dataset(data);
    check_digest(rec, *d, data);
  }
  ExtendedQuantile e;
  try {
    e = evaluate(rec.fit.model, q);
  } catch (const RangeError&) {
    e = ExtendedQuantile::infinite();
  }
  const std::string what = q.is_probability() ? (life ? "life cdf" : "strength cdf")
                                              : (life ? "life quantile" : "strength quantile");
  if (!e.is_finite()) {
    std::cout << what << ": unbounded (atom=" << num(atom_at(rec.fit, q)) << ")\n";
    std::cerr << "error: p = " << *p << " is not attainable below the atom at infinity\n";
    return kUnattainable;
  }
  std::cout << what << ": " << std::setprecision(10) << e.value << "\n";
  if (method == "none") return kOk;
  Interval ci;
  if (method == "wald") {
    ci = wald_ci(rec.fit, q, level);
  } else if (method == "profile") {
    if (!d) throw UsageError("--method profile needs --data (the data the model was fit to)");
    ci = profile_lr_ci(rec.fit, *d, q, level);
  } else {
    throw UsageError("--method must be wald, profile or none");
  }
  auto end = [&](double v, bool bounded) { return bounded ? num(v) : std::string("unbounded"); };
  std::cout << num(100 * level) << "% " << method << " interval: [" << end(ci.lower, ci.lower_bounded) << ", "
            << end(ci.upper, ci.upper_bounded) << "]\n";
  std::cout << "one-sided " << num(100 * level) << "% lower bound: " << num(ci.one_sided_lower) << "\n";
  return kOk;
}

int cmd_residuals(const std::string& fit_path, const std::string& data, const std::string& out) {
  const FitRecord rec = parse_fit_record(read_text(fit_path));
  const Dataset d = read_dataset(data);
  check_digest(rec, d, data);
  const auto r = residuals(rec.fit, d);
  std::string csv = "stress,cycles,status,residual,censored\n";
  char buf[128];
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& o = d.observations()[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,%.17g,%s\n", o.stress, o.cycles,
                  o.status == Status::Failure ? "failure" : "runout", r[i].value, r[i].censored ? "true" : "false");
    csv += buf;
  }
  const std::string path = output_path(out, "residuals.csv");
  write_atomic(path, csv);
  std::cout << r.size() << " residuals written to " << path << "\n";
  return kOk;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int cmd_plotdata(const std::string& fit_path, const std::string& data, const std::string& kind,
                 const std::string& format, const std::string& probs, std::optional<double> at_stress,
                 const std::string& distribution, const std::string& out) {
  std::optional<FitRecord> rec;
  if (!fit_path.empty()) rec = parse_fit_record(read_text(fit_path));
  std::optional<Dataset> d;
  if (!data.empty()) {
    d = read_dataset(data);
    if (rec) check_digest(*rec, *d, data);
  }
  auto need_fit = [&] {
    if (!rec) throw UsageError("plot kind '" + kind + "' needs --fit");
  };
  auto need_data = [&] {
    if (!d) throw UsageError("plot kind '" + kind + "' needs --data");
  };
  std::vector<PlotSeries> series;
  if (kind == "probability" || kind == "all") {
    need_data();
    StdDist dist = rec ? rec->fit.spec.dist : std_dist_from_string(distribution);
    series.push_back(probability_plot(*d, dist));
  }
  if (kind == "quantile" || kind == "all") {
    need_fit();
    double lo, hi;
    if (d) {
      lo = hi = d->observations().front().stress;
      for (const auto& o : d->observations()) {
        lo = std::min(lo, o.stress);
        hi = std::max(hi, o.stress);
      }
      lo *= 0.8;
      hi *= 1.1;
    } else {
      hi = rec->fit.s_max * 1.1;
      lo = rec->fit.s_max * 0.1;
    }
    series.push_back(quantile_curves(rec->fit, parse_list(probs), lo, hi));
  }
  if (kind == "density" || (kind == "all" && at_stress)) {
    need_fit();
    if (!at_stress) throw UsageError("density series need --at-stress");
    series.push_back(life_density(rec->fit, *at_stress));
  }
  if (kind == "residual" || kind == "all") {
    need_fit();
    need_data();
    series.push_back(residual_scatter(rec->fit, *d));
  }
  if (series.empty()) throw UsageError("--kind must be probability, quantile, density, residual or all");
  if (format == "json") {
    const std::string path = output_path(out, "plotdata.json");
    write_atomic(path, series_json(series));
    std::cout << series.size() << " series written to " << path << "\n";
  } else if (format == "csv") {
    const fs::path base = output_path(out, "plotdata.csv");
    for (const auto& s : series) {
      fs::path p = base;
      if (series.size() > 1) p.replace_filename(base.stem().string() + "_" + to_string(s.kind) + ".csv");
      write_atomic(p.string(), series_csv(s));
      std::cout << to_string(s.kind) << " series written to " << p.string() << "\n";
    }
  } else {
    throw UsageError("--format must be csv or json");
  }
  return kOk;
}

std::vector<DesignPoint> parse_design(const std::string& s) {
  std::vector<DesignPoint> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("--design entries look like stress:count");
    out.push_back({std::stod(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
  }
  if (out.empty()) throw UsageError("--design is empty");
  return out;
}

int cmd_simulate(const std::string& fit_path, const std::string& relationship, const std::string& distribution,
                 const std::string& orientation, const std::string& spread, const std::string& gamma_dist,
                 const std::string& params, const std::string& design, double censor_at, std::uint64_t seed,
                 const std::string& out) {
  AnyModel model = [&]() -> AnyModel {
    if (!fit_path.empty()) return parse_fit_record(read_text(fit_path)).fit.model;
    if (relationship.empty() || params.empty()) throw UsageError("simulate needs --fit or --relationship with --params");
    const FitSpec spec = make_spec(relationship, distribution, orientation, spread, gamma_dist);
    return build_model(spec, parse_list(params));
  }();
  const Dataset d = simulate_dataset(model, parse_design(design), censor_at, seed);
  const std::string path = output_path(out, "simulated.csv");
  write_atomic(path, dataset_csv(d));
  std::cout << d.size() << " units (" << d.failures() << " failures) written to " << path << "\n";
  return kOk;
}

int cmd_compare(const std::vector<std::string>& fits, const std::string& data) {
  if (fits.size() < 2) throw UsageError("compare needs at least two fit records");
  const Dataset d = read_dataset(data);
  std::vector<FitRecord> recs;
  for (const auto& f : fits) {
    recs.push_back(parse_fit_record(read_text(f)));
    check_digest(recs.back(), d, data);
  }
  std::printf("%-22s %-19s %-9s %14s %6s %12s %10s %10s %8s\n", "record", "model", "reading", "loglik", "k", "AIC",
              "res.mean", "res.sd", "censored");
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const FittedModel& f = recs[i].fit;
    const auto r = residuals(f, d);
    double s = 0, ss = 0;
    int nf = 0, nc = 0;
    for (const auto& x : r) {
      if (x.censored) {
        ++nc;
        continue;
      }
      s += x.value;
      ss += x.value * x.value;
      ++nf;
    }
    const double mean = nf ? s / nf : NAN;
    const double sd = nf > 1 ? std::sqrt(std::max(0.0, (ss - nf * mean * mean) / (nf - 1))) : NAN;
    const auto k = f.natural.size();
    const std::string model = f.spec.rfl ? "rfl" : std::string(to_string(f.spec.family));
    std::printf("%-22s %-19s %-9s %14.6f %6zu %12.4f %10.4f %10.4f %8d\n", fs::path(fits[i]).filename().c_str(),
                model.c_str(), f.spec.rfl ? "life" : std::string(to_string(f.spec.orientation)).c_str(),
                f.loglik, k, 2.0 * static_cast<double>(k) - 2.0 * f.loglik, mean, sd, nc);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit and query S-N fatigue models with censored data"};
  app.require_subcommand(1);

  std::string data, relationship = "basquin", distribution = "lognormal", orientation, spread = "constant",
                    gamma_dist = "lognormal", out, fit_path, method = "wald", kind = "all", format = "csv",
                    probs = "0.1,0.5,0.9", params, design;
  std::optional<std::uint64_t> seed;
  std::uint64_t sim_seed = 1;
  std::optional<double> p, value, at_stress, at_cycles;
  double level = 0.95, censor_at = 1e7;
  std::vector<std::string> fits;

  auto add_model_flags = [&](CLI::App* c) {
    c->add_option("--relationship", relationship,
                  "basquin, stromeyer, boxcox, coffin-manson, nishijima, rect-hyperbola, modified-bastenaire or rfl");
    c->add_option("--distribution", distribution, "lognormal or weibull");
    c->add_option("--orientation", orientation, "life or strength (default per relationship)");
    c->add_option("--spread", spread, "constant or loglinear (life orientation only)");
    c->add_option("--gamma-distribution", gamma_dist, "fatigue-limit distribution for rfl");
  };

  auto* fit = app.add_subcommand("fit", "Fit a model by maximum likelihood");
  fit->add_option("--data", data, "CSV with stress,cycles,status")->required();
  add_model_flags(fit);
  fit->add_option("--out", out, "fit record path (default $SNFIT_OUTPUT_DIR/fit.json)");
  fit->add_option("--seed", seed, "seed recorded in the provenance block");

  auto* quant = app.add_subcommand("quantile", "Quantile or probability with a confidence interval");
  quant->add_option("--fit", fit_path, "fit record")->required();
  quant->add_option("--data", data, "data the fit used (needed for profile intervals)");
  quant->add_option("--p", p, "probability for a quantile");
  quant->add_option("--value", value, "cycles (with --at-stress) or stress (with --at-cycles) for a cdf");
  quant->add_option("--at-stress", at_stress, "stress: life quantile or life cdf");
  quant->add_option("--at-cycles", at_cycles, "cycles: strength quantile or strength cdf");
  quant->add_option("--method", method, "wald, profile or none");
  quant->add_option("--level", level, "two-sided confidence level");

  auto* res = app.add_subcommand("residuals", "Standardized residuals as CSV");
  res->add_option("--fit", fit_path, "fit record")->required();
  res->add_option("--data", data, "data the fit used")->required();
  res->add_option("--out", out, "output CSV (default $SNFIT_OUTPUT_DIR/residuals.csv)");

  auto* plot = app.add_subcommand("plotdata", "Plot-ready series");
  plot->add_option("--fit", fit_path, "fit record (for model series)");
  plot->add_option("--data", data, "dataset CSV");
  plot->add_option("--kind", kind, "probability, quantile, density, residual or all");
  plot->add_option("--format", format, "csv or json");
  plot->add_option("--p", probs, "comma-separated probabilities for quantile curves");
  plot->add_option("--at-stress", at_stress, "stress for the density series");
  plot->add_option("--distribution", distribution, "kernel for a probability plot without a fit");
  plot->add_option("--out", out, "output path");

  auto* sim = app.add_subcommand("simulate", "Simulate a censored dataset");
  sim->add_option("--fit", fit_path, "fit record to simulate from");
  add_model_flags(sim);
  sim->add_option("--params", params, "comma-separated natural parameters (without --fit)");
  sim->add_option("--design", design, "stress:count,stress:count,...")->required();
  sim->add_option("--censor-at", censor_at, "runout cycles");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--out", out, "output CSV (default $SNFIT_OUTPUT_DIR/simulated.csv)");

  auto* cmp = app.add_subcommand("compare", "Compare fit records on one dataset");
  cmp->add_option("--fits", fits, "fit records")->required()->expected(2, -1);
  cmp->add_option("--data", data, "data the fits used")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*fit) return cmd_fit(data, relationship, distribution, orientation, spread, gamma_dist, out, seed);
    if (*quant) return cmd_quantile(fit_path, data, p, value, at_stress, at_cycles, method, level);
    if (*res) return cmd_residuals(fit_path, data, out);
    if (*plot) return cmd_plotdata(fit_path, data, kind, format, probs, at_stress, distribution, out);
    if (*sim)
      return cmd_simulate(fit_path, relationship, distribution, orientation, spread, gamma_dist, params, design,
                          censor_at, sim_seed, out);
    if (*cmp) return cmd_compare(fits, data);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << " (best loglik " << e.best_loglik() << ")\n";
    return kNoConvergence;
  } catch (const RangeError& e) {
    std::cerr << "unattainable: " << e.what() << "\n";
    return kUnattainable;
  } catch (const ProvenanceError& e) {
    std::cerr << "provenance mismatch: " << e.what() << "\n";
    return kProvenance;
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}
