#pragma once

// The `spinwalk` command-line runner. Settings are resolved in the order
// built-in default < config file < command-line flag. All randomness flows
// from --seed through stream_seed(seed, tag, k); outputs are written to a
// temporary file and renamed into place only after the command succeeds.

#include "spinwalk/bessel.hpp"
#include "spinwalk/config.hpp"
#include "spinwalk/model.hpp"
#include "spinwalk/nonuniq.hpp"
#include "spinwalk/parallel.hpp"
#include "spinwalk/report.hpp"
#include "spinwalk/riemann.hpp"
#include "spinwalk/rng.hpp"
#include "spinwalk/skewprod.hpp"
#include "spinwalk/sphere_sde.hpp"
#include "spinwalk/stats.hpp"
#include "spinwalk/suites.hpp"
#include "spinwalk/walk.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace spinwalk::cli {

/// Shortest round-trip decimal form; identical on every IEEE-754 platform.
inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Writes `path` via `path.partial` + rename; "-" or "" means the stream.
inline void write_output(const std::string& path, const std::string& content, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << content;
    return;
  }
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << content;
    out.close();
    if (!out) {
      std::remove(tmp.c_str());
      throw Error("failed writing '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw Error("cannot move output into '" + path + "': " + ec.message());
  }
}

inline std::string reports_text(const std::vector<TestReport>& reports) { return to_json(reports).dump(2) + "\n"; }

/// Raw flag values; `given` tells whether the user supplied each one.
struct Flags {
  std::string config, out, report, density;
  std::uint64_t seed = 1;
  std::size_t replicas = 0, n = 0;
  double dt = 0.0, horizon = 0.0;
  int threads = 0;
  std::string family, p, a;
  int d = 0;
  double b = 0.0, U = 0.0;
  double delta = 0.0, min_lifetime = 0.0, max_lo = 0.0, max_hi = 0.0;
  double burn_in = 0.0, thin = 0.0;
  int chains = 0;
  std::string lambda;
  bool walk = false, geometry = false;
  std::vector<std::string> inputs;
  bool a_is_level = false;  // exit-law reads --a as the exit radius
  std::map<std::string, std::vector<CLI::Option*>> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    if (it == opts.end()) return false;
    for (const auto* o : it->second)
      if (o->count() > 0) return true;
    return false;
  }
};

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error("invalid number '" + item + "' in list '" + s + "'");
    }
  }
  return out;
}

/// Resolved settings for one command.
class Settings {
 public:
  Settings(const Flags& f) : f_(f) {
    if (!f.config.empty()) cfg_ = Config::load(f.config, default_schema());
  }

  std::uint64_t seed() const {
    if (f_.given("--seed")) return f_.seed;
    if (auto v = cfg_.get_int("run.seed")) return static_cast<std::uint64_t>(*v);
    return 1;
  }
  int threads() const {
    if (f_.given("--threads")) return std::max(1, f_.threads);
    if (auto v = cfg_.get_int("run.threads")) return std::max<int>(1, static_cast<int>(*v));
    return default_threads();
  }
  std::size_t size(const char* flag, const char* key, std::size_t def) const {
    std::size_t v = def;
    if (f_.given(flag)) v = flag == std::string("--n") ? f_.n : f_.replicas;
    else if (auto c = cfg_.get_int(key)) {
      require(*c > 0, std::string(key) + " must be positive");
      v = static_cast<std::size_t>(*c);
    }
    require(v > 0, std::string(flag) + " must be positive");
    return v;
  }
  std::size_t replicas(std::size_t def) const { return size("--replicas", "run.replicas", def); }
  std::size_t n(std::size_t def) const { return size("--n", "run.n", def); }
  double real(const char* flag, double flag_value, const char* key, double def) const {
    if (f_.given(flag)) return flag_value;
    if (auto v = cfg_.get_double(key)) return *v;
    return def;
  }
  double dt(double def) const { return real("--dt", f_.dt, "run.dt", def); }
  double horizon(double def) const { return real("--horizon", f_.horizon, "run.horizon", def); }
  const Config& config() const { return cfg_; }

  ModelSpec model() const {
    std::string family = f_.given("--model") ? f_.family : cfg_.get_string("model.family").value_or("isotropic");
    const Family fam = parse_family(family);
    const double U = f_.given("--U") ? f_.U : cfg_.get_double("model.U").value_or(1.0);
    switch (fam) {
      case Family::Isotropic: {
        const int d = f_.given("--d") ? f_.d : static_cast<int>(cfg_.get_int("model.d").value_or(2));
        return ModelSpec::isotropic(d, U);
      }
      case Family::Rotation2d: {
        const double b = f_.given("--b") ? f_.b : cfg_.get_double("model.b").value_or(0.5);
        check_d(2);
        return ModelSpec::rotation2d(b, U);
      }
      case Family::Rotation4d: {
        std::vector<double> a = (f_.given("--a") && !f_.a_is_level) ? parse_list(f_.a)
                                                : cfg_.get_array("model.a").value_or(std::vector<double>{0.5});
        check_d(4);
        if (a.size() == 1) return ModelSpec::rotation4d(a[0], U);
        require(a.size() == 3, "rotation4d needs one value of a or three values a2,a3,a4");
        return ModelSpec::rotation4d(a[0], a[1], a[2], U);
      }
    }
    throw Error("unreachable");
  }

  WalkConfig walk_config() const {
    WalkConfig w;
    w.model = model();
    w.noise = parse_noise(cfg_.get_string("walk.noise").value_or("gaussian"));
    w.square_root = parse_square_root(cfg_.get_string("walk.square_root").value_or("symmetric"));
    if (auto x0 = cfg_.get_array("walk.x0")) {
      w.x0 = Vec(static_cast<Eigen::Index>(x0->size()));
      for (std::size_t i = 0; i < x0->size(); ++i) w.x0(static_cast<Eigen::Index>(i)) = (*x0)[i];
    }
    w.perturbation = cfg_.get_double("walk.perturbation").value_or(0.0);
    w.perturbation_decay = cfg_.get_double("walk.perturbation_decay").value_or(1.0);
    w.validate();
    return w;
  }

 private:
  void check_d(int expected) const {
    const int d = f_.given("--d") ? f_.d : static_cast<int>(cfg_.get_int("model.d").value_or(expected));
    require(d == expected, "model family requires d = " + std::to_string(expected));
  }

  const Flags& f_;
  Config cfg_;
};

inline std::string vector_header(const std::string& first, int d, const std::string& prefix = "x") {
  std::string h = first;
  for (int i = 1; i <= d; ++i) h += "," + prefix + std::to_string(i);
  return h + "\n";
}

inline std::string samples_csv(const std::vector<Vec>& xs, int d, const std::string& index_name) {
  std::string s = vector_header(index_name, d);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    s += std::to_string(k);
    for (int i = 0; i < d; ++i) s += "," + fmt(xs[k](i));
    s += "\n";
  }
  return s;
}

inline void maybe_write_report(const Flags& f, const std::vector<TestReport>& reports) {
  if (!f.report.empty()) write_output(f.report, reports_text(reports), std::cout);
}

/// Stationary sample used as the angular law mu inside skew products and
/// excursion marks.
inline std::vector<Vec> mu_pool(const ModelSpec& m, std::uint64_t seed, int threads, std::size_t n = 4096) {
  StationaryOptions so;
  so.h = 2e-3;
  so.chains = 512;
  so.threads = threads;
  return estimate_stationary(m, 20.0, n, 2.0, seed, so).samples;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

inline int cmd_validate(const Flags& f, std::ostream& out) {
  Settings s(f);
  const ModelSpec m = s.model();
  Rng rng(s.seed(), "validate", 0);
  const std::size_t points = s.replicas(1000);
  std::vector<TestReport> reports = validate_assumptions(m, points, 1e-10, rng);
  const Ellipticity e = ellipticity_bound(m, points, rng);
  reports.push_back(at_least("uniform ellipticity lambda", e.lambda, 1e-12, points, "uniformly elliptic sigma_sy"));
  if (f.geometry) {
    auto g = geometry_reports(m, points, s.seed());
    reports.insert(reports.end(), g.begin(), g.end());
  }
  write_output(f.out, reports_text(reports), out);
  return all_pass(reports) ? 0 : 1;
}

inline int cmd_walk(const Flags& f, std::ostream& out) {
  Settings s(f);
  const WalkConfig w = s.walk_config();
  const auto xs = final_positions(w, s.n(1000), s.replicas(1000), s.seed(), "walk", s.threads());
  write_output(f.out, samples_csv(xs, w.model.d, "replica"), out);
  return 0;
}

inline int cmd_marginal(const Flags& f, std::ostream& out) {
  Settings s(f);
  const WalkConfig w = s.walk_config();
  const EmpiricalLaw law = marginal_samples(w, s.n(10000), s.replicas(100000), s.seed(), s.threads());
  write_output(f.out, samples_csv(law.samples, w.model.d, "replica"), out);
  if (!f.report.empty()) {
    MuOptions mo;
    mo.threads = s.threads();
    const MuReference ref = mu_reference(w.model, stream_seed(s.seed(), "marginal-mu", 0), mo);
    maybe_write_report(f, marginal_reports(w.model, law.samples, ref));
  }
  return 0;
}

inline int cmd_diffusion(const Flags& f, std::ostream& out) {
  Settings s(f);
  const WalkConfig w = s.walk_config();
  const double h = s.dt(1e-3), T = s.horizon(1.0);
  require(h > 0.0 && T > 0.0, "diffusion needs positive --dt and --horizon");
  const std::size_t reps = s.replicas(1000);
  std::vector<Vec> xs(reps);
  const std::uint64_t seed = s.seed();
  parallel_for(reps, s.threads(), [&](std::size_t k) {
    Rng rng(seed, "diffusion", k);
    xs[k] = simulate_x_sde(w.model, w.start(), T, h, rng);
  });
  write_output(f.out, samples_csv(xs, w.model.d, "replica"), out);
  return 0;
}

inline int cmd_stationary(const Flags& f, std::ostream& out) {
  Settings s(f);
  const ModelSpec m = s.model();
  const auto& c = s.config();
  require(f.density.empty() || m.d == 2, "--density is available for d = 2 only");
  StationaryOptions so;
  so.h = s.dt(1e-3);
  so.threads = s.threads();
  so.chains = f.given("--chains") ? f.chains : static_cast<int>(c.get_int("stationary.chains").value_or(1000));
  const double burn = s.real("--burn-in", f.burn_in, "stationary.burn_in", 50.0);
  const double thin = s.real("--thin", f.thin, "stationary.thin", 0.5);
  std::size_t samples = s.replicas(10000);
  if (!f.given("--replicas"))
    if (auto v = c.get_int("stationary.samples")) samples = static_cast<std::size_t>(*v);
  const EmpiricalSphereLaw law = estimate_stationary(m, burn, samples, thin, s.seed(), so);
  write_output(f.out, samples_csv(law.samples, m.d, "sample"), out);
  if (!f.density.empty()) {
    const CircleDensity dens = stationary_density_circle(m, 720);
    std::string csv = "theta,p\n";
    for (std::size_t i = 0; i < dens.size(); ++i) csv += fmt(dens.theta[i]) + "," + fmt(dens.p[i]) + "\n";
    write_output(f.density, csv, out);
  }
  if (!f.report.empty()) {
    std::vector<TestReport> reports{ergodicity_diagnostic(m, law, monomial_dictionary(m.d, 3))};
    if (m.d == 2) {
      // Samples within a chain are correlated; the chi-square uses the last
      // draw of each chain, with at least 5 expected per bin.
      std::vector<Vec> last;
      for (std::size_t i = 0; i < law.size(); ++i)
        if (i + 1 == law.size() || law.chain[i + 1] != law.chain[i]) last.push_back(law.samples[i]);
      if (last.size() >= 20) {
        int bins = static_cast<int>(c.get_int("stationary.bins").value_or(72));
        bins = std::min(bins, static_cast<int>(last.size() / 5));
        reports.push_back(sphere_chi2(last, stationary_density_circle(m, 720).sector_probabilities(bins), bins,
                                      "stationary draws (one per chain) vs Fokker-Planck density",
                                      "Fokker-Planck solve"));
      } else {
        std::cerr << "note: fewer than 20 chains, density chi-square skipped\n";
      }
    }
    maybe_write_report(f, reports);
  }
  return 0;
}

inline int cmd_exit_law(const Flags& f, std::ostream& out) {
  Settings s(f);
  const auto& c = s.config();
  const double a = f.given("--a") ? parse_list(f.a).at(0) : c.get_double("exit.a").value_or(1.0);
  require(a > 0.0, "exit radius must be positive");
  const std::vector<double> lambdas =
      f.given("--lambda") ? parse_list(f.lambda) : c.get_array("exit.lambda").value_or(std::vector<double>{0.5, 1, 2});
  std::string csv = "lambda,closed_form,mc_estimate,std_err,n_replicas,source\n";
  std::vector<TestReport> reports;
  if (f.walk) {
    const WalkConfig w = s.walk_config();
    require(!f.given("--delta") || std::abs(f.delta - w.model.delta()) < 1e-12,
            "--delta disagrees with the walk model's V/U");
    const ExitLaw law = exit_stats(w, s.n(10000), a, s.replicas(10000), s.seed(), s.threads(),
                                   c.get_double("exit.max_time").value_or(50.0));
    for (const auto& row : exit_laplace_table(w.model, law, a, lambdas))
      csv += fmt(row.lambda) + "," + fmt(row.closed_form) + "," + fmt(row.mc_estimate) + "," + fmt(row.std_err) +
             "," + std::to_string(row.n) + ",walk\n";
    if (!f.report.empty()) {
      MuOptions mo;
      mo.threads = s.threads();
      reports = exit_reports(w.model, law, a, lambdas, mu_reference(w.model, stream_seed(s.seed(), "exit-mu", 0), mo));
    }
  } else {
    const double delta = f.given("--delta") ? f.delta : s.model().delta();
    for (double lam : lambdas) csv += fmt(lam) + "," + fmt(exit_time_laplace(delta, a, lam)) + ",,,0,closed_form\n";
  }
  write_output(f.out, csv, out);
  maybe_write_report(f, reports);
  return 0;
}

inline int cmd_excursion(const Flags& f, std::ostream& out) {
  Settings s(f);
  const auto& c = s.config();
  const ModelSpec m = s.model();
  const double delta = f.given("--delta") ? f.delta : c.get_double("excursion.delta").value_or(m.delta());
  ExcursionCondition cond;
  const bool by_max = f.given("--max-lo") || f.given("--max-hi") || c.has("excursion.max_lo");
  if (by_max) {
    cond = MaxLevel{s.real("--max-lo", f.max_lo, "excursion.max_lo", 0.5),
                    s.real("--max-hi", f.max_hi, "excursion.max_hi", 2.0)};
  } else {
    cond = MinLifetime{s.real("--min-lifetime", f.min_lifetime, "excursion.min_lifetime", 1.0)};
  }
  ExcursionOptions eo;
  eo.dt_ratio = c.get_double("excursion.dt_ratio").value_or(1e-3);
  eo.angular.h = s.dt(2e-3);
  const std::uint64_t seed = s.seed();
  const std::vector<Vec> pool = mu_pool(m, stream_seed(seed, "excursion-mu", 0), s.threads());
  const std::size_t count = s.n(100);
  std::vector<ExcursionRecord> recs(count);
  parallel_for(count, s.threads(), [&](std::size_t k) {
    Rng rng(seed, "excursion", k);
    recs[k] = sample_marked_excursion(m, delta, cond, pool, rng, eo);
  });
  std::string csv = vector_header("record,t", m.d);
  std::size_t failing = 0, diverged = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& e = *recs[k].mapped;
    for (std::size_t i = 0; i < e.size(); ++i) {
      csv += std::to_string(k) + "," + fmt(e.times[i]);
      for (int j = 0; j < m.d; ++j) csv += "," + fmt(e.values[i](j));
      csv += "\n";
    }
    if (!split_at_max_check(recs[k]).pass) ++failing;
    if (recs[k].diverged_start && recs[k].diverged_end) ++diverged;
  }
  write_output(f.out, csv, out);
  maybe_write_report(f, {at_most("excursion records failing structural checks", static_cast<double>(failing), 0.0,
                                 count, "excursion split at its maximum"),
                         at_least("fraction of records with clock divergence at both ends",
                                  static_cast<double>(diverged) / static_cast<double>(count), 1.0, count,
                                  "rapid spinning at excursion endpoints")});
  return 0;
}

inline int cmd_nonuniq(const Flags& f, std::ostream& out) {
  Settings s(f);
  const auto& c = s.config();
  ModelSpec m = s.model();
  require(m.is_rotation(), "nonuniq needs a rotation family");
  std::vector<double> pv = f.given("--p") ? parse_list(f.p) : c.get_array("nonuniq.p").value_or(std::vector<double>{});
  Vec p = basis(m.d, 1);
  if (!pv.empty()) {
    require(static_cast<int>(pv.size()) == m.d, "--p must have d components");
    for (int i = 0; i < m.d; ++i) p(i) = pv[static_cast<std::size_t>(i)];
    p = direction(p);
  }
  Rng rng(s.seed(), "nonuniq", 0);
  const TimeGrid grid = TimeGrid::uniform(s.horizon(1.0), static_cast<std::size_t>(std::llround(s.horizon(1.0) / s.dt(1e-3))));
  Vec x0 = Vec::Zero(m.d);
  if (auto v = c.get_array("walk.x0")) {
    require(static_cast<int>(v->size()) == m.d, "walk.x0 has the wrong dimension");
    for (int i = 0; i < m.d; ++i) x0(i) = (*v)[static_cast<std::size_t>(i)];
  }
  const PathPair pair = simulate_pair(m, p, x0, grid, rng);
  std::string csv = "t";
  for (int i = 1; i <= m.d; ++i) csv += ",x" + std::to_string(i);
  for (int i = 1; i <= m.d; ++i) csv += ",y" + std::to_string(i);
  csv += "\n";
  for (std::size_t k = 0; k < pair.x.size(); ++k) {
    csv += fmt(pair.x.times[k]);
    for (int i = 0; i < m.d; ++i) csv += "," + fmt(pair.x.values[k](i));
    for (int i = 0; i < m.d; ++i) csv += "," + fmt(pair.y.values[k](i));
    csv += "\n";
  }
  write_output(f.out, csv, out);
  Rng check_rng(s.seed(), "nonuniq-check", 0);
  const EquivarianceCheck eq = check_equivariance(m, p, 1000, 1e-12, check_rng);
  const PairResiduals res = pair_residuals(m, pair);
  maybe_write_report(f, {eq.report,
                         at_most("transported Euler residual difference", res.max_abs_difference, 1e-12, pair.x.size(),
                                 "P sigma(u) = sigma(P u)"),
                         at_least("sup |X - PX|", res.sup_distance, 1e-12, pair.x.size(), "pathwise distinct solutions")});
  return 0;
}

inline int cmd_report(const Flags& f, std::ostream& out) {
  require(!f.inputs.empty(), "report needs at least one JSON report file");
  std::vector<TestReport> all;
  for (const auto& path : f.inputs) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open report '" + path + "'");
    Json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw Error("'" + path + "' is not valid JSON: " + e.what());
    }
    if (j.is_object()) all.push_back(report_from_json(j));
    else
      for (const auto& r : j) all.push_back(report_from_json(r));
  }
  write_output(f.out, reports_text(all), out);
  std::size_t failed = 0;
  for (const auto& r : all)
    if (!r.pass) ++failed;
  std::cerr << all.size() - failed << "/" << all.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"spinwalk: non-homogeneous random walks, their skew-product diffusion limits, and verification"};
  app.require_subcommand(1);
  Flags f;
  struct Spec {
    const char* name;
    const char* help;
    int (*fn)(const Flags&, std::ostream&);
  };
  const std::vector<Spec> specs = {
      {"validate", "check model assumptions (and geometry identities with --geometry); JSON", cmd_validate},
      {"walk", "final positions X_n of independent walks; CSV replica,x1..xd", cmd_walk},
      {"marginal", "scaled marginals X_n/sqrt(n); CSV, optional --report", cmd_marginal},
      {"diffusion", "direct Euler solution of dX = sigma_sy(X^) dW at --horizon; CSV", cmd_diffusion},
      {"stationary", "samples of the stationary angular law; CSV, optional --density and --report", cmd_stationary},
      {"exit-law", "exit-time Laplace transform: closed form, or Monte Carlo with --walk; CSV", cmd_exit_law},
      {"excursion", "marked Pitman-Yor excursions; long CSV record,t,x1..xd", cmd_excursion},
      {"nonuniq", "a solution X and its rotation PX driven by the same noise; CSV", cmd_nonuniq},
      {"report", "aggregate JSON reports; nonzero exit if any check failed", cmd_report},
  };
  std::map<CLI::App*, int (*)(const Flags&, std::ostream&)> handlers;
  for (const auto& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    handlers[sub] = spec.fn;
    auto add = [&](const std::string& name, auto& target, const std::string& help) {
      f.opts[name].push_back(sub->add_option(name, target, help));
    };
    if (std::string(spec.name) == "report") {
      sub->add_option("inputs", f.inputs, "JSON report files")->required();
      add("--out", f.out, "output path (default: stdout)");
      continue;
    }
    add("--config", f.config, "experiment config file");
    add("--seed", f.seed, "64-bit seed");
    add("--out", f.out, "output path (default: stdout)");
    add("--report", f.report, "JSON report path");
    add("--replicas", f.replicas, "number of replicas / samples");
    add("--n", f.n, "walk length or record count");
    add("--dt", f.dt, "time step");
    add("--horizon", f.horizon, "time horizon");
    add("--threads", f.threads, "worker threads (default: SPINWALK_THREADS or hardware)");
    add("--model", f.family, "isotropic | rotation2d | rotation4d");
    add("--d", f.d, "dimension");
    add("--b", f.b, "rotation2d parameter b");
    add("--a", f.a,
        std::string(spec.name) == "exit-law" ? "exit radius a" : "rotation4d parameter a, or a2,a3,a4");
    add("--U", f.U, "radial eigenvalue U");
    add("--delta", f.delta, "Bessel dimension");
    add("--lambda", f.lambda, "comma-separated Laplace arguments");
    add("--min-lifetime", f.min_lifetime, "excursion lifetime lower bound");
    add("--max-lo", f.max_lo, "excursion maximum lower bound");
    add("--max-hi", f.max_hi, "excursion maximum upper bound");
    add("--burn-in", f.burn_in, "stationary burn-in time");
    add("--thin", f.thin, "stationary thinning time");
    add("--chains", f.chains, "independent stationary chains");
    add("--p", f.p, "rotation unit vector, comma-separated");
    add("--density", f.density, "circle density CSV (stationary, d = 2)");
    sub->add_flag("--walk", f.walk, "exit-law: Monte Carlo from the walk");
    sub->add_flag("--geometry", f.geometry, "validate: include the geometry identity suite");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  for (auto& [sub, fn] : handlers) {
    if (!sub->parsed()) continue;
    f.a_is_level = sub->get_name() == "exit-law";
    try {
      return fn(f, out);
    } catch (const std::exception& e) {
      err << "spinwalk " << sub->get_name() << ": error: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}

}  // namespace spinwalk::cli
