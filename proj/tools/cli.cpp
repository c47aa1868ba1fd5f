#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "merged/analytic.hpp"
#include "merged/fpe.hpp"
#include "merged/numerics.hpp"
#include "merged/params.hpp"
#include "merged/rng.hpp"
#include "merged/sde.hpp"
#include "merged/stats.hpp"
#include "merged/verify.hpp"
#include "merged/walk.hpp"

namespace merged::cli {

namespace {

using json = nlohmann::json;

struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string key_of(const std::string& flag) {
  std::string key = flag.substr(flag.find_first_not_of('-'));
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigFailure(key + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigFailure(key + ": empty list");
  return out;
}

// One subcommand plus a record of how to echo each of its options into the
// resolved config.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description)
      : app_(app.add_subcommand(name, description)) {
    app_->add_option("--config", config_path_, "JSON file of snake_case option values");
  }

  template <class T>
  CLI::Option* option(const std::string& flag, T& var, const std::string& description,
                      bool echo = true) {
    auto* opt = app_->add_option(flag, var, description)->capture_default_str();
    if (echo) echo_.emplace_back(key_of(flag), [&var] { return json(var); });
    return opt;
  }

  // Comma-separated numbers, echoed as a JSON array.
  CLI::Option* list(const std::string& flag, std::string& var, const std::string& description) {
    auto* opt = app_->add_option(flag, var, description)->capture_default_str();
    const std::string key = key_of(flag);
    echo_.emplace_back(key, [&var, key] { return json(parse_list(var, key)); });
    return opt;
  }

  CLI::Option* flag(const std::string& flag, bool& var, const std::string& description) {
    auto* opt = app_->add_flag(flag, var, description);
    echo_.emplace_back(key_of(flag), [&var] { return json(var); });
    return opt;
  }

  json resolved() const {
    json out = json::object();
    for (const auto& [key, value] : echo_) out[key] = value();
    return out;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::vector<std::pair<std::string, std::function<json()>>> echo_;
};

// ---------------------------------------------------------------------------
// Options shared by several subcommands.

struct ProcessOptions {
  double v_d = 1.0;
  double sigma = 1.0;
  bool physical = false;
  double q = 1.0, E = 1.0, mu_q = 1.0, kbt = 0.5;
  CLI::Option* v_d_opt = nullptr;
  CLI::Option* sigma_opt = nullptr;

  void add_to(Command& cmd) {
    v_d_opt = cmd.option("--v-d", v_d, "drift speed");
    sigma_opt = cmd.option("--sigma", sigma, "noise amplitude");
    cmd.flag("--physical", physical, "derive v_d and sigma from --q --E --mu-q --kbt");
    cmd.option("--q", q, "charge (with --physical)");
    cmd.option("--E", E, "field magnitude (with --physical)");
    cmd.option("--mu-q", mu_q, "electrical mobility (with --physical)");
    cmd.option("--kbt", kbt, "thermal energy (with --physical)");
  }

  ProcessParams resolve() const {
    if (physical) {
      if (v_d_opt->count() > 0 || sigma_opt->count() > 0) {
        throw ConfigFailure("physical: --physical cannot be combined with --v-d or --sigma");
      }
      try {
        return params_from_physical({q, E, mu_q, kbt});
      } catch (const std::domain_error& e) {
        throw ConfigFailure(e.what());
      }
    }
    try {
      return ProcessParams(v_d, sigma);
    } catch (const std::domain_error& e) {
      throw ConfigFailure(e.what());
    }
  }
};

struct Output {
  std::string prefix;
  std::uint64_t seed;
  json config;

  std::string header() const {
    return "# merged " MERGED_VERSION " " + json{{"config", config}, {"seed", seed}}.dump() + "\n";
  }

  json meta() const {
    return json{{"tool", "merged"}, {"version", MERGED_VERSION}, {"seed", seed},
                {"config", config}};
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open '" + path + "' for writing");
  f << content;
  f.close();
  if (!f) throw IoFailure("failed writing '" + path + "'");
}

json params_json(const ProcessParams& p) {
  return json{{"v_d", p.v_d()}, {"sigma", p.sigma()}, {"kappa", p.kappa()}};
}

json estimate_json(const stats::Estimate& e, double exact) {
  return json{{"value", e.value}, {"se", e.se}, {"exact", exact}};
}

void require_positive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigFailure(key + ": must be > 0");
}

sde::Scheme scheme_of(const std::string& generator) {
  return generator == "heun" ? sde::Scheme::Heun : sde::Scheme::EulerMaruyama;
}

Provenance provenance_of(const std::string& generator) {
  if (generator == "em") return Provenance::EulerMaruyama;
  if (generator == "heun") return Provenance::Heun;
  if (generator == "walk") return Provenance::Walk;
  return Provenance::Exact;
}

// ---------------------------------------------------------------------------

struct SampleCommand {
  ProcessOptions proc;
  double x0 = 0.0, t = 1.0, dt = 1e-3, dx = 0.05;
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string generator = "exact";
  std::string out = "sample";

  void add_to(Command& cmd) {
    proc.add_to(cmd);
    cmd.option("--x0", x0, "start position");
    cmd.option("--t", t, "sampling time");
    cmd.option("--n", n, "number of samples")->check(CLI::PositiveNumber);
    cmd.option("--generator", generator, "exact | em | heun | walk")
        ->check(CLI::IsMember({"exact", "em", "heun", "walk"}));
    cmd.option("--dt", dt, "integrator step (em, heun)");
    cmd.option("--dx", dx, "lattice spacing (walk)");
    cmd.option("--seed", seed, "master seed");
    cmd.option("--threads", threads, "worker threads (0 = all cores)", false);
    cmd.option("--out", out, "output prefix (writes PREFIX.csv and PREFIX.json)");
  }

  int run(const json& config, std::ostream& log) const {
    const ProcessParams p = proc.resolve();
    require_positive(t, "t");
    std::vector<double> xs;
    if (generator == "exact") {
      xs = analytic::exact_terminal_ensemble(x0, t, p, n, seed, threads);
    } else if (generator == "walk") {
      require_positive(dx, "dx");
      const auto wp = walk::walk_params_for(p, dx);
      const auto offsets =
          walk::walk_terminal_ensemble(x0, sde::steps_in(t, wp.dt), wp, n, seed, threads);
      xs.reserve(n);
      for (auto k : offsets) xs.push_back(x0 + static_cast<double>(k) * dx);
    } else {
      require_positive(dt, "dt");
      const sde::IntegratorConfig cfg{scheme_of(generator), dt, sde::steps_in(t, dt)};
      xs = sde::terminal_ensemble(x0, sde::BoundedDrift::tanh(p), cfg, p, n, seed, threads);
    }

    Output o{out, seed, config};
    o.config["derived"] = params_json(p);
    std::string csv = o.header() + "x\n";
    for (double x : xs) csv += num(x) + "\n";

    json doc = o.meta();
    doc["provenance"] = std::string(to_string(provenance_of(generator)));
    doc["n_samples"] = xs.size();
    if (xs.size() >= 100) {
      const auto s = stats::summarize(xs, p, t, x0);
      doc["summary"] = {
          {"t", t},
          {"x0", x0},
          {"mean", estimate_json(s.mean, analytic::mean_exact(x0, t, p))},
          {"variance", estimate_json(s.variance, analytic::variance_exact(x0, t, p))},
          {"martingale", estimate_json(s.martingale, std::tanh(p.kappa() * x0))}};
    } else {
      doc["summary"] = nullptr;
    }
    write_file(out + ".csv", csv);
    write_file(out + ".json", doc.dump(2) + "\n");
    log << "wrote " << out << ".csv (" << xs.size() << " samples) and " << out << ".json\n";
    return Ok;
  }
};

struct PathsCommand {
  ProcessOptions proc;
  double x0 = 0.0, t = 1.0, dt = 0.01, dx = 0.05;
  std::size_t n = 10;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string generator = "exact";
  std::string out = "paths";

  void add_to(Command& cmd) {
    proc.add_to(cmd);
    cmd.option("--x0", x0, "start position");
    cmd.option("--t", t, "horizon");
    cmd.option("--n", n, "number of trajectories")->check(CLI::PositiveNumber);
    cmd.option("--generator", generator, "exact | em | heun | walk")
        ->check(CLI::IsMember({"exact", "em", "heun", "walk"}));
    cmd.option("--dt", dt, "time step (exact grid, em, heun)");
    cmd.option("--dx", dx, "lattice spacing (walk)");
    cmd.option("--seed", seed, "master seed");
    cmd.option("--threads", threads, "worker threads (0 = all cores)", false);
    cmd.option("--out", out, "output prefix");
  }

  int run(const json& config, std::ostream& log) const {
    const ProcessParams p = proc.resolve();
    require_positive(t, "t");
    std::vector<std::optional<Path>> paths(n);
    if (generator == "walk") {
      require_positive(dx, "dx");
      const auto wp = walk::walk_params_for(p, dx);
      const std::size_t steps = sde::steps_in(t, wp.dt);
      parallel_for(n, threads, [&](std::size_t i) {
        RngStream rng = substream(seed, i);
        paths[i] = walk::walk_path(x0, steps, wp, rng);
      });
    } else {
      require_positive(dt, "dt");
      const std::size_t steps = sde::steps_in(t, dt);
      const auto grid = uniform_grid(dt, steps);
      const sde::IntegratorConfig cfg{scheme_of(generator), dt, steps};
      const auto drift = sde::BoundedDrift::tanh(p);
      parallel_for(n, threads, [&](std::size_t i) {
        RngStream rng = substream(seed, i);
        paths[i] = generator == "exact" ? analytic::exact_path_sample(x0, grid, p, rng)
                                        : sde::integrate(x0, drift, cfg, p, rng);
      });
    }

    Output o{out, seed, config};
    o.config["derived"] = params_json(p);
    std::string csv = o.header() + "trajectory_id,t,x,provenance\n";
    const std::string prov(to_string(provenance_of(generator)));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& path = *paths[i];
      for (std::size_t k = 0; k < path.size(); ++k) {
        csv += std::to_string(i) + "," + num(path.times()[k]) + "," + num(path.positions()[k]) +
               "," + prov + "\n";
      }
    }
    json doc = o.meta();
    doc["provenance"] = prov;
    doc["n_paths"] = n;
    doc["n_times"] = paths.front()->size();
    write_file(out + ".csv", csv);
    write_file(out + ".json", doc.dump(2) + "\n");
    log << "wrote " << out << ".csv (" << n << " trajectories) and " << out << ".json\n";
    return Ok;
  }
};

struct WalkCommand {
  double xi = 0.0, dx = 1.0, dt = 1.0, x0 = 0.0;
  std::size_t steps = 10;
  std::size_t n = 10000;
  bool exact = false;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string out = "walk";

  void add_to(Command& cmd) {
    cmd.option("--xi", xi, "bias parameter");
    cmd.option("--dx", dx, "lattice spacing");
    cmd.option("--dt", dt, "time step");
    cmd.option("--x0", x0, "start site");
    cmd.option("--steps", steps, "number of steps");
    cmd.flag("--exact", exact, "closed-form distribution instead of Monte Carlo");
    cmd.option("--n", n, "number of walks (Monte Carlo)")->check(CLI::PositiveNumber);
    cmd.option("--seed", seed, "master seed");
    cmd.option("--threads", threads, "worker threads (0 = all cores)", false);
    cmd.option("--out", out, "output prefix");
  }

  int run(const json& config, std::ostream& log) const {
    const walk::WalkParams wp{dx, dt, xi};
    try {
      wp.validate();
    } catch (const std::domain_error& e) {
      throw ConfigFailure(e.what());
    }
    const auto law = walk::exact_walk_distribution(x0, steps, wp);
    std::vector<double> prob(law.probabilities().begin(), law.probabilities().end());
    json doc;
    Output o{out, seed, config};
    const ProcessParams image = walk::continuum_params(wp);
    o.config["derived"] = params_json(image);
    doc = o.meta();
    doc["total_probability"] = law.total();
    doc["support_points"] = law.size();
    doc["loop_product"] = 1.0 / (4.0 * std::cosh(xi) * std::cosh(xi));
    doc["method"] = exact ? "exact" : "monte_carlo";
    if (!exact) {
      const auto offsets = walk::walk_terminal_ensemble(x0, steps, wp, n, seed, threads);
      std::fill(prob.begin(), prob.end(), 0.0);
      for (auto k : offsets) {
        prob[static_cast<std::size_t>((k + static_cast<std::int64_t>(steps)) / 2)] += 1.0;
      }
      double tv = 0.0;
      for (std::size_t i = 0; i < prob.size(); ++i) {
        prob[i] /= static_cast<double>(n);
        tv += std::abs(prob[i] - law.probability(i));
      }
      doc["n_walks"] = n;
      doc["total_variation_to_exact"] = 0.5 * tv;
    }
    std::string csv = o.header() + "x,prob\n";
    for (std::size_t i = 0; i < prob.size(); ++i) {
      csv += num(law.position(i)) + "," + num(prob[i]) + "\n";
    }
    write_file(out + ".csv", csv);
    write_file(out + ".json", doc.dump(2) + "\n");
    log << "wrote " << out << ".csv (" << prob.size() << " sites) and " << out << ".json\n";
    return Ok;
  }
};

struct FpeCommand {
  ProcessOptions proc;
  double x0 = 0.0, t = 1.0, dx = 0.01, dt = 1e-4;
  std::size_t snapshots = 1;
  std::string out = "fpe";

  void add_to(Command& cmd) {
    proc.add_to(cmd);
    cmd.option("--x0", x0, "start position");
    cmd.option("--t", t, "horizon");
    cmd.option("--dx", dx, "cell width");
    cmd.option("--dt", dt, "time step");
    cmd.option("--snapshots", snapshots, "equally spaced output times after t = 0")
        ->check(CLI::PositiveNumber);
    cmd.option("--out", out, "output prefix");
  }

  int run(const json& config, std::ostream& log) const {
    const ProcessParams p = proc.resolve();
    require_positive(t, "t");
    require_positive(dx, "dx");
    require_positive(dt, "dt");
    const auto grid = fpe::padded_grid(x0, p, t, dx, dt);
    const auto sol = fpe::solve_fpe(x0, p, grid, {analytic::DriftFamily(), snapshots});

    Output o{out, 0, config};
    o.config["derived"] = params_json(p);
    std::string csv = o.header() + "t,x,p\n";
    for (const auto& s : sol.snapshots) {
      for (std::size_t i = 0; i < grid.n_cells; ++i) {
        csv += num(s.time) + "," + num(grid.center(i)) + "," + num(s.density[i]) + "\n";
      }
    }
    double min_density = 0.0;
    for (const auto& s : sol.snapshots) min_density = std::min(min_density, s.min_density);
    json doc = o.meta();
    doc["grid"] = {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n_cells", grid.n_cells},
                   {"h", grid.h()},       {"dt", grid.dt_pde},   {"t_final", grid.t_final}};
    doc["initial_sd"] = sol.initial_sd;
    doc["mass_history"] = sol.mass_history();
    doc["max_mass_error"] = sol.max_mass_error;
    doc["min_density"] = min_density;
    doc["l1_gap_to_exact"] = fpe::l1_gap(sol, sol.final(), x0, p);
    doc["warnings"] = sol.warnings;
    write_file(out + ".csv", csv);
    write_file(out + ".json", doc.dump(2) + "\n");
    log << "wrote " << out << ".csv (" << sol.snapshots.size() << " snapshots x " << grid.n_cells
        << " cells) and " << out << ".json\n";
    for (const auto& w : sol.warnings) log << "warning: " << w << "\n";
    return Ok;
  }
};

struct MsdCommand {
  ProcessOptions proc;
  std::string t_grid = "0.5,1,2";
  std::string x0_grid = "0,1,3";
  double tau = 1.0, dt = 1e-3;
  std::size_t n = 10000;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string generator = "exact";
  std::string out = "msd";

  void add_to(Command& cmd) {
    proc.add_to(cmd);
    cmd.list("--t-grid", t_grid, "comma-separated start times t");
    cmd.list("--x0-grid", x0_grid, "comma-separated start positions");
    cmd.option("--tau", tau, "lag");
    cmd.option("--n", n, "paths per grid cell")->check(CLI::Range(std::size_t{100}, SIZE_MAX));
    cmd.option("--generator", generator, "exact | em | heun")
        ->check(CLI::IsMember({"exact", "em", "heun"}));
    cmd.option("--dt", dt, "integrator step (em, heun)");
    cmd.option("--seed", seed, "master seed");
    cmd.option("--threads", threads, "worker threads (0 = all cores)", false);
    cmd.option("--out", out, "output prefix");
  }

  int run(const json& config, std::ostream& log) const {
    const ProcessParams p = proc.resolve();
    const auto ts = parse_list(t_grid, "t_grid");
    const auto x0s = parse_list(x0_grid, "x0_grid");
    if (!(tau >= 0.0)) throw ConfigFailure("tau: must be >= 0");
    for (double t : ts) {
      if (!(t > 0.0)) throw ConfigFailure("t_grid: times must be > 0");
    }
    const double exact = analytic::msd_exact(tau, p);

    Output o{out, seed, config};
    o.config["derived"] = params_json(p);
    std::string csv = o.header() + "t,x0,tau,msd,se\n";
    std::vector<stats::Estimate> estimates;
    json rows = json::array();
    double max_z = 0.0;
    std::uint64_t cell = 0;
    for (double t : ts) {
      for (double x0 : x0s) {
        std::vector<double> a(n), b(n);
        const std::uint64_t cell_seed = derive_seed(seed, cell++);
        if (generator == "exact") {
          parallel_for(n, threads, [&](std::size_t i) {
            RngStream rng = substream(cell_seed, i);
            a[i] = analytic::exact_transition_sample(x0, t, p, rng);
            b[i] = tau > 0.0 ? analytic::exact_transition_sample(a[i], tau, p, rng) : a[i];
          });
        } else {
          require_positive(dt, "dt");
          const std::size_t i_t = sde::steps_in(t, dt);
          const sde::IntegratorConfig cfg{scheme_of(generator), dt, sde::steps_in(t + tau, dt)};
          const auto drift = sde::BoundedDrift::tanh(p);
          parallel_for(n, threads, [&](std::size_t i) {
            RngStream rng = substream(cell_seed, i);
            const Path path = sde::integrate(x0, drift, cfg, p, rng);
            a[i] = path.positions()[i_t];
            b[i] = path.positions().back();
          });
        }
        const auto e = stats::msd_from_pairs(a, b);
        estimates.push_back(e);
        if (e.se > 0.0) max_z = std::max(max_z, std::abs(e.value - exact) / e.se);
        csv += num(t) + "," + num(x0) + "," + num(tau) + "," + num(e.value) + "," + num(e.se) +
               "\n";
      }
    }
    json doc = o.meta();
    doc["msd_exact"] = exact;
    doc["cells"] = estimates.size();
    doc["max_z_to_exact"] = max_z;
    if (estimates.size() >= 2 && tau > 0.0) {
      const auto chi = stats::chi_square_compatibility(estimates);
      doc["flatness"] = {{"weighted_mean", chi.weighted_mean},
                         {"chi_square", chi.statistic},
                         {"dof", chi.dof},
                         {"p_value", chi.p_value},
                         {"compatible_at_0.01", chi.p_value >= 0.01}};
    } else {
      doc["flatness"] = nullptr;
    }
    write_file(out + ".csv", csv);
    write_file(out + ".json", doc.dump(2) + "\n");
    log << "wrote " << out << ".csv (" << estimates.size() << " rows) and " << out << ".json\n";
    return Ok;
  }
};

struct VerifyCommand {
  std::string only;
  double scale = 1.0;
  bool flip = false;
  std::uint64_t seed = verify::VerifyOptions{}.seed;
  unsigned threads = 0;
  std::string out = "verify";

  void add_to(Command& cmd) {
    cmd.option("--only", only,
               "comma-separated groups (analytic, sampler, ck, msd, sde, walk, fpe, control) or "
               "criterion numbers");
    cmd.option("--scale", scale, "multiplier on Monte Carlo sizes")->check(CLI::PositiveNumber);
    cmd.flag("--debug-flip-drift", flip, "sample the mean-reverting drift instead (must fail)");
    cmd.option("--seed", seed, "master seed");
    cmd.option("--threads", threads, "worker threads (0 = all cores)", false);
    cmd.option("--out", out, "output prefix (writes PREFIX.json)");
  }

  int run(const json& config, std::ostream& log) const {
    verify::VerifyOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    opt.scale = scale;
    opt.flip_drift_sign = flip;
    if (!only.empty()) {
      std::stringstream ss(only);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) opt.only.insert(item);
      }
    }
    try {
      verify::validate_selection(opt.only);
    } catch (const std::domain_error& e) {
      throw ConfigFailure(std::string("only: ") + e.what());
    }
    // Fail early on an unwritable report path, before the long run.
    write_file(out + ".json", "");

    Output o{out, seed, config};
    json doc = o.meta();
    json criteria = json::array();
    bool all = true;
    for (const auto& r : verify::run_all(opt)) {
      json checks = json::array();
      for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"comparison", std::string(verify::to_string(c.comparison))},
                          {"passed", c.passed},
                          {"detail", c.detail}});
      }
      criteria.push_back({{"id", r.id},
                          {"title", r.title},
                          {"group", r.group},
                          {"passed", r.passed()},
                          {"checks", checks}});
      all = all && r.passed();
      log << (r.passed() ? "PASS" : "FAIL") << "  " << r.id << "  " << r.title << "\n";
      for (const auto& c : r.checks) {
        if (!c.passed) {
          log << "      " << c.name << " = " << c.value << " (" << verify::to_string(c.comparison)
              << " " << c.threshold << ") " << c.detail << "\n";
        }
      }
    }
    doc["criteria"] = criteria;
    doc["passed"] = all;
    write_file(out + ".json", doc.dump(2) + "\n");
    log << "wrote " << out << ".json\n";
    return all ? Ok : VerificationFailed;
  }
};

// Turns {"v_d": 1, "t_grid": [0.5, 1]} into ["--v-d", "1", "--t-grid", "0.5,1"].
std::vector<std::string> config_tokens(const json& cfg, const CLI::App& sub) {
  if (!cfg.is_object()) throw ConfigFailure("config: top level must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (key == "config" || sub.get_option_no_throw(flag) == nullptr) {
      throw ConfigFailure(key + ": not an option of '" + sub.get_name() + "'");
    }
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return v.dump();
      if (v.is_number()) return num(v.get<double>());
      throw ConfigFailure(key + ": unsupported value " + v.dump());
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar(v);
      tokens.push_back(flag);
      tokens.push_back(joined);
    } else {
      tokens.push_back(flag);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification toolkit for dX = v_d tanh(kappa X) dt + sigma dW",
               "merged"};
  app.set_version_flag("--version", MERGED_VERSION);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  SampleCommand sample;
  PathsCommand paths;
  WalkCommand walk_cmd;
  FpeCommand fpe_cmd;
  MsdCommand msd;
  VerifyCommand verify_cmd;

  std::map<std::string, std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& desc) -> Command& {
    return *commands.emplace(name, std::make_unique<Command>(app, name, desc)).first->second;
  };
  sample.add_to(make("sample", "draw terminal samples; CSV x plus JSON summary"));
  paths.add_to(make("paths", "draw trajectories; CSV trajectory_id,t,x,provenance"));
  walk_cmd.add_to(make("walk", "random-walk distribution after a number of steps"));
  fpe_cmd.add_to(make("fpe", "Crank-Nicolson Fokker-Planck solve"));
  msd.add_to(make("msd", "MSD table over a (t, x0) grid with flatness test"));
  verify_cmd.add_to(make("verify", "run the verification suite"));

  try {
    // Config values go right after the subcommand name so that explicit
    // flags, parsed later, take precedence.
    std::vector<std::string> args;
    std::optional<std::string> config_path;
    for (std::size_t i = 0; i < raw_args.size(); ++i) {
      const auto& a = raw_args[i];
      if (a == "--config") {
        if (i + 1 >= raw_args.size()) throw ConfigFailure("config: missing file name");
        config_path = raw_args[++i];
      } else if (a.rfind("--config=", 0) == 0) {
        config_path = a.substr(9);
      } else {
        args.push_back(a);
      }
    }
    if (config_path) {
      auto pos = std::find_if(args.begin(), args.end(),
                              [&](const std::string& a) { return commands.count(a) > 0; });
      if (pos == args.end()) throw ConfigFailure("config: needs a subcommand");
      std::ifstream f(*config_path);
      if (!f) throw IoFailure("cannot read config file '" + *config_path + "'");
      json cfg;
      try {
        cfg = json::parse(f);
      } catch (const json::parse_error& e) {
        throw ConfigFailure("config: " + std::string(e.what()));
      }
      const auto tokens = config_tokens(cfg, *commands.at(*pos)->app());
      args.insert(pos + 1, tokens.begin(), tokens.end());
    }
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? Ok : ConfigError;
    }

    for (auto& [name, cmd] : commands) {
      if (!cmd->app()->parsed()) continue;
      const json config = cmd->resolved();
      if (name == "sample") return sample.run(config, out);
      if (name == "paths") return paths.run(config, out);
      if (name == "walk") return walk_cmd.run(config, out);
      if (name == "fpe") return fpe_cmd.run(config, out);
      if (name == "msd") return msd.run(config, out);
      if (name == "verify") return verify_cmd.run(config, out);
    }
    return ConfigError;
  } catch (const ConfigFailure& e) {
    err << "config error: " << e.what() << "\n";
    return ConfigError;
  } catch (const IoFailure& e) {
    err << "I/O error: " << e.what() << "\n";
    return IoError;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << "\n";
    return ConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return ConfigError;
  }
}

}  // namespace merged::cli
