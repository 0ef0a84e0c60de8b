#include "dgame/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "dgame/bounds.hpp"
#include "dgame/csv.hpp"
#include "dgame/errors.hpp"
#include "dgame/extremal_shift.hpp"
#include "dgame/hjb_solver.hpp"
#include "dgame/rng.hpp"
#include "dgame/viscosity.hpp"

namespace dgame {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string command;
  std::string game;
  std::vector<double> h;
  std::vector<double> sigma;
  std::string dt_policy = "auto";
  double partition_diam = 0.01;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 0;
  std::vector<std::string> x0;
  double pad = 0.5;
  double t0 = 0.0;
  double dx = 0.01;
  std::string kind = "both";
  std::vector<std::string> adversaries;
  std::string boundary = "freeze";
  std::string scheme = "euler";
  std::string reference;
};

struct Context {
  RunConfig cfg;
  GameSpec spec;
  std::vector<State> x0;
  std::vector<std::string> metadata;
  std::uint64_t hash = 0;
};

double parse_number(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v))
    throw ConfigError(std::string(what) + ": '" + s + "' is not a number");
  return v;
}

GameSpec load_game(const std::string& arg) {
  if (arg.empty()) throw ConfigError("--game is required (PATH or catalog:NAME)");
  try {
    if (arg.starts_with("catalog:")) return catalog_game(arg.substr(8));
    return load_game_file(arg);
  } catch (const InvalidSpecError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<State> parse_x0(const std::vector<std::string>& tokens, std::size_t dim) {
  std::vector<State> pts;
  if (tokens.empty()) {
    if (dim == 1) return {{0.0}, {0.5}, {-0.5}, {1.0}, {-1.0}};
    return {State(dim, 0.0)};
  }
  for (const auto& tok : tokens) {
    State p;
    std::stringstream ss(tok);
    std::string part;
    while (std::getline(ss, part, ',')) p.push_back(parse_number(part, "--x0"));
    if (p.size() != dim)
      throw ConfigError("--x0 '" + tok + "' needs " + std::to_string(dim) + " coordinates");
    pts.push_back(std::move(p));
  }
  return pts;
}

StateBox hull(const std::vector<State>& pts) {
  StateBox b{pts.front(), pts.front()};
  for (const auto& p : pts)
    for (std::size_t a = 0; a < p.size(); ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      b.hi[a] = std::max(b.hi[a], p[a]);
    }
  return b;
}

void check_config(const RunConfig& c, const GameSpec& spec) {
  for (double h : c.h)
    if (!(h > 0.0 && h < 1.0)) throw ConfigError("--h values must lie in (0, 1)");
  for (double s : c.sigma)
    if (!(s >= 0.0)) throw ConfigError("--sigma values must be nonnegative");
  if (c.replicas < 1) throw ConfigError("--replicas must be at least 1");
  if (!(c.partition_diam > 0.0)) throw ConfigError("--partition-diam must be positive");
  if (!(c.pad >= 0.0)) throw ConfigError("--pad must be nonnegative");
  if (!(c.dx > 0.0)) throw ConfigError("--dx must be positive");
  if (!(c.t0 >= 0.0 && c.t0 < spec.horizon)) throw ConfigError("--t0 must lie in [0, T)");
  if (c.dt_policy != "auto" && !(parse_number(c.dt_policy, "--dt-policy") > 0.0))
    throw ConfigError("--dt-policy must be auto or a positive number");
}

std::string hash_input(const RunConfig& c, const GameSpec& spec) {
  nlohmann::json j;
  j["command"] = c.command;
  j["game"] = spec.source.is_null() ? nlohmann::json(c.game) : spec.source;
  j["h"] = c.h;
  j["sigma"] = c.sigma;
  j["dt_policy"] = c.dt_policy;
  j["partition_diam"] = c.partition_diam;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["x0"] = c.x0;
  j["pad"] = c.pad;
  j["t0"] = c.t0;
  j["dx"] = c.dx;
  j["kind"] = c.kind;
  j["adversaries"] = c.adversaries;
  j["boundary"] = c.boundary;
  j["scheme"] = c.scheme;
  j["reference"] = c.reference;
  return j.dump();
}

Context make_context(const RunConfig& cfg) {
  Context ctx;
  ctx.cfg = cfg;
  ctx.spec = load_game(cfg.game);
  check_config(cfg, ctx.spec);
  ctx.x0 = parse_x0(cfg.x0, ctx.spec.dim);
  ctx.hash = fnv1a64(hash_input(cfg, ctx.spec));
  ctx.metadata = {"config_hash=" + hex64(ctx.hash) + " seed=" + std::to_string(cfg.seed),
                  "command=" + cfg.command + " game=" + ctx.spec.name};
  fs::create_directories(cfg.out);
  return ctx;
}

std::string out_path(const Context& ctx, const std::string& name) {
  return (fs::path(ctx.cfg.out) / name).string();
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  if (c.boundary == "freeze")
    o.boundary = BoundaryPolicy::freeze;
  else if (c.boundary == "strict")
    o.boundary = BoundaryPolicy::strict;
  else
    throw ConfigError("--boundary must be freeze or strict");
  if (c.scheme == "euler")
    o.scheme = TimeScheme::euler;
  else if (c.scheme == "rk4")
    o.scheme = TimeScheme::rk4;
  else
    throw ConfigError("--scheme must be euler or rk4");
  return o;
}

std::vector<ValueKind> kinds(const RunConfig& c) {
  if (c.kind == "upper") return {ValueKind::upper};
  if (c.kind == "lower") return {ValueKind::lower};
  if (c.kind == "both") return {ValueKind::upper, ValueKind::lower};
  throw ConfigError("--kind must be upper, lower or both");
}

double lattice_dt(const Context& ctx, double h) {
  if (ctx.cfg.dt_policy != "auto") return parse_number(ctx.cfg.dt_policy, "--dt-policy");
  return std::min(stability_ceiling(ctx.spec, h), ctx.spec.horizon - ctx.cfg.t0);
}

double viscous_dt(const Context& ctx) {
  if (ctx.cfg.dt_policy != "auto") return parse_number(ctx.cfg.dt_policy, "--dt-policy");
  return 0.0;
}

SolveResult solve_eta(const Context& ctx, double h, ValueKind kind, bool keep_all) {
  const auto domain =
      truncate_domain(ctx.spec, hull(ctx.x0), ctx.cfg.t0, h, ctx.cfg.pad);
  auto opts = solve_options(ctx.cfg);
  opts.keep_all_steps = keep_all;
  return solve_backward(ctx.spec, domain, lattice_dt(ctx, h), kind, {ctx.cfg.t0}, opts);
}

ViscousResult solve_psi(const Context& ctx, double sigma) {
  const double span = ctx.spec.horizon - ctx.cfg.t0;
  const double r = ctx.spec.drift_bound * span + ctx.cfg.pad + 4.0 * sigma * std::sqrt(span);
  StateBox box = hull(ctx.x0);
  for (auto& c : box.lo) c -= r;
  for (auto& c : box.hi) c += r;
  return solve_viscous(ctx.spec, sigma, box, ctx.cfg.dx, viscous_dt(ctx), {ctx.cfg.t0});
}

double eta_at(const ValueGrid& g, ConstVec x) {
  return g.at(nearest_lattice_point(x, g.domain.mesh()));
}

std::string label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void write_bounds_json(const Context& ctx, const std::vector<BoundsReport>& reports,
                       const nlohmann::json& diagnostics = nullptr) {
  nlohmann::json j;
  j["config_hash"] = hex64(ctx.hash);
  j["seed"] = ctx.cfg.seed;
  j["game"] = ctx.spec.name;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(to_json(r));
  if (!diagnostics.is_null()) j["diagnostics"] = diagnostics;
  std::ofstream f(out_path(ctx, "bounds.json"));
  if (!f) throw ConfigError("cannot write bounds.json in " + ctx.cfg.out);
  f << j.dump(2) << '\n';
}

int cmd_solve(const Context& ctx, std::ostream& out) {
  if (ctx.cfg.h.size() != 1) throw ConfigError("solve takes exactly one --h value");
  const double h = ctx.cfg.h.front();
  const double t0 = ctx.cfg.t0;
  for (ValueKind k : {ValueKind::upper, ValueKind::lower}) {
    const auto res = solve_eta(ctx, h, k, false);
    auto meta = ctx.metadata;
    meta.push_back(std::string("kind=") + to_string(k) + " h=" + format_double(h) +
                   " dt=" + format_double(res.dt));
    const std::string name = std::string("eta_") + to_string(k) + "_t0.csv";
    write_slice_csv(out_path(ctx, name), res.checkpoint(t0), meta);
    out << "wrote " << name << " (" << res.checkpoint(t0).values.size() << " points)\n";
  }
  for (double s : ctx.cfg.sigma) {
    const auto psi = solve_psi(ctx, s);
    const std::string name = "psi_sigma" + label(s) + "_t0.csv";
    write_viscous_csv(out_path(ctx, name), psi.checkpoint(t0), psi.dt, ctx.metadata);
    out << "wrote " << name << '\n';
  }
  const double s0 = ctx.cfg.sigma.empty() ? 0.0 : ctx.cfg.sigma.front();
  nlohmann::json diag;
  if (ctx.cfg.pad > 0.0) {
    const double infl = boundary_influence(ctx.spec, hull(ctx.x0), t0, h, ctx.cfg.pad,
                                           lattice_dt(ctx, h), ValueKind::upper,
                                           solve_options(ctx.cfg));
    diag["boundary_influence_upper"] = infl;
    out << "boundary influence (pad doubled): " << format_double(infl) << '\n';
  }
  write_bounds_json(ctx, {assemble(ctx.spec, h, s0, 1000, ctx.cfg.seed)}, diag);
  out << "wrote bounds.json\n";
  return kExitOk;
}

using Reference = std::function<double(ConstVec)>;

Reference load_reference(const Context& ctx) {
  if (ctx.spec.closed_form_value) {
    const double t0 = ctx.cfg.t0;
    return [f = ctx.spec.closed_form_value, t0](ConstVec x) { return f(t0, x); };
  }
  if (ctx.cfg.reference.empty())
    throw ConfigError("no reference value: game has no closed form and --reference is not set");
  std::ifstream in(ctx.cfg.reference);
  if (!in) throw ConfigError("cannot open reference file '" + ctx.cfg.reference + "'");
  const std::size_t d = ctx.spec.dim;
  std::vector<std::pair<State, double>> rows;
  std::string line;
  std::vector<int> xcol(d, -1);
  int vcol = -1;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!header) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k] == "value") vcol = static_cast<int>(k);
        for (std::size_t a = 0; a < d; ++a)
          if (cells[k] == "x_" + std::to_string(a + 1)) xcol[a] = static_cast<int>(k);
      }
      if (vcol < 0 || std::count(xcol.begin(), xcol.end(), -1) > 0)
        throw ConfigError("reference file needs columns x_1..x_d and value");
      header = true;
      continue;
    }
    State x(d);
    for (std::size_t a = 0; a < d; ++a) x[a] = parse_number(cells.at(xcol[a]), "reference");
    rows.emplace_back(std::move(x), parse_number(cells.at(vcol), "reference"));
  }
  return [rows = std::move(rows), path = ctx.cfg.reference](ConstVec x) {
    for (const auto& [p, v] : rows) {
      bool same = true;
      for (std::size_t a = 0; a < p.size(); ++a) same = same && std::abs(p[a] - x[a]) <= 1e-9;
      if (same) return v;
    }
    throw ConfigError("reference file '" + path + "' has no row for a requested x0");
  };
}

void write_converge_table(const Context& ctx, const std::string& name, const char* param,
                          const std::vector<std::vector<std::string>>& rows, std::ostream& out) {
  auto f = open_csv(out_path(ctx, name), ctx.metadata);
  const std::string head =
      std::string(param) + ",kind,error,paper_bound,bound_satisfied,empirical_order";
  f << head << '\n';
  out << head << '\n';
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t k = 0; k < r.size(); ++k) line += (k ? "," : "") + r[k];
    f << line << '\n';
    out << line << '\n';
  }
}

std::string order_cell(double e_prev, double e, double p_prev, double p) {
  if (!(e_prev > 0.0 && e > 0.0)) return "";
  return format_double(std::log(e_prev / e) / std::log(p_prev / p));
}

int cmd_converge(const Context& ctx, std::ostream& out) {
  if (ctx.cfg.h.empty() && ctx.cfg.sigma.empty())
    throw ConfigError("converge needs --h and/or --sigma lists");
  const auto ref = load_reference(ctx);
  const double t0 = ctx.cfg.t0;
  if (!ctx.cfg.h.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (ValueKind k : kinds(ctx.cfg)) {
      double prev_e = 0.0, prev_h = 0.0;
      for (std::size_t i = 0; i < ctx.cfg.h.size(); ++i) {
        const double h = ctx.cfg.h[i];
        const auto res = solve_eta(ctx, h, k, false);
        double err = 0.0;
        for (const auto& x : ctx.x0)
          err = std::max(err, std::abs(eta_at(res.checkpoint(t0), x) - ref(x)));
        const double bound = assemble(ctx.spec, h, 0.0, 1000, ctx.cfg.seed).bound_thm2;
        rows.push_back({format_double(h), to_string(k), format_double(err),
                        format_double(bound), err <= bound ? "true" : "false",
                        i == 0 ? "" : order_cell(prev_e, err, prev_h, h)});
        prev_e = err;
        prev_h = h;
      }
    }
    write_converge_table(ctx, "converge_h.csv", "h", rows, out);
  }
  if (!ctx.cfg.sigma.empty()) {
    std::vector<std::vector<std::string>> rows;
    const double h_for_bounds = ctx.cfg.h.empty() ? 0.5 : ctx.cfg.h.front();
    double prev_e = 0.0, prev_s = 0.0;
    for (std::size_t i = 0; i < ctx.cfg.sigma.size(); ++i) {
      const double s = ctx.cfg.sigma[i];
      const auto psi = solve_psi(ctx, s);
      double err = 0.0;
      for (const auto& x : ctx.x0)
        err = std::max(err, std::abs(viscous_value_at(psi.checkpoint(t0), x) - ref(x)));
      const double bound = assemble(ctx.spec, h_for_bounds, s, 1000, ctx.cfg.seed).bound_visc;
      rows.push_back({format_double(s), "viscous", format_double(err), format_double(bound),
                      err <= bound ? "true" : "false",
                      i == 0 ? "" : order_cell(prev_e, err, prev_s, s)});
      prev_e = err;
      prev_s = s;
    }
    write_converge_table(ctx, "converge_sigma.csv", "sigma", rows, out);
  }
  return kExitOk;
}

std::string file_safe(std::string s) {
  for (auto& c : s)
    if (c == ':' || c == '/') c = '-';
  return s;
}

int cmd_simulate(const Context& ctx, std::ostream& out) {
  if (ctx.cfg.h.size() != 1) throw ConfigError("simulate takes exactly one --h value");
  if (ctx.cfg.replicas < 2)
    throw ConfigError("simulate needs at least 2 replicas (standard error undefined)");
  const double h = ctx.cfg.h.front();
  const double t0 = ctx.cfg.t0;
  const auto eta = solve_eta(ctx, h, ValueKind::upper, true);
  const auto rep = assemble(ctx.spec, h, 0.0, 1000, ctx.cfg.seed);
  const auto partition = Partition::uniform(t0, ctx.spec.horizon, ctx.cfg.partition_diam);

  std::vector<std::unique_ptr<Adversary>> panel;
  if (ctx.cfg.adversaries.empty())
    panel = default_panel(ctx.spec, h);
  else
    for (const auto& name : ctx.cfg.adversaries) panel.push_back(make_adversary(name, ctx.spec, h));

  auto summary = open_csv(out_path(ctx, "summary.csv"), ctx.metadata);
  summary << "x0_index";
  for (std::size_t a = 0; a < ctx.spec.dim; ++a) summary << ",x0_" << a + 1;
  summary << ",adversary,n,mean,std_error,ci_low,ci_high,model_mean,eta,guarantee,threshold,"
             "verdict\n";
  bool all_pass = true;
  const bool many = ctx.x0.size() > 1;
  for (std::size_t j = 0; j < ctx.x0.size(); ++j) {
    const auto& x = ctx.x0[j];
    const double eta0 = eta_at(eta.checkpoint(t0), x);
    const std::uint64_t x_seed = derive_seed(ctx.cfg.seed, j);
    for (std::size_t k = 0; k < panel.size(); ++k) {
      const Adversary& adv = *panel[k];
      const std::uint64_t seed = derive_seed(x_seed, k);
      const auto res = run_extremal_panel(ctx.spec, partition, x, eta, adv, h,
                                          ctx.cfg.replicas, seed);
      const double threshold = eta0 + rep.guarantee_thm1 + 3.0 * res.outcome.std_error;
      const bool pass = res.outcome.mean <= threshold;
      all_pass = all_pass && pass;
      summary << j;
      for (double c : x) summary << ',' << format_double(c);
      summary << ',' << adv.name() << ',' << res.outcome.n << ',' << format_double(res.outcome.mean)
              << ',' << format_double(res.outcome.std_error) << ','
              << format_double(res.outcome.ci95.first) << ','
              << format_double(res.outcome.ci95.second) << ','
              << format_double(res.model_outcome.mean) << ',' << format_double(eta0) << ','
              << format_double(rep.guarantee_thm1) << ',' << format_double(threshold) << ','
              << (pass ? "pass" : "fail") << '\n';

      const std::string suffix =
          file_safe(adv.name()) + (many ? "_x" + std::to_string(j) : std::string()) + ".csv";
      auto meta = ctx.metadata;
      meta.push_back("adversary=" + adv.name() + " stream_seed=" + std::to_string(seed));
      write_replica_csv(out_path(ctx, "replicas_" + suffix), res, meta);
      const auto traj =
          run_extremal_shift(ctx.spec, partition, x, eta, adv, h, derive_seed(seed, 0));
      write_trajectory_csv(out_path(ctx, "trajectory_" + suffix), traj, meta);
      out << adv.name() << ": mean " << format_double(res.outcome.mean) << " +- "
          << format_double(res.outcome.std_error) << " vs threshold " << format_double(threshold)
          << (pass ? "  pass" : "  FAIL") << '\n';
    }
  }
  out << (all_pass ? "all verdicts pass\n" : "some verdicts fail\n");
  return kExitOk;
}

int cmd_bounds(const Context& ctx, std::ostream& out) {
  if (ctx.cfg.h.empty()) throw ConfigError("bounds needs --h");
  const std::vector<double> sigmas = ctx.cfg.sigma.empty() ? std::vector<double>{0.0}
                                                           : ctx.cfg.sigma;
  std::vector<BoundsReport> reports;
  for (double h : ctx.cfg.h)
    for (double s : sigmas) {
      reports.push_back(assemble(ctx.spec, h, s, 1000, ctx.cfg.seed));
      out << to_text(reports.back()) << '\n';
    }
  write_bounds_json(ctx, reports);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Lattice Markov-chain and vanishing-viscosity approximation of "
               "differential games", "dgame"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "TOML/INI file supplying any flag; flags override it");
  app.require_subcommand(1);
  app.add_option("--game", cfg.game, "Game definition: PATH or catalog:NAME");
  app.add_option("--h", cfg.h, "Lattice meshes, comma separated")->delimiter(',');
  app.add_option("--sigma", cfg.sigma, "Viscosities, comma separated")->delimiter(',');
  app.add_option("--dt-policy", cfg.dt_policy, "auto or a fixed step");
  app.add_option("--partition-diam", cfg.partition_diam, "Correction partition diameter");
  app.add_option("--replicas", cfg.replicas, "Monte-Carlo replicas per adversary");
  app.add_option("--seed", cfg.seed, "Top-level RNG seed");
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--threads", cfg.threads, "OpenMP threads (0 keeps the runtime default)");
  app.add_option("--x0", cfg.x0, "Initial states, coordinates comma separated");
  app.add_option("--pad", cfg.pad, "Extra margin of the truncated box");
  app.add_option("--t0", cfg.t0, "Initial time");
  app.add_option("--dx", cfg.dx, "Grid step of the viscous solver");
  app.add_option("--kind", cfg.kind, "upper, lower or both (converge)");
  app.add_option("--adversaries", cfg.adversaries,
                 "constant[:i], bang-bang, random, shift (simulate)");
  app.add_option("--boundary", cfg.boundary, "freeze or strict");
  app.add_option("--scheme", cfg.scheme, "euler or rk4");
  app.add_option("--reference", cfg.reference, "CSV with x_1..x_d,value at t0 (converge)");
  for (const char* name : {"solve", "converge", "simulate", "bounds"})
    app.add_subcommand(name)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (cfg.threads < 0) throw ConfigError("--threads must be nonnegative");
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    const Context ctx = make_context(cfg);
    if (cfg.command == "solve") return cmd_solve(ctx, out);
    if (cfg.command == "converge") return cmd_converge(ctx, out);
    if (cfg.command == "simulate") return cmd_simulate(ctx, out);
    return cmd_bounds(ctx, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace dgame
