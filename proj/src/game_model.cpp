#include "dgame/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dgame/errors.hpp"
#include "dgame/rng.hpp"

namespace dgame {

namespace {

std::string format_vec(ConstVec v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ')';
  return os.str();
}

double norm2(ConstVec v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

double dot(ConstVec a, ConstVec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

ControlGrid::ControlGrid(std::size_t dim, std::vector<double> flat)
    : dim_(dim), flat_(std::move(flat)) {
  if (dim_ == 0 || flat_.size() % dim_ != 0)
    throw InvalidSpecError("control grid: flat size is not a multiple of dim");
}

ControlGrid ControlGrid::scalar(std::vector<double> values) {
  return ControlGrid(1, std::move(values));
}

bool ControlGrid::covers(ConstVec c, double tol) const {
  if (c.size() != dim_ || empty()) return false;
  for (std::size_t j = 0; j < dim_; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < size(); ++k) {
      lo = std::min(lo, (*this)[k][j]);
      hi = std::max(hi, (*this)[k][j]);
    }
    if (c[j] < lo - tol || c[j] > hi + tol) return false;
  }
  return true;
}

void validate_structure(const GameSpec& spec) {
  if (spec.dim == 0) throw InvalidSpecError("game: dimension must be positive");
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon))
    throw InvalidSpecError("game: horizon T must be a positive finite number");
  if (spec.u_grid.empty()) throw InvalidSpecError("game: u_grid is empty");
  if (spec.v_grid.empty()) throw InvalidSpecError("game: v_grid is empty");
  if (!spec.drift) throw InvalidSpecError("game: drift is not set");
  if (!spec.payoff) throw InvalidSpecError("game: payoff is not set");
  if (spec.payoff_lipschitz < 0 || spec.drift_bound < 0 || spec.drift_lipschitz < 0)
    throw InvalidSpecError("game: constants R, M1, K1 must be nonnegative");
}

State eval_drift(const GameSpec& spec, double t, ConstVec x, ConstVec u,
                 ConstVec v) {
  if (x.size() != spec.dim)
    throw InvalidSpecError("eval_drift: state has wrong dimension");
  if (t < -1e-12 || t > spec.horizon + 1e-12)
    throw InvalidSpecError("eval_drift: t outside [0, T]");
  if (!spec.u_grid.covers(u))
    throw InvalidSpecError("eval_drift: u " + format_vec(u) + " outside U");
  if (!spec.v_grid.covers(v))
    throw InvalidSpecError("eval_drift: v " + format_vec(v) + " outside V");
  State out(spec.dim);
  spec.drift(t, x, u, v, out);
  for (double c : out) {
    if (!std::isfinite(c)) {
      std::ostringstream os;
      os << "eval_drift: non-finite drift at t=" << t << " x=" << format_vec(x)
         << " u=" << format_vec(u) << " v=" << format_vec(v);
      throw InvalidSpecError(os.str());
    }
  }
  return out;
}

double eval_payoff(const GameSpec& spec, ConstVec x) {
  if (x.size() != spec.dim)
    throw InvalidSpecError("eval_payoff: state has wrong dimension");
  double g = spec.payoff(x);
  if (!std::isfinite(g))
    throw InvalidSpecError("eval_payoff: non-finite payoff at x=" + format_vec(x));
  return g;
}

double isaacs_gap_at(const GameSpec& spec, double t, ConstVec x, ConstVec xi) {
  const std::size_t nu = spec.u_grid.size();
  const std::size_t nv = spec.v_grid.size();
  std::vector<double> table(nu * nv);
  State f(spec.dim);
  for (std::size_t i = 0; i < nu; ++i) {
    for (std::size_t j = 0; j < nv; ++j) {
      drift_at(spec, t, x, i, j, f);
      table[i * nv + j] = dot(xi, f);
    }
  }
  double minmax = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nu; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nv; ++j) m = std::max(m, table[i * nv + j]);
    minmax = std::min(minmax, m);
  }
  double maxmin = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nv; ++j) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nu; ++i) m = std::min(m, table[i * nv + j]);
    maxmin = std::max(maxmin, m);
  }
  return std::abs(minmax - maxmin);
}

IsaacsReport check_isaacs(const GameSpec& spec, std::size_t n_samples,
                          std::uint64_t rng_seed, double radius) {
  if (n_samples == 0) throw ConfigError("check_isaacs: n_samples must be >= 1");
  Rng rng(derive_seed(rng_seed, 0));
  IsaacsReport report;
  State x(spec.dim), xi(spec.dim);
  for (std::size_t s = 0; s < n_samples; ++s) {
    double t = rng.uniform(0.0, spec.horizon);
    for (auto& c : x) c = rng.uniform(-radius, radius);
    for (auto& c : xi) c = rng.uniform(-radius, radius);
    report.max_gap = std::max(report.max_gap, isaacs_gap_at(spec, t, x, xi));
  }
  report.samples = n_samples;
  return report;
}

bool ConstantsReport::ok(const GameSpec& spec, double tol) const {
  return max_drift_norm <= spec.drift_bound + tol &&
         max_payoff_quotient <= spec.payoff_lipschitz + tol &&
         max_drift_quotient <= spec.drift_lipschitz + tol;
}

ConstantsReport sample_constants(const GameSpec& spec, std::size_t n_samples,
                                 std::uint64_t rng_seed, double radius) {
  Rng rng(derive_seed(rng_seed, 1));
  ConstantsReport r;
  const std::size_t d = spec.dim;
  State x(d), y(d), fx(d), fy(d), diff(d);
  for (std::size_t s = 0; s < n_samples; ++s) {
    double t = rng.uniform(0.0, spec.horizon);
    for (auto& c : x) c = rng.uniform(-radius, radius);
    for (auto& c : y) c = rng.uniform(-radius, radius);
    for (std::size_t k = 0; k < d; ++k) diff[k] = x[k] - y[k];
    double dist = norm2(diff);
    if (dist > 0.0) {
      double q = std::abs(spec.payoff(x) - spec.payoff(y)) / dist;
      r.max_payoff_quotient = std::max(r.max_payoff_quotient, q);
    }
    for (std::size_t i = 0; i < spec.u_grid.size(); ++i) {
      for (std::size_t j = 0; j < spec.v_grid.size(); ++j) {
        drift_at(spec, t, x, i, j, fx);
        drift_at(spec, t, y, i, j, fy);
        r.max_drift_norm = std::max(r.max_drift_norm, norm2(fx));
        if (dist > 0.0) {
          for (std::size_t k = 0; k < d; ++k) diff[k] = fx[k] - fy[k];
          r.max_drift_quotient = std::max(r.max_drift_quotient, norm2(diff) / dist);
        }
      }
    }
  }
  r.samples = n_samples;
  return r;
}

// ---- catalog -------------------------------------------------------------

namespace {

PayoffFn norm_payoff(State center) {
  return [center = std::move(center)](ConstVec x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double dlt = x[i] - (center.empty() ? 0.0 : center[i]);
      s += dlt * dlt;
    }
    return std::sqrt(s);
  };
}

}  // namespace

GameSpec catalog_game(std::string_view name) {
  GameSpec g;
  g.name = std::string(name);
  g.horizon = 1.0;
  g.payoff_lipschitz = 1.0;
  g.payoff = norm_payoff({});
  g.source = {{"drift", {{"kind", "catalog"}, {"name", g.name}}}};
  if (name == "G1") {
    g.dim = 1;
    g.drift = [](double, ConstVec, ConstVec u, ConstVec v, std::span<double> out) {
      out[0] = u[0] + v[0];
    };
    g.u_grid = ControlGrid::scalar({-1.0, 0.0, 1.0});
    g.v_grid = ControlGrid::scalar({-0.5, 0.0, 0.5});
    g.drift_bound = 1.5;
    g.drift_lipschitz = 0.0;
    const double T = g.horizon;
    g.closed_form_value = [T](double t, ConstVec x) {
      return std::max(std::abs(x[0]) - 0.5 * (T - t), 0.0);
    };
  } else if (name == "G2") {
    g.dim = 2;
    g.drift = [](double, ConstVec x, ConstVec u, ConstVec v, std::span<double> out) {
      out[0] = v[0] * x[1] - u[0];
      out[1] = u[0] * x[0] + v[0];
    };
    g.u_grid = ControlGrid::scalar({-1.0, 0.0, 1.0});
    g.v_grid = ControlGrid::scalar({-0.5, 0.0, 0.5});
    // On |x_i| <= 2: |f| <= sqrt(2^2 + 2.5^2).
    g.drift_bound = 3.25;
    g.drift_lipschitz = 1.0;
  } else if (name == "B1") {
    g.dim = 1;
    g.drift = [](double, ConstVec, ConstVec u, ConstVec v, std::span<double> out) {
      out[0] = u[0] * v[0];
    };
    g.u_grid = ControlGrid::scalar({-1.0, 1.0});
    g.v_grid = ControlGrid::scalar({-1.0, 1.0});
    g.drift_bound = 1.0;
    g.drift_lipschitz = 0.0;
  } else if (name == "zero") {
    g.dim = 1;
    g.drift = [](double, ConstVec, ConstVec, ConstVec, std::span<double> out) {
      out[0] = 0.0;
    };
    g.u_grid = ControlGrid::scalar({0.0});
    g.v_grid = ControlGrid::scalar({0.0});
    g.drift_bound = 0.0;
    g.closed_form_value = [](double, ConstVec x) { return std::abs(x[0]); };
  } else {
    throw InvalidSpecError("unknown catalog game '" + std::string(name) + "'");
  }
  return g;
}

GameSpec constant_drift_game(std::vector<double> c, double horizon) {
  if (c.empty()) throw InvalidSpecError("constant_drift_game: empty drift");
  GameSpec g;
  g.name = "constant";
  g.dim = c.size();
  g.horizon = horizon;
  double n = norm2(c);
  g.drift = [c](double, ConstVec, ConstVec, ConstVec, std::span<double> out) {
    std::copy(c.begin(), c.end(), out.begin());
  };
  g.u_grid = ControlGrid::scalar({0.0});
  g.v_grid = ControlGrid::scalar({0.0});
  g.payoff = norm_payoff({});
  g.payoff_lipschitz = 1.0;
  g.drift_bound = n;
  g.drift_lipschitz = 0.0;
  g.source = {{"drift", {{"kind", "constant"}, {"c", c}}}, {"T", horizon}};
  return g;
}

namespace {

using nlohmann::json;

std::vector<double> as_vector(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidSpecError(std::string(what) + ": expected an array");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw InvalidSpecError(std::string(what) + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

/// Rows x cols matrix, row-major. An absent field gives zeros.
std::vector<double> as_matrix(const json& parent, const char* key, std::size_t rows,
                              std::size_t cols) {
  std::vector<double> m(rows * cols, 0.0);
  if (!parent.contains(key)) return m;
  const json& j = parent.at(key);
  if (!j.is_array() || j.size() != rows)
    throw InvalidSpecError(std::string("affine drift: '") + key + "' must have d rows");
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = as_vector(j[r], key);
    if (row.size() != cols)
      throw InvalidSpecError(std::string("affine drift: '") + key + "' row has wrong length");
    std::copy(row.begin(), row.end(), m.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return m;
}

ControlGrid parse_grid(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw InvalidSpecError(std::string(what) + ": must be a nonempty array");
  if (j.front().is_number()) return ControlGrid::scalar(as_vector(j, what));
  std::size_t dim = j.front().size();
  std::vector<double> flat;
  for (const auto& e : j) {
    auto c = as_vector(e, what);
    if (c.size() != dim || dim == 0)
      throw InvalidSpecError(std::string(what) + ": controls must share one dimension");
    flat.insert(flat.end(), c.begin(), c.end());
  }
  return ControlGrid(dim, std::move(flat));
}

PayoffFn parse_payoff(const json& j, std::size_t d) {
  std::string kind = j.value("kind", "");
  if (kind == "norm" || kind == "abs") {
    State center(d, 0.0);
    if (j.contains("center")) center = as_vector(j.at("center"), "payoff.center");
    if (center.size() != d) throw InvalidSpecError("payoff.center: wrong dimension");
    return norm_payoff(center);
  }
  if (kind == "linear") {
    State a = as_vector(j.at("a"), "payoff.a");
    if (a.size() != d) throw InvalidSpecError("payoff.a: wrong dimension");
    double b = j.value("b", 0.0);
    return [a, b](ConstVec x) { return dot(a, x) + b; };
  }
  if (kind == "constant") {
    double c = j.value("c", 0.0);
    return [c](ConstVec) { return c; };
  }
  throw InvalidSpecError("payoff.kind '" + kind + "' is not one of norm|abs|linear|constant");
}

GameSpec parse_game_json_unchecked(const json& j) {
  if (!j.is_object()) throw InvalidSpecError("game file: top level must be an object");
  if (!j.contains("drift")) throw InvalidSpecError("game file: missing 'drift'");
  const json& dj = j.at("drift");
  std::string kind = dj.value("kind", "");
  GameSpec g;
  if (kind == "catalog") {
    g = catalog_game(dj.value("name", ""));
    if (j.contains("d") && j.at("d").get<std::size_t>() != g.dim)
      throw InvalidSpecError("game file: 'd' disagrees with the catalog game");
    if (j.contains("u_grid") || j.contains("v_grid") || j.contains("payoff"))
      g.closed_form_value = nullptr;
    if (j.contains("T") && g.name == "G1") {
      const double T = j.at("T").get<double>();
      g.closed_form_value = [T](double t, ConstVec x) {
        return std::max(std::abs(x[0]) - 0.5 * (T - t), 0.0);
      };
    }
  } else if (kind == "affine") {
    if (!j.contains("d")) throw InvalidSpecError("game file: missing 'd'");
    g.dim = j.at("d").get<std::size_t>();
    for (const char* key : {"u_grid", "v_grid", "payoff", "R", "M1", "K1"})
      if (!j.contains(key))
        throw InvalidSpecError(std::string("game file: affine game requires '") + key + "'");
  } else {
    throw InvalidSpecError("drift.kind '" + kind + "' is not one of catalog|affine");
  }
  if (j.contains("name")) g.name = j.at("name").get<std::string>();
  if (j.contains("T")) g.horizon = j.at("T").get<double>();
  if (j.contains("u_grid")) g.u_grid = parse_grid(j.at("u_grid"), "u_grid");
  if (j.contains("v_grid")) g.v_grid = parse_grid(j.at("v_grid"), "v_grid");
  if (j.contains("payoff")) g.payoff = parse_payoff(j.at("payoff"), g.dim);
  if (j.contains("R")) g.payoff_lipschitz = j.at("R").get<double>();
  if (j.contains("M1")) g.drift_bound = j.at("M1").get<double>();
  if (j.contains("K1")) g.drift_lipschitz = j.at("K1").get<double>();

  if (kind == "affine") {
    const std::size_t d = g.dim;
    const std::size_t du = g.u_grid.dim();
    const std::size_t dv = g.v_grid.dim();
    auto A = as_matrix(dj, "A", d, d);
    auto B = as_matrix(dj, "B", d, du);
    auto C = as_matrix(dj, "C", d, dv);
    State c(d, 0.0);
    if (dj.contains("c")) c = as_vector(dj.at("c"), "drift.c");
    if (c.size() != d) throw InvalidSpecError("drift.c: wrong dimension");
    g.drift = [=](double, ConstVec x, ConstVec u, ConstVec v, std::span<double> out) {
      for (std::size_t r = 0; r < d; ++r) {
        double s = c[r];
        for (std::size_t k = 0; k < d; ++k) s += A[r * d + k] * x[k];
        for (std::size_t k = 0; k < du; ++k) s += B[r * du + k] * u[k];
        for (std::size_t k = 0; k < dv; ++k) s += C[r * dv + k] * v[k];
        out[r] = s;
      }
    };
  }
  g.source = j;
  validate_structure(g);
  return g;
}

}  // namespace

GameSpec parse_game_json(const json& j) {
  try {
    return parse_game_json_unchecked(j);
  } catch (const json::exception& e) {
    throw InvalidSpecError(std::string("game file: ") + e.what());
  }
}

GameSpec load_game_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open game file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("game file '" + path + "': " + e.what());
  }
  return parse_game_json(j);
}

}  // namespace dgame
