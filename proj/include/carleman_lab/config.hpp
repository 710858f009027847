#ifndef CARLEMAN_LAB_CONFIG_HPP
#define CARLEMAN_LAB_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "carleman_lab/carleman.hpp"
#include "carleman_lab/error.hpp"
#include "carleman_lab/geometry.hpp"
#include "carleman_lab/presets.hpp"
#include "carleman_lab/report.hpp"

namespace carleman_lab {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

struct GridConfig {
  std::size_t nx = 101;
  std::size_t ny = 0;  ///< 2D only; 0 picks hy close to hx
  double cfl = 0.9;
  std::size_t levels = 3;

  bool operator==(const GridConfig&) const = default;
};

struct WeightsConfig {
  double beta = 0.5;
  std::optional<double> beta0;  ///< empty: auto
  std::vector<double> lambdas{0.5};
  std::vector<double> s_values{1, 2, 5, 10, 20, 50};
  double gamma = 0.5;
  std::optional<double> alpha;  ///< empty: auto

  bool operator==(const WeightsConfig&) const = default;
};

struct ScenarioConfig {
  SpatialPreset u0{"sine_series", 2.0, {1.0}};
  SpatialPreset u1{"constant", 0.0, {}};
  SpatialPreset q1{"constant", 0.0, {}};
  SpatialPreset perturbation{"sine_series", 0.0, {0.0, 1.0}};
  double epsilon = 1e-2;
  std::vector<double> epsilons{1e-3, 1e-2, 1e-1};
  double twin_s = 1.0;
  double m0 = 2.0;
  double big_m0 = 1e6;
  double m = 1.0;

  bool operator==(const ScenarioConfig&) const = default;
};

struct CarlemanConfig {
  std::size_t family_size = 20;
  double s_tail_min = 10.0;
  /// Pinned regression baseline for the tail maximum of the ratio.
  std::optional<double> baseline_m_hat;

  bool operator==(const CarlemanConfig&) const = default;
};

struct KdecayConfig {
  std::vector<double> s_values{1, 2, 4, 8, 16, 32, 64, 128, 256};
  double threshold_fraction = 0.01;

  bool operator==(const KdecayConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 20240611;
  std::string out = "out";
  Variant variant = Variant::full;
  unsigned jobs = 1;

  bool operator==(const RunConfig&) const = default;
};

struct ExperimentConfig {
  DomainSpec domain = DomainSpec::interval(0.0, 1.0, -0.1, 1.5);
  GridConfig grid;
  WeightsConfig weights;
  ScenarioConfig scenario;
  CarlemanConfig carleman;
  KdecayConfig kdecay;
  RunConfig run;

  bool operator==(const ExperimentConfig&) const = default;

  /// Resolved weight parameters; beta0 and alpha filled in when set to auto.
  WeightParams params(double lambda, double s) const {
    WeightParams p;
    p.beta = weights.beta;
    p.beta0 = weights.beta0 ? *weights.beta0 : auto_beta0(domain, weights.beta);
    p.lambda = lambda;
    p.s = s;
    p.alpha = weights.alpha ? *weights.alpha : auto_alpha(weights.beta, domain.dimension);
    p.gamma = weights.gamma;
    return p;
  }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::invalid_argument, path, what);
}

inline std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_error(path.empty() ? "<root>" : path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) config_error(join(path, it.key()), "unknown key");
  }
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

inline std::size_t count(const json& j, const std::string& path, std::size_t min) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min)) {
    config_error(path, "expected an integer >= " + std::to_string(min));
  }
  return j.get<std::size_t>();
}

inline std::vector<double> numbers(const json& j, const std::string& path, bool nonempty = true) {
  if (!j.is_array()) config_error(path, "expected an array of numbers");
  if (nonempty && j.empty()) config_error(path, "must not be empty");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Point point(const json& j, const std::string& path, int dim) {
  const auto v = numbers(j, path);
  if (static_cast<int>(v.size()) != dim) config_error(path, "expected " + std::to_string(dim) + " components");
  Point p{0.0, 0.0};
  for (int a = 0; a < dim; ++a) p[a] = v[a];
  return p;
}

inline std::optional<double> number_or_auto(const json& j, const std::string& path) {
  if (j.is_string() && j.get<std::string>() == "auto") return std::nullopt;
  if (!j.is_number()) config_error(path, "expected a number or \"auto\"");
  return j.get<double>();
}

inline SpatialPreset preset(const json& j, const std::string& path) {
  reject_unknown(j, path, {"kind", "offset", "coeffs"});
  SpatialPreset p;
  p.coeffs.clear();
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) config_error(join(path, "kind"), "expected a string");
    p.kind = j["kind"].get<std::string>();
  }
  if (!is_known_preset(p.kind)) {
    config_error(join(path, "kind"), "unknown preset '" + p.kind + "' (expected sine_series or constant)");
  }
  if (j.contains("offset")) p.offset = number(j["offset"], join(path, "offset"));
  if (j.contains("coeffs")) p.coeffs = numbers(j["coeffs"], join(path, "coeffs"), false);
  return p;
}

inline json preset_json(const SpatialPreset& p) { return {{"kind", p.kind}, {"offset", p.offset}, {"coeffs", p.coeffs}}; }

inline void require_positive(const std::vector<double>& v, const std::string& path) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) config_error(path + "[" + std::to_string(i) + "]", "must be positive");
  }
}

}  // namespace detail

/// Checks the parsed configuration against every parameter constraint.
inline void validate_config(const ExperimentConfig& c) {
  using detail::config_error;
  if (!(c.weights.beta > 0.0 && c.weights.beta < 1.0)) {
    config_error("weights.beta", "must lie in the open window (0, 1), got " + csv_number(c.weights.beta));
  }
  detail::require_positive(c.weights.lambdas, "weights.lambda");
  detail::require_positive(c.weights.s_values, "weights.s");
  detail::require_positive(c.kdecay.s_values, "kdecay.s");
  const double bound = cfl_bound(c.domain.dimension);
  if (!(c.grid.cfl > 0.0 && c.grid.cfl <= bound)) {
    config_error("grid.cfl", "must lie in (0, " + std::to_string(bound) + "]");
  }
  for (double lambda : c.weights.lambdas) {
    const ValidationReport r = validate(c.params(lambda, 1.0), c.domain);
    for (const auto& chk : r.checks) {
      if (chk.passed) continue;
      static const std::pair<const char*, const char*> paths[] = {
          {"beta_window", "weights.beta"},  {"beta0_sufficient", "weights.beta0"},
          {"alpha_window", "weights.alpha"}, {"T_exceeds_T0", "domain.T"},
          {"x0_exterior", "domain.x0"},      {"lambda_positive", "weights.lambda"},
          {"gamma_nonnegative", "weights.gamma"}};
      std::string path = chk.name;
      for (const auto& [name, p] : paths) {
        if (chk.name == name) path = p;
      }
      config_error(path, chk.detail);
    }
  }
  if (c.scenario.m0 <= 0.0) config_error("scenario.m0", "must be positive");
  if (c.scenario.m <= 0.0) config_error("scenario.m", "must be positive");
  for (std::size_t i = 0; i < c.scenario.epsilons.size(); ++i) {
    if (c.scenario.epsilons[i] < 0.0) config_error("scenario.epsilons[" + std::to_string(i) + "]", "must be >= 0");
  }
  if (!(c.scenario.twin_s > 0.0)) config_error("scenario.twin_s", "must be positive");
  if (c.kdecay.threshold_fraction <= 0.0) config_error("kdecay.threshold_fraction", "must be positive");
  if (c.carleman.baseline_m_hat && !(*c.carleman.baseline_m_hat > 0.0)) {
    config_error("carleman.baseline_m_hat", "must be positive");
  }
}

inline ExperimentConfig config_from_json(const json& root) {
  using namespace detail;
  reject_unknown(root, "", {"domain", "grid", "weights", "scenario", "carleman", "kdecay", "run"});
  ExperimentConfig c;

  if (root.contains("domain")) {
    const json& d = root["domain"];
    reject_unknown(d, "domain", {"dimension", "lower", "upper", "x0", "T"});
    int dim = 1;
    if (d.contains("dimension")) {
      dim = static_cast<int>(count(d["dimension"], "domain.dimension", 1));
      if (dim > 2) config_error("domain.dimension", "must be 1 or 2");
    }
    DomainSpec spec;
    spec.dimension = dim;
    spec.lower = d.contains("lower") ? point(d["lower"], "domain.lower", dim) : Point{0.0, 0.0};
    spec.upper = d.contains("upper") ? point(d["upper"], "domain.upper", dim) : Point{1.0, dim == 2 ? 1.0 : 0.0};
    if (!d.contains("x0")) config_error("domain.x0", "is required");
    spec.x0 = point(d["x0"], "domain.x0", dim);
    if (!d.contains("T")) config_error("domain.T", "is required");
    spec.T = number(d["T"], "domain.T");
    try {
      spec.check();
    } catch (const Error& e) {
      config_error("domain", e.what());
    }
    c.domain = spec;
  }

  if (root.contains("grid")) {
    const json& g = root["grid"];
    reject_unknown(g, "grid", {"nx", "ny", "cfl", "levels"});
    if (g.contains("nx")) c.grid.nx = count(g["nx"], "grid.nx", 3);
    if (g.contains("ny")) c.grid.ny = count(g["ny"], "grid.ny", 0);
    if (g.contains("cfl")) c.grid.cfl = number(g["cfl"], "grid.cfl");
    if (g.contains("levels")) c.grid.levels = count(g["levels"], "grid.levels", 2);
  }

  if (root.contains("weights")) {
    const json& w = root["weights"];
    reject_unknown(w, "weights", {"beta", "beta0", "lambda", "s", "gamma", "alpha"});
    if (w.contains("beta")) c.weights.beta = number(w["beta"], "weights.beta");
    if (w.contains("beta0")) c.weights.beta0 = number_or_auto(w["beta0"], "weights.beta0");
    if (w.contains("lambda")) c.weights.lambdas = numbers(w["lambda"], "weights.lambda");
    if (w.contains("s")) c.weights.s_values = numbers(w["s"], "weights.s");
    if (w.contains("gamma")) c.weights.gamma = number(w["gamma"], "weights.gamma");
    if (w.contains("alpha")) c.weights.alpha = number_or_auto(w["alpha"], "weights.alpha");
  }

  if (root.contains("scenario")) {
    const json& s = root["scenario"];
    reject_unknown(s, "scenario",
                   {"u0", "u1", "q1", "perturbation", "epsilon", "epsilons", "twin_s", "m0", "M0", "m"});
    if (s.contains("u0")) c.scenario.u0 = preset(s["u0"], "scenario.u0");
    if (s.contains("u1")) c.scenario.u1 = preset(s["u1"], "scenario.u1");
    if (s.contains("q1")) c.scenario.q1 = preset(s["q1"], "scenario.q1");
    if (s.contains("perturbation")) c.scenario.perturbation = preset(s["perturbation"], "scenario.perturbation");
    if (s.contains("epsilon")) c.scenario.epsilon = number(s["epsilon"], "scenario.epsilon");
    if (s.contains("epsilons")) c.scenario.epsilons = numbers(s["epsilons"], "scenario.epsilons");
    if (s.contains("twin_s")) c.scenario.twin_s = number(s["twin_s"], "scenario.twin_s");
    if (s.contains("m0")) c.scenario.m0 = number(s["m0"], "scenario.m0");
    if (s.contains("M0")) c.scenario.big_m0 = number(s["M0"], "scenario.M0");
    if (s.contains("m")) c.scenario.m = number(s["m"], "scenario.m");
  }

  if (root.contains("carleman")) {
    const json& k = root["carleman"];
    reject_unknown(k, "carleman", {"family_size", "s_tail_min", "baseline_m_hat"});
    if (k.contains("family_size")) c.carleman.family_size = count(k["family_size"], "carleman.family_size", 1);
    if (k.contains("s_tail_min")) c.carleman.s_tail_min = number(k["s_tail_min"], "carleman.s_tail_min");
    if (k.contains("baseline_m_hat") && !k["baseline_m_hat"].is_null()) {
      c.carleman.baseline_m_hat = number(k["baseline_m_hat"], "carleman.baseline_m_hat");
    }
  }

  if (root.contains("kdecay")) {
    const json& k = root["kdecay"];
    reject_unknown(k, "kdecay", {"s", "threshold_fraction"});
    if (k.contains("s")) c.kdecay.s_values = numbers(k["s"], "kdecay.s");
    if (k.contains("threshold_fraction")) {
      c.kdecay.threshold_fraction = number(k["threshold_fraction"], "kdecay.threshold_fraction");
    }
  }

  if (root.contains("run")) {
    const json& r = root["run"];
    reject_unknown(r, "run", {"seed", "out", "variant", "jobs"});
    if (r.contains("seed")) {
      if (!r["seed"].is_number_unsigned()) config_error("run.seed", "expected a non-negative integer");
      c.run.seed = r["seed"].get<std::uint64_t>();
    }
    if (r.contains("out")) {
      if (!r["out"].is_string()) config_error("run.out", "expected a string");
      c.run.out = r["out"].get<std::string>();
    }
    if (r.contains("variant")) {
      const auto v = r["variant"].is_string() ? parse_variant(r["variant"].get<std::string>()) : std::nullopt;
      if (!v) config_error("run.variant", "expected full, remark or remark_t0_only");
      c.run.variant = *v;
    }
    if (r.contains("jobs")) c.run.jobs = static_cast<unsigned>(count(r["jobs"], "run.jobs", 1));
  }

  validate_config(c);
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  const int dim = c.domain.dimension;
  auto pt = [dim](const Point& p) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(p[i]);
    return a;
  };
  auto or_auto = [](const std::optional<double>& v) { return v ? json(*v) : json("auto"); };
  json j;
  j["domain"] = {{"dimension", dim}, {"lower", pt(c.domain.lower)}, {"upper", pt(c.domain.upper)},
                 {"x0", pt(c.domain.x0)}, {"T", c.domain.T}};
  j["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"cfl", c.grid.cfl}, {"levels", c.grid.levels}};
  j["weights"] = {{"beta", c.weights.beta},     {"beta0", or_auto(c.weights.beta0)}, {"lambda", c.weights.lambdas},
                  {"s", c.weights.s_values},    {"gamma", c.weights.gamma},          {"alpha", or_auto(c.weights.alpha)}};
  j["scenario"] = {{"u0", detail::preset_json(c.scenario.u0)},
                   {"u1", detail::preset_json(c.scenario.u1)},
                   {"q1", detail::preset_json(c.scenario.q1)},
                   {"perturbation", detail::preset_json(c.scenario.perturbation)},
                   {"epsilon", c.scenario.epsilon},
                   {"epsilons", c.scenario.epsilons},
                   {"twin_s", c.scenario.twin_s},
                   {"m0", c.scenario.m0},
                   {"M0", c.scenario.big_m0},
                   {"m", c.scenario.m}};
  j["carleman"] = {{"family_size", c.carleman.family_size},
                   {"s_tail_min", c.carleman.s_tail_min},
                   {"baseline_m_hat", c.carleman.baseline_m_hat ? json(*c.carleman.baseline_m_hat) : json(nullptr)}};
  j["kdecay"] = {{"s", c.kdecay.s_values}, {"threshold_fraction", c.kdecay.threshold_fraction}};
  j["run"] = {{"seed", c.run.seed}, {"out", c.run.out}, {"variant", to_string(c.run.variant)}, {"jobs", c.run.jobs}};
  return j;
}

inline ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::invalid_argument, "config", e.what());
  }
  return config_from_json(root);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) {
      std::string detail = e.what();
      const std::string prefix = e.where() + ": ";
      if (detail.rfind(prefix, 0) == 0) detail.erase(0, prefix.size());
      throw Error(e.kind(), e.where(), detail + " (in " + path + ")");
    }
    throw;
  }
}

/// FNV-1a over the canonical serialization, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_CONFIG_HPP
