#ifndef CARLEMAN_LAB_EXPERIMENTS_HPP
#define CARLEMAN_LAB_EXPERIMENTS_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "carleman_lab/carleman.hpp"
#include "carleman_lab/config.hpp"
#include "carleman_lab/conjugation.hpp"
#include "carleman_lab/parallel.hpp"
#include "carleman_lab/presets.hpp"
#include "carleman_lab/report.hpp"
#include "carleman_lab/stability.hpp"
#include "carleman_lab/wave_solver.hpp"
#include "carleman_lab/weights.hpp"

namespace carleman_lab {

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"weights",  "forward",   "decomp", "crossterms",
                                              "carleman", "stability", "kdecay", "all"};
  return names;
}

struct Failure {
  std::string invariant;
  std::string detail;
};

struct SubcommandResult {
  std::string name;
  std::vector<std::string> artifacts;
  std::vector<Failure> failures;
  std::vector<std::string> checked;  ///< every invariant evaluated, in order
  nlohmann::json details = nlohmann::json::object();
  bool errored = false;
  double wall_seconds = 0.0;

  std::string status() const { return errored ? "error" : failures.empty() ? "ok" : "assertion_failed"; }
};

struct RunSummary {
  std::string version = kVersion;
  std::string config_hash;
  nlohmann::json config;
  std::vector<SubcommandResult> results;
  bool io_error = false;

  std::vector<std::string> artifacts() const {
    std::vector<std::string> out;
    for (const auto& r : results) out.insert(out.end(), r.artifacts.begin(), r.artifacts.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  /// 0 when every assertion passed, 1 on an assertion failure or run error, 3 on IO errors.
  int exit_code() const {
    if (io_error) return 3;
    for (const auto& r : results) {
      if (r.errored || !r.failures.empty()) return 1;
    }
    return 0;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool_version"] = version;
    j["config_hash"] = config_hash;
    j["config"] = config;
    j["artifacts"] = artifacts();
    j["exit_code"] = exit_code();
    nlohmann::json subs = nlohmann::json::object();
    for (const auto& r : results) {
      nlohmann::json s;
      s["status"] = r.status();
      s["artifacts"] = r.artifacts;
      s["wall_seconds"] = r.wall_seconds;
      s["checked"] = r.checked;
      nlohmann::json f = nlohmann::json::array();
      for (const auto& x : r.failures) f.push_back({{"invariant", x.invariant}, {"detail", x.detail}});
      s["failures"] = f;
      s["details"] = r.details;
      subs[r.name] = s;
    }
    j["subcommands"] = subs;
    return j;
  }
};

namespace detail {

inline std::string fmt(double v) { return csv_number(v); }

/// Deterministic smooth field for identity checks.
inline Field smooth_random_field(const Grid& g, Rng& rng) {
  const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(0.5, 3), e = rng.uniform(0.5, 2);
  return Field::sample(g, [=](const Point& x, double t) {
    double v = (1 + a * t + b * t * t) * std::sin(c * x[0] + a) + b * std::cos(2 * x[0]);
    if (g.dim() == 2) v *= std::cos(e * x[1] + b);
    return v;
  });
}

inline double sine_product(const Grid& g, const Point& x) {
  double v = 1.0;
  for (int a = 0; a < g.dim(); ++a) v *= std::sin(std::numbers::pi * (x[a] - g.domain.lower[a]) / g.domain.length(a));
  return v;
}

}  // namespace detail

class Experiment {
 public:
  Experiment(ExperimentConfig cfg, std::filesystem::path out_dir) : cfg_(std::move(cfg)), out_(std::move(out_dir)) {}

  const ExperimentConfig& config() const { return cfg_; }

  Grid grid(std::size_t level = 0) const {
    const std::size_t f = std::size_t{1} << level;
    const std::size_t nx = (cfg_.grid.nx - 1) * f + 1;
    if (cfg_.domain.dimension == 2 && cfg_.grid.ny > 0) {
      return build_grid(cfg_.domain, nx, (cfg_.grid.ny - 1) * f + 1, cfg_.grid.cfl);
    }
    return build_grid(cfg_.domain, nx, cfg_.grid.cfl);
  }

  std::string version_line() const { return std::string("carleman_lab ") + kVersion; }

  // -------------------------------------------------------------------------
  void weights(SubcommandResult& r) const {
    const Grid g = grid();
    CsvTable t({"lambda", "x", "y", "t", "psi", "phi"});
    nlohmann::json per = nlohmann::json::array();
    for (double lambda : cfg_.weights.lambdas) {
      const WeightParams p = cfg_.params(lambda, cfg_.weights.s_values.front());
      const ValidationReport v = validate(p, g.domain);
      nlohmann::json checks = nlohmann::json::array();
      for (const auto& c : v.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        check(r, "validation." + c.name, c.passed, c.detail);
      }
      const Field ps = psi_field(g, p);
      const Field ph = phi_field(g, p);
      double min_psi = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < g.nt; ++k) {
        for (std::size_t i = 0; i < g.nspace(); ++i) {
          const Point x = g.node(i);
          t.row() << lambda << x[0] << x[1] << g.time(k) << ps(i, k) << ph(i, k);
          min_psi = std::min(min_psi, ps(i, k));
        }
      }
      check(r, "psi_at_least_one", min_psi >= 1.0, "min psi = " + detail::fmt(min_psi));
      per.push_back({{"lambda", lambda},
                     {"beta", p.beta},
                     {"beta0", p.beta0},
                     {"alpha", p.alpha},
                     {"alpha_window", {alpha_window(p.beta, g.dim()).lower, alpha_window(p.beta, g.dim()).upper}},
                     {"T0", compute_t0(g.domain)},
                     {"min_psi", min_psi},
                     {"checks", checks}});
    }
    r.details["validation"] = per;
    emit(r, "weights.csv", t);
  }

  // -------------------------------------------------------------------------
  struct MmsLevel {
    std::size_t nx = 0;
    double hx = 0.0, tau = 0.0;
    std::size_t nt = 0;
    double l2 = 0.0, linf = 0.0;
  };

  /// Manufactured solution (1 + t^2) e^{sum x} with q = 1.
  MmsLevel mms(std::size_t level) const {
    const Grid g = grid(level);
    const int n = g.dim();
    auto ex = [n](const Point& x) { return std::exp(x[0] + (n == 2 ? x[1] : 0.0)); };
    auto exact = [&](const Point& x, double t) { return (1 + t * t) * ex(x); };
    IBVPData d;
    d.q = SpatialField(g.nspace(), 1.0);
    d.u0 = sample_spatial(g, ex);
    d.u1 = SpatialField(g.nspace(), 0.0);
    d.dirichlet = Field::sample(g, exact);
    d.source = Field::sample(g, [&](const Point& x, double t) { return (2.0 + (1 - n) * (1 + t * t)) * ex(x); });
    const Field u = solve(d, g).u;
    const Field e = u - Field::sample(g, exact);
    return {g.nx, g.hx, g.tau, g.nt, std::sqrt(integrate_spacetime(e * e)), e.max_abs()};
  }

  void forward(SubcommandResult& r) const {
    CsvTable t({"level", "nx", "hx", "tau", "nt", "l2_error", "linf_error", "l2_ratio"});
    const auto levels = parallel_map(cfg_.grid.levels, cfg_.run.jobs, [&](std::size_t l) { return mms(l); });
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto& m = levels[l];
      const double ratio = l ? levels[l - 1].l2 / m.l2 : std::numeric_limits<double>::quiet_NaN();
      t.row() << l << m.nx << m.hx << m.tau << m.nt << m.l2 << m.linf << ratio;
      if (l) {
        check(r, "mms_second_order_level_" + std::to_string(l), ratio >= 3.4 && ratio <= 4.6,
              "L2 error ratio " + detail::fmt(ratio) + " outside [3.4, 4.6]");
      }
    }
    emit(r, "forward_convergence.csv", t);
  }

  // -------------------------------------------------------------------------
  void decomp(SubcommandResult& r) const {
    constexpr std::size_t kFields = 10;
    CsvTable t({"level", "nx", "lambda", "s", "field", "decomposition_residual", "sos_residual", "direct_expanded_gap"});
    struct Cell {
      double dec = 0, sos = 0, gap = 0;
    };
    double worst_dec = 0, worst_sos = 0;
    for (std::size_t l = 0; l < cfg_.grid.levels; ++l) {
      const Grid g = grid(l);
      for (double lambda : cfg_.weights.lambdas) {
        const auto& svals = cfg_.weights.s_values;
        const auto cells = parallel_map(svals.size() * kFields, cfg_.run.jobs, [&](std::size_t c) {
          const WeightParams p = cfg_.params(lambda, svals[c / kFields]);
          Rng rng(cfg_.run.seed + c % kFields);
          const Field w = conjugate(detail::smooth_random_field(g, rng), p);
          const DecompositionTerms terms = decompose(w, p);
          double diff = 0, scale = 0;
          for (std::size_t k = 1; k + 1 < g.nt; ++k) {
            for (std::size_t i = 0; i < g.nspace(); ++i) {
              if (g.is_boundary(i)) continue;
              diff = std::max(diff, std::abs(terms.P_direct(i, k) - terms.P_expanded(i, k)));
              scale = std::max(scale, std::abs(terms.P_expanded(i, k)));
            }
          }
          return Cell{check_decomposition(w, p), sos_identity(w, p), scale > 0 ? diff / scale : 0.0};
        });
        for (std::size_t c = 0; c < cells.size(); ++c) {
          t.row() << l << g.nx << lambda << svals[c / kFields] << (c % kFields) << cells[c].dec << cells[c].sos
                  << cells[c].gap;
          worst_dec = std::max(worst_dec, cells[c].dec);
          worst_sos = std::max(worst_sos, cells[c].sos);
        }
      }
    }
    check(r, "decomposition_identity", worst_dec <= 1e-10, "max relative residual " + detail::fmt(worst_dec));
    check(r, "sum_of_squares_identity", worst_sos <= 1e-12, "max relative residual " + detail::fmt(worst_sos));
    r.details["max_decomposition_residual"] = worst_dec;
    r.details["max_sos_residual"] = worst_sos;
    emit(r, "decomposition.csv", t);
  }

  // -------------------------------------------------------------------------
  /// w = t^2 prod sin(pi xi) cos^2(pi t / 2T): vanishes at t = 0 and on the boundary.
  Field crossterm_field(const Grid& g) const {
    const double T = g.domain.T;
    return Field::sample(g, [&](const Point& x, double t) {
      const double c = std::cos(std::numbers::pi * t / (2 * T));
      return t * t * detail::sine_product(g, x) * c * c;
    });
  }

  void crossterms(SubcommandResult& r) const {
    const WeightParams p = cfg_.params(cfg_.weights.lambdas.front(), cfg_.weights.s_values.front());
    CsvTable t({"level", "nx", "k", "definition", "expanded", "discrepancy"});
    const auto tables = parallel_map(cfg_.grid.levels, cfg_.run.jobs,
                                     [&](std::size_t l) { return cross_terms(crossterm_field(grid(l)), p); });
    for (std::size_t l = 0; l < tables.size(); ++l) {
      const std::size_t nx = grid(l).nx;
      const auto& tab = tables[l];
      for (const auto& term : tab.terms) {
        t.row() << l << nx << term.k << term.definition_value << term.expanded_value << term.discrepancy;
      }
      t.row() << l << nx << 0 << tab.total.definition_value << tab.total.expanded_value << tab.total.discrepancy;
      for (int k : {7, 8}) {
        const double d = tab.terms[k - 1].discrepancy;
        check(r, "I" + std::to_string(k) + "_algebraic_level_" + std::to_string(l), d <= 1e-10,
              "discrepancy " + detail::fmt(d));
      }
      check(r, "distributivity_level_" + std::to_string(l), tab.distributivity_gap <= 1e-12,
            "gap " + detail::fmt(tab.distributivity_gap));
      if (l == 0) continue;
      for (int k : {1, 2, 3, 4, 5, 6, 9, 10}) {
        const double ratio = tables[l - 1].terms[k - 1].discrepancy / tab.terms[k - 1].discrepancy;
        check(r, "I" + std::to_string(k) + "_refinement_level_" + std::to_string(l), ratio >= 2.0,
              "discrepancy ratio " + detail::fmt(ratio));
      }
      const double ratio = tables[l - 1].total.discrepancy / tab.total.discrepancy;
      check(r, "total_refinement_level_" + std::to_string(l), ratio >= 2.0, "discrepancy ratio " + detail::fmt(ratio));
    }
    r.details["s"] = p.s;
    r.details["lambda"] = p.lambda;
    emit(r, "crossterms.csv", t);
  }

  // -------------------------------------------------------------------------
  void carleman(SubcommandResult& r) const {
    const Grid g = grid();
    const auto family = make_test_family(g, cfg_.carleman.family_size, cfg_.run.seed);
    const Variant variant = cfg_.run.variant;
    CsvTable t({"case_id", "lambda", "s", "variant", "lhs_t0", "lhs_grad", "lhs_zero", "rhs_residual", "rhs_boundary",
                "rhs_T_energy", "rhs_T_zero", "lhs", "rhs", "ratio", "underflow_fraction"});
    std::vector<CarlemanRow> rows;
    nlohmann::json per = nlohmann::json::array();
    double tail = 0.0;
    for (double lambda : cfg_.weights.lambdas) {
      const ConstantSummary s = estimate_constant(family, cfg_.params(lambda, 1.0), cfg_.weights.s_values, variant,
                                                  cfg_.carleman.s_tail_min, cfg_.run.jobs);
      rows.insert(rows.end(), s.rows.begin(), s.rows.end());
      nlohmann::json dom = nlohmann::json::object();
      for (int i = 0; i < kRhsTerms; ++i) dom[kRhsTermNames[i]] = s.dominance[i];
      nlohmann::json cases = nlohmann::json::object();
      for (const auto& [id, v] : s.per_case_tail_max) cases[id] = v;
      per.push_back({{"lambda", lambda},
                     {"no_data", s.no_data},
                     {"m_hat", s.no_data ? nlohmann::json(nullptr) : nlohmann::json(s.m_hat)},
                     {"s0", s.s0},
                     {"m_hat_tail", s.m_hat_tail},
                     {"per_case_tail_max", cases},
                     {"dominance", dom},
                     {"counterexamples", s.counterexamples},
                     {"nonfinite_rows", s.nonfinite_rows},
                     {"underflow_rows", s.underflow_rows}});
      check(r, "ratios_finite_lambda_" + detail::fmt(lambda), s.nonfinite_rows == 0 && s.counterexamples == 0,
            std::to_string(s.nonfinite_rows) + " non-finite rows, " + std::to_string(s.counterexamples) +
                " counterexamples");
      check(r, "m_hat_defined_lambda_" + detail::fmt(lambda), !s.no_data, "no finite ratio in the family");
      tail = std::max(tail, s.m_hat_tail);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CarlemanRow& a, const CarlemanRow& b) {
      if (a.case_id != b.case_id) return a.case_id < b.case_id;
      if (a.lambda != b.lambda) return a.lambda < b.lambda;
      return a.s < b.s;
    });
    for (const auto& row : rows) {
      const auto& c = row.sides;
      t.row() << row.case_id << row.lambda << row.s << to_string(variant) << c.lhs_t0 << c.lhs_grad << c.lhs_zero
              << c.rhs_residual << c.rhs_boundary << c.rhs_T_energy << c.rhs_T_zero << c.lhs() << c.rhs() << row.ratio
              << c.underflow_fraction;
    }

    double invariance = 0.0;
    const auto inv = parallel_map(family.size(), cfg_.run.jobs, [&](std::size_t m) {
      double worst = 0.0;
      for (double lambda : cfg_.weights.lambdas) {
        for (double s : cfg_.weights.s_values) {
          worst = std::max(worst, weight_normalization_invariance(family[m].v, family[m].q, cfg_.params(lambda, s),
                                                                  variant));
        }
      }
      return worst;
    });
    for (double v : inv) invariance = std::max(invariance, v);
    check(r, "weight_normalization_invariance", invariance <= 1e-10, "max relative change " + detail::fmt(invariance));
    if (cfg_.carleman.baseline_m_hat) {
      const double base = *cfg_.carleman.baseline_m_hat;
      check(r, "m_hat_tail_within_baseline", tail <= 1.05 * base,
            "tail maximum " + detail::fmt(tail) + " exceeds 1.05 x pinned " + detail::fmt(base));
    }
    r.details["per_lambda"] = per;
    r.details["m_hat_tail"] = tail;
    r.details["baseline_m_hat"] = json_number(cfg_.carleman.baseline_m_hat);
    r.details["weight_normalization_invariance"] = invariance;
    r.details["variant"] = to_string(variant);
    emit(r, "carleman_report.csv", t);
  }

  // -------------------------------------------------------------------------
  TwinConfig twin(std::size_t level, double epsilon) const {
    const auto& sc = cfg_.scenario;
    TwinConfig c;
    c.grid = grid(level);
    c.params = cfg_.params(cfg_.weights.lambdas.front(), sc.twin_s);
    c.u0 = sample(sc.u0, c.grid);
    c.u1 = sample(sc.u1, c.grid);
    c.q1 = sample(sc.q1, c.grid);
    const SpatialField shape = sample(sc.perturbation, c.grid);
    c.q2 = c.q1;
    for (std::size_t i = 0; i < c.q2.size(); ++i) c.q2[i] += epsilon * shape[i];
    c.m0 = sc.m0;
    c.big_m0 = sc.big_m0;
    c.m = sc.m;
    c.jobs = cfg_.run.jobs;
    return c;
  }

  static nlohmann::json report_json(const StabilityReport& s) {
    nlohmann::json k = nlohmann::json::array();
    for (const auto& [sv, kv] : s.k_table) k.push_back({sv, kv});
    return {{"dq_norm", s.dq_norm},
            {"trace_norm", s.trace_norm},
            {"trace_norm_weighted", s.trace_norm_weighted},
            {"log_offset", s.log_offset},
            {"c_emp", json_number(s.c_emp)},
            {"c_emp_weighted", json_number(s.c_emp_weighted)},
            {"residual_z", s.residual_z},
            {"residual_v", s.residual_v},
            {"dt_z0", s.dt_z0},
            {"initial_velocity_gap", s.initial_velocity_gap},
            {"v_direct_gap", json_number(s.v_direct_gap)},
            {"hypotheses",
             {{"linf_l2", s.hypotheses.linf_l2},
              {"dt_linf_l2", s.hypotheses.dt_linf_l2},
              {"h1_linf_proxy", s.hypotheses.h1_linf_proxy},
              {"min_abs_u0", s.hypotheses.min_abs_u0},
              {"m0_holds", s.m0_ok},
              {"M0_holds", s.big_m0_ok}}},
            {"k_table", k}};
  }

  void stability(SubcommandResult& r) const {
    const auto& sc = cfg_.scenario;

    TwinConfig same = twin(0, 0.0);
    same.solve_v_directly = false;
    const StabilityReport zero = run_twin(same);
    check(r, "identical_potentials_give_zero", zero.dq_norm <= 1e-12 && zero.trace_norm <= 1e-12 && !zero.c_emp,
          "dq_norm " + detail::fmt(zero.dq_norm) + ", trace_norm " + detail::fmt(zero.trace_norm));

    TwinConfig base = twin(0, sc.epsilon);
    base.k_s_values = cfg_.kdecay.s_values;
    const StabilityReport rep = run_twin(base);
    const StabilityReport fine = run_twin(twin(1, sc.epsilon));

    const double exact = sc.epsilon * l2_norm(sc.perturbation, cfg_.domain);
    const double rel = exact > 0 ? std::abs(rep.dq_norm - exact) / exact : rep.dq_norm;
    check(r, "dq_norm_closed_form", rel <= 1e-2, "relative error " + detail::fmt(rel));
    check(r, "m0_hypothesis", rep.m0_ok, "min |u0| = " + detail::fmt(rep.hypotheses.min_abs_u0));
    check(r, "c_emp_defined", rep.c_emp.has_value(), "trace norm vanished");
    const double z_ratio = rep.residual_z / fine.residual_z;
    check(r, "z_residual_second_order", z_ratio >= 3.0, "refinement ratio " + detail::fmt(z_ratio));
    const double gap = rep.v_direct_gap.value_or(std::numeric_limits<double>::infinity());
    const double gap_fine = fine.v_direct_gap.value_or(std::numeric_limits<double>::infinity());
    check(r, "v_construction_agreement", gap <= 5e-2, "relative L2 gap " + detail::fmt(gap));
    check(r, "v_construction_refinement", gap / gap_fine >= 2.0, "gap ratio " + detail::fmt(gap / gap_fine));

    const TwinConfig scaling_base = twin(0, 0.0);
    const ScalingTable table = scaling_study(scaling_base, sc.epsilons, sample(sc.perturbation, scaling_base.grid));
    check(r, "c_emp_spread_below_3", table.spread < 3.0, "spread " + detail::fmt(table.spread));
    CsvTable t({"epsilon", "dq_norm", "dq_norm_exact", "trace_norm", "c_emp", "c_emp_weighted"});
    for (const auto& row : table.rows) {
      t.row() << row.epsilon << row.dq_norm << row.epsilon * l2_norm(sc.perturbation, cfg_.domain) << row.trace_norm
              << row.c_emp << row.c_emp_weighted;
    }

    SpatialField dq(base.q2.size());
    for (std::size_t i = 0; i < dq.size(); ++i) dq[i] = base.q2[i] - base.q1[i];
    nlohmann::json absorption = nlohmann::json::array();
    for (double s : cfg_.weights.s_values) {
      WeightParams p = base.params;
      p.s = s;
      const AbsorptionReport a = absorption_check(dq, p, base.grid);
      absorption.push_back({{"s", s}, {"lhs", a.lhs}, {"base", a.base}, {"k_max", a.k_max}, {"bound", a.bound},
                            {"holds", a.holds}});
      check(r, "absorption_factorization_s_" + detail::fmt(s), a.holds,
            "lhs " + detail::fmt(a.lhs) + " > bound " + detail::fmt(a.bound));
    }
    nlohmann::json threshold = nullptr;
    if (cfg_.carleman.baseline_m_hat) {
      if (auto th = absorption_threshold(cfg_.kdecay.s_values, *cfg_.carleman.baseline_m_hat, base.grid, base.params)) {
        threshold = *th;
      }
    }

    r.details["reference"] = report_json(rep);
    r.details["refined"] = report_json(fine);
    r.details["identical_potentials"] = report_json(zero);
    r.details["epsilon"] = sc.epsilon;
    r.details["dq_norm_exact"] = exact;
    r.details["c_emp_spread"] = table.spread;
    r.details["absorption"] = absorption;
    r.details["absorption_threshold_s"] = threshold;
    r.details["note"] = "c_emp is a lower-bound witness for the stability constant, not an estimate of it";
    emit(r, "stability_scaling.csv", t);
  }

  // -------------------------------------------------------------------------
  void kdecay(SubcommandResult& r) const {
    const Grid g = grid();
    std::vector<double> svals = cfg_.kdecay.s_values;
    std::sort(svals.begin(), svals.end());
    const double threshold = cfg_.kdecay.threshold_fraction * g.domain.T;
    CsvTable t({"lambda", "s", "k_max", "argmax_x", "argmax_y", "monotone_in_distance", "below_threshold"});
    nlohmann::json per = nlohmann::json::array();
    for (double lambda : cfg_.weights.lambdas) {
      const WeightParams p = cfg_.params(lambda, 1.0);
      const auto ks = parallel_map(svals.size(), cfg_.run.jobs, [&](std::size_t i) { return k_max(svals[i], g, p); });
      bool decreasing = true, monotone = true;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        t.row() << lambda << svals[i] << ks[i].value << ks[i].argmax[0] << ks[i].argmax[1] << ks[i].monotone_in_distance
                << (ks[i].value < threshold);
        if (i && !(ks[i].value < ks[i - 1].value)) decreasing = false;
        monotone = monotone && ks[i].monotone_in_distance;
      }
      const std::string tag = "_lambda_" + detail::fmt(lambda);
      check(r, "k_max_strictly_decreasing" + tag, decreasing, "k_max is not strictly decreasing in s");
      check(r, "k_monotone_in_distance" + tag, monotone, "k is not monotone in |x - x0| on the grid");
      per.push_back({{"lambda", lambda},
                     {"s_top", svals.back()},
                     {"k_max_top", ks.back().value},
                     {"threshold", threshold},
                     {"k_max_top_below_threshold", ks.back().value < threshold}});
    }
    r.details["per_lambda"] = per;
    emit(r, "kdecay.csv", t);
  }

  // -------------------------------------------------------------------------
  RunSummary run(const std::string& name) const {
    RunSummary summary;
    summary.config = to_json(cfg_);
    summary.config_hash = config_hash(cfg_);
    std::vector<std::string> order;
    if (name == "all") {
      order.assign(subcommand_names().begin(), subcommand_names().end() - 1);
    } else {
      order.push_back(name);
    }
    for (const auto& n : order) {
      SubcommandResult r;
      r.name = n;
      const auto start = std::chrono::steady_clock::now();
      try {
        dispatch(n, r);
      } catch (const Error& e) {
        r.errored = true;
        r.failures.push_back({"error." + std::string(to_string(e.kind())) + "." + e.where(), e.what()});
        if (e.kind() == ErrorKind::io) summary.io_error = true;
      } catch (const std::exception& e) {
        r.errored = true;
        r.failures.push_back({"error.unexpected", e.what()});
      }
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      summary.results.push_back(std::move(r));
    }
    return summary;
  }

  std::filesystem::path write_summary(const RunSummary& s) const {
    return write_json(out_ / "summary.json", s.to_json());
  }

 private:
  void dispatch(const std::string& n, SubcommandResult& r) const {
    if (n == "weights") return weights(r);
    if (n == "forward") return forward(r);
    if (n == "decomp") return decomp(r);
    if (n == "crossterms") return crossterms(r);
    if (n == "carleman") return carleman(r);
    if (n == "stability") return stability(r);
    if (n == "kdecay") return kdecay(r);
    throw Error(ErrorKind::invalid_argument, "subcommand", "unknown subcommand '" + n + "'");
  }

  static void check(SubcommandResult& r, const std::string& invariant, bool ok, const std::string& detail) {
    r.checked.push_back(invariant);
    if (!ok) r.failures.push_back({invariant, detail});
  }

  void emit(SubcommandResult& r, const std::string& file, const CsvTable& t) const {
    r.artifacts.push_back(write_csv(out_ / file, t, version_line()).string());
  }

  ExperimentConfig cfg_;
  std::filesystem::path out_;
};

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_EXPERIMENTS_HPP
