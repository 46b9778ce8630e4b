#pragma once

// cvbench command-line front end. run_cli() is the whole program; main() only
// forwards argv so that tests can drive the same code path in-process.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvbench/baselines.hpp"
#include "cvbench/detector.hpp"
#include "cvbench/error.hpp"
#include "cvbench/kkt_certify.hpp"
#include "cvbench/numeric.hpp"
#include "cvbench/oracle.hpp"
#include "cvbench/qp_solver.hpp"
#include "cvbench/sweep_table.hpp"
#include "cvbench/trunc_bounds.hpp"

namespace cvbench::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr double kMonotoneSlack = 1e-12;
inline constexpr double kDetectorVerifyTol = 1e-10;
inline constexpr double kAnalyticVerifyTol = 1e-8;
inline constexpr int kVerifyGridTrunc = 4;

enum ExitCode : int { kOk = 0, kNotCertified = 2, kCheckFailed = 3, kUsage = 64 };

using json = nlohmann::ordered_json;

namespace detail {

struct Common {
  std::string format = "csv";
  std::string out_path;
  int threads = 0;
  int max_iterations = SolveOptions{}.max_iterations;
};

struct Report {
  std::string data;
  int code = kOk;
  std::vector<std::string> diagnostics;

  void flag(int c, std::string msg) {
    code = std::max(code, c);
    diagnostics.push_back(std::move(msg));
  }
};

inline void add_common(CLI::App* cmd, Common& c, std::string default_format,
                       std::vector<std::string> formats) {
  c.format = std::move(default_format);
  cmd->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember(std::move(formats)))
      ->envname("CVBENCH_FORMAT")
      ->capture_default_str();
  cmd->add_option("--out", c.out_path, "write data here instead of stdout")->envname("CVBENCH_OUT");
  cmd->add_option("--threads", c.threads, "worker threads for sweep rows (0 = hardware)")
      ->check(CLI::NonNegativeNumber)
      ->envname("CVBENCH_THREADS")
      ->capture_default_str();
  cmd->add_option("--max-iterations", c.max_iterations, "solver iteration cap")
      ->check(CLI::PositiveNumber)
      ->envname("CVBENCH_MAX_ITERATIONS")
      ->capture_default_str();
}

inline SolveOptions solve_options(const Common& c) {
  SolveOptions o;
  o.max_iterations = c.max_iterations;
  return o;
}

inline std::string join(const std::vector<double>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_double(v[i]);
  }
  return s;
}

inline std::string join_ints(const std::vector<int>& v, char sep = ';') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  int steps = 21;

  void validate(const std::string& name) const {
    if (!(std::isfinite(lo) && std::isfinite(hi))) throw InvalidArgument(name + " range must be finite");
    if (steps < 1) throw InvalidArgument(name + " range is empty (steps < 1)");
    if (hi < lo) throw InvalidArgument(name + " range is empty (max < min)");
    if (steps == 1 && hi != lo) throw InvalidArgument(name + " range with one step needs min == max");
  }

  [[nodiscard]] double at(int i) const {
    if (steps == 1) return lo;
    if (i == steps - 1) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
};

inline Range parse_range(const std::string& text, const std::string& name) {
  // MIN:MAX:STEPS
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? std::string::npos : text.find(':', a + 1);
  if (b == std::string::npos) throw InvalidArgument(name + " must look like MIN:MAX:STEPS");
  Range r;
  r.lo = parse_double(std::string_view(text).substr(0, a));
  r.hi = parse_double(std::string_view(text).substr(a + 1, b - a - 1));
  const double steps = parse_double(std::string_view(text).substr(b + 1));
  if (steps != std::floor(steps) || steps > 1e7) throw InvalidArgument(name + " steps must be an integer");
  r.steps = static_cast<int>(steps);
  r.validate(name);
  return r;
}

inline void check_energies(const std::vector<double>& es) {
  if (es.empty()) throw InvalidArgument("energy list is empty");
  for (double e : es) {
    if (!(std::isfinite(e) && e >= 0.0)) throw InvalidArgument("energies must be finite and >= 0");
  }
}

inline unsigned worker_count(int requested, std::size_t jobs) {
  unsigned n = requested > 0 ? static_cast<unsigned>(requested) : std::thread::hardware_concurrency();
  n = std::max(1u, n);
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

/// f(i) for i in [0, n) on a thread pool; results land by index.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int threads, F f) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned w = worker_count(threads, n);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < w; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline json certificate_json(const KktCertificate& c, bool full) {
  json j;
  j["status"] = to_string(c.status);
  if (full) {
    j["mu"] = c.mu;
    j["gamma"] = c.gamma;
    j["betas"] = c.betas;
    j["residuals"] = {{"stationarity", c.stationarity_residual},
                      {"slackness", c.slackness_residual},
                      {"primal", c.primal_residual},
                      {"dual", c.dual_violation}};
    j["gap"] = c.duality_gap;
    j["primal_value"] = c.primal_value;
    j["dual_value"] = c.dual_value;
    j["energy_active"] = c.energy_active;
    j["support"] = c.support;
  } else {
    j["max_residual"] = c.max_residual();
    j["gap"] = c.duality_gap;
  }
  return j;
}

struct Check {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  bool passed = false;
};

// Oracle cross-checks for a certified teleportation solve.
inline std::vector<Check> verify_fidelity(const FidelityResult& r) {
  std::vector<Check> checks;
  const double f = r.value_truncated;

  // The optimum at M is at most the lattice optimum at any M' <= M.
  const int m_grid = std::min(r.trunc, kVerifyGridTrunc);
  const auto grid = oracle::grid_search_qp(QpProblem::teleportation(r.energy, r.xi, m_grid), 0.01);
  checks.push_back({"grid_upper_bound", f, grid.best_value, f <= grid.best_value + 1e-9});
  if (r.trunc <= kVerifyGridTrunc) {
    checks.push_back({"grid_proximity", f, grid.best_value, grid.best_value - f <= 1e-3});
  }

  if (r.energy <= 1.0) {
    if (auto a = analytic_two_point(r.energy, r.xi, r.trunc)) {
      checks.push_back({"analytic_two_point", f, a->value, std::abs(a->value - f) <= kAnalyticVerifyTol});
    }
  }
  if (r.energy >= 1.0 && r.energy <= 2.0 && r.xi > 0.0) {
    if (auto a = analytic_three_point(r.energy, r.xi, r.trunc)) {
      checks.push_back({"analytic_three_point", f, a->value, std::abs(a->value - f) <= kAnalyticVerifyTol});
    }
  }

  const KernelMatrix k = build_kernel(r.trunc, r.xi);
  const Eigen::VectorXd g = gradient(r.spectrum, k);
  const Eigen::VectorXd fd = oracle::finite_diff_gradient(r.spectrum, k, 1e-6);
  const double rel = (g - fd).lpNorm<Eigen::Infinity>() / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  checks.push_back({"finite_difference_gradient", rel, 0.0, rel <= 1e-6});
  return checks;
}

inline json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"value", c.value}, {"reference", c.reference}, {"passed", c.passed}});
  }
  return arr;
}

inline std::string dump(const json& j) { return j.dump() + "\n"; }

inline json table_json(const SweepTable& t) {
  json meta = json::object();
  for (const auto& [k, v] : t.metadata) meta[k] = v;
  return {{"metadata", meta}, {"columns", t.columns}, {"rows", t.rows}};
}

inline std::string render_table(const SweepTable& t, const std::string& format) {
  return format == "json" ? dump(table_json(t)) : t.to_csv();
}

inline void base_metadata(SweepTable& t, const std::string& command) {
  t.set_meta("tool", std::string("cvbench ") + kVersion);
  t.set_meta("command", command);
}

inline void solver_metadata(SweepTable& t, const SolveOptions& o) {
  t.set_meta("kkt_tolerance", format_double(o.kkt_tolerance));
  t.set_meta("support_threshold", format_double(o.support_threshold));
  t.set_meta("max_iterations", std::to_string(o.max_iterations));
}

// Column j non-increasing (dir = -1) or non-decreasing (dir = +1) down the rows.
inline int column_violations(const SweepTable& t, std::size_t j, int dir) {
  int bad = 0;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const double d = (t.rows[i][j] - t.rows[i - 1][j]) * dir;
    if (d < -kMonotoneSlack) ++bad;
  }
  return bad;
}

// Across columns [first, last) per row, in the order given by `order`.
inline int row_violations(const SweepTable& t, const std::vector<std::size_t>& order, int dir) {
  int bad = 0;
  for (const auto& row : t.rows) {
    for (std::size_t k = 1; k < order.size(); ++k) {
      const double d = (row[order[k]] - row[order[k - 1]]) * dir;
      if (d < -kMonotoneSlack) ++bad;
    }
  }
  return bad;
}

inline std::vector<std::size_t> ascending_order(const std::vector<double>& keys, std::size_t offset) {
  std::vector<std::size_t> idx(keys.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  for (auto& i : idx) i += offset;
  return idx;
}

// ---- teleport fidelity ----

struct FidelityArgs {
  double xi = 0.0;
  double energy = 0.0;
  int trunc = 50;
  std::optional<double> gap;
  bool certificate = false;
  bool verify = false;
  Common common;
};

inline Report teleport_fidelity(const FidelityArgs& a) {
  if (!(std::isfinite(a.xi) && a.xi >= 0.0)) throw InvalidArgument("--xi must be finite and >= 0");
  if (!(std::isfinite(a.energy) && a.energy >= 0.0)) throw InvalidArgument("--energy must be finite and >= 0");
  const SolveOptions opts = solve_options(a.common);
  Report rep;

  int trunc = a.trunc;
  std::optional<truncation::TruncationChoice> choice;
  if (a.gap) {
    choice = truncation::choose_truncation(a.energy, a.xi, *a.gap, kDefaultKernelCap, opts);
    trunc = choice->trunc;
    if (choice->status == truncation::TruncationStatus::CapReached) {
      rep.diagnostics.push_back("gap target " + format_double(*a.gap) + " not reached by M = " +
                                std::to_string(trunc) + "; best gap " + format_double(choice->gap));
    }
  }
  const FidelityResult r = energy_constrained_fidelity(a.energy, a.xi, trunc, opts);
  if (r.status != SolveStatus::Certified) {
    rep.flag(kNotCertified, std::string("solver status ") + to_string(r.status));
  }

  std::vector<Check> checks;
  if (a.verify) {
    checks = verify_fidelity(r);
    for (const auto& c : checks) {
      if (!c.passed) {
        rep.flag(kCheckFailed, "verification " + c.name + " failed: " + format_double(c.value) +
                                   " vs " + format_double(c.reference));
      }
    }
  }
  if (!(r.lower_bound <= r.value_truncated)) rep.flag(kCheckFailed, "lower bound exceeds truncated value");

  const std::vector<int> support = r.spectrum.support();
  if (a.common.format == "json") {
    json j;
    j["value_truncated"] = r.value_truncated;
    j["lower_bound"] = r.lower_bound;
    j["upper_bound"] = r.upper_bound;
    j["lower_bound_vacuous"] = r.lower_bound_vacuous;
    j["trunc"] = r.trunc;
    j["energy"] = r.energy;
    j["xi"] = r.xi;
    j["status"] = to_string(r.status);
    j["iterations"] = r.iterations;
    j["spectrum"] = {{"support", support}, {"probs", r.spectrum.values()}};
    j["certificate"] = certificate_json(r.certificate, a.certificate);
    if (choice) {
      j["truncation_choice"] = {{"gap_target", *a.gap},
                                {"gap", choice->gap},
                                {"status", choice->status == truncation::TruncationStatus::Reached
                                               ? "Reached"
                                               : "CapReached"}};
    }
    if (a.verify) j["verification"] = checks_json(checks);
    if (!r.notes.empty()) j["notes"] = r.notes;
    rep.data = dump(j);
    return rep;
  }

  SweepTable t;
  base_metadata(t, "teleport fidelity");
  solver_metadata(t, opts);
  t.set_meta("status", to_string(r.status));
  t.set_meta("support", join_ints(support));
  t.set_meta("support_probs", [&] {
    std::vector<double> v;
    for (int n : support) v.push_back(r.spectrum[static_cast<std::size_t>(n)]);
    return join(v, ';');
  }());
  t.set_meta("certificate_status", to_string(r.certificate.status));
  t.set_meta("certificate_max_residual", format_double(r.certificate.max_residual()));
  t.set_meta("gap", format_double(r.certificate.duality_gap));
  if (a.certificate) {
    t.set_meta("mu", format_double(r.certificate.mu));
    t.set_meta("gamma", format_double(r.certificate.gamma));
    t.set_meta("betas", join(r.certificate.betas, ';'));
    t.set_meta("stationarity_residual", format_double(r.certificate.stationarity_residual));
    t.set_meta("slackness_residual", format_double(r.certificate.slackness_residual));
    t.set_meta("primal_residual", format_double(r.certificate.primal_residual));
    t.set_meta("dual_violation", format_double(r.certificate.dual_violation));
  }
  if (choice) t.set_meta("gap_target", format_double(*a.gap));
  for (const auto& c : checks) t.set_meta("verify_" + c.name, c.passed ? "pass" : "FAIL");
  if (!r.notes.empty()) t.set_meta("notes", r.notes);
  t.columns = {"energy", "xi", "trunc", "value_truncated", "lower_bound", "upper_bound"};
  t.add_row({r.energy, r.xi, static_cast<double>(r.trunc), r.value_truncated, r.lower_bound, r.upper_bound});
  rep.data = t.to_csv();
  return rep;
}

// ---- teleport sweep / compare ----

struct SweepArgs {
  Range xi{0.0, 1.0, 21};
  std::vector<double> energies{0.6, 1.2, 1.9};
  int trunc = 50;
  std::string preset;
  Common common;
};

inline void apply_teleport_preset(SweepArgs& a, bool compare) {
  if (a.preset.empty()) return;
  if (compare) {
    if (a.preset != "fig2") throw InvalidArgument("teleport compare knows only --preset fig2");
    a.energies = {1.9};
  } else {
    if (a.preset != "fig1") throw InvalidArgument("teleport sweep knows only --preset fig1");
    a.energies = {0.6, 1.2, 1.9};
  }
  a.xi = {0.0, 1.0, 21};
  a.trunc = 50;
}

inline Report teleport_sweep(SweepArgs a) {
  apply_teleport_preset(a, false);
  a.xi.validate("xi");
  if (a.xi.lo < 0.0) throw InvalidArgument("xi must be >= 0");
  check_energies(a.energies);
  if (a.trunc < 0) throw InvalidArgument("--trunc must be >= 0");
  const SolveOptions opts = solve_options(a.common);
  const std::size_t ne = a.energies.size();
  const std::size_t cells = static_cast<std::size_t>(a.xi.steps) * ne;

  const auto sols = parallel_map<QpSolution>(cells, a.common.threads, [&](std::size_t c) {
    const double xi = a.xi.at(static_cast<int>(c / ne));
    return solve(QpProblem::teleportation(a.energies[c % ne], xi, a.trunc), opts);
  });

  Report rep;
  SweepTable t;
  base_metadata(t, "teleport sweep");
  if (!a.preset.empty()) {
    t.set_meta("preset", a.preset);
    t.set_meta("preset_note", "representative energies");
  }
  t.set_meta("trunc", std::to_string(a.trunc));
  t.set_meta("energies", join(a.energies, ';'));
  t.set_meta("xi_min", format_double(a.xi.lo));
  t.set_meta("xi_max", format_double(a.xi.hi));
  t.set_meta("xi_steps", std::to_string(a.xi.steps));
  solver_metadata(t, opts);
  t.columns.push_back("xi");
  for (double e : a.energies) t.columns.push_back("F_E=" + format_double(e));
  for (int i = 0; i < a.xi.steps; ++i) {
    std::vector<double> row{a.xi.at(i)};
    for (std::size_t k = 0; k < ne; ++k) {
      const QpSolution& s = sols[static_cast<std::size_t>(i) * ne + k];
      row.push_back(s.value);
      if (!s.certified()) {
        rep.flag(kNotCertified, "uncertified cell xi=" + format_double(row[0]) + " E=" +
                                    format_double(a.energies[k]) + ": " + to_string(s.status));
      }
    }
    t.add_row(std::move(row));
  }

  for (std::size_t k = 0; k < ne; ++k) {
    if (int v = column_violations(t, k + 1, -1)) {
      rep.flag(kCheckFailed, t.columns[k + 1] + " increases with xi at " + std::to_string(v) + " rows");
    }
  }
  if (int v = row_violations(t, ascending_order(a.energies, 1), -1)) {
    rep.flag(kCheckFailed, "fidelity increases with energy at " + std::to_string(v) + " cells");
  }
  rep.data = render_table(t, a.common.format);
  return rep;
}

inline Report teleport_compare(SweepArgs a, double energy) {
  a.energies = {energy};
  apply_teleport_preset(a, true);
  a.xi.validate("xi");
  if (a.xi.lo < 0.0) throw InvalidArgument("xi must be >= 0");
  check_energies(a.energies);
  if (a.trunc < 0) throw InvalidArgument("--trunc must be >= 0");
  const double e = a.energies.front();
  const SolveOptions opts = solve_options(a.common);

  const auto reports = parallel_map<baselines::BaselineReport>(
      static_cast<std::size_t>(a.xi.steps), a.common.threads,
      [&](std::size_t i) { return baselines::compare(e, a.xi.at(static_cast<int>(i)), a.trunc, opts); });

  Report rep;
  SweepTable t;
  base_metadata(t, "teleport compare");
  if (!a.preset.empty()) t.set_meta("preset", a.preset);
  t.set_meta("energy", format_double(e));
  t.set_meta("trunc", std::to_string(a.trunc));
  t.set_meta("xi_min", format_double(a.xi.lo));
  t.set_meta("xi_max", format_double(a.xi.hi));
  t.set_meta("xi_steps", std::to_string(a.xi.steps));
  solver_metadata(t, opts);
  t.columns = {"xi", "optimal", "tmsv", "coherent"};
  int unordered = 0;
  for (const auto& r : reports) {
    if (r.status != SolveStatus::Certified) {
      rep.flag(kNotCertified, "uncertified row xi=" + format_double(r.xi) + ": " + to_string(r.status));
    }
    if (!(r.optimal_fid <= r.tmsv_fid + kMonotoneSlack && r.tmsv_fid <= r.coherent_fid + kMonotoneSlack)) {
      ++unordered;
    }
    t.add_row({r.xi, r.optimal_fid, r.tmsv_fid, r.coherent_fid});
  }
  if (unordered) {
    rep.flag(kCheckFailed, "optimal <= tmsv <= coherent fails at " + std::to_string(unordered) + " rows");
  }
  for (std::size_t j = 1; j < 4; ++j) {
    if (int v = column_violations(t, j, -1)) {
      rep.flag(kCheckFailed, t.columns[j] + " increases with xi at " + std::to_string(v) + " rows");
    }
  }
  rep.data = render_table(t, a.common.format);
  return rep;
}

// ---- detector ----

struct EtaArg {
  std::optional<double> eta;
  std::optional<double> eta_db;

  [[nodiscard]] double value(const std::string& name) const {
    if (eta && eta_db) throw InvalidArgument("give --" + name + " or --" + name + "-db, not both");
    if (eta_db) return detector::eta_from_db(*eta_db);
    if (eta) return *eta;
    throw InvalidArgument("--" + name + " is required");
  }
};

struct DiamondArgs {
  EtaArg eta;
  double energy = 0.0;
  bool verify = false;
  Common common;
};

inline int oracle_trunc(double energy) { return split_energy(energy).ceil + 8; }

inline std::string scalar_output(const std::string& format, const std::string& name, double value,
                                 const json& fields) {
  if (format == "json") {
    json j = fields;
    j[name] = value;
    return dump(j);
  }
  if (format == "csv") {
    SweepTable t;
    base_metadata(t, "detector");
    for (auto it = fields.begin(); it != fields.end(); ++it) {
      if (it.value().is_number()) t.columns.push_back(it.key());
    }
    t.columns.push_back(name);
    std::vector<double> row;
    for (auto it = fields.begin(); it != fields.end(); ++it) {
      if (it.value().is_number()) row.push_back(it.value().get<double>());
    }
    row.push_back(value);
    t.add_row(std::move(row));
    return t.to_csv();
  }
  return format_double(value) + "\n";
}

inline Report detector_diamond(const DiamondArgs& a) {
  const double eta = a.eta.value("eta");
  Report rep;
  const double d = detector::diamond_distance(eta, a.energy);
  json fields = {{"eta", eta}, {"energy", a.energy}};
  if (a.verify) {
    const double lp = detector::lp_oracle_diamond(eta, a.energy, oracle_trunc(a.energy));
    fields["lp_oracle"] = lp;
    if (!(std::abs(lp - d) <= kDetectorVerifyTol)) {
      rep.flag(kCheckFailed, "closed form " + format_double(d) + " differs from LP oracle " + format_double(lp));
    }
  }
  const SpectrumVector state = detector::optimal_detector_state(a.energy);
  if (a.common.format == "json") fields["optimal_state"] = state.values();
  rep.data = scalar_output(a.common.format, "diamond_distance", d, fields);
  return rep;
}

struct SineArgs {
  EtaArg eta1;
  EtaArg eta2;
  double energy = 0.0;
  bool verify = false;
  Common common;
};

inline Report detector_sine(const SineArgs& a) {
  const detector::DetectorPair pair(a.eta1.value("eta1"), a.eta2.value("eta2"), a.energy);
  Report rep;
  const double s = detector::sine_distance(pair);
  json fields = {{"eta1", pair.eta1()}, {"eta2", pair.eta2()}, {"energy", a.energy}};
  if (a.verify) {
    // The two-level average is the LP minimum of sum lambda_n mu^n.
    const double lp = detector::lp_oracle_diamond(pair.overlap(), a.energy, oracle_trunc(a.energy));
    const double avg = 1.0 - lp;
    const double ref = std::sqrt(std::max(0.0, 1.0 - avg * avg));
    fields["lp_oracle"] = ref;
    if (!(std::abs(ref - s) <= kDetectorVerifyTol)) {
      rep.flag(kCheckFailed, "closed form " + format_double(s) + " differs from LP oracle " + format_double(ref));
    }
    const double swapped = detector::sine_distance(detector::DetectorPair(pair.eta2(), pair.eta1(), a.energy));
    if (swapped != s) rep.flag(kCheckFailed, "sine distance is not symmetric");
  }
  rep.data = scalar_output(a.common.format, "sine_distance", s, fields);
  return rep;
}

struct DetectorSweepArgs {
  std::string eta_range = "0:1:51";
  std::vector<double> energies{0.5, 1.0, 1.5, 2.0, 5.0};
  std::string preset;
  bool verify = false;
  Common common;
};

inline Report detector_sweep(DetectorSweepArgs a) {
  if (!a.preset.empty()) {
    if (a.preset != "fig3") throw InvalidArgument("detector sweep knows only --preset fig3");
    a.eta_range = "0:1:51";
    a.energies = {0.5, 1.0, 1.5, 2.0, 5.0};
  }
  const Range eta = parse_range(a.eta_range, "eta");
  if (eta.lo < 0.0 || eta.hi > 1.0) throw InvalidArgument("eta range must lie in [0, 1]");
  check_energies(a.energies);
  const std::size_t ne = a.energies.size();

  Report rep;
  SweepTable t;
  base_metadata(t, "detector sweep");
  if (!a.preset.empty()) {
    t.set_meta("preset", a.preset);
    t.set_meta("preset_note", "representative energies");
  }
  t.set_meta("energies", join(a.energies, ';'));
  t.set_meta("eta_min", format_double(eta.lo));
  t.set_meta("eta_max", format_double(eta.hi));
  t.set_meta("eta_steps", std::to_string(eta.steps));
  t.columns.push_back("eta");
  for (double e : a.energies) t.columns.push_back("D_E=" + format_double(e));
  int mismatches = 0;
  for (int i = 0; i < eta.steps; ++i) {
    const double x = eta.at(i);
    std::vector<double> row{x};
    for (double e : a.energies) {
      const double d = detector::diamond_distance(x, e);
      if (a.verify && !(std::abs(detector::lp_oracle_diamond(x, e, oracle_trunc(e)) - d) <= kDetectorVerifyTol)) {
        ++mismatches;
      }
      row.push_back(d);
    }
    t.add_row(std::move(row));
  }
  if (a.verify) t.set_meta("verify_lp_oracle", mismatches ? "FAIL" : "pass");
  if (mismatches) rep.flag(kCheckFailed, std::to_string(mismatches) + " cells differ from the LP oracle");
  for (std::size_t k = 0; k < ne; ++k) {
    if (int v = column_violations(t, k + 1, -1)) {
      rep.flag(kCheckFailed, t.columns[k + 1] + " increases with eta at " + std::to_string(v) + " rows");
    }
  }
  if (int v = row_violations(t, ascending_order(a.energies, 1), +1)) {
    rep.flag(kCheckFailed, "distance decreases with energy at " + std::to_string(v) + " cells");
  }
  rep.data = render_table(t, a.common.format);
  return rep;
}

inline const char* kExitCodes =
    "Exit codes:\n"
    "  0   success (every solve certified, every check passed)\n"
    "  2   a solve stopped at the iteration cap (MaxIterations)\n"
    "  3   --verify mismatch or a table invariant violated\n"
    "  64  malformed flags, invalid values or unwritable --out\n"
    "Environment: CVBENCH_FORMAT, CVBENCH_OUT, CVBENCH_THREADS, CVBENCH_MAX_ITERATIONS,\n"
    "  CVBENCH_TRUNC. Command-line flags take precedence over the environment.\n";

}  // namespace detail

/// Runs one invocation. args excludes the program name.
/// `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Certified energy-constrained benchmarks for CV teleportation and photodetectors", "cvbench"};
  app.footer(kExitCodes);
  app.set_version_flag("--version", std::string("cvbench ") + kVersion);
  app.require_subcommand(1);

  std::function<Report()> action;

  auto* teleport = app.add_subcommand("teleport", "additive-noise teleportation benchmarks");
  teleport->require_subcommand(1);

  FidelityArgs fa;
  double fa_gap = 0.0;
  auto* fid = teleport->add_subcommand("fidelity", "certified energy-constrained fidelity at one (E, xi)");
  fid->add_option("--xi", fa.xi, "additive noise variance")->required();
  fid->add_option("--energy", fa.energy, "mean photon number bound")->required();
  auto* fid_trunc = fid->add_option("--trunc", fa.trunc, "truncation M")
                        ->check(CLI::NonNegativeNumber)
                        ->envname("CVBENCH_TRUNC")
                        ->capture_default_str();
  fid->add_option("--gap", fa_gap, "choose M by the sandwich gap target instead of --trunc")
      ->check(CLI::Range(0.0, 1.0))
      ->excludes(fid_trunc);
  fid->add_flag("--certificate", fa.certificate, "print the full KKT certificate");
  fid->add_flag("--verify", fa.verify, "cross-check against the brute-force oracles");
  add_common(fid, fa.common, "json", {"json", "csv"});
  fid->callback([&] {
    if (fid->count("--gap")) fa.gap = fa_gap;
    action = [&] { return teleport_fidelity(fa); };
  });

  SweepArgs sa;
  auto* sweep = teleport->add_subcommand("sweep", "F_E against xi for several energies");
  sweep->add_option("--xi-min", sa.xi.lo)->capture_default_str();
  sweep->add_option("--xi-max", sa.xi.hi)->capture_default_str();
  sweep->add_option("--xi-steps", sa.xi.steps)->capture_default_str();
  sweep->add_option("--energies", sa.energies, "comma-separated energies")->delimiter(',')->capture_default_str();
  sweep->add_option("--trunc", sa.trunc)->check(CLI::NonNegativeNumber)->envname("CVBENCH_TRUNC")->capture_default_str();
  sweep->add_option("--preset", sa.preset, "fig1: E in {0.6,1.2,1.9}, xi in [0,1], M = 50")
      ->check(CLI::IsMember({"fig1"}));
  add_common(sweep, sa.common, "csv", {"csv", "json"});
  sweep->callback([&] { action = [&] { return teleport_sweep(sa); }; });

  SweepArgs ca;
  ca.energies = {1.9};
  double ca_energy = 1.9;
  auto* cmp = teleport->add_subcommand("compare", "optimal versus TMSV and coherent test states");
  cmp->add_option("--energy", ca_energy)->capture_default_str();
  cmp->add_option("--xi-min", ca.xi.lo)->capture_default_str();
  cmp->add_option("--xi-max", ca.xi.hi)->capture_default_str();
  cmp->add_option("--xi-steps", ca.xi.steps)->capture_default_str();
  cmp->add_option("--trunc", ca.trunc)->check(CLI::NonNegativeNumber)->envname("CVBENCH_TRUNC")->capture_default_str();
  cmp->add_option("--preset", ca.preset, "fig2: E = 1.9, xi in [0,1], M = 50")->check(CLI::IsMember({"fig2"}));
  add_common(cmp, ca.common, "csv", {"csv", "json"});
  cmp->callback([&] { action = [&] { return teleport_compare(ca, ca_energy); }; });

  auto* det = app.add_subcommand("detector", "ideal versus lossy photodetector");
  det->require_subcommand(1);

  DiamondArgs da;
  double da_eta = 0.0;
  double da_db = 0.0;
  auto* dia = det->add_subcommand("diamond", "energy-constrained diamond distance (halved)");
  auto* dia_eta = dia->add_option("--eta", da_eta, "transmissivity in [0,1]");
  dia->add_option("--eta-db", da_db, "loss in dB")->excludes(dia_eta);
  dia->add_option("--energy", da.energy)->required();
  dia->add_flag("--verify", da.verify, "compare with the LP oracle");
  add_common(dia, da.common, "text", {"text", "json", "csv"});
  dia->callback([&] {
    if (dia->count("--eta")) da.eta.eta = da_eta;
    if (dia->count("--eta-db")) da.eta.eta_db = da_db;
    action = [&] { return detector_diamond(da); };
  });

  SineArgs si;
  double si_e1 = 0.0;
  double si_e2 = 0.0;
  auto* sine = det->add_subcommand("sine", "energy-constrained sine distance between two lossy detectors");
  sine->add_option("--eta1", si_e1)->required();
  sine->add_option("--eta2", si_e2)->required();
  sine->add_option("--energy", si.energy)->required();
  sine->add_flag("--verify", si.verify, "compare with the LP oracle");
  add_common(sine, si.common, "text", {"text", "json", "csv"});
  sine->callback([&] {
    si.eta1.eta = si_e1;
    si.eta2.eta = si_e2;
    action = [&] { return detector_sine(si); };
  });

  DetectorSweepArgs ds;
  auto* dsw = det->add_subcommand("sweep", "diamond distance against eta for several energies");
  dsw->add_option("--eta-range", ds.eta_range, "MIN:MAX:STEPS")->capture_default_str();
  dsw->add_option("--energies", ds.energies)->delimiter(',')->capture_default_str();
  dsw->add_option("--preset", ds.preset, "fig3: eta in [0,1], E in {0.5,1,1.5,2,5}")->check(CLI::IsMember({"fig3"}));
  dsw->add_flag("--verify", ds.verify, "compare every cell with the LP oracle");
  add_common(dsw, ds.common, "csv", {"csv", "json"});
  dsw->callback([&] { action = [&] { return detector_sweep(ds); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "cvbench " << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  Report rep;
  try {
    rep = action();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ResourceLimit& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  std::string out_path;
  for (const auto* cmd : {fid, sweep, cmp, dia, sine, dsw}) {
    if (cmd->parsed()) {
      if (cmd == fid) out_path = fa.common.out_path;
      if (cmd == sweep) out_path = sa.common.out_path;
      if (cmd == cmp) out_path = ca.common.out_path;
      if (cmd == dia) out_path = da.common.out_path;
      if (cmd == sine) out_path = si.common.out_path;
      if (cmd == dsw) out_path = ds.common.out_path;
    }
  }
  if (out_path.empty()) {
    out << rep.data;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    f << rep.data;
    if (!f) {
      err << "error: cannot write " << out_path << "\n";
      return kUsage;
    }
  }
  for (const auto& d : rep.diagnostics) err << d << "\n";
  return rep.code;
}

}  // namespace cvbench::cli
