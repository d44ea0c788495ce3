#pragma once

// Instance files, deterministic instance generation, and the run
// orchestration behind the command-line front end.
//
// Instance format (JSON, format_version 1):
//
//   {
//     "format_version": 1,
//     "dim": 2,                       // block dimension m >= 1
//     "coefficients": [               // K blocks, index k = 1..K
//       [ [[re, im], [re, im]],       //   each block: m rows
//         [[re, im], [re, im]] ]      //   each row: m entries [re, im]
//     ],
//     "rho": [ ... ],                 // optional m x m candidate bound
//     "solver": { "delta": 1e-9, "tol": 1e-12, "max_iter": 10000 },
//     "meta": { ... }                 // optional, preserved verbatim
//   }
//
// Parse diagnostics name the first violated constraint by its JSON path.
// Emission and parsing round-trip exactly: numbers are serialized with a
// shortest representation that reparses to the identical double.

#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nehari/errors.hpp"
#include "nehari/feasibility.hpp"
#include "nehari/hankel.hpp"
#include "nehari/kernel_reduction.hpp"
#include "nehari/matrix_kernel.hpp"
#include "nehari/solver.hpp"

namespace nehari {

using Json = nlohmann::ordered_json;

// Process exit codes shared by the library-level runners and the CLI.
inline constexpr int kExitSuccess = 0;       // solved / feasible
inline constexpr int kExitInfeasible = 1;    // check: verdict infeasible
inline constexpr int kExitPrecondition = 2;  // solver precondition violated
inline constexpr int kExitInputError = 3;    // malformed input or usage
inline constexpr int kExitNoConvergence = 4; // iteration budget exhausted

inline int exit_code_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return kExitSuccess;
    case SolveStatus::PreconditionFailed: return kExitPrecondition;
    case SolveStatus::GapPositive:
    case SolveStatus::MaxIterations: return kExitNoConvergence;
  }
  return kExitInputError;
}

/// Solver settings carried by an instance file or supplied on the command
/// line. `tol` sets both the step and fixed-point gates.
struct SolverOverrides {
  std::optional<double> delta;
  std::optional<double> tol;
  std::optional<int> max_iter;
};

struct InstanceFile {
  int format_version = 1;
  Index dim = 1;
  std::vector<ComplexMatrix> coefficients;
  std::optional<ComplexMatrix> rho;
  SolverOverrides solver;
  Json meta;  // null when absent

  CoefficientSequence sequence() const { return CoefficientSequence(dim, coefficients); }
};

namespace detail {

inline ComplexMatrix parse_matrix(const Json& j, Index m, const std::string& path) {
  if (!j.is_array())
    throw InputError(path + ": expected an array of " + std::to_string(m) + " rows");
  if (static_cast<Index>(j.size()) != m)
    throw InputError(path + ": expected " + std::to_string(m) + " rows, got " +
                     std::to_string(j.size()));
  ComplexMatrix out(m, m);
  for (Index i = 0; i < m; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Index>(row.size()) != m)
      throw InputError(row_path + ": expected " + std::to_string(m) + " entries");
    for (Index k = 0; k < m; ++k) {
      const Json& e = row[static_cast<std::size_t>(k)];
      const std::string entry_path = row_path + "[" + std::to_string(k) + "]";
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw InputError(entry_path + ": entry must be a [re, im] pair of numbers");
      const double re = e[0].get<double>();
      const double im = e[1].get<double>();
      if (!std::isfinite(re) || !std::isfinite(im))
        throw InputError(entry_path + ": entry must be finite");
      out(i, k) = Complex(re, im);
    }
  }
  return out;
}

inline Json matrix_to_json(const ComplexMatrix& a) {
  Json rows = Json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < a.cols(); ++k)
      row.push_back(Json::array({a(i, k).real(), a(i, k).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) { ok = true; break; }
    if (!ok) throw InputError(where + item.key() + ": unknown field");
  }
}

}  // namespace detail

inline InstanceFile parse_instance(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("instance is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("instance: top level must be a JSON object");
  detail::reject_unknown_keys(
      j, {"format_version", "dim", "coefficients", "rho", "solver", "meta"}, "instance: ");

  InstanceFile f;

  if (!j.contains("format_version"))
    throw InputError("format_version: missing required field");
  if (!j["format_version"].is_number_integer())
    throw InputError("format_version: must be an integer");
  f.format_version = j["format_version"].get<int>();
  if (f.format_version != 1)
    throw InputError("format_version: this build reads version 1, got " +
                     std::to_string(f.format_version));

  if (!j.contains("dim")) throw InputError("dim: missing required field");
  if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
    throw InputError("dim: must be an integer >= 1");
  f.dim = static_cast<Index>(j["dim"].get<long long>());

  if (!j.contains("coefficients")) throw InputError("coefficients: missing required field");
  const Json& coeffs = j["coefficients"];
  if (!coeffs.is_array() || coeffs.empty())
    throw InputError("coefficients: must be a non-empty array of matrices");
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    f.coefficients.push_back(detail::parse_matrix(
        coeffs[k], f.dim, "coefficients[" + std::to_string(k) + "]"));

  if (j.contains("rho")) f.rho = detail::parse_matrix(j["rho"], f.dim, "rho");

  if (j.contains("solver")) {
    const Json& s = j["solver"];
    if (!s.is_object()) throw InputError("solver: must be an object");
    detail::reject_unknown_keys(s, {"delta", "tol", "max_iter"}, "solver.");
    if (s.contains("delta")) {
      if (!s["delta"].is_number()) throw InputError("solver.delta: must be a number");
      f.solver.delta = s["delta"].get<double>();
    }
    if (s.contains("tol")) {
      if (!s["tol"].is_number()) throw InputError("solver.tol: must be a number");
      f.solver.tol = s["tol"].get<double>();
    }
    if (s.contains("max_iter")) {
      if (!s["max_iter"].is_number_integer())
        throw InputError("solver.max_iter: must be an integer");
      f.solver.max_iter = s["max_iter"].get<int>();
    }
  }

  if (j.contains("meta")) f.meta = j["meta"];
  return f;
}

inline std::string emit_instance(const InstanceFile& f) {
  Json j;
  j["format_version"] = f.format_version;
  j["dim"] = f.dim;
  Json coeffs = Json::array();
  for (const ComplexMatrix& c : f.coefficients) {
    if (c.rows() != f.dim || c.cols() != f.dim)
      throw InputError("emit_instance: coefficient shape does not match dim");
    coeffs.push_back(detail::matrix_to_json(c));
  }
  j["coefficients"] = std::move(coeffs);
  if (f.rho) j["rho"] = detail::matrix_to_json(*f.rho);
  if (f.solver.delta || f.solver.tol || f.solver.max_iter) {
    Json s = Json::object();
    if (f.solver.delta) s["delta"] = *f.solver.delta;
    if (f.solver.tol) s["tol"] = *f.solver.tol;
    if (f.solver.max_iter) s["max_iter"] = *f.solver.max_iter;
    j["solver"] = std::move(s);
  }
  if (!f.meta.is_null()) j["meta"] = f.meta;
  return j.dump(2) + "\n";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InputError("read failed: " + path);
  return buf.str();
}

/// Write-then-rename so a crashed run never leaves a half-written file
/// under the target name.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp(target);
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open file for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      throw Error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw Error("rename failed for " + target.string() + ": " + ec.message());
  }
}

/// Deterministic random instance. All randomness flows through one
/// mt19937_64 seeded here; the bit-to-double mapping is spelled out so the
/// same seed gives byte-identical output on every platform. The leading
/// coefficient is dominance * c * I with c = 1 + sum of tail norms,
/// rescaled by 1.5 until the solver precondition holds.
inline InstanceFile generate_instance(Index dim, Index support, std::uint64_t seed,
                                      double dominance) {
  if (dim < 1) throw InputError("generate_instance: dim must be >= 1");
  if (support < 1) throw InputError("generate_instance: support must be >= 1");
  if (!std::isfinite(dominance) || dominance < 1.0)
    throw InputError("generate_instance: dominance must be >= 1");

  std::mt19937_64 rng(seed);
  auto unit = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  };
  auto disk = [&]() {  // uniform on the closed unit disk, by rejection
    double re, im;
    do {
      re = 2.0 * unit() - 1.0;
      im = 2.0 * unit() - 1.0;
    } while (re * re + im * im > 1.0);
    return Complex(re, im);
  };

  std::vector<ComplexMatrix> tail;
  for (Index k = 2; k <= support; ++k) {
    ComplexMatrix g(dim, dim);
    for (Index i = 0; i < dim; ++i)
      for (Index c = 0; c < dim; ++c) g(i, c) = disk() / static_cast<double>(support);
    tail.push_back(std::move(g));
  }

  double c = 1.0;
  for (const ComplexMatrix& g : tail) c += g.norm();
  double lead = dominance * c;

  const SolverConfig cfg;
  InstanceFile f;
  f.dim = dim;
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<ComplexMatrix> coeffs;
    coeffs.push_back(lead * ComplexMatrix::Identity(dim, dim));
    for (const ComplexMatrix& g : tail) coeffs.push_back(g);
    const CoefficientSequence seq(dim, coeffs);
    if (precondition_check(gram_blocks_at(seq), cfg)) {
      f.coefficients = std::move(coeffs);
      break;
    }
    lead *= 1.5;
  }
  if (f.coefficients.empty())
    throw Error("generate_instance: could not reach the solver precondition");

  f.meta = Json::object();
  f.meta["generator"] = Json{{"dim", dim},
                             {"support", support},
                             {"seed", seed},
                             {"dominance", dominance}};
  return f;
}

/// CSV trace of a recorded orbit: one row per iterate, 17 significant
/// digits so every value reparses exactly.
inline std::string render_trace_csv(const ConvergenceResult& r) {
  std::string out = "n,parity,inner_min_eig,step_norm,residual_estimate\n";
  char buf[256];
  for (std::size_t i = 0; i < r.trace.records.size(); ++i) {
    const IterateRecord& rec = r.trace.records[i];
    std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g\n", i,
                  static_cast<int>(i % 2), rec.inner_min_eig, rec.step_norm,
                  rec.residual_estimate);
    out += buf;
  }
  return out;
}

/// Full iterate matrices, for replaying an orbit offline.
inline Json render_trace_matrices(const ConvergenceResult& r) {
  Json iterates = Json::array();
  for (const IterateRecord& rec : r.trace.records)
    iterates.push_back(detail::matrix_to_json(rec.q_sq.mat()));
  Json j;
  j["iterates"] = std::move(iterates);
  return j;
}

inline std::vector<HermitianMatrix> parse_trace_matrices(const std::string& text, Index dim) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("trace is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("iterates") || !j["iterates"].is_array())
    throw InputError("iterates: missing or not an array");
  std::vector<HermitianMatrix> out;
  const Json& arr = j["iterates"];
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.emplace_back(detail::parse_matrix(arr[i], dim, "iterates[" + std::to_string(i) + "]"));
  return out;
}

inline SolverConfig resolve_config(const InstanceFile& f, const SolverOverrides& cli) {
  SolverConfig cfg;
  auto apply = [&cfg](const SolverOverrides& o) {
    if (o.delta) cfg.delta = *o.delta;
    if (o.tol) {
      cfg.step_tol = *o.tol;
      cfg.fix_tol = *o.tol;
    }
    if (o.max_iter) cfg.max_iter = *o.max_iter;
  };
  apply(f.solver);  // file first,
  apply(cli);       // command line wins
  cfg.validate();
  return cfg;
}

struct SolveRunOptions {
  SolverOverrides overrides;
  std::optional<std::string> trace_path;
  std::optional<std::string> trace_matrices_path;
};

struct SolveRun {
  ConvergenceResult result;
  std::optional<HermitianMatrix> rho_min;
  std::optional<Certificate> certificate;
  SolverConfig config;
  double wall_ms = 0.0;
  int exit_code = kExitInputError;
};

inline SolveRun run_solve(const InstanceFile& f, const SolveRunOptions& opts = {}) {
  SolveRun run;
  run.config = resolve_config(f, opts.overrides);
  const CoefficientSequence seq = f.sequence();
  const TruncatedHankel h = build_truncated_hankel(seq, default_block_order(seq));
  const GramBlocks g = gram_blocks(partition(h));

  const auto t0 = std::chrono::steady_clock::now();
  run.result = solve_minimal_bound(g, run.config);
  if (run.result.status == SolveStatus::Converged) {
    run.certificate = certify(run.result, h, g, run.config);
    run.rho_min = principal_sqrt(*run.result.rho_sq_min);
  }
  const auto t1 = std::chrono::steady_clock::now();
  run.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  run.exit_code = exit_code_for(run.result.status);

  if (opts.trace_path) write_file_atomic(*opts.trace_path, render_trace_csv(run.result));
  if (opts.trace_matrices_path)
    write_file_atomic(*opts.trace_matrices_path,
                      render_trace_matrices(run.result).dump(2) + "\n");
  return run;
}

struct CheckRun {
  FeasibilityVerdict direct;
  std::optional<FeasibilityVerdict> schur;
  int exit_code = kExitInputError;
};

inline CheckRun run_check(const InstanceFile& f, const SolverOverrides& cli = {}) {
  const SolverConfig cfg = resolve_config(f, cli);
  if (!f.rho)
    throw InputError("rho: instance has no candidate bound to check");
  const CoefficientSequence seq = f.sequence();
  const GramBlocks g = gram_blocks_at(seq);
  const DeviationBound bound = DeviationBound::from_rho(
      HermitianMatrix(*f.rho), PositivityMargin(cfg.delta * problem_scale(g)));

  CheckRun run;
  run.direct = feasibility_direct(seq, bound, cfg);
  run.schur = feasibility_schur(g, bound, cfg);
  run.exit_code = run.direct.feasible ? kExitSuccess : kExitInfeasible;
  return run;
}

// ---- report rendering ----------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string matrix_text(const ComplexMatrix& a, const std::string& indent) {
  std::ostringstream out;
  for (Index i = 0; i < a.rows(); ++i) {
    out << indent << "[";
    for (Index k = 0; k < a.cols(); ++k) {
      const Complex z = a(i, k);
      char buf[96];
      if (z.imag() == 0.0)
        std::snprintf(buf, sizeof buf, " %.15g", z.real());
      else
        std::snprintf(buf, sizeof buf, " %.15g%+.15gi", z.real(), z.imag());
      out << buf;
    }
    out << " ]\n";
  }
  return out.str();
}

}  // namespace detail

inline Json solve_report_json(const SolveRun& run) {
  const ConvergenceResult& r = run.result;
  Json j;
  j["command"] = "solve";
  j["status"] = to_string(r.status);
  j["path"] = to_string(r.path);
  j["iterations"] = r.iterations;
  j["scale"] = r.scale;
  j["config"] = Json{{"delta", run.config.delta},
                     {"step_tol", run.config.step_tol},
                     {"fix_tol", run.config.fix_tol},
                     {"max_iter", run.config.max_iter}};
  if (r.rho_sq_min) j["rho_sq_min"] = detail::matrix_to_json(r.rho_sq_min->mat());
  if (run.rho_min) j["rho_min"] = detail::matrix_to_json(run.rho_min->mat());
  if (run.certificate) {
    const Certificate& c = *run.certificate;
    j["certificate"] = Json{{"fixed_point_residual", c.fixed_point_residual},
                            {"feasibility_margin", c.feasibility_margin},
                            {"singularity_witness", c.singularity_witness},
                            {"strongly_positive", c.strongly_positive}};
  }
  if (!r.kernel_dims.empty()) j["kernel_dims"] = r.kernel_dims;
  if (r.bracketing_ok) j["bracketing_ok"] = *r.bracketing_ok;
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  j["wall_ms"] = run.wall_ms;
  j["exit_code"] = run.exit_code;
  return j;
}

inline std::string solve_report_text(const SolveRun& run) {
  const ConvergenceResult& r = run.result;
  std::ostringstream out;
  out << "status: " << to_string(r.status) << "\n";
  out << "path: " << to_string(r.path) << "\n";
  out << "iterations: " << r.iterations << "\n";
  if (!r.kernel_dims.empty()) {
    out << "kernel dims per level:";
    for (Index d : r.kernel_dims) out << " " << d;
    out << "\n";
  }
  if (r.rho_sq_min) {
    out << "rho_sq_min:\n" << detail::matrix_text(r.rho_sq_min->mat(), "  ");
    if (run.rho_min) out << "rho_min:\n" << detail::matrix_text(run.rho_min->mat(), "  ");
  }
  if (run.certificate) {
    const Certificate& c = *run.certificate;
    out << "certificate:\n";
    out << "  fixed_point_residual: " << detail::format_double(c.fixed_point_residual) << "\n";
    out << "  feasibility_margin: " << detail::format_double(c.feasibility_margin) << "\n";
    out << "  singularity_witness: " << detail::format_double(c.singularity_witness) << "\n";
    out << "  strongly_positive: " << (c.strongly_positive ? "yes" : "no") << "\n";
  }
  if (r.bracketing_ok)
    out << "bracketing_ok: " << (*r.bracketing_ok ? "yes" : "no") << "\n";
  if (!r.diagnostic.empty()) out << "diagnostic: " << r.diagnostic << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", run.wall_ms);
  out << "wall_ms: " << buf << "\n";
  return out.str();
}

inline std::string check_report_text(const CheckRun& run) {
  std::ostringstream out;
  auto line = [&out](const char* name, const FeasibilityVerdict& v) {
    out << name << ": " << (v.feasible ? "feasible" : "infeasible")
        << " (margin " << detail::format_double(v.margin);
    if (v.boundary) out << ", boundary";
    out << ")\n";
  };
  line("direct", run.direct);
  if (run.schur)
    line("schur", *run.schur);
  else
    out << "schur: not applicable (inner gap not strongly positive)\n";
  out << "verdict: " << (run.direct.feasible ? "feasible" : "infeasible") << "\n";
  return out.str();
}

}  // namespace nehari
