#pragma once

// Fixed-point solver for the minimal strongly positive deviation bound.
//
// Given the Gram blocks (A11, A12, A22) of a truncated block Hankel
// matrix, the squared minimal bound rho^2_min is the unique strongly
// positive fixed point of
//
//     F(q^2) = A11 + A12 ((I (x) q^2) - A22)^-1 A12*
//
// provided (I (x) A11) - A22 is strongly positive. Successive
// approximation from q_0^2 = A11 brackets the fixed point: even iterates
// increase, odd iterates decrease, and every even iterate sits below every
// odd one in the semidefinite order. The solver runs that iteration,
// records the full orbit, verifies the bracketing, classifies which
// solution path applies, and can certify a converged answer after the
// fact.
//
// All tolerances are relative to scale = 1 + ||A11||_F + ||A22||_F.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nehari/errors.hpp"
#include "nehari/hankel.hpp"
#include "nehari/matrix_kernel.hpp"

namespace nehari {

/// Couplings whose Frobenius norm is below this (relative) threshold are
/// treated as exactly zero: the map is constant and the answer is A11.
inline constexpr double kTrivialCouplingRelTol = 1e-14;

struct SolverConfig {
  double delta = 1e-9;     // strong-positivity margin, relative to scale
  double fix_tol = 1e-12;  // fixed-point residual gate, relative
  double step_tol = 1e-12; // step-size stopping gate, relative
  int max_iter = 10000;    // iteration budget
  double mono_tol = 1e-10; // semidefinite-order slack for bracketing checks
  double rank_tol = 1e-10; // singular-value cliff for kernel detection

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(delta)) throw InputError("SolverConfig: delta must be finite and > 0");
    if (!positive(fix_tol)) throw InputError("SolverConfig: fix_tol must be finite and > 0");
    if (!positive(step_tol)) throw InputError("SolverConfig: step_tol must be finite and > 0");
    if (!positive(mono_tol)) throw InputError("SolverConfig: mono_tol must be finite and > 0");
    if (!positive(rank_tol)) throw InputError("SolverConfig: rank_tol must be finite and > 0");
    if (max_iter < 1) throw InputError("SolverConfig: max_iter must be at least 1");
  }
};

/// Reference magnitude all relative tolerances multiply.
inline double problem_scale(const GramBlocks& g) {
  return 1.0 + g.a11.frobenius_norm() + g.a22.frobenius_norm();
}

enum class SolveStatus { Converged, GapPositive, PreconditionFailed, MaxIterations };

enum class SolvePath {
  Direct,       // coupling Gram A12 A12* strongly positive: plain iteration
  Reduction,    // singular coupling Gram: eliminate its kernel, recurse
  ZeroCoupling  // A12 vanishes: the map is constant and rho^2_min = A11
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::GapPositive: return "gap-positive";
    case SolveStatus::PreconditionFailed: return "precondition-failed";
    case SolveStatus::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

inline const char* to_string(SolvePath p) {
  switch (p) {
    case SolvePath::Direct: return "direct";
    case SolvePath::Reduction: return "reduction";
    case SolvePath::ZeroCoupling: return "zero-coupling";
  }
  return "unknown";
}

/// One recorded iterate of the fixed-point orbit.
struct IterateRecord {
  HermitianMatrix q_sq;
  double inner_min_eig = 0.0;      // smallest eigenvalue of (I (x) q^2) - A22
  double step_norm = 0.0;          // Frobenius distance to the previous iterate
  double residual_estimate = 0.0;  // Frobenius distance to the image F(q^2)
};

/// The full recorded orbit. records[n] is the n-th iterate, starting at
/// the initial point (n = 0).
struct IterateState {
  std::vector<IterateRecord> records;

  Index n() const { return static_cast<Index>(records.size()) - 1; }
  const HermitianMatrix& current() const {
    if (records.empty()) throw StateError("IterateState: no iterates recorded");
    return records.back().q_sq;
  }
};

struct ConvergenceResult {
  SolveStatus status = SolveStatus::MaxIterations;
  SolvePath path = SolvePath::Direct;
  std::optional<HermitianMatrix> rho_sq_min;  // set when status == Converged
  std::optional<HermitianMatrix> lower_limit; // last even iterate
  std::optional<HermitianMatrix> upper_limit; // last odd iterate
  int iterations = 0;
  IterateState trace;
  std::optional<bool> bracketing_ok;          // only for runs started at A11
  std::vector<Index> kernel_dims;             // kernel size per reduction level
  double scale = 1.0;
  std::string diagnostic;
};

struct Certificate {
  double fixed_point_residual = 0.0;  // ||F(rho^2) - rho^2||_F
  double feasibility_margin = 0.0;    // min eig of (I (x) rho^2) - H* H
  double singularity_witness = 0.0;   // same eigenvalue; ~0 certifies minimality
  bool strongly_positive = false;     // rho^2 clears the configured margin
};

namespace detail {

inline ComplexMatrix ldlt_solve(const ComplexMatrix& a, const ComplexMatrix& b,
                                const char* who) {
  Eigen::LDLT<ComplexMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw Error(std::string(who) + ": LDLT factorization failed");
  return ldlt.solve(b);
}

/// Smallest eigenvalue of (I (x) q^2) - A22.
inline double inner_gap(const HermitianMatrix& q_sq, const GramBlocks& g) {
  return min_eigenvalue(
      HermitianMatrix(replicate_diag(q_sq, g.inner_order) - g.a22.mat()));
}

/// One application of the map F. Fails with IterationBreakdownError when
/// the resolvent term loses the margin.
inline HermitianMatrix apply_map(const HermitianMatrix& q_sq, const GramBlocks& g,
                                 double delta_abs) {
  if (q_sq.order() != g.block_dim)
    throw InputError("apply_map: iterate order does not match the block dimension");
  const ComplexMatrix inner = replicate_diag(q_sq, g.inner_order) - g.a22.mat();
  const double me = min_eigenvalue(HermitianMatrix(inner));
  if (!(me > delta_abs)) {
    std::ostringstream msg;
    msg << "fixed-point step lost strong positivity: smallest eigenvalue of "
           "(I (x) q^2) - A22 is " << me << ", required margin " << delta_abs;
    throw IterationBreakdownError(msg.str(), me);
  }
  const ComplexMatrix x = ldlt_solve(inner, g.a12.adjoint(), "apply_map");
  return HermitianMatrix(g.a11.mat() + g.a12 * x);
}

struct PreconditionMargins {
  double head;   // smallest eigenvalue of A11
  double inner;  // smallest eigenvalue of (I (x) A11) - A22
};

inline PreconditionMargins precondition_margins(const GramBlocks& g) {
  return {min_eigenvalue(g.a11), inner_gap(g.a11, g)};
}

/// Decide between GapPositive and MaxIterations once the budget is spent:
/// both parity subsequences must have settled while the cross gap stays
/// open. Pure function of the recorded orbit so it can be unit tested on
/// synthetic records.
inline SolveStatus classify_stalled(const std::vector<IterateRecord>& records,
                                    const SolverConfig& cfg, double scale) {
  if (records.size() < 5) return SolveStatus::MaxIterations;
  const std::size_t last = records.size() - 1;
  const std::size_t a = last;        // one parity
  const std::size_t b = last - 1;    // the other
  const double settle_tol = 10.0 * cfg.step_tol * scale;
  const double gap_a = (records[a].q_sq.mat() - records[a - 2].q_sq.mat()).norm();
  const double gap_b = (records[b].q_sq.mat() - records[b - 2].q_sq.mat()).norm();
  const double cross = (records[a].q_sq.mat() - records[b].q_sq.mat()).norm();
  const double open_tol = std::max(100.0 * cfg.step_tol, cfg.mono_tol) * scale;
  if (gap_a <= settle_tol && gap_b <= settle_tol && cross > open_tol)
    return SolveStatus::GapPositive;
  return SolveStatus::MaxIterations;
}

/// Even iterates nondecreasing, odd iterates nonincreasing, and the last
/// even below the last odd, all up to `tol` in the semidefinite order.
inline bool bracketing_holds(const std::vector<IterateRecord>& records, double tol) {
  const std::size_t n = records.size();
  for (std::size_t i = 0; i + 2 < n; i += 2)
    if (!loewner_leq(records[i].q_sq, records[i + 2].q_sq, tol)) return false;
  for (std::size_t i = 1; i + 2 < n; i += 2)
    if (!loewner_leq(records[i + 2].q_sq, records[i].q_sq, tol)) return false;
  const std::size_t last_odd = (n - 1) % 2 == 1 ? n - 1 : n - 2;
  const std::size_t last_even = (n - 1) % 2 == 0 ? n - 1 : n - 2;
  if (n >= 2 && !loewner_leq(records[last_even].q_sq, records[last_odd].q_sq, tol))
    return false;
  return true;
}

}  // namespace detail

/// True when both strong-positivity preconditions hold at margin
/// delta * scale: A11 itself and (I (x) A11) - A22.
inline bool precondition_check(const GramBlocks& g, const SolverConfig& cfg) {
  cfg.validate();
  const double delta_abs = cfg.delta * problem_scale(g);
  const detail::PreconditionMargins m = detail::precondition_margins(g);
  return m.head > delta_abs && m.inner > delta_abs;
}

/// One application of the fixed-point map at the configured margin.
inline HermitianMatrix iterate_once(const HermitianMatrix& q_sq, const GramBlocks& g,
                                    const SolverConfig& cfg) {
  cfg.validate();
  return detail::apply_map(q_sq, g, cfg.delta * problem_scale(g));
}

/// Run successive approximation. `start` defaults to the canonical
/// initial point A11; a caller-supplied start must be Hermitian of the
/// right order (used for warm starts and uniqueness experiments).
/// Bracketing is only verified (and bracketing_ok only set) for the
/// canonical start, where the alternating order is guaranteed.
inline ConvergenceResult solve_rho_min(const GramBlocks& g, const SolverConfig& cfg,
                                       const std::optional<HermitianMatrix>& start = {}) {
  cfg.validate();
  ConvergenceResult out;
  out.scale = problem_scale(g);
  const double delta_abs = cfg.delta * out.scale;

  // Zero coupling: the map is constant, one step settles it.
  const bool trivial = g.a12.norm() <= kTrivialCouplingRelTol * out.scale;
  out.path = trivial ? SolvePath::ZeroCoupling : SolvePath::Direct;

  const detail::PreconditionMargins margins = detail::precondition_margins(g);
  if (!(margins.head > delta_abs && margins.inner > delta_abs)) {
    std::ostringstream msg;
    msg << "precondition failed: min eig(A11) = " << margins.head
        << ", min eig((I (x) A11) - A22) = " << margins.inner
        << ", required margin " << delta_abs;
    out.status = SolveStatus::PreconditionFailed;
    out.diagnostic = msg.str();
    return out;
  }

  const bool canonical = !start.has_value();
  HermitianMatrix q = start.value_or(g.a11);
  if (q.order() != g.block_dim)
    throw InputError("solve_rho_min: start iterate order does not match the block dimension");

  out.trace.records.push_back({q, detail::inner_gap(q, g), 0.0, 0.0});

  bool step_converged = false;
  try {
    for (int n = 0; n < cfg.max_iter; ++n) {
      HermitianMatrix next = detail::apply_map(q, g, delta_abs);
      const double step = (next.mat() - q.mat()).norm();
      out.trace.records.back().residual_estimate = step;
      out.trace.records.push_back({next, detail::inner_gap(next, g), step, 0.0});
      const bool settled = step <= cfg.step_tol * (1.0 + q.frobenius_norm());
      q = next;
      if (settled || trivial) {
        step_converged = true;
        break;
      }
    }
    // Residual estimate for the final iterate costs one extra map apply.
    HermitianMatrix image = detail::apply_map(q, g, delta_abs);
    out.trace.records.back().residual_estimate = (image.mat() - q.mat()).norm();
  } catch (const IterationBreakdownError& e) {
    out.status = SolveStatus::PreconditionFailed;
    out.diagnostic = e.what();
    out.iterations = static_cast<int>(out.trace.n());
    return out;
  }

  out.iterations = static_cast<int>(out.trace.n());

  const auto& records = out.trace.records;
  const std::size_t n_rec = records.size();
  const std::size_t last_even = (n_rec - 1) % 2 == 0 ? n_rec - 1 : n_rec - 2;
  const std::size_t last_odd = (n_rec - 1) % 2 == 1 ? n_rec - 1 : n_rec - 2;
  out.lower_limit = records[last_even].q_sq;
  if (n_rec >= 2) out.upper_limit = records[last_odd].q_sq;

  if (step_converged) {
    out.status = SolveStatus::Converged;
    out.rho_sq_min = q;
    if (canonical) out.bracketing_ok = detail::bracketing_holds(records, cfg.mono_tol * out.scale);
  } else {
    out.status = detail::classify_stalled(records, cfg, out.scale);
    std::ostringstream msg;
    msg << "iteration budget of " << cfg.max_iter << " exhausted; last step "
        << records.back().step_norm;
    if (out.status == SolveStatus::GapPositive)
      msg << "; parity subsequences settled with an open gap of "
          << (records[last_odd].q_sq.mat() - records[last_even].q_sq.mat()).norm();
    out.diagnostic = msg.str();
  }
  return out;
}

/// Which solution path applies to these blocks. ZeroCoupling when A12
/// vanishes (relative to scale); otherwise Direct when the coupling Gram
/// A12 A12* is strongly positive, Reduction when it is singular.
inline SolvePath classify(const GramBlocks& g, const SolverConfig& cfg) {
  cfg.validate();
  const double scale = problem_scale(g);
  if (g.a12.norm() <= kTrivialCouplingRelTol * scale) return SolvePath::ZeroCoupling;
  const HermitianMatrix coupling_gram(g.a12 * g.a12.adjoint());
  return min_eigenvalue(coupling_gram) > cfg.delta * scale ? SolvePath::Direct
                                                           : SolvePath::Reduction;
}

/// ||F(rho^2) - rho^2||_F at a candidate solution.
inline double fixed_point_residual(const HermitianMatrix& rho_sq, const GramBlocks& g,
                                   const SolverConfig& cfg) {
  cfg.validate();
  const HermitianMatrix image = detail::apply_map(rho_sq, g, cfg.delta * problem_scale(g));
  return (image.mat() - rho_sq.mat()).norm();
}

/// Smallest eigenvalue of (I (x) rho^2) - H* H over the full truncation.
/// Nonnegative means rho is a feasible bound; a value near zero witnesses
/// that the bound cannot be lowered.
inline double feasibility_margin_at(const HermitianMatrix& rho_sq, const TruncatedHankel& h) {
  if (rho_sq.order() != h.block_dim)
    throw InputError("feasibility_margin_at: bound order does not match the block dimension");
  return min_eigenvalue(
      HermitianMatrix(replicate_diag(rho_sq, h.block_order) - gram_full(h).mat()));
}

/// Post-hoc certificate for a converged run.
inline Certificate certify(const ConvergenceResult& result, const TruncatedHankel& h,
                           const GramBlocks& g, const SolverConfig& cfg) {
  if (result.status != SolveStatus::Converged || !result.rho_sq_min)
    throw StateError("certify: result did not converge, nothing to certify");
  cfg.validate();
  const HermitianMatrix& rho_sq = *result.rho_sq_min;
  Certificate cert;
  cert.fixed_point_residual = fixed_point_residual(rho_sq, g, cfg);
  cert.feasibility_margin = feasibility_margin_at(rho_sq, h);
  cert.singularity_witness = cert.feasibility_margin;
  cert.strongly_positive =
      is_strongly_positive(rho_sq, PositivityMargin(cfg.delta * problem_scale(g)));
  return cert;
}

}  // namespace nehari
