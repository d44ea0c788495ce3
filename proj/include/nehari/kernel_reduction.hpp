#pragma once

// Kernel elimination for singular couplings.
//
// When the coupling Gram A12 A12* is singular, plain successive
// approximation has no uniqueness guarantee. The cure is a change of
// variables followed by elimination of the directions the coupling cannot
// see:
//
//  1. Normalize: with q0 = sqrt(A11), U = q0^-1 A12 Q0^-1 and
//     D = Q0^-1 A22 Q0^-1 (Q0 = I (x) q0), the map becomes
//     G(q^2) = I + U (Q^2 - D)^-1 U*, whose fixed points q_G^2 pull back
//     through q_F^2 = q0 q_G^2 q0.
//  2. Split: an orthonormal basis of ker U* (dimension d, detected by a
//     hard relative cliff on the singular values of U) and of its
//     complement. On the kernel directions G is the identity, so the
//     fixed point is pinned to I there.
//  3. Reduce: regrouping the inner space by the same basis and
//     eliminating the kernel rows with a Schur complement over I - d22
//     yields a map of the same shape in dimension m - d. Recurse until
//     the coupling is either zero or has full rank.
//
// The recursion strictly shrinks the dimension, so it runs at most m
// levels. Every level's inner orbit is transformed back through the
// congruences, so the reported trace is an orbit of the original map (up
// to rounding) and all per-iterate metadata refers to the original
// blocks.

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nehari/errors.hpp"
#include "nehari/hankel.hpp"
#include "nehari/matrix_kernel.hpp"
#include "nehari/solver.hpp"

namespace nehari {

/// Numerical floor for the strict bound D << I and its descendants. The
/// bound holds exactly in exact arithmetic whenever the solver
/// precondition does; this guard only catches rounding collapse.
inline constexpr double kReductionGuardRelTol = 1e-13;

/// Relative tolerance for the internal consistency check that the reduced
/// map agrees with the original map compressed to the complement.
inline constexpr double kReductionCrossCheckRelTol = 1e-8;

/// The map rewritten with an identity head block.
struct NormalizedMap {
  Index block_dim = 0;    // m
  Index inner_order = 0;  // N - 1
  HermitianMatrix q0;     // principal square root of A11
  ComplexMatrix u;        // m x (N-1)m
  HermitianMatrix d_mat;  // (N-1)m square, strictly below the identity
};

inline NormalizedMap normalize_to_g(const GramBlocks& g, const SolverConfig& cfg) {
  cfg.validate();
  const double delta_abs = cfg.delta * problem_scale(g);
  const double head = min_eigenvalue(g.a11);
  if (!(head > delta_abs)) {
    std::ostringstream msg;
    msg << "normalize_to_g: A11 is not strongly positive (min eigenvalue " << head
        << ", required margin " << delta_abs << ")";
    throw PreconditionError(msg.str());
  }

  const Index m = g.block_dim;
  const Index p = g.inner_order;
  const HermitianMatrix q0 = principal_sqrt(g.a11);
  const ComplexMatrix q0_rep = replicate_diag(q0, p);
  const Eigen::LDLT<ComplexMatrix> head_ldlt(q0.mat());
  const Eigen::LDLT<ComplexMatrix> rep_ldlt(q0_rep);
  if (head_ldlt.info() != Eigen::Success || rep_ldlt.info() != Eigen::Success)
    throw Error("normalize_to_g: LDLT factorization of the head root failed");

  // U = q0^-1 A12 Q0^-1 and D = Q0^-1 A22 Q0^-1, via solves only.
  const ComplexMatrix x = head_ldlt.solve(g.a12);              // q0^-1 A12
  const ComplexMatrix u = rep_ldlt.solve(x.adjoint()).adjoint();
  const ComplexMatrix w = rep_ldlt.solve(g.a22.mat());         // Q0^-1 A22
  const HermitianMatrix d(rep_ldlt.solve(w.adjoint()).adjoint());

  const double gap = min_eigenvalue(
      HermitianMatrix(ComplexMatrix::Identity(p * m, p * m) - d.mat()));
  if (!(gap > kReductionGuardRelTol * (1.0 + d.frobenius_norm()))) {
    std::ostringstream msg;
    msg << "normalize_to_g: I - D lost strict positivity (min eigenvalue " << gap
        << "); the inner-gap precondition does not survive normalization";
    throw PreconditionError(msg.str());
  }
  return NormalizedMap{m, p, q0, u, d};
}

/// Orthonormal split of the head space into ker U* and its complement.
struct KernelSplit {
  Index d_ker = 0;            // dim ker U*
  ComplexMatrix basis_ker;    // m x d, orthonormal
  ComplexMatrix basis_coker;  // m x (m - d), orthonormal
  ComplexMatrix u1;           // (m-d) x (N-1)(m-d): U compressed to the complement
  ComplexMatrix u2;           // (m-d) x (N-1)d: complement rows, kernel columns
};

inline KernelSplit kernel_split(const NormalizedMap& nm, double rank_tol) {
  if (!std::isfinite(rank_tol) || rank_tol <= 0.0)
    throw InputError("kernel_split: rank_tol must be finite and > 0");
  const Index m = nm.block_dim;
  const Index p = nm.inner_order;

  Eigen::JacobiSVD<ComplexMatrix> svd(nm.u, Eigen::ComputeFullU);
  const Eigen::VectorXd sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > rank_tol * sigma_max) ++rank;
  const Index d = m - rank;

  KernelSplit out;
  out.d_ker = d;
  out.basis_coker = svd.matrixU().leftCols(rank);
  out.basis_ker = svd.matrixU().rightCols(d);

  out.u1 = ComplexMatrix::Zero(rank, p * rank);
  out.u2 = ComplexMatrix::Zero(rank, p * d);
  for (Index k = 0; k < p; ++k) {
    const ComplexMatrix uk = nm.u.block(0, k * m, m, m);
    out.u1.block(0, k * rank, rank, rank) = out.basis_coker.adjoint() * uk * out.basis_coker;
    out.u2.block(0, k * d, rank, d) = out.basis_coker.adjoint() * uk * out.basis_ker;
  }
  return out;
}

/// Blocks of the reduced map on the complement, together with the
/// repartitioned inner blocks and the Schur elimination factor.
struct ReducedBlocks {
  HermitianMatrix a11_hat;  // (m-d) square, >= I
  ComplexMatrix a12_hat;    // (m-d) x (N-1)(m-d)
  HermitianMatrix a22_hat;  // (N-1)(m-d) square, strictly below I
  ComplexMatrix d11;        // inner blocks regrouped: complement/complement
  ComplexMatrix d12;        // complement/kernel
  ComplexMatrix d22;        // kernel/kernel
  ComplexMatrix t_factor;   // [[I, 0], [(I - d22)^-1 d12*, I]]
};

inline ReducedBlocks reduce_map(const NormalizedMap& nm, const KernelSplit& split) {
  const Index m = nm.block_dim;
  const Index p = nm.inner_order;
  const Index d = split.d_ker;
  const Index r = m - d;
  if (d < 1 || r < 1)
    throw InputError("reduce_map: needs a proper kernel (0 < dim < block dimension)");

  // Regroup the inner space: complement copies first, kernel copies last.
  ComplexMatrix d11 = ComplexMatrix::Zero(p * r, p * r);
  ComplexMatrix d12 = ComplexMatrix::Zero(p * r, p * d);
  ComplexMatrix d22 = ComplexMatrix::Zero(p * d, p * d);
  for (Index j = 0; j < p; ++j) {
    for (Index k = 0; k < p; ++k) {
      const ComplexMatrix djk = nm.d_mat.mat().block(j * m, k * m, m, m);
      d11.block(j * r, k * r, r, r) = split.basis_coker.adjoint() * djk * split.basis_coker;
      d12.block(j * r, k * d, r, d) = split.basis_coker.adjoint() * djk * split.basis_ker;
      d22.block(j * d, k * d, d, d) = split.basis_ker.adjoint() * djk * split.basis_ker;
    }
  }

  const HermitianMatrix w(ComplexMatrix::Identity(p * d, p * d) - d22);
  const double gap = min_eigenvalue(w);
  if (!(gap > kReductionGuardRelTol * (1.0 + d22.norm()))) {
    std::ostringstream msg;
    msg << "reduce_map: I - d22 is not strongly positive (min eigenvalue " << gap
        << "); cannot eliminate the kernel rows";
    throw PreconditionError(msg.str());
  }

  Eigen::LDLT<ComplexMatrix> w_ldlt(w.mat());
  if (w_ldlt.info() != Eigen::Success)
    throw Error("reduce_map: LDLT factorization of I - d22 failed");
  const ComplexMatrix elim = w_ldlt.solve(d12.adjoint());  // (I - d22)^-1 d12*

  ComplexMatrix t_factor = ComplexMatrix::Identity(p * m, p * m);
  t_factor.block(p * r, 0, p * d, p * r) = elim;
  ReducedBlocks out{
      HermitianMatrix(ComplexMatrix::Identity(r, r) +
                      split.u2 * w_ldlt.solve(split.u2.adjoint())),  // a11_hat
      split.u1 + split.u2 * elim,                                    // a12_hat
      HermitianMatrix(d11 + d12 * elim),                             // a22_hat
      d11, d12, d22, std::move(t_factor)};

  // Structural sanity: the reduced head block dominates the identity, the
  // reduced tail block stays strictly below it.
  const double head_floor = min_eigenvalue(out.a11_hat);
  if (head_floor < 1.0 - 1e-10 * (1.0 + out.a11_hat.frobenius_norm()))
    throw Error("reduce_map: reduced head block lost its identity lower bound");
  const double tail_gap = min_eigenvalue(HermitianMatrix(
      ComplexMatrix::Identity(p * r, p * r) - out.a22_hat.mat()));
  if (!(tail_gap > kReductionGuardRelTol * (1.0 + out.a22_hat.frobenius_norm())))
    throw PreconditionError(
        "reduce_map: reduced tail block is not strictly below the identity");

  // Cross-check: the reduced map evaluated at 2I must agree with the
  // original normalized map evaluated at the matching embedded argument,
  // compressed back to the complement.
  {
    const ComplexMatrix q_test = 2.0 * ComplexMatrix::Identity(r, r);
    const ComplexMatrix inner_red =
        2.0 * ComplexMatrix::Identity(p * r, p * r) - out.a22_hat.mat();
    Eigen::LDLT<ComplexMatrix> red_ldlt(inner_red);
    const ComplexMatrix lhs = out.a11_hat.mat() +
                              out.a12_hat * red_ldlt.solve(out.a12_hat.adjoint());

    ComplexMatrix rmat(m, m);
    rmat.leftCols(r) = split.basis_coker;
    rmat.rightCols(d) = split.basis_ker;
    ComplexMatrix x_full = ComplexMatrix::Identity(m, m);
    x_full.topLeftCorner(r, r) = q_test;
    x_full = rmat * x_full * rmat.adjoint();
    ComplexMatrix inner_full = ComplexMatrix::Zero(p * m, p * m);
    for (Index c = 0; c < p; ++c) inner_full.block(c * m, c * m, m, m) = x_full;
    inner_full -= nm.d_mat.mat();
    Eigen::LDLT<ComplexMatrix> full_ldlt(inner_full);
    const ComplexMatrix g_full = ComplexMatrix::Identity(m, m) +
                                 nm.u * full_ldlt.solve(nm.u.adjoint());
    const ComplexMatrix rhs =
        split.basis_coker.adjoint() * g_full * split.basis_coker;
    if ((lhs - rhs).norm() > kReductionCrossCheckRelTol * (1.0 + rhs.norm()))
      throw Error("reduce_map: reduced map disagrees with the compressed original map");
  }
  return out;
}

namespace detail {

/// Orbit of one recursion level's map, in that level's coordinates.
struct ReductionRun {
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<HermitianMatrix> orbit;
  std::string diagnostic;
};

inline ReductionRun reduce_and_solve(const GramBlocks& blocks, const SolverConfig& cfg,
                                     std::vector<Index>& kernel_dims, int depth) {
  if (depth > 256) throw Error("reduce_and_solve: recursion depth exceeded its bound");
  const double scale = problem_scale(blocks);

  // Constant map: the fixed point is the head block itself.
  if (blocks.a12.norm() <= kTrivialCouplingRelTol * scale)
    return {SolveStatus::Converged, {blocks.a11, blocks.a11}, ""};

  const NormalizedMap nm = normalize_to_g(blocks, cfg);
  const KernelSplit split = kernel_split(nm, cfg.rank_tol);
  const Index m = nm.block_dim;

  if (split.d_ker == 0) {
    // Full-rank coupling: iterate the normalized map and pull back by q0.
    const GramBlocks gmap{m, nm.inner_order, HermitianMatrix::identity(m), nm.u, nm.d_mat};
    ConvergenceResult inner = solve_rho_min(gmap, cfg);
    ReductionRun run;
    run.status = inner.status;
    run.diagnostic = inner.diagnostic;
    run.orbit.reserve(inner.trace.records.size());
    for (const IterateRecord& rec : inner.trace.records)
      run.orbit.push_back(HermitianMatrix(nm.q0.mat() * rec.q_sq.mat() * nm.q0.mat()));
    return run;
  }

  if (split.d_ker == m) {
    // The coupling annihilates everything it sees: G is identically I and
    // the fixed point pulls back to the head block exactly.
    kernel_dims.push_back(split.d_ker);
    return {SolveStatus::Converged, {blocks.a11, blocks.a11}, ""};
  }

  kernel_dims.push_back(split.d_ker);
  const ReducedBlocks red = reduce_map(nm, split);
  const GramBlocks sub{m - split.d_ker, nm.inner_order, red.a11_hat, red.a12_hat,
                       red.a22_hat};
  ReductionRun inner = reduce_and_solve(sub, cfg, kernel_dims, depth + 1);

  // Unwind: x -> q0 R diag(x, I_d) R* q0.
  ComplexMatrix rmat(m, m);
  rmat.leftCols(m - split.d_ker) = split.basis_coker;
  rmat.rightCols(split.d_ker) = split.basis_ker;
  ReductionRun run;
  run.status = inner.status;
  run.diagnostic = inner.diagnostic;
  run.orbit.reserve(inner.orbit.size());
  for (const HermitianMatrix& x : inner.orbit) {
    ComplexMatrix lifted = ComplexMatrix::Identity(m, m);
    lifted.topLeftCorner(x.order(), x.order()) = x.mat();
    lifted = rmat * lifted * rmat.adjoint();
    run.orbit.push_back(HermitianMatrix(nm.q0.mat() * lifted * nm.q0.mat()));
  }
  return run;
}

}  // namespace detail

/// Solve through kernel elimination. Accepts any blocks that satisfy the
/// solver precondition; with a full-rank coupling this degenerates to the
/// plain iteration in normalized coordinates. The reported trace is the
/// recursion's orbit pulled back to the original coordinates, with all
/// metadata recomputed against the original blocks.
inline ConvergenceResult solve_with_reduction(const GramBlocks& g, const SolverConfig& cfg) {
  cfg.validate();
  ConvergenceResult out;
  out.path = g.a12.norm() <= kTrivialCouplingRelTol * problem_scale(g)
                 ? SolvePath::ZeroCoupling
                 : SolvePath::Reduction;
  out.scale = problem_scale(g);
  const double delta_abs = cfg.delta * out.scale;

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

  detail::ReductionRun run;
  try {
    run = detail::reduce_and_solve(g, cfg, out.kernel_dims, 0);
  } catch (const IterationBreakdownError& e) {
    out.status = SolveStatus::PreconditionFailed;
    out.diagnostic = e.what();
    return out;
  } catch (const PreconditionError& e) {
    out.status = SolveStatus::PreconditionFailed;
    out.diagnostic = e.what();
    return out;
  }

  out.status = run.status;
  out.diagnostic = run.diagnostic;

  // Rebuild the per-iterate metadata against the original blocks.
  for (std::size_t i = 0; i < run.orbit.size(); ++i) {
    IterateRecord rec{run.orbit[i], detail::inner_gap(run.orbit[i], g), 0.0, 0.0};
    if (i > 0) {
      rec.step_norm = (run.orbit[i].mat() - run.orbit[i - 1].mat()).norm();
      out.trace.records[i - 1].residual_estimate = rec.step_norm;
    }
    out.trace.records.push_back(std::move(rec));
  }
  out.iterations = static_cast<int>(out.trace.records.empty() ? 0 : out.trace.n());

  if (!out.trace.records.empty()) {
    const std::size_t n_rec = out.trace.records.size();
    const std::size_t last_even = (n_rec - 1) % 2 == 0 ? n_rec - 1 : n_rec - 2;
    out.lower_limit = out.trace.records[last_even].q_sq;
    if (n_rec >= 2) {
      const std::size_t last_odd = (n_rec - 1) % 2 == 1 ? n_rec - 1 : n_rec - 2;
      out.upper_limit = out.trace.records[last_odd].q_sq;
    }
  }

  if (run.status == SolveStatus::Converged && !out.trace.records.empty()) {
    out.rho_sq_min = out.trace.records.back().q_sq;
    try {
      const HermitianMatrix image =
          detail::apply_map(*out.rho_sq_min, g, delta_abs);
      out.trace.records.back().residual_estimate =
          (image.mat() - out.rho_sq_min->mat()).norm();
    } catch (const IterationBreakdownError& e) {
      out.status = SolveStatus::PreconditionFailed;
      out.rho_sq_min.reset();
      out.diagnostic = e.what();
    }
  }
  return out;
}

/// Entry point used by the command-line front end: dispatch on the
/// coupling classification.
inline ConvergenceResult solve_minimal_bound(const GramBlocks& g, const SolverConfig& cfg) {
  switch (classify(g, cfg)) {
    case SolvePath::Reduction:
      return solve_with_reduction(g, cfg);
    case SolvePath::Direct:
    case SolvePath::ZeroCoupling:
    default:
      return solve_rho_min(g, cfg);
  }
}

}  // namespace nehari
