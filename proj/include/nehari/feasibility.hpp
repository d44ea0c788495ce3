#pragma once

// Independent feasibility checks for a candidate deviation bound rho.
//
// A strongly positive rho is feasible when the truncated Hankel matrix H
// satisfies H* H <= I (x) rho^2. Two routes answer that question:
//
//  * direct:  smallest eigenvalue of (I (x) rho^2) - H* H, built on the
//    full truncation at the support;
//  * schur:   eliminate the trailing block first. When
//    (I (x) rho^2) - A22 is strongly positive, feasibility is equivalent
//    to rho^2 >= A11 + A12 ((I (x) rho^2) - A22)^-1 A12*.
//
// Both report a signed margin (smallest eigenvalue of the respective
// difference); they agree on the verdict wherever the second applies. A
// margin within the verdict band of zero keeps its sign-based verdict but
// is flagged as boundary.
//
// normalize_coefficients rescales the data by rho^-1 so that feasibility
// of rho for the original sequence becomes feasibility of the identity
// for the rescaled one. scalar_aak_oracle gives the closed-form minimal
// value in the scalar case: the largest eigenvalue of H* H.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nehari/errors.hpp"
#include "nehari/hankel.hpp"
#include "nehari/matrix_kernel.hpp"
#include "nehari/solver.hpp"

namespace nehari {

/// Margins within this (relative) band of zero are flagged as boundary.
inline constexpr double kVerdictBandRelTol = 1e-8;

/// A strongly positive candidate bound, carried with its square. The two
/// factory functions keep rho and rho_sq consistent by construction.
struct DeviationBound {
  HermitianMatrix rho;
  HermitianMatrix rho_sq;

  static DeviationBound from_rho(const HermitianMatrix& rho, PositivityMargin margin) {
    if (!is_strongly_positive(rho, margin))
      throw PreconditionError("DeviationBound: rho is not strongly positive");
    return DeviationBound{rho, HermitianMatrix(rho.mat() * rho.mat())};
  }

  static DeviationBound from_rho_sq(const HermitianMatrix& rho_sq, PositivityMargin margin) {
    const HermitianMatrix root = principal_sqrt(rho_sq);
    if (!is_strongly_positive(root, margin))
      throw PreconditionError("DeviationBound: sqrt(rho_sq) is not strongly positive");
    return DeviationBound{root, rho_sq};
  }
};

enum class FeasibilityMethod { Direct, Schur };

inline const char* to_string(FeasibilityMethod m) {
  return m == FeasibilityMethod::Direct ? "direct" : "schur";
}

struct FeasibilityVerdict {
  bool feasible = false;
  double margin = 0.0;  // smallest eigenvalue of the defining difference
  FeasibilityMethod method = FeasibilityMethod::Direct;
  bool boundary = false;  // |margin| within the verdict band
};

namespace detail {

inline FeasibilityVerdict make_verdict(double margin, double band, FeasibilityMethod method) {
  FeasibilityVerdict v;
  v.margin = margin;
  v.method = method;
  v.feasible = margin >= -band;
  v.boundary = std::abs(margin) < band;
  return v;
}

}  // namespace detail

/// Spectral test on the full truncation at the support.
inline FeasibilityVerdict feasibility_direct(const CoefficientSequence& coeffs,
                                             const DeviationBound& bound,
                                             const SolverConfig& cfg) {
  cfg.validate();
  if (bound.rho.order() != coeffs.block_dim())
    throw InputError("feasibility_direct: bound order does not match the block dimension");
  const TruncatedHankel h = build_truncated_hankel(coeffs, coeffs.support());
  const HermitianMatrix gram = gram_full(h);
  const double margin = min_eigenvalue(
      HermitianMatrix(replicate_diag(bound.rho_sq, h.block_order) - gram.mat()));
  const double band = kVerdictBandRelTol * (1.0 + gram.frobenius_norm());
  return detail::make_verdict(margin, band, FeasibilityMethod::Direct);
}

/// Eliminated test on the Gram blocks. Returns nothing when the
/// elimination hypothesis (I (x) rho^2) - A22 strongly positive fails, in
/// which case only the direct route answers.
inline std::optional<FeasibilityVerdict> feasibility_schur(const GramBlocks& g,
                                                           const DeviationBound& bound,
                                                           const SolverConfig& cfg) {
  cfg.validate();
  if (bound.rho.order() != g.block_dim)
    throw InputError("feasibility_schur: bound order does not match the block dimension");
  const double scale = problem_scale(g);
  const double delta_abs = cfg.delta * scale;
  const ComplexMatrix inner = replicate_diag(bound.rho_sq, g.inner_order) - g.a22.mat();
  const HermitianMatrix inner_h(inner);
  if (!(min_eigenvalue(inner_h) > delta_abs)) return std::nullopt;

  const ComplexMatrix x = detail::ldlt_solve(inner_h.mat(), g.a12.adjoint(), "feasibility_schur");
  const HermitianMatrix rhs(g.a11.mat() + g.a12 * x);
  const double margin = min_eigenvalue(bound.rho_sq - rhs);
  const double band = kVerdictBandRelTol * scale;
  return detail::make_verdict(margin, band, FeasibilityMethod::Schur);
}

/// Rescale the sequence by rho^-1 on the right: gamma_k -> gamma_k rho^-1.
/// Feasibility of rho for the original data is feasibility of the
/// identity bound for the result.
inline CoefficientSequence normalize_coefficients(const CoefficientSequence& coeffs,
                                                  const DeviationBound& bound) {
  if (bound.rho.order() != coeffs.block_dim())
    throw InputError("normalize_coefficients: bound order does not match the block dimension");
  Eigen::LDLT<ComplexMatrix> rho_ldlt(bound.rho.mat());
  if (rho_ldlt.info() != Eigen::Success)
    throw Error("normalize_coefficients: LDLT factorization of rho failed");
  std::vector<ComplexMatrix> rescaled;
  rescaled.reserve(static_cast<std::size_t>(coeffs.support()));
  for (const ComplexMatrix& gk : coeffs.blocks())
    rescaled.push_back(rho_ldlt.solve(gk.adjoint()).adjoint());  // gk rho^-1
  return CoefficientSequence(coeffs.block_dim(), std::move(rescaled));
}

/// Closed-form minimal squared bound for scalar data: the largest
/// eigenvalue of H* H at the support truncation.
inline double scalar_aak_oracle(const CoefficientSequence& coeffs) {
  if (coeffs.block_dim() != 1)
    throw NotApplicableError(
        "scalar_aak_oracle: only defined for scalar (1x1) coefficient sequences");
  const TruncatedHankel h = build_truncated_hankel(coeffs, coeffs.support());
  return max_eigenvalue(gram_full(h));
}

}  // namespace nehari
