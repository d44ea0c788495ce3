#pragma once

// Hermitian matrix primitives used everywhere else in the library:
// validated Hermitian storage, the smallest eigenvalue, the semidefinite
// (Loewner) order, principal square roots, and positive-definite solves.
//
// Design notes:
//  * Every positivity and ordering question is answered through one code
//    path, the smallest eigenvalue of a Hermitian matrix, so that a single
//    number is auditable when a test or certificate disagrees.
//  * Strong positivity is always "min eigenvalue > delta" for an explicit
//    margin delta; there is no implicit epsilon.
//  * Inverses are never formed. Resolvent terms go through an LDLT solve.

#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "nehari/errors.hpp"

namespace nehari {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

/// Relative tolerance for accepting a matrix as Hermitian on input.
inline constexpr double kHermitianRelTol = 1e-12;

/// Relative eigenvalue floor below which principal_sqrt refuses to clamp.
inline constexpr double kPsdRelTol = 1e-12;

inline bool entries_finite(const ComplexMatrix& a) {
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

/// Margin for strong-positivity tests: a Hermitian matrix passes when its
/// smallest eigenvalue strictly exceeds `delta`.
struct PositivityMargin {
  double delta;

  explicit PositivityMargin(double d) : delta(d) {
    if (!std::isfinite(d) || d <= 0.0)
      throw InputError("PositivityMargin: delta must be finite and > 0");
  }
};

/// Square complex matrix kept exactly Hermitian.
///
/// Construction rejects input whose entrywise deviation from its adjoint
/// exceeds kHermitianRelTol * (1 + max |entry|), then stores the half-sum
/// (A + A*)/2 so downstream algebra sees an exactly Hermitian value.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(const ComplexMatrix& raw) {
    if (raw.rows() != raw.cols())
      throw InputError("HermitianMatrix: matrix must be square, got " +
                       std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()));
    if (raw.rows() < 1) throw InputError("HermitianMatrix: order must be at least 1");
    if (!entries_finite(raw)) throw InputError("HermitianMatrix: non-finite entry");

    double max_abs = 0.0;
    double max_dev = 0.0;
    for (Index j = 0; j < raw.cols(); ++j) {
      for (Index i = 0; i < raw.rows(); ++i) {
        max_abs = std::max(max_abs, std::abs(raw(i, j)));
        max_dev = std::max(max_dev, std::abs(raw(i, j) - std::conj(raw(j, i))));
      }
    }
    if (max_dev > kHermitianRelTol * (1.0 + max_abs)) {
      std::ostringstream msg;
      msg << "HermitianMatrix: input deviates from its adjoint by " << max_dev
          << ", above the tolerance " << kHermitianRelTol * (1.0 + max_abs);
      throw InputError(msg.str());
    }
    mat_ = 0.5 * (raw + raw.adjoint().eval());
  }

  static HermitianMatrix identity(Index order) {
    return HermitianMatrix(ComplexMatrix::Identity(order, order));
  }

  static HermitianMatrix zero(Index order) {
    return HermitianMatrix(ComplexMatrix::Zero(order, order));
  }

  Index order() const { return mat_.rows(); }
  const ComplexMatrix& mat() const { return mat_; }
  double frobenius_norm() const { return mat_.norm(); }

 private:
  ComplexMatrix mat_;
};

inline HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
  return HermitianMatrix(a.mat() + b.mat());
}

inline HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
  return HermitianMatrix(a.mat() - b.mat());
}

inline HermitianMatrix operator*(double s, const HermitianMatrix& a) {
  return HermitianMatrix(s * a.mat());
}

/// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error("min_eigenvalue: eigenvalue iteration failed to converge");
  return es.eigenvalues()(0);
}

/// Largest eigenvalue of a Hermitian matrix.
inline double max_eigenvalue(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error("max_eigenvalue: eigenvalue iteration failed to converge");
  return es.eigenvalues()(a.order() - 1);
}

/// True when min_eigenvalue(a) > margin.delta.
inline bool is_strongly_positive(const HermitianMatrix& a, PositivityMargin margin) {
  return min_eigenvalue(a) > margin.delta;
}

/// Semidefinite order test: a <= b up to slack `tol`, i.e. the smallest
/// eigenvalue of b - a is at least -tol.
inline bool loewner_leq(const HermitianMatrix& a, const HermitianMatrix& b, double tol) {
  if (a.order() != b.order())
    throw InputError("loewner_leq: order mismatch, " + std::to_string(a.order()) +
                     " vs " + std::to_string(b.order()));
  if (!std::isfinite(tol) || tol < 0.0)
    throw InputError("loewner_leq: tol must be finite and >= 0");
  return min_eigenvalue(b - a) >= -tol;
}

/// Principal (positive semidefinite) square root via the spectral
/// decomposition. Eigenvalues in [-kPsdRelTol * spectral_radius, 0) are
/// clamped to zero; anything lower throws NotPsdError.
inline HermitianMatrix principal_sqrt(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.mat());
  if (es.info() != Eigen::Success)
    throw Error("principal_sqrt: eigenvalue iteration failed to converge");
  Eigen::VectorXd evals = es.eigenvalues();
  const Index n = a.order();
  const double radius = std::max(std::abs(evals(0)), std::abs(evals(n - 1)));
  if (evals(0) < -kPsdRelTol * radius) {
    std::ostringstream msg;
    msg << "principal_sqrt: matrix is not positive semidefinite, smallest eigenvalue "
        << evals(0) << " with spectral radius " << radius;
    throw NotPsdError(msg.str());
  }
  Eigen::VectorXd roots(n);
  for (Index i = 0; i < n; ++i) roots(i) = std::sqrt(std::max(evals(i), 0.0));
  ComplexMatrix root =
      es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
  return HermitianMatrix(root);
}

/// Solve a x = b for a strongly positive. Factors once with LDLT; never
/// forms a^-1 explicitly.
inline ComplexMatrix solve_strongly_positive(const HermitianMatrix& a,
                                             const ComplexMatrix& b,
                                             PositivityMargin margin) {
  if (a.order() != b.rows())
    throw InputError("solve_strongly_positive: lhs order " + std::to_string(a.order()) +
                     " does not match rhs rows " + std::to_string(b.rows()));
  if (!entries_finite(b)) throw InputError("solve_strongly_positive: non-finite rhs entry");
  const double me = min_eigenvalue(a);
  if (!(me > margin.delta)) {
    std::ostringstream msg;
    msg << "solve_strongly_positive: smallest eigenvalue " << me
        << " does not exceed the required margin " << margin.delta;
    throw PreconditionError(msg.str());
  }
  Eigen::LDLT<ComplexMatrix> ldlt(a.mat());
  if (ldlt.info() != Eigen::Success)
    throw Error("solve_strongly_positive: LDLT factorization failed");
  return ldlt.solve(b);
}

/// Block-diagonal replication: copies of `a` down the diagonal.
inline ComplexMatrix replicate_diag(const HermitianMatrix& a, Index copies) {
  if (copies < 1) throw InputError("replicate_diag: need at least one copy");
  const Index m = a.order();
  ComplexMatrix out = ComplexMatrix::Zero(copies * m, copies * m);
  for (Index c = 0; c < copies; ++c) out.block(c * m, c * m, m, m) = a.mat();
  return out;
}

}  // namespace nehari
