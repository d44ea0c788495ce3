#pragma once

// Block Hankel assembly. A finitely supported sequence of m x m
// coefficient blocks gamma_1, ..., gamma_K determines the truncated block
// Hankel matrix H with block (j, k) = gamma_{j+k-1}. The solver consumes H
// through its leading 2x2 block partition
//
//     H = [ gamma_1  B_r ]
//         [ B_c      H_1 ]
//
// where H_1 is the trailing submatrix with block (j, k) = gamma_{j+k+1},
// and through the Gram blocks of H* H written in the same partition:
//
//     A11 = gamma_1* gamma_1 + B_c* B_c
//     A12 = gamma_1* B_r     + B_c* H_1
//     A22 = H_1* H_1         + B_r* B_r
//
// The Gram blocks are accumulated blockwise in a fixed order (head term
// first, then tail terms by increasing index). Enlarging the truncation
// order beyond the support therefore appends terms that are exactly zero,
// and the assembled blocks are identical as floating-point values, not
// merely close.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nehari/errors.hpp"
#include "nehari/matrix_kernel.hpp"

namespace nehari {

/// Relative Frobenius tolerance for the internal Gram cross-check.
inline constexpr double kGramCrossCheckRelTol = 1e-12;

/// Finitely supported sequence of m x m coefficient blocks. Indices are
/// 1-based to match the Hankel convention; blocks beyond the stored
/// support are zero.
class CoefficientSequence {
 public:
  CoefficientSequence(Index block_dim, std::vector<ComplexMatrix> coefficients)
      : block_dim_(block_dim), blocks_(std::move(coefficients)) {
    if (block_dim_ < 1)
      throw InputError("CoefficientSequence: block dimension must be at least 1");
    if (blocks_.empty())
      throw InputError("CoefficientSequence: need at least one coefficient block");
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const ComplexMatrix& b = blocks_[k];
      if (b.rows() != block_dim_ || b.cols() != block_dim_)
        throw InputError("CoefficientSequence: coefficient " + std::to_string(k + 1) +
                         " is " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                         ", expected " + std::to_string(block_dim_) + "x" +
                         std::to_string(block_dim_));
      if (!entries_finite(b))
        throw InputError("CoefficientSequence: coefficient " + std::to_string(k + 1) +
                         " has a non-finite entry");
    }
  }

  /// Scalar (m = 1) sequence from plain real values, mostly for tests and
  /// small experiments.
  static CoefficientSequence scalar(const std::vector<double>& values) {
    std::vector<ComplexMatrix> blocks;
    blocks.reserve(values.size());
    for (double v : values) {
      ComplexMatrix b(1, 1);
      b(0, 0) = Complex(v, 0.0);
      blocks.push_back(b);
    }
    return CoefficientSequence(1, std::move(blocks));
  }

  Index block_dim() const { return block_dim_; }
  Index support() const { return static_cast<Index>(blocks_.size()); }

  /// 1-based block access; the zero matrix for k beyond the support.
  ComplexMatrix block(Index k) const {
    if (k < 1) throw InputError("CoefficientSequence: block index must be >= 1");
    if (k > support()) return ComplexMatrix::Zero(block_dim_, block_dim_);
    return blocks_[static_cast<std::size_t>(k - 1)];
  }

  const std::vector<ComplexMatrix>& blocks() const { return blocks_; }

 private:
  Index block_dim_;
  std::vector<ComplexMatrix> blocks_;
};

/// Dense truncation of the block Hankel matrix: block_order x block_order
/// blocks, block (j, k) = gamma_{j+k-1}.
struct TruncatedHankel {
  Index block_order = 0;  // number of block rows/columns (N)
  Index block_dim = 0;    // size of each block (m)
  ComplexMatrix dense;    // (N m) x (N m)
};

inline TruncatedHankel build_truncated_hankel(const CoefficientSequence& coeffs, Index n) {
  if (n < 1) throw InputError("build_truncated_hankel: block order must be at least 1");
  const Index m = coeffs.block_dim();
  TruncatedHankel h;
  h.block_order = n;
  h.block_dim = m;
  h.dense = ComplexMatrix::Zero(n * m, n * m);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) h.dense.block(j * m, k * m, m, m) = coeffs.block(j + k + 1);
  return h;
}

/// Default truncation order for a given sequence: the support, padded to 2
/// so the 2x2 partition below is always defined. Padding blocks are zero
/// and contribute exactly zero to every Gram block.
inline Index default_block_order(const CoefficientSequence& coeffs) {
  return std::max<Index>(coeffs.support(), 2);
}

/// Leading 2x2 block partition of a truncated Hankel matrix.
struct HankelPartition {
  Index block_dim = 0;           // m
  Index inner_order = 0;         // N - 1
  ComplexMatrix gamma1;          // m x m
  ComplexMatrix b_row;           // m x (N-1)m, blocks gamma_2 ... gamma_N
  ComplexMatrix b_col;           // (N-1)m x m, blocks gamma_2 ... gamma_N
  ComplexMatrix trailing;        // (N-1)m square, block (j,k) = gamma_{j+k+1}
};

inline HankelPartition partition(const TruncatedHankel& h) {
  if (h.block_order < 2)
    throw InputError("partition: undefined for block order 1; need at least 2 block rows");
  const Index m = h.block_dim;
  const Index p = h.block_order - 1;
  if (h.dense.rows() != h.block_order * m || h.dense.cols() != h.block_order * m)
    throw InputError("partition: dense storage does not match the declared block shape");

  HankelPartition out;
  out.block_dim = m;
  out.inner_order = p;
  out.gamma1 = h.dense.block(0, 0, m, m);
  out.b_row = h.dense.block(0, m, m, p * m);
  out.b_col = h.dense.block(m, 0, p * m, m);
  out.trailing = h.dense.block(m, m, p * m, p * m);

  // Hankel symmetry of the data: the first block row and first block
  // column carry the same coefficients. Guards hand-assembled inputs.
  for (Index k = 0; k < p; ++k) {
    if ((out.b_row.block(0, k * m, m, m) - out.b_col.block(k * m, 0, m, m)).norm() != 0.0)
      throw InputError("partition: block " + std::to_string(k + 2) +
                       " differs between the first block row and first block column; "
                       "input is not a Hankel truncation");
  }
  return out;
}

/// Gram blocks of H* H in the 2x2 partition above.
struct GramBlocks {
  Index block_dim = 0;    // m
  Index inner_order = 0;  // N - 1
  HermitianMatrix a11;    // m x m
  ComplexMatrix a12;      // m x (N-1)m
  HermitianMatrix a22;    // (N-1)m square
};

namespace detail {

/// m x m block of a wide (single block row) matrix.
inline ComplexMatrix row_block(const ComplexMatrix& wide, Index m, Index k) {
  return wide.block(0, k * m, m, m);
}

/// m x m block of a tall (single block column) matrix.
inline ComplexMatrix col_block(const ComplexMatrix& tall, Index m, Index k) {
  return tall.block(k * m, 0, m, m);
}

/// m x m block of a square block matrix.
inline ComplexMatrix sq_block(const ComplexMatrix& sq, Index m, Index j, Index k) {
  return sq.block(j * m, k * m, m, m);
}

}  // namespace detail

inline GramBlocks gram_blocks(const HankelPartition& p) {
  const Index m = p.block_dim;
  const Index q = p.inner_order;

  // A11 = gamma_1* gamma_1 + sum_j bc_j* bc_j
  ComplexMatrix a11 = p.gamma1.adjoint() * p.gamma1;
  for (Index j = 0; j < q; ++j) {
    const ComplexMatrix bj = detail::col_block(p.b_col, m, j);
    a11 += bj.adjoint() * bj;
  }

  // A12 block k = gamma_1* br_k + sum_j bc_j* T(j,k)
  ComplexMatrix a12 = ComplexMatrix::Zero(m, q * m);
  for (Index k = 0; k < q; ++k) {
    ComplexMatrix acc = p.gamma1.adjoint() * detail::row_block(p.b_row, m, k);
    for (Index j = 0; j < q; ++j)
      acc += detail::col_block(p.b_col, m, j).adjoint() * detail::sq_block(p.trailing, m, j, k);
    a12.block(0, k * m, m, m) = acc;
  }

  // A22 block (j,k) = br_j* br_k + sum_l T(l,j)* T(l,k)
  ComplexMatrix a22 = ComplexMatrix::Zero(q * m, q * m);
  for (Index j = 0; j < q; ++j) {
    for (Index k = 0; k < q; ++k) {
      ComplexMatrix acc = detail::row_block(p.b_row, m, j).adjoint() *
                          detail::row_block(p.b_row, m, k);
      for (Index l = 0; l < q; ++l)
        acc += detail::sq_block(p.trailing, m, l, j).adjoint() *
               detail::sq_block(p.trailing, m, l, k);
      a22.block(j * m, k * m, m, m) = acc;
    }
  }

  // Cross-check against the dense Gram matrix of the reassembled
  // partition. Catches any indexing slip in the blockwise formulas.
  const Index n = (q + 1) * m;
  ComplexMatrix full(n, n);
  full.block(0, 0, m, m) = p.gamma1;
  full.block(0, m, m, q * m) = p.b_row;
  full.block(m, 0, q * m, m) = p.b_col;
  full.block(m, m, q * m, q * m) = p.trailing;
  ComplexMatrix gram = full.adjoint() * full;
  ComplexMatrix assembled(n, n);
  assembled.block(0, 0, m, m) = a11;
  assembled.block(0, m, m, q * m) = a12;
  assembled.block(m, 0, q * m, m) = a12.adjoint();
  assembled.block(m, m, q * m, q * m) = a22;
  if ((gram - assembled).norm() > kGramCrossCheckRelTol * (1.0 + gram.norm()))
    throw Error("gram_blocks: blockwise assembly disagrees with the dense Gram matrix");

  GramBlocks out{m, q, HermitianMatrix(a11), std::move(a12), HermitianMatrix(a22)};

  // Both diagonal blocks are Gram matrices, hence positive semidefinite.
  if (min_eigenvalue(out.a11) < -1e-10 * (1.0 + out.a11.frobenius_norm()))
    throw Error("gram_blocks: A11 failed its positive semidefiniteness check");
  if (min_eigenvalue(out.a22) < -1e-10 * (1.0 + out.a22.frobenius_norm()))
    throw Error("gram_blocks: A22 failed its positive semidefiniteness check");
  return out;
}

/// Full Gram matrix H* H of the truncation.
inline HermitianMatrix gram_full(const TruncatedHankel& h) {
  return HermitianMatrix(h.dense.adjoint() * h.dense);
}

/// Convenience pipeline: truncate at order n (default_block_order when n
/// is not positive), partition, and assemble the Gram blocks.
inline GramBlocks gram_blocks_at(const CoefficientSequence& coeffs, Index n = 0) {
  const Index order = n > 0 ? n : default_block_order(coeffs);
  return gram_blocks(partition(build_truncated_hankel(coeffs, order)));
}

}  // namespace nehari
