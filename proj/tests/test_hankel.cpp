#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "test_support.hpp"

using namespace nehari;
namespace ts = test_support;

TEST_CASE("coefficient sequences validate shape and pad with zeros") {
  const CoefficientSequence seq = ts::seq_210();
  REQUIRE(seq.block_dim() == 1);
  REQUIRE(seq.support() == 3);
  REQUIRE(seq.block(1)(0, 0) == Complex(2.0, 0.0));
  REQUIRE(seq.block(7).norm() == 0.0);  // beyond the support
  REQUIRE_THROWS_AS(seq.block(0), InputError);

  REQUIRE_THROWS_AS(CoefficientSequence(1, {}), InputError);
  REQUIRE_THROWS_AS(CoefficientSequence(2, {ComplexMatrix::Zero(1, 1)}), InputError);
}

TEST_CASE("truncated hankel matches hand layouts") {
  const CoefficientSequence seq = ts::seq_210();

  const TruncatedHankel h2 = build_truncated_hankel(seq, 2);
  ComplexMatrix expect2(2, 2);
  expect2 << 2.0, 1.0, 1.0, 0.0;
  REQUIRE((h2.dense - expect2).norm() == 0.0);

  const TruncatedHankel h3 = build_truncated_hankel(seq, 3);
  ComplexMatrix expect3 = ComplexMatrix::Zero(3, 3);
  expect3(0, 0) = 2.0;
  expect3(0, 1) = 1.0;
  expect3(1, 0) = 1.0;
  REQUIRE((h3.dense - expect3).norm() == 0.0);

  REQUIRE_THROWS_AS(build_truncated_hankel(seq, 0), InputError);
  REQUIRE(default_block_order(seq) == 3);
  REQUIRE(default_block_order(CoefficientSequence::scalar({4.0})) == 2);
}

TEST_CASE("partition splits the leading block structure") {
  const CoefficientSequence seq = ts::seq_123();
  const HankelPartition p = partition(build_truncated_hankel(seq, 3));
  REQUIRE(p.block_dim == 1);
  REQUIRE(p.inner_order == 2);
  REQUIRE(p.gamma1(0, 0) == Complex(1.0, 0.0));
  ComplexMatrix br(1, 2);
  br << 2.0, 3.0;
  REQUIRE((p.b_row - br).norm() == 0.0);
  REQUIRE((p.b_col - br.transpose()).norm() == 0.0);
  ComplexMatrix trailing(2, 2);
  trailing << 3.0, 0.0, 0.0, 0.0;
  REQUIRE((p.trailing - trailing).norm() == 0.0);
}

TEST_CASE("partition is undefined at block order one") {
  const TruncatedHankel h1 = build_truncated_hankel(ts::seq_210(), 1);
  REQUIRE_THROWS_WITH(partition(h1), Catch::Matchers::ContainsSubstring("block order"));
}

TEST_CASE("partition rejects hand-built non-hankel data") {
  TruncatedHankel h;
  h.block_order = 2;
  h.block_dim = 1;
  h.dense = ComplexMatrix::Zero(2, 2);
  h.dense(0, 1) = 1.0;  // first block row says gamma_2 = 1
  h.dense(1, 0) = 2.0;  // first block column says gamma_2 = 2
  REQUIRE_THROWS_AS(partition(h), InputError);
}

TEST_CASE("gram blocks match hand calculations") {
  SECTION("scalar (2, 1, 0) at order 2") {
    const GramBlocks g = gram_blocks_at(ts::seq_210(), 2);
    REQUIRE(g.a11.mat()(0, 0) == Complex(5.0, 0.0));
    REQUIRE(g.a12(0, 0) == Complex(2.0, 0.0));
    REQUIRE(g.a22.mat()(0, 0) == Complex(1.0, 0.0));
  }
  SECTION("scalar (1, 2, 3) at order 3") {
    const GramBlocks g = gram_blocks_at(ts::seq_123(), 3);
    REQUIRE(g.a11.mat()(0, 0) == Complex(14.0, 0.0));
    ComplexMatrix a12(1, 2);
    a12 << 8.0, 3.0;
    REQUIRE((g.a12 - a12).norm() == 0.0);
    ComplexMatrix a22(2, 2);
    a22 << 13.0, 6.0, 6.0, 9.0;
    REQUIRE((g.a22.mat() - a22).norm() == 0.0);
  }
  SECTION("zero tail means zero coupling") {
    const GramBlocks g = gram_blocks_at(CoefficientSequence::scalar({3.0, 0.0}), 2);
    REQUIRE(g.a11.mat()(0, 0) == Complex(9.0, 0.0));
    REQUIRE(g.a12.norm() == 0.0);
    REQUIRE(g.a22.frobenius_norm() == 0.0);
  }
}

TEST_CASE("blockwise gram assembly equals the dense gram matrix") {
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 1 + static_cast<Index>(rng() % 3);
    const Index k = 1 + static_cast<Index>(rng() % 5);
    std::vector<ComplexMatrix> blocks;
    for (Index i = 0; i < k; ++i) blocks.push_back(ts::random_matrix(rng, m, m));
    const CoefficientSequence seq(m, std::move(blocks));
    const Index n = default_block_order(seq);

    const TruncatedHankel h = build_truncated_hankel(seq, n);
    const GramBlocks g = gram_blocks(partition(h));
    const HermitianMatrix dense = gram_full(h);

    const Index mm = g.block_dim;
    const Index q = g.inner_order;
    ComplexMatrix assembled((q + 1) * mm, (q + 1) * mm);
    assembled.block(0, 0, mm, mm) = g.a11.mat();
    assembled.block(0, mm, mm, q * mm) = g.a12;
    assembled.block(mm, 0, q * mm, mm) = g.a12.adjoint();
    assembled.block(mm, mm, q * mm, q * mm) = g.a22.mat();
    REQUIRE((assembled - dense.mat()).norm() <=
            1e-12 * (1.0 + dense.frobenius_norm()));
  }
}

TEST_CASE("gram blocks are exactly stable under deeper truncation") {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 15; ++trial) {
    const Index m = 1 + static_cast<Index>(rng() % 3);
    const Index k = 2 + static_cast<Index>(rng() % 4);
    std::vector<ComplexMatrix> blocks;
    for (Index i = 0; i < k; ++i) blocks.push_back(ts::random_matrix(rng, m, m));
    const CoefficientSequence seq(m, std::move(blocks));

    const GramBlocks tight = gram_blocks_at(seq, k);
    const GramBlocks wide = gram_blocks_at(seq, k + 3);

    // Identical floating-point values on the shared leading range, exact
    // zeros beyond it.
    REQUIRE((tight.a11.mat() - wide.a11.mat()).norm() == 0.0);
    const Index qt = tight.inner_order * m;
    REQUIRE((wide.a12.leftCols(qt) - tight.a12).norm() == 0.0);
    REQUIRE(wide.a12.rightCols(wide.a12.cols() - qt).norm() == 0.0);
    REQUIRE((wide.a22.mat().topLeftCorner(qt, qt) - tight.a22.mat()).norm() == 0.0);
    REQUIRE(wide.a22.mat().bottomRows(wide.a22.order() - qt).norm() == 0.0);
    REQUIRE(wide.a22.mat().rightCols(wide.a22.order() - qt).norm() == 0.0);
  }
}

TEST_CASE("the full gram matrix is positive semidefinite") {
  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 15; ++trial) {
    const Index m = 1 + static_cast<Index>(rng() % 3);
    const Index k = 1 + static_cast<Index>(rng() % 4);
    std::vector<ComplexMatrix> blocks;
    for (Index i = 0; i < k; ++i) blocks.push_back(ts::random_matrix(rng, m, m));
    const TruncatedHankel h =
        build_truncated_hankel(CoefficientSequence(m, std::move(blocks)), k + 1);
    const HermitianMatrix gram = gram_full(h);
    REQUIRE(loewner_leq(HermitianMatrix::zero(gram.order()), gram,
                        1e-10 * (1.0 + gram.frobenius_norm())));
  }
}

TEST_CASE("partition blocks reassemble the dense truncation exactly") {
  std::mt19937_64 rng(909);
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 1 + static_cast<Index>(rng() % 3);
    const Index k = 2 + static_cast<Index>(rng() % 3);
    std::vector<ComplexMatrix> blocks;
    for (Index i = 0; i < k; ++i) blocks.push_back(ts::random_matrix(rng, m, m));
    const TruncatedHankel h =
        build_truncated_hankel(CoefficientSequence(m, std::move(blocks)), k);
    const HankelPartition p = partition(h);

    ComplexMatrix re(h.dense.rows(), h.dense.cols());
    re.block(0, 0, m, m) = p.gamma1;
    re.block(0, m, m, p.inner_order * m) = p.b_row;
    re.block(m, 0, p.inner_order * m, m) = p.b_col;
    re.block(m, m, p.inner_order * m, p.inner_order * m) = p.trailing;
    REQUIRE((re - h.dense).norm() == 0.0);
  }
}
