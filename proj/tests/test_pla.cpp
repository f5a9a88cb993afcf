#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "plaols/pla.hpp"

using namespace plaols;
using testutil::sym;

namespace {

const SymmetricMatrix kJoint = sym({{1, 0, 0}, {0, 2, 0.8}, {0, 0.8, 1}});

// Random symmetric positive definite matrix whose nonzero pattern is the
// block partition given by `block_of` (block label per variable).
SymmetricMatrix random_block_matrix(SeededRng& rng, const std::vector<int>& block_of) {
  const auto m = static_cast<Eigen::Index>(block_of.size());
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, i) = 2.0 + rng.uniform();
    for (Eigen::Index j = 0; j < i; ++j) {
      if (block_of[static_cast<std::size_t>(i)] == block_of[static_cast<std::size_t>(j)]) {
        a(i, j) = a(j, i) = 0.3 + 0.5 * rng.uniform();
      }
    }
  }
  return SymmetricMatrix(a);
}

}  // namespace

TEST_CASE("find_discardable_blocks examples") {
  SUBCASE("joint block matrix, response kept") {
    const EigenSystem eig = eigh(kJoint);
    const auto cands = find_discardable_blocks(eig, 0.0, 2);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].discard_set == IndexSet{0});
    REQUIRE(cands[0].eigen_set.size() == 1);
    const auto delta = static_cast<Eigen::Index>(cands[0].eigen_set[0]);
    CHECK(eig.values(delta) == 1.0);
    CHECK(eig.vectors(0, delta) == 1.0);
  }
  SUBCASE("without a response both blocks are reported") {
    const auto cands = find_discardable_blocks(eigh(kJoint), 0.0);
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].discard_set == IndexSet{0});
    CHECK(cands[1].discard_set == IndexSet{1, 2});
  }
  SUBCASE("identity gives singletons") {
    const auto cands = find_discardable_blocks(eigh(SymmetricMatrix::identity(4)), 0.0);
    REQUIRE(cands.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(cands[i].discard_set == IndexSet{i});
  }
  SUBCASE("dense 2x2 gives nothing") {
    CHECK(find_discardable_blocks(eigh(sym({{1, 0.5}, {0.5, 1}})), 0.3).empty());
  }
  SUBCASE("tau out of range") {
    CHECK_THROWS_AS(find_discardable_blocks(eigh(kJoint), 1.0), Error);
    CHECK_THROWS_AS(find_discardable_blocks(eigh(kJoint), -0.1), Error);
  }
}

TEST_CASE("match_eigen_to_block") {
  const EigenSystem d = eigh(sym({{4, 0}, {0, 1}}));
  const IndexSet delta = match_eigen_to_block(d, {1}, 0.0);
  REQUIRE(delta.size() == 1);
  CHECK(d.values(static_cast<Eigen::Index>(delta[0])) == 1.0);
  CHECK(d.vectors(1, static_cast<Eigen::Index>(delta[0])) == 1.0);

  try {
    match_eigen_to_block(eigh(sym({{2, 1}, {1, 2}})), {0}, 0.1);
    FAIL("expected a block mismatch");
  } catch (const BlockMismatchError& e) {
    CHECK(e.kind() == ErrorKind::BlockMismatch);
    CHECK(e.found().empty());
  }

  const EigenSystem j = eigh(kJoint);
  const IndexSet dj = match_eigen_to_block(j, {0}, 0.0);
  REQUIRE(dj.size() == 1);
  CHECK(j.values(static_cast<Eigen::Index>(dj[0])) == 1.0);
}

TEST_CASE("explained_variance") {
  const EigenSystem j = eigh(kJoint);
  const auto ev = explained_variance(j, {0}, match_eigen_to_block(j, {0}, 0.0));
  CHECK(ev.exact == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(ev.approx == doctest::Approx(0.25).epsilon(1e-14));

  const EigenSystem id = eigh(SymmetricMatrix::identity(3));
  const auto e1 = explained_variance(id, {0}, {0});
  CHECK(e1.exact == doctest::Approx(1.0 / 3.0));
  CHECK(e1.approx == doctest::Approx(1.0 / 3.0));

  const EigenSystem dg = eigh(sym({{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  const auto e2 = explained_variance(dg, {0}, match_eigen_to_block(dg, {0}, 0.0));
  CHECK(e2.exact == doctest::Approx(0.5));
  CHECK(e2.approx == doctest::Approx(0.5));

  CHECK_THROWS_AS(explained_variance(eigh(SymmetricMatrix::zero(2)), {0}, {0}), Error);
}

TEST_CASE("exact blocks agree with a connected-components oracle") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 7);
    std::vector<int> block_of(m);
    for (auto& b : block_of) b = static_cast<int>(rng.next_u64() % 3);
    const SymmetricMatrix a = random_block_matrix(rng, block_of);
    const auto expected = oracle::components(a.matrix());
    const auto cands = find_discardable_blocks(eigh(a), 0.0);
    std::vector<IndexSet> got;
    for (const auto& c : cands) {
      got.push_back(c.discard_set);
      CHECK(c.max_offblock_loading == 0.0);
      CHECK(c.explained.exact == doctest::Approx(c.explained.approx).epsilon(1e-12));
    }
    if (expected.size() == 1) {
      CHECK(got.empty());
    } else {
      CHECK(got == expected);
      double total = 0.0;
      for (const auto& c : cands) total += c.explained.exact;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("thresholding soundness and monotonicity in tau") {
  SeededRng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = 2 + static_cast<Eigen::Index>(trial % 6);
    const Matrix x = testutil::random_matrix(rng, 3 * m, m);
    const EigenSystem eig = eigh(sample_covariance(mean_center(x)));
    IndexSet previous;
    for (double tau : {0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
      const auto cands = find_discardable_blocks(eig, tau);
      IndexSet singles;
      for (const auto& c : cands) {
        CHECK(c.discard_set.size() == c.eigen_set.size());
        CHECK(c.max_offblock_loading <= tau);
        for (auto delta : c.eigen_set) {
          for (auto i : complement(c.discard_set, eig.dim())) {
            CHECK(std::abs(eig.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(delta))) <= tau);
          }
        }
        if (c.discard_set.size() == 1) singles.push_back(c.discard_set[0]);
      }
      CHECK(std::includes(singles.begin(), singles.end(), previous.begin(), previous.end()));
      previous = singles;
    }
  }
}

TEST_CASE("run_pla") {
  SeededRng rng(31);
  SUBCASE("independent columns, correlation basis") {
    const Matrix x = testutil::random_matrix(rng, 200, 4);
    const PlaReport r = run_pla(x, Basis::Correlation, 0.1);
    CHECK(r.basis == Basis::Correlation);
    for (const auto& c : r.candidates) {
      CHECK(c.max_offblock_loading <= 0.1);
      CHECK(c.explained.exact >= 0.0);
      CHECK(c.explained.exact <= 1.0 + 1e-12);
      CHECK(c.explained.approx <= 1.0 + 1e-12);
    }
  }
  SUBCASE("identical columns") {
    Matrix x = testutil::random_matrix(rng, 30, 3);
    x.col(2) = x.col(1);
    try {
      run_pla(x, Basis::Correlation, 0.1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateInput);
    }
    CHECK_NOTHROW(run_pla(x, Basis::Covariance, 0.1));
  }
  SUBCASE("zero variance column is flagged under covariance") {
    Matrix x = testutil::random_matrix(rng, 30, 3);
    x.col(0).setConstant(5.0);
    const PlaReport r = run_pla(x, Basis::Covariance, 0.1);
    CHECK(r.zero_variance == IndexSet{0});
    CHECK_THROWS_AS(run_pla(x, Basis::Correlation, 0.1), Error);
  }
  SUBCASE("too few rows") {
    CHECK_THROWS_AS(run_pla(testutil::random_matrix(rng, 3, 3), Basis::Covariance, 0.1), Error);
  }
  SUBCASE("correlation basis is scale invariant") {
    for (int trial = 0; trial < 20; ++trial) {
      Matrix x = testutil::random_matrix(rng, 50, 4);
      x.col(1) += 0.9 * x.col(2);
      const PlaReport a = run_pla(x, Basis::Correlation, 0.3);
      x.col(0) *= 7.5;
      x.col(3) *= 0.01;
      const PlaReport b = run_pla(x, Basis::Correlation, 0.3);
      REQUIRE(a.candidates.size() == b.candidates.size());
      for (std::size_t k = 0; k < a.candidates.size(); ++k) {
        CHECK(a.candidates[k].discard_set == b.candidates[k].discard_set);
      }
    }
  }
}
