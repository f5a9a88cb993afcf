#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "plaols/ols.hpp"

using namespace plaols;
using testutil::vec;

TEST_CASE("ols_fit examples") {
  SUBCASE("exact fit") {
    Matrix x(3, 1);
    x << -1, 0, 1;
    const OlsFit f = ols_fit(x, x.col(0));
    CHECK(f.beta_hat(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(f.sigma2_hat <= 1e-30);
    CHECK(f.p_values(0) <= 1e-12);
    CHECK(f.df == 2);
  }
  SUBCASE("orthogonal response") {
    Matrix x(4, 1);
    x << -1, 1, -1, 1;
    const OlsFit f = ols_fit(x, vec({-1, -1, 1, 1}));
    CHECK(f.beta_hat(0) == 0.0);
  }
  SUBCASE("hand normal equations") {
    Matrix x(3, 1);
    x << -1, 0, 1;
    const OlsFit f = ols_fit(x, vec({-2, 0, 2}));
    CHECK(f.beta_hat(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("errors") {
    Matrix x(2, 2);
    x << -1, 1, 1, -1;
    CHECK_THROWS_AS(ols_fit(x, vec({-1, 1})), Error);
    Matrix u(3, 1);
    u << 1, 2, 3;
    try {
      ols_fit(u, vec({-1, 0, 1}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ContractViolation);
    }
    Matrix r(4, 2);
    r << -1, -2, 1, 2, -1, -2, 1, 2;
    try {
      ols_fit(r, vec({-1, 1, 1, -1}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Singular);
    }
  }
}

TEST_CASE("ols_fit agrees with the normal-equations oracle") {
  SeededRng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = 1 + static_cast<Eigen::Index>(trial % 6);
    const auto n = m + 2 + static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(49 - m));
    const Matrix x = mean_center(testutil::random_matrix(rng, n, m));
    const Vector y = mean_center(testutil::random_matrix(rng, n, 1)).col(0);
    const OlsFit f = ols_fit(x, y);
    const Vector beta = oracle::ols_beta(x, y);
    CHECK((f.beta_hat - beta).cwiseAbs().maxCoeff() <= 1e-10);
    const Vector xtr = x.transpose() * f.residuals;
    CHECK(xtr.norm() <= 1e-8 * std::max(1.0, (x.transpose() * y).norm()));
    for (Eigen::Index k = 0; k < m; ++k) {
      CHECK(f.p_values(k) >= 0.0);
      CHECK(f.p_values(k) <= 1.0);
    }
  }
}

TEST_CASE("exact-fit recovery") {
  SeededRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = mean_center(testutil::random_matrix(rng, 30, 4));
    const Vector beta = testutil::random_matrix(rng, 4, 1);
    const OlsFit f = ols_fit(x, x * beta);
    CHECK((f.beta_hat - beta).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("student_t_sf") {
  CHECK(student_t_sf(0.0, 5) == 1.0);
  CHECK(student_t_sf(INFINITY, 5) == 0.0);
  CHECK(student_t_sf(1e300, 5) == doctest::Approx(0.0));
  CHECK(std::abs(student_t_sf(2.228, 10) - 0.050) <= 0.001);
  CHECK(std::abs(student_t_sf(2.228, 10) - oracle::student_t_two_sided(2.228, 10)) <= 1e-8);
  CHECK_THROWS_AS(student_t_sf(1.0, 0), Error);

  for (std::size_t df : {1u, 2u, 3u, 7u, 30u, 200u}) {
    double previous = 1.0;
    for (double t = 0.0; t <= 6.0; t += 0.25) {
      const double p = student_t_sf(t, df);
      CHECK(std::abs(p - oracle::student_t_two_sided(t, static_cast<double>(df))) <= 1e-8);
      CHECK(p == student_t_sf(-t, df));
      CHECK(p <= previous);
      previous = p;
    }
  }
  for (double t : {0.5, 1.0, 1.96, 3.0}) {
    // The t(1000) tail exceeds the normal one by roughly phi(t) (t^3 + t) / 2000.
    CHECK(std::abs(student_t_sf(t, 1000) - oracle::normal_two_sided(t)) <= 5e-4);
  }
}

TEST_CASE("incomplete_beta") {
  CHECK(incomplete_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(incomplete_beta(1.0, 2.0, 3.0) == 1.0);
  CHECK(incomplete_beta(0.5, 1.0, 1.0) == doctest::Approx(0.5));
  // I_x(a, 1) = x^a
  CHECK(incomplete_beta(0.3, 2.5, 1.0) == doctest::Approx(std::pow(0.3, 2.5)).epsilon(1e-12));
  CHECK(incomplete_beta(0.3, 2.0, 5.0) + incomplete_beta(0.7, 5.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(incomplete_beta(1.5, 1.0, 1.0), Error);
  CHECK_THROWS_AS(incomplete_beta(0.5, 0.0, 1.0), Error);
}

TEST_CASE("discard_by_ols") {
  OlsFit f;
  f.p_values = vec({0.5, 0.01, 0.05});
  const auto d = discard_by_ols(f, {0, 1, 2}, 0.05);
  CHECK(d == std::vector<bool>{true, false, false});
  CHECK_THROWS_AS(discard_by_ols(f, {3}, 0.05), Error);
  CHECK_THROWS_AS(discard_by_ols(f, {0}, 1.0), Error);
  CHECK_THROWS_AS(discard_by_ols(f, {0}, 0.0), Error);
}
