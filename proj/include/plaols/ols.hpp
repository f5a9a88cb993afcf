#pragma once

// Ordinary least squares on mean-centred data (no intercept), coefficient
// inference, the significance-based discard rule, and first-order
// approximations of the coefficients of the discard block.

#include <cstddef>
#include <vector>

#include "plaols/linalg.hpp"
#include "plaols/perturbation.hpp"

namespace plaols {

struct OlsFit {
  Vector beta_hat;
  Vector residuals;
  double sigma2_hat = 0.0;  // RSS / (N - M)
  Vector std_errors;
  Vector t_stats;
  Vector p_values;  // two-sided, Student-t with df degrees of freedom
  std::size_t df = 0;
};

/// beta = (X^T X)^{-1} X^T y for centred x and y. Throws DegenerateInput when
/// N <= M, ContractViolation for uncentred input, Singular for a rank-deficient
/// design. A zero standard error gives p = 0 for a nonzero coefficient and p = 1
/// for a zero one.
OlsFit ols_fit(const Matrix& x, const Vector& y);

/// Regularized incomplete beta I_x(a, b), continued fraction (Lentz) with a
/// 1e-12 relative termination.
double incomplete_beta(double x, double a, double b);

/// Two-sided P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_sf(double t, std::size_t df);

/// discard[k] is true iff p_value(d_set[k]) > alpha. p == alpha is significant.
std::vector<bool> discard_by_ols(const OlsFit& fit, const IndexSet& d_set, double alpha);

struct ApproxCoefficients {
  Vector beta_approx;        // (Sigma^{-1})_[d,D] H* Cov*
  Vector beta_tilde_approx;  // (Sigma^{-1})_[d,D] (E* + E~*) Cov*
};

/// First-order (Neumann) approximation of the OLS coefficients on D.
/// Requires Sigma_[D,D^c] = 0 and Cov_[D] = 0 (tolerance 1e-12), else Structural.
ApproxCoefficients approx_coefficients(const PerturbationSplit& split, const SymmetricMatrix& sigma, const Vector& cov,
                                       const IndexSet& d_set);

}  // namespace plaols
