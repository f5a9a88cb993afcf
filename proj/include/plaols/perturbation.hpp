#pragma once

// Population / perturbation / noise decomposition of sample covariance and
// correlation matrices, and the conditions and cut-off bounds under which PLA
// and OLS discard the same block of covariates.
//
// Conventions: covariates are indexed 0..M-1; in joint (M+1)-dimensional
// matrices the response sits at index M. D is the block of covariates assumed
// uncorrelated with the remaining covariates and with the response.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plaols/linalg.hpp"

namespace plaols {

/// Known population moments of (X, Y) together with the sparse perturbation
/// that turns them into the moments of (X~, Y~). Var(Y~) = Var(Y).
struct JointPopulation {
  SymmetricMatrix sigma;  // M x M
  Vector cov;             // Cov(X_i, Y)
  double var_y = 1.0;
  SymmetricMatrix e;      // nonzero only where sigma is zero
  Vector e_cov;

  std::size_t m() const noexcept { return sigma.dim(); }
  SymmetricMatrix joint() const;            // Sigma_Y
  SymmetricMatrix joint_perturbed() const;  // Sigma_Y + E_Y
};

/// [[S, c], [c^T, v]]
SymmetricMatrix assemble_joint(const SymmetricMatrix& s, const Vector& c, double v);

/// Returns h with fl(base + h) == target whenever such an h is reachable within
/// a few ulps of target - base (always the case for same-magnitude operands).
double exact_difference(double target, double base);

struct PerturbationSplit {
  IndexSet d_set;
  IndexSet dc_set;

  SymmetricMatrix h;        // Sigma^ - Sigma
  SymmetricMatrix e;        // Sigma~ - Sigma
  SymmetricMatrix e_tilde;  // Sigma^~ - Sigma~
  Vector h_cov;
  Vector e_cov;
  Vector e_tilde_cov;

  SymmetricMatrix h_joint;   // H_Y
  SymmetricMatrix ee_joint;  // E_Y + E~_Y

  // |D| x (1 + |D^c|): column 0 holds the Cov-vector part, columns 1.. the
  // [D, D^c] block of the matrix part.
  Matrix h_star;
  Matrix e_star;
  Matrix e_tilde_star;
  Vector cov_star;  // (1, -(Sigma^{-1})_[Dc,Dc] Cov_[Dc])
};

/// Splits sample moments into population + perturbation + noise.
///
/// The joint H_Y and E_Y + E~_Y are assembled from the covariate and Cov-vector
/// parts with zero response-variance noise; split_joint fills them completely.
/// Throws Structural if some e_ij != 0 where sigma_ij != 0.
PerturbationSplit split_known_population(const SymmetricMatrix& sigma, const Vector& cov, const SymmetricMatrix& e,
                                         const Vector& e_cov, const SymmetricMatrix& sample_cov,
                                         const SymmetricMatrix& sample_cov_tilde, const Vector& sample_covvec,
                                         const Vector& sample_covvec_tilde, const IndexSet& d_set);

/// Same split from joint (M+1) sample covariance matrices of x_y and x~_y~.
PerturbationSplit split_joint(const JointPopulation& pop, const SymmetricMatrix& sample_joint,
                              const SymmetricMatrix& sample_joint_tilde, const IndexSet& d_set);

/// Which operands the correlation conditions use. The proof derives P^{-1} and
/// the correlation vector; the lemma statement writes Sigma^{-1} and Cov.
enum class CorrelationMode { ProofConsistent, Literal };

const char* to_string(CorrelationMode mode) noexcept;

struct CorrelationSplit {
  IndexSet d_set;
  IndexSet dc_set;

  SymmetricMatrix p;      // population correlation of X
  Vector corr;            // population correlations of X_i with Y
  SymmetricMatrix sigma;  // population covariance, used by the literal mode

  SymmetricMatrix h_rho;
  SymmetricMatrix e_rho;
  SymmetricMatrix e_tilde_rho;
  Vector h_corr;
  Vector e_corr;
  Vector e_tilde_corr;

  SymmetricMatrix h_joint;   // H^{rho_Y}
  SymmetricMatrix ee_joint;  // E^{rho_Y} + E~^{rho_Y}

  Matrix h_dagger;
  Matrix e_dagger;
  Matrix e_tilde_dagger;
  Vector corr_dagger;       // (1, -(P^{-1})_[Dc,Dc] corr_[Dc])
  Vector cov_star_literal;  // (1, -(Sigma^{-1})_[Dc,Dc] Cov_[Dc])

  // Covariance-side noise, needed only by the literal cut-off bounds.
  Matrix h_star_cov;
  SymmetricMatrix h_joint_cov;
};

CorrelationSplit split_correlation(const JointPopulation& pop, const SymmetricMatrix& sample_joint,
                                   const SymmetricMatrix& sample_joint_tilde, const IndexSet& d_set);

/// (weights.row(row) * block) . combination, evaluated in that order. Shared by
/// the condition checks and the approximated OLS coefficients so both see
/// bit-identical values.
double sandwich_product(const Matrix& weights, std::size_t row, const Matrix& block, const Vector& combination);

struct Theorem1Result {
  Vector numerators;    // (W)_[d,D] (E* + E~*) c
  Vector denominators;  // (W)_[d,D] H* c
  Vector ratios;        // NaN where |denominator| < 1e-14
  std::vector<bool> holds_per_d;
  bool holds = false;
};

struct Lemma2Result {
  Vector cos_angles;  // per d; NaN when degenerate
  std::vector<bool> degenerate_angle;
  Matrix lhs;  // lhs(d, d*) = ||(E* + E~*)_[d*,.]||_2
  Matrix rhs;  // rhs(d, d*) = ||H*_[d*,.]||_2 |cos theta_d|
  bool holds = false;
};

struct ConditionReport {
  Theorem1Result theorem1;
  Lemma2Result lemma2;
  bool corollary3 = false;
};

/// Ratio test per d in D: holds iff |numerator| <= |denominator| (ratio in
/// [-1, 1]). A denominator below 1e-14 in magnitude holds iff the numerator is
/// also below 1e-14.
Theorem1Result check_theorem1(const PerturbationSplit& split, const SymmetricMatrix& sigma);

/// Row-norm test for every (d, d*) in D x D. A zero-norm angle operand makes
/// the condition false with the degenerate flag set.
Lemma2Result check_lemma2(const PerturbationSplit& split, const SymmetricMatrix& sigma);

/// ||(E* + E~*)_[d*,.]||_2 <= ||H*_[d*,.]||_2 for every d* in D.
bool check_corollary3(const PerturbationSplit& split);

ConditionReport evaluate_conditions(const PerturbationSplit& split, const SymmetricMatrix& sigma);

Theorem1Result check_theorem1_corr(const CorrelationSplit& split, CorrelationMode mode = CorrelationMode::ProofConsistent);
Lemma2Result check_lemma6(const CorrelationSplit& split, CorrelationMode mode = CorrelationMode::ProofConsistent);
bool check_corollary7(const CorrelationSplit& split);
ConditionReport evaluate_conditions_corr(const CorrelationSplit& split,
                                         CorrelationMode mode = CorrelationMode::ProofConsistent);

/// min(lambda_{k-1} - lambda_k, lambda_k - lambda_{k+1}) for descending values
/// with +inf / -inf sentinels beyond either end. `index` is zero-based.
double eigengap(const Vector& descending_values, std::size_t index);

inline const double kDefaultBoundConstant = std::cbrt(4.0);          // 2^{2/3}
inline const double kDavisKahanConstant = 2.0 * std::sqrt(2.0);  // 2^{3/2}

struct TauTuple {
  std::size_t d = 0;
  std::size_t d_star = 0;
  std::size_t delta = 0;
  double gap = 0.0;
  double lower = 0.0;
  double upper_tight = 0.0;      // with |cos|
  double upper_necessary = 0.0;  // without |cos|
  double upper_loose = 0.0;      // Frobenius norm of the joint noise
};

struct TauBounds {
  std::vector<TauTuple> tuples;
  double constant = 0.0;
  double aggregate_lower = 0.0;            // max of lowers
  double aggregate_upper = 0.0;            // min of tight uppers
  double aggregate_upper_necessary = 0.0;  // min of necessary uppers
  double loose_upper = 0.0;                // min of loose uppers
  bool feasible = false;                   // aggregate_lower <= aggregate_upper
  bool feasible_necessary = false;
  bool feasible_loose = false;
  std::string reason;  // empty unless some gap is zero
};

/// Cut-off bounds for covariance-based PLA.
///
/// Per (d, d*, delta): lower = c ||E_Y + E~_Y||_F / gap, upper_tight =
/// c ||H*_[d*,.]||_2 |cos theta_d| / gap, upper_necessary drops the cosine,
/// upper_loose = c ||H_Y||_F / gap. A zero gap sets that tuple's bounds to +inf
/// and makes every feasibility flag false.
TauBounds tau_bounds(const PerturbationSplit& split, const SymmetricMatrix& sigma, const Vector& joint_eigenvalues,
                     const IndexSet& delta_set, double constant = kDefaultBoundConstant);

/// Correlation-based version with omega = eigenvalues of P_Y. The literal mode
/// uses the covariance-case angle and ||H_Y||_F in the loose bound.
TauBounds tau_bounds_corr(const CorrelationSplit& split, const Vector& joint_eigenvalues, const IndexSet& delta_set,
                          double constant = kDefaultBoundConstant,
                          CorrelationMode mode = CorrelationMode::ProofConsistent);

/// True iff lower <= tau <= upper_tight for every tuple.
bool tau_satisfies_all(const TauBounds& bounds, double tau);

/// Least-squares slope of log(mean norm) against log(N). Samples are grouped by
/// N; needs at least 3 distinct N and positive norms.
double convergence_rate_estimate(std::span<const std::pair<double, double>> samples);

}  // namespace plaols
