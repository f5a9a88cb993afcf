#pragma once

// Block-uncorrelated Gaussian populations with a sparse perturbation, and
// seeded Monte Carlo studies that exercise every condition and bound.

#include <cstdint>
#include <optional>
#include <vector>

#include "plaols/linalg.hpp"
#include "plaols/ols.hpp"
#include "plaols/perturbation.hpp"
#include "plaols/pla.hpp"
#include "plaols/rng.hpp"

namespace plaols {

/// Population of (X, Y) where the covariates in d_set are uncorrelated with
/// the other covariates and with Y.
struct PopulationSpec : JointPopulation {
  IndexSet d_set;
  Vector beta_true;  // Sigma^{-1} Cov
};

struct PopulationOptions {
  bool unit_variance = false;  // Dg(Sigma) = I and Var(Y) = 1
  bool perturb_cov = true;     // also perturb Cov at the first discard index
  double noise_variance = 1.0;
  int max_attempts = 100;
};

/// D = {0, .., d_size-1}. Each diagonal block of Sigma is G G^T / k + I for a
/// k x k standard normal G; beta on D^c has norm `signal` in a random
/// direction, Cov = Sigma beta and Var(Y) = beta^T Sigma beta + noise variance.
/// In unit-variance mode Sigma is rescaled to a correlation matrix and beta is
/// scaled so that beta^T Sigma beta = signal^2 / (1 + signal^2), Var(Y) = 1.
/// E holds perturb_eps at the symmetric pair (D_0, D^c_0); e_cov holds
/// perturb_eps at D_0 when perturb_cov is set. Draws are redone until the
/// perturbed joint covariance is positive definite.
PopulationSpec make_population(std::size_t m, std::size_t d_size, double signal, double perturb_eps,
                               std::uint64_t seed, const PopulationOptions& options = {});

/// Checks block structure, sparsity of E, and positive definiteness of Sigma,
/// Sigma_Y and the perturbed Sigma_Y. Throws Structural or Singular.
void validate_population(const PopulationSpec& spec);

/// N x (M+1) mean-centred draws from N(0, Sigma_Y) (or the perturbed joint
/// covariance): each row is L z with L the Cholesky factor and z drawn in
/// column order from `rng`.
Matrix sample_gaussian(const PopulationSpec& spec, std::size_t n, bool perturbed, SeededRng& rng);

struct TrialConfig {
  std::optional<double> tau;  // nullopt: choose tau from the bounds
  double alpha = 0.05;
  double constant = kDefaultBoundConstant;
  Basis basis = Basis::Covariance;
};

struct TrialOutcome {
  std::size_t replication = 0;
  std::size_t n = 0;

  double tau = 0.0;
  bool tau_auto = false;
  bool tau_clamped = false;

  bool pla_base_discards = false;       // some candidate equals D on x_y
  bool pla_perturbed_discards = false;  // same on x~_y~
  std::size_t pla_base_candidates = 0;
  std::size_t pla_perturbed_candidates = 0;
  bool ols_base_discards = false;  // every d in D has p > alpha
  bool ols_perturbed_discards = false;
  double ols_perturbed_min_p = 0.0;

  bool theorem1 = false;
  bool lemma2 = false;
  bool corollary3 = false;
  bool theorem1_corr = false;
  bool lemma6 = false;
  bool corollary7 = false;
  bool coefficient_dominance = false;  // |beta_approx| >= |beta~_approx| on D

  double tau_lower = 0.0;
  double tau_upper = 0.0;
  double tau_upper_necessary = 0.0;
  double tau_loose_upper = 0.0;
  bool tau_feasible = false;
  double tau_lower_corr = 0.0;
  double tau_upper_corr = 0.0;
  bool tau_feasible_corr = false;

  double h_frob = 0.0;
  double h_rho_frob = 0.0;
  double e_tilde_frob = 0.0;
  double h_max_abs = 0.0;
  double h_star_row_max = 0.0;
  double ee_star_row_max = 0.0;
  double approx_error = 0.0;  // mean over D of |beta_hat - beta_approx|

  // Broken implications (0 or 1 each).
  int lemma2_not_theorem1 = 0;
  int theorem1_not_dominance = 0;
  int lemma2_not_corollary3 = 0;
  int lemma6_not_corollary7 = 0;

  int violations() const noexcept {
    return lemma2_not_theorem1 + theorem1_not_dominance + lemma2_not_corollary3 + lemma6_not_corollary7;
  }
};

/// One replication: independent base and perturbed samples (substreams 0 and
/// 1 of `rng`), the known-population splits, PLA on both joint samples, OLS of
/// y on x for both, every condition check and the cut-off bounds. Automatic tau
/// is the midpoint of the covariance (or correlation) bound interval when
/// feasible and its lower end otherwise, clamped into [0, 1).
TrialOutcome run_trial(const PopulationSpec& spec, std::size_t n, const TrialConfig& config, const SeededRng& rng,
                       std::size_t replication = 0);

struct StudyRow {
  std::size_t n = 0;
  double mean_h_frob = 0.0;
  double mean_h_rho_frob = 0.0;
  double mean_h_max_abs = 0.0;
  double mean_approx_error = 0.0;
};

struct StudySummary {
  std::vector<StudyRow> per_n;
  std::optional<double> h_frob_slope;
  std::optional<double> h_rho_frob_slope;
  std::optional<double> approx_error_slope;

  std::size_t trials = 0;
  double freq_theorem1 = 0.0;
  double freq_lemma2 = 0.0;
  double freq_corollary3 = 0.0;
  double freq_lemma6 = 0.0;
  double freq_corollary7 = 0.0;
  double freq_pla_discards = 0.0;
  double freq_ols_discards = 0.0;
  double freq_both_discard = 0.0;
  double freq_tau_feasible = 0.0;

  int violations_lemma2_theorem1 = 0;
  int violations_theorem1_dominance = 0;
  int violations_lemma2_corollary3 = 0;
  int violations_lemma6_corollary7 = 0;
  int violations_total = 0;
};

struct Study {
  std::vector<TrialOutcome> trials;  // ordered by (n index, replication)
  StudySummary summary;
};

/// Stream for studies and bound samples under master seed `seed`, apart from
/// the stream make_population draws from when given the same seed.
inline SeededRng study_stream(std::uint64_t seed) { return SeededRng(seed).substream(0x5EED, 0x57D9); }

/// Trial (i, r) uses rng.substream(i, r). Results do not depend on parallelism.
Study run_study(const PopulationSpec& spec, const std::vector<std::size_t>& n_list, std::size_t replications,
                const TrialConfig& config, const SeededRng& rng, std::size_t parallelism = 1);

/// Cut-off bounds for both bases on one instance. With a sample size the base
/// and perturbed samples come from substreams 0 and 1 of `rng` (as in
/// run_trial); without one the population moments stand in for the samples,
/// so every noise term vanishes.
struct BoundsReport {
  std::optional<std::size_t> n;
  IndexSet delta_set;       // eigenpairs of Sigma_Y matched to D
  IndexSet delta_set_corr;  // eigenpairs of P_Y matched to D
  Vector joint_eigenvalues;
  Vector joint_eigenvalues_corr;
  TauBounds covariance;
  TauBounds correlation;
};

BoundsReport compute_bounds(const PopulationSpec& spec, std::optional<std::size_t> n, double constant,
                            const SeededRng& rng);

StudySummary summarize(const std::vector<TrialOutcome>& trials, const std::vector<std::size_t>& n_list);

}  // namespace plaols
