#include "plaols/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace plaols {

namespace {

Matrix random_block(std::size_t k, SeededRng& rng) {
  Matrix g(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal();
  }
  return g * g.transpose() / static_cast<double>(k) + Matrix::Identity(k, k);
}

void place_block(Matrix& target, const Matrix& block, const IndexSet& idx) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      target(static_cast<Eigen::Index>(idx[i]), static_cast<Eigen::Index>(idx[j])) =
          block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
}

bool same_set(const IndexSet& a, const IndexSet& b) { return a == b; }

bool discards_block(const PlaReport& report, const IndexSet& d_set) {
  return std::any_of(report.candidates.begin(), report.candidates.end(),
                     [&](const DiscardCandidate& c) { return same_set(c.discard_set, d_set); });
}

double choose_auto_tau(const TauBounds& b) {
  if (b.feasible) return 0.5 * (b.aggregate_lower + b.aggregate_upper);
  if (std::isfinite(b.aggregate_lower)) return b.aggregate_lower;
  return 0.0;
}

bool all_of(const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool x) { return x; }); }

}  // namespace

PopulationSpec make_population(std::size_t m, std::size_t d_size, double signal, double perturb_eps,
                               std::uint64_t seed, const PopulationOptions& options) {
  if (d_size < 1 || d_size >= m) {
    throw Error(ErrorKind::InvalidArgument, "population needs 1 <= d_size < m");
  }
  if (!std::isfinite(signal) || !std::isfinite(perturb_eps) || signal < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "signal must be finite and non-negative, perturbation finite");
  }
  if (!(options.noise_variance > 0.0)) throw Error(ErrorKind::InvalidArgument, "noise variance must be positive");

  IndexSet d_set(d_size);
  for (std::size_t i = 0; i < d_size; ++i) d_set[i] = i;
  const IndexSet dc_set = complement(d_set, m);
  SeededRng rng(seed);

  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    Matrix sigma = Matrix::Zero(m, m);
    place_block(sigma, random_block(d_size, rng), d_set);
    place_block(sigma, random_block(dc_set.size(), rng), dc_set);
    if (options.unit_variance) {
      const Vector scale = sigma.diagonal().cwiseSqrt().cwiseInverse();
      sigma = scale.asDiagonal() * sigma * scale.asDiagonal();
      sigma.diagonal().setOnes();
    }

    Vector beta = Vector::Zero(m);
    Vector direction(dc_set.size());
    for (Eigen::Index i = 0; i < direction.size(); ++i) direction(i) = rng.normal();
    if (signal > 0.0) {
      direction /= direction.norm();
      for (std::size_t i = 0; i < dc_set.size(); ++i) {
        beta(static_cast<Eigen::Index>(dc_set[i])) = signal * direction(static_cast<Eigen::Index>(i));
      }
    }

    PopulationSpec spec;
    spec.sigma = SymmetricMatrix(sigma);
    double explained = beta.dot(spec.sigma.matrix() * beta);
    if (options.unit_variance && explained > 0.0) {
      const double target = signal * signal / (1.0 + signal * signal);
      beta *= std::sqrt(target / explained);
      explained = target;
    }
    spec.cov = spec.sigma.matrix() * beta;
    for (auto d : d_set) spec.cov(static_cast<Eigen::Index>(d)) = 0.0;
    spec.var_y = options.unit_variance ? 1.0 : explained + options.noise_variance;

    Matrix e = Matrix::Zero(m, m);
    e(static_cast<Eigen::Index>(d_set[0]), static_cast<Eigen::Index>(dc_set[0])) = perturb_eps;
    e(static_cast<Eigen::Index>(dc_set[0]), static_cast<Eigen::Index>(d_set[0])) = perturb_eps;
    spec.e = SymmetricMatrix(e);
    spec.e_cov = Vector::Zero(m);
    if (options.perturb_cov) spec.e_cov(static_cast<Eigen::Index>(d_set[0])) = perturb_eps;
    spec.d_set = d_set;
    spec.beta_true = solve_spd(spec.sigma, spec.cov);

    if (is_positive_definite(spec.joint()) && is_positive_definite(spec.joint_perturbed())) return spec;
  }
  throw Error(ErrorKind::InvalidArgument,
              "could not build a positive definite perturbed population; reduce the perturbation size");
}

void validate_population(const PopulationSpec& spec) {
  const auto m = spec.m();
  check_index_set(spec.d_set, m, "discard set");
  const IndexSet dc = complement(spec.d_set, m);
  for (auto d : spec.d_set) {
    for (auto c : dc) {
      if (spec.sigma(d, c) != 0.0) throw Error(ErrorKind::Structural, "Sigma[D, D^c] is not zero");
    }
    if (spec.cov(static_cast<Eigen::Index>(d)) != 0.0) throw Error(ErrorKind::Structural, "Cov[D] is not zero");
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (spec.e(i, j) != 0.0 && spec.sigma(i, j) != 0.0) {
        throw Error(ErrorKind::Structural, "perturbation overlaps a nonzero population covariance");
      }
    }
  }
  if (!is_positive_definite(spec.sigma)) throw Error(ErrorKind::Singular, "Sigma is not positive definite");
  if (!is_positive_definite(spec.joint())) throw Error(ErrorKind::Singular, "Sigma_Y is not positive definite");
  if (!is_positive_definite(spec.joint_perturbed())) {
    throw Error(ErrorKind::Singular, "perturbed Sigma_Y is not positive definite");
  }
}

Matrix sample_gaussian(const PopulationSpec& spec, std::size_t n, bool perturbed, SeededRng& rng) {
  const SymmetricMatrix joint = perturbed ? spec.joint_perturbed() : spec.joint();
  Eigen::LLT<Matrix> llt(joint.matrix());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::Singular, "joint covariance is not positive definite; cannot sample");
  }
  const Matrix lower = llt.matrixL();
  const auto k = static_cast<Eigen::Index>(joint.dim());
  Matrix out(static_cast<Eigen::Index>(n), k);
  Vector z(k);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) z(j) = rng.normal();
    out.row(i) = (lower * z).transpose();
  }
  return mean_center(out);
}

TrialOutcome run_trial(const PopulationSpec& spec, std::size_t n, const TrialConfig& config, const SeededRng& rng,
                       std::size_t replication) {
  const auto m = spec.m();
  if (n <= m + 1) {
    throw Error(ErrorKind::InvalidArgument, "trial needs n > m + 1 observations");
  }
  TrialOutcome out;
  out.replication = replication;
  out.n = n;

  SeededRng base_rng = rng.substream(0);
  SeededRng pert_rng = rng.substream(1);
  const Matrix base = sample_gaussian(spec, n, false, base_rng);
  const Matrix pert = sample_gaussian(spec, n, true, pert_rng);
  const SymmetricMatrix s_joint = sample_covariance(base);
  const SymmetricMatrix s_joint_tilde = sample_covariance(pert);

  const PerturbationSplit split = split_joint(spec, s_joint, s_joint_tilde, spec.d_set);
  const CorrelationSplit csplit = split_correlation(spec, s_joint, s_joint_tilde, spec.d_set);
  const ConditionReport cond = evaluate_conditions(split, spec.sigma);
  const ConditionReport ccond = evaluate_conditions_corr(csplit);
  const ApproxCoefficients approx = approx_coefficients(split, spec.sigma, spec.cov, spec.d_set);

  out.theorem1 = cond.theorem1.holds;
  out.lemma2 = cond.lemma2.holds;
  out.corollary3 = cond.corollary3;
  out.theorem1_corr = ccond.theorem1.holds;
  out.lemma6 = ccond.lemma2.holds;
  out.corollary7 = ccond.corollary3;
  out.coefficient_dominance = true;
  for (Eigen::Index i = 0; i < approx.beta_approx.size(); ++i) {
    if (!(std::abs(approx.beta_approx(i)) >= std::abs(approx.beta_tilde_approx(i)))) out.coefficient_dominance = false;
  }
  out.lemma2_not_theorem1 = out.lemma2 && !out.theorem1;
  out.theorem1_not_dominance = out.theorem1 && !out.coefficient_dominance;
  out.lemma2_not_corollary3 = out.lemma2 && !out.corollary3;
  out.lemma6_not_corollary7 = out.lemma6 && !out.corollary7;

  const EigenSystem pop_eig = eigh(spec.joint());
  const EigenSystem pop_eig_corr = eigh(correlation_from_covariance(spec.joint()));
  const TauBounds bounds = tau_bounds(split, spec.sigma, pop_eig.values,
                                      match_eigen_to_block(pop_eig, spec.d_set, 0.0), config.constant);
  const TauBounds cbounds = tau_bounds_corr(csplit, pop_eig_corr.values,
                                            match_eigen_to_block(pop_eig_corr, spec.d_set, 0.0), config.constant);
  out.tau_lower = bounds.aggregate_lower;
  out.tau_upper = bounds.aggregate_upper;
  out.tau_upper_necessary = bounds.aggregate_upper_necessary;
  out.tau_loose_upper = bounds.loose_upper;
  out.tau_feasible = bounds.feasible;
  out.tau_lower_corr = cbounds.aggregate_lower;
  out.tau_upper_corr = cbounds.aggregate_upper;
  out.tau_feasible_corr = cbounds.feasible;

  if (config.tau) {
    out.tau = *config.tau;
  } else {
    out.tau_auto = true;
    out.tau = choose_auto_tau(config.basis == Basis::Covariance ? bounds : cbounds);
  }
  if (!(out.tau < 1.0)) {
    out.tau = std::nextafter(1.0, 0.0);
    out.tau_clamped = true;
  }
  if (out.tau < 0.0) {
    out.tau = 0.0;
    out.tau_clamped = true;
  }

  const PlaReport pla_base = pla_from_covariance(s_joint, config.basis, out.tau, m);
  const PlaReport pla_pert = pla_from_covariance(s_joint_tilde, config.basis, out.tau, m);
  out.pla_base_discards = discards_block(pla_base, spec.d_set);
  out.pla_perturbed_discards = discards_block(pla_pert, spec.d_set);
  out.pla_base_candidates = pla_base.candidates.size();
  out.pla_perturbed_candidates = pla_pert.candidates.size();

  const auto mi = static_cast<Eigen::Index>(m);
  const OlsFit fit_base = ols_fit(base.leftCols(mi), base.col(mi));
  const OlsFit fit_pert = ols_fit(pert.leftCols(mi), pert.col(mi));
  out.ols_base_discards = all_of(discard_by_ols(fit_base, spec.d_set, config.alpha));
  out.ols_perturbed_discards = all_of(discard_by_ols(fit_pert, spec.d_set, config.alpha));
  out.ols_perturbed_min_p = 1.0;
  double err = 0.0;
  for (std::size_t r = 0; r < spec.d_set.size(); ++r) {
    const auto d = static_cast<Eigen::Index>(spec.d_set[r]);
    out.ols_perturbed_min_p = std::min(out.ols_perturbed_min_p, fit_pert.p_values(d));
    err += std::abs(fit_base.beta_hat(d) - approx.beta_approx(static_cast<Eigen::Index>(r)));
  }
  out.approx_error = err / static_cast<double>(spec.d_set.size());

  out.h_frob = split.h.matrix().norm();
  out.h_rho_frob = csplit.h_rho.matrix().norm();
  out.e_tilde_frob = split.e_tilde.matrix().norm();
  out.h_max_abs = split.h.matrix().cwiseAbs().maxCoeff();
  out.h_star_row_max = split.h_star.rowwise().norm().maxCoeff();
  out.ee_star_row_max = (split.e_star + split.e_tilde_star).rowwise().norm().maxCoeff();
  return out;
}

BoundsReport compute_bounds(const PopulationSpec& spec, std::optional<std::size_t> n, double constant,
                            const SeededRng& rng) {
  BoundsReport out;
  out.n = n;
  SymmetricMatrix s_joint = spec.joint();
  SymmetricMatrix s_joint_tilde = spec.joint_perturbed();
  if (n) {
    if (*n <= spec.m() + 1) throw Error(ErrorKind::InvalidArgument, "bounds need n > m + 1 observations");
    SeededRng base_rng = rng.substream(0);
    SeededRng pert_rng = rng.substream(1);
    s_joint = sample_covariance(sample_gaussian(spec, *n, false, base_rng));
    s_joint_tilde = sample_covariance(sample_gaussian(spec, *n, true, pert_rng));
  }
  const PerturbationSplit split = split_joint(spec, s_joint, s_joint_tilde, spec.d_set);
  const CorrelationSplit csplit = split_correlation(spec, s_joint, s_joint_tilde, spec.d_set);
  const EigenSystem eig = eigh(spec.joint());
  const EigenSystem eig_corr = eigh(correlation_from_covariance(spec.joint()));
  out.delta_set = match_eigen_to_block(eig, spec.d_set, 0.0);
  out.delta_set_corr = match_eigen_to_block(eig_corr, spec.d_set, 0.0);
  out.joint_eigenvalues = eig.values;
  out.joint_eigenvalues_corr = eig_corr.values;
  out.covariance = tau_bounds(split, spec.sigma, eig.values, out.delta_set, constant);
  out.correlation = tau_bounds_corr(csplit, eig_corr.values, out.delta_set_corr, constant);
  return out;
}

StudySummary summarize(const std::vector<TrialOutcome>& trials, const std::vector<std::size_t>& n_list) {
  StudySummary s;
  s.trials = trials.size();
  std::vector<std::pair<double, double>> h_samples, rho_samples, err_samples;
  bool err_positive = true;
  for (auto n : n_list) {
    StudyRow row;
    row.n = n;
    std::size_t count = 0;
    for (const auto& t : trials) {
      if (t.n != n) continue;
      ++count;
      row.mean_h_frob += t.h_frob;
      row.mean_h_rho_frob += t.h_rho_frob;
      row.mean_h_max_abs += t.h_max_abs;
      row.mean_approx_error += t.approx_error;
      h_samples.emplace_back(static_cast<double>(n), t.h_frob);
      rho_samples.emplace_back(static_cast<double>(n), t.h_rho_frob);
      err_samples.emplace_back(static_cast<double>(n), t.approx_error);
      err_positive = err_positive && t.approx_error > 0.0;
    }
    if (count > 0) {
      const double c = static_cast<double>(count);
      row.mean_h_frob /= c;
      row.mean_h_rho_frob /= c;
      row.mean_h_max_abs /= c;
      row.mean_approx_error /= c;
    }
    s.per_n.push_back(row);
  }
  std::vector<std::size_t> distinct = n_list;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() >= 3 && !trials.empty()) {
    s.h_frob_slope = convergence_rate_estimate(h_samples);
    s.h_rho_frob_slope = convergence_rate_estimate(rho_samples);
    if (err_positive) s.approx_error_slope = convergence_rate_estimate(err_samples);
  }

  for (const auto& t : trials) {
    s.freq_theorem1 += t.theorem1;
    s.freq_lemma2 += t.lemma2;
    s.freq_corollary3 += t.corollary3;
    s.freq_lemma6 += t.lemma6;
    s.freq_corollary7 += t.corollary7;
    s.freq_pla_discards += t.pla_perturbed_discards;
    s.freq_ols_discards += t.ols_perturbed_discards;
    s.freq_both_discard += t.pla_perturbed_discards && t.ols_perturbed_discards;
    s.freq_tau_feasible += t.tau_feasible;
    s.violations_lemma2_theorem1 += t.lemma2_not_theorem1;
    s.violations_theorem1_dominance += t.theorem1_not_dominance;
    s.violations_lemma2_corollary3 += t.lemma2_not_corollary3;
    s.violations_lemma6_corollary7 += t.lemma6_not_corollary7;
  }
  if (!trials.empty()) {
    const double c = static_cast<double>(trials.size());
    for (double* f : {&s.freq_theorem1, &s.freq_lemma2, &s.freq_corollary3, &s.freq_lemma6, &s.freq_corollary7,
                      &s.freq_pla_discards, &s.freq_ols_discards, &s.freq_both_discard, &s.freq_tau_feasible}) {
      *f /= c;
    }
  }
  s.violations_total = s.violations_lemma2_theorem1 + s.violations_theorem1_dominance +
                       s.violations_lemma2_corollary3 + s.violations_lemma6_corollary7;
  return s;
}

Study run_study(const PopulationSpec& spec, const std::vector<std::size_t>& n_list, std::size_t replications,
                const TrialConfig& config, const SeededRng& rng, std::size_t parallelism) {
  if (replications < 1) throw Error(ErrorKind::InvalidArgument, "study needs at least one replication");
  if (n_list.empty()) throw Error(ErrorKind::InvalidArgument, "study needs at least one sample size");
  const std::size_t total = n_list.size() * replications;
  std::vector<TrialOutcome> trials(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const std::size_t ni = job / replications;
      const std::size_t rep = job % replications;
      try {
        trials[job] = run_trial(spec, n_list[ni], config, rng.substream(ni, rep), rep);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, total);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Study study;
  study.summary = summarize(trials, n_list);
  study.trials = std::move(trials);
  return study;
}

}  // namespace plaols
