#include "plaols/perturbation.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

namespace plaols {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroDenominator = 1e-14;

void require_proper_block(const IndexSet& d_set, std::size_t m) {
  check_index_set(d_set, m, "discard set");
  if (d_set.empty() || d_set.size() >= m) {
    throw Error(ErrorKind::InvalidArgument, "discard set must be a non-empty proper subset of the covariates");
  }
}

SymmetricMatrix difference(const SymmetricMatrix& target, const SymmetricMatrix& base) {
  const auto m = target.dim();
  Matrix out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = exact_difference(target(i, j), base(i, j));
    }
  }
  return SymmetricMatrix(out);
}

Vector difference(const Vector& target, const Vector& base) {
  Vector out(target.size());
  for (Eigen::Index i = 0; i < target.size(); ++i) out(i) = exact_difference(target(i), base(i));
  return out;
}

SymmetricMatrix top_left(const SymmetricMatrix& joint) {
  const auto m = joint.dim() - 1;
  return SymmetricMatrix(joint.matrix().topLeftCorner(m, m));
}

Vector last_column(const SymmetricMatrix& joint) {
  const auto m = static_cast<Eigen::Index>(joint.dim() - 1);
  return joint.matrix().col(m).head(m);
}

/// Rows over D of (vec_[D], mat_[D, D^c]).
Matrix assemble_starred(const Vector& vec, const SymmetricMatrix& mat, const IndexSet& d_set, const IndexSet& dc_set) {
  Matrix out(d_set.size(), dc_set.size() + 1);
  for (std::size_t r = 0; r < d_set.size(); ++r) {
    const auto d = d_set[r];
    out(static_cast<Eigen::Index>(r), 0) = vec(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < dc_set.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c + 1)) = mat(d, dc_set[c]);
    }
  }
  return out;
}

/// (1, -(inv)_[Dc,Dc] v_[Dc])
Vector combination_vector(const SymmetricMatrix& inv, const Vector& v, const IndexSet& dc_set) {
  const Vector tail = slice(inv.matrix(), dc_set, dc_set) * slice(v, dc_set);
  Vector out(dc_set.size() + 1);
  out(0) = 1.0;
  out.tail(static_cast<Eigen::Index>(dc_set.size())) = -tail;
  return out;
}

// The pieces every condition needs, independent of covariance vs correlation.
struct StarredSystem {
  Matrix weights;       // |D| x |D| block of the inverse population matrix
  Matrix noise;         // H* or H-dagger
  Matrix perturbation;  // E* + E~* or the daggered sum
  Vector combination;   // Cov* or corr-dagger
};

StarredSystem covariance_system(const PerturbationSplit& split, const SymmetricMatrix& sigma) {
  const SymmetricMatrix inv = inverse_spd(sigma);
  return {slice(inv.matrix(), split.d_set, split.d_set), split.h_star, split.e_star + split.e_tilde_star,
          split.cov_star};
}

StarredSystem correlation_system(const CorrelationSplit& split, CorrelationMode mode) {
  const bool literal = mode == CorrelationMode::Literal;
  const SymmetricMatrix inv = inverse_spd(literal ? split.sigma : split.p);
  return {slice(inv.matrix(), split.d_set, split.d_set), split.h_dagger, split.e_dagger + split.e_tilde_dagger,
          literal ? split.cov_star_literal : split.corr_dagger};
}

Theorem1Result theorem1(const StarredSystem& sys) {
  const auto k = static_cast<Eigen::Index>(sys.weights.rows());
  Theorem1Result out;
  out.numerators.resize(k);
  out.denominators.resize(k);
  out.ratios.resize(k);
  out.holds = true;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto row = static_cast<std::size_t>(i);
    const double num = sandwich_product(sys.weights, row, sys.perturbation, sys.combination);
    const double den = sandwich_product(sys.weights, row, sys.noise, sys.combination);
    out.numerators(i) = num;
    out.denominators(i) = den;
    bool ok;
    if (std::abs(den) < kZeroDenominator) {
      out.ratios(i) = std::numeric_limits<double>::quiet_NaN();
      ok = std::abs(num) < kZeroDenominator;
    } else {
      out.ratios(i) = num / den;
      ok = std::abs(num) <= std::abs(den);
    }
    out.holds_per_d.push_back(ok);
    out.holds = out.holds && ok;
  }
  return out;
}

/// |cos| of the angle between weights.row(i) * noise and the combination
/// vector, NaN when an operand has zero norm.
Vector abs_cosines(const StarredSystem& sys) {
  const auto k = sys.weights.rows();
  Vector out(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vector u = (sys.weights.row(i) * sys.noise).transpose();
    if (u.norm() > 0.0 && sys.combination.norm() > 0.0) {
      out(i) = std::abs(cosine_angle(u, sys.combination));
    } else {
      out(i) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

Lemma2Result lemma2(const StarredSystem& sys) {
  const auto k = sys.weights.rows();
  Lemma2Result out;
  out.cos_angles.resize(k);
  out.lhs.resize(k, k);
  out.rhs.resize(k, k);
  out.holds = true;
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vector u = (sys.weights.row(i) * sys.noise).transpose();
    const bool degenerate = !(u.norm() > 0.0) || !(sys.combination.norm() > 0.0);
    out.degenerate_angle.push_back(degenerate);
    out.cos_angles(i) = degenerate ? std::numeric_limits<double>::quiet_NaN() : cosine_angle(u, sys.combination);
    if (degenerate) out.holds = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      out.lhs(i, j) = sys.perturbation.row(j).norm();
      out.rhs(i, j) = sys.noise.row(j).norm() * std::abs(out.cos_angles(i));
      if (!(out.lhs(i, j) <= out.rhs(i, j))) out.holds = false;
    }
  }
  return out;
}

bool rows_dominated(const Matrix& perturbation, const Matrix& noise) {
  for (Eigen::Index r = 0; r < noise.rows(); ++r) {
    if (!(perturbation.row(r).norm() <= noise.row(r).norm())) return false;
  }
  return true;
}

TauBounds tau_core(double lower_norm, double loose_norm, const Matrix& noise, const Vector& abs_cos,
                   const IndexSet& d_set, const Vector& eigenvalues, const IndexSet& delta_set, double c) {
  if (delta_set.empty()) throw Error(ErrorKind::InvalidArgument, "tau bounds need a non-empty eigen set");
  check_index_set(delta_set, static_cast<std::size_t>(eigenvalues.size()), "eigen set");
  if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgument, "bound constant must be positive");

  TauBounds out;
  out.constant = c;
  out.aggregate_lower = -kInf;
  out.aggregate_upper = kInf;
  out.aggregate_upper_necessary = kInf;
  out.loose_upper = kInf;
  bool gaps_positive = true;
  std::ostringstream reason;
  for (auto delta : delta_set) {
    const double gap = eigengap(eigenvalues, delta);
    if (!(gap > 0.0)) {
      if (gaps_positive) reason << "zero eigengap at eigen index";
      reason << ' ' << delta;
      gaps_positive = false;
    }
    for (std::size_t i = 0; i < d_set.size(); ++i) {
      const double cos_d = std::isnan(abs_cos(static_cast<Eigen::Index>(i))) ? 0.0 : abs_cos(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < d_set.size(); ++j) {
        TauTuple t;
        t.d = d_set[i];
        t.d_star = d_set[j];
        t.delta = delta;
        t.gap = gap;
        const double row = noise.row(static_cast<Eigen::Index>(j)).norm();
        if (gap > 0.0) {
          t.lower = c * lower_norm / gap;
          t.upper_tight = c * row * cos_d / gap;
          t.upper_necessary = c * row / gap;
          t.upper_loose = c * loose_norm / gap;
        } else {
          t.lower = t.upper_tight = t.upper_necessary = t.upper_loose = kInf;
        }
        out.aggregate_lower = std::max(out.aggregate_lower, t.lower);
        out.aggregate_upper = std::min(out.aggregate_upper, t.upper_tight);
        out.aggregate_upper_necessary = std::min(out.aggregate_upper_necessary, t.upper_necessary);
        out.loose_upper = std::min(out.loose_upper, t.upper_loose);
        out.tuples.push_back(t);
      }
    }
  }
  out.feasible = gaps_positive && out.aggregate_lower <= out.aggregate_upper;
  out.feasible_necessary = gaps_positive && out.aggregate_lower <= out.aggregate_upper_necessary;
  out.feasible_loose = gaps_positive && out.aggregate_lower <= out.loose_upper;
  out.reason = reason.str();
  return out;
}

}  // namespace

SymmetricMatrix assemble_joint(const SymmetricMatrix& s, const Vector& c, double v) {
  const auto m = static_cast<Eigen::Index>(s.dim());
  if (c.size() != m) throw Error(ErrorKind::InvalidArgument, "assemble_joint: dimension mismatch");
  Matrix out(m + 1, m + 1);
  out.topLeftCorner(m, m) = s.matrix();
  out.col(m).head(m) = c;
  out.row(m).head(m) = c.transpose();
  out(m, m) = v;
  return SymmetricMatrix(out);
}

SymmetricMatrix JointPopulation::joint() const { return assemble_joint(sigma, cov, var_y); }

SymmetricMatrix JointPopulation::joint_perturbed() const {
  return assemble_joint(SymmetricMatrix(sigma.matrix() + e.matrix()), cov + e_cov, var_y);
}

double exact_difference(double target, double base) {
  const double first = target - base;
  double h = first;
  for (int step = 0; step < 4; ++step) {
    const double back = base + h;
    if (back == target) return h;
    const double next = h + (target - back);
    if (next == h) break;
    h = next;
  }
  // The residual step stalls when ulp(h) exceeds ulp(target); try the
  // neighbours of the rounded difference.
  double up = first, down = first;
  for (int step = 0; step < 4; ++step) {
    up = std::nextafter(up, kInf);
    down = std::nextafter(down, -kInf);
    if (base + up == target) return up;
    if (base + down == target) return down;
  }
  return first;
}

const char* to_string(CorrelationMode mode) noexcept {
  return mode == CorrelationMode::ProofConsistent ? "proof" : "literal";
}

PerturbationSplit split_known_population(const SymmetricMatrix& sigma, const Vector& cov, const SymmetricMatrix& e,
                                         const Vector& e_cov, const SymmetricMatrix& sample_cov,
                                         const SymmetricMatrix& sample_cov_tilde, const Vector& sample_covvec,
                                         const Vector& sample_covvec_tilde, const IndexSet& d_set) {
  const auto m = sigma.dim();
  const auto mi = static_cast<Eigen::Index>(m);
  if (e.dim() != m || sample_cov.dim() != m || sample_cov_tilde.dim() != m || cov.size() != mi ||
      e_cov.size() != mi || sample_covvec.size() != mi || sample_covvec_tilde.size() != mi) {
    throw Error(ErrorKind::InvalidArgument, "split: dimension mismatch");
  }
  require_proper_block(d_set, m);

  std::ostringstream offenders;
  bool sparse = true;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      if (e(i, j) != 0.0 && sigma(i, j) != 0.0) {
        offenders << (sparse ? "" : ", ") << '(' << i << ", " << j << ')';
        sparse = false;
      }
    }
  }
  if (!sparse) {
    throw Error(ErrorKind::Structural, "perturbation is nonzero where the population covariance is nonzero at " +
                                           offenders.str());
  }

  PerturbationSplit s;
  s.d_set = d_set;
  s.dc_set = complement(d_set, m);
  const SymmetricMatrix perturbed(sigma.matrix() + e.matrix());
  const Vector perturbed_cov = cov + e_cov;
  s.h = difference(sample_cov, sigma);
  s.e = e;
  s.e_tilde = difference(sample_cov_tilde, perturbed);
  s.h_cov = difference(sample_covvec, cov);
  s.e_cov = e_cov;
  s.e_tilde_cov = difference(sample_covvec_tilde, perturbed_cov);

  s.h_joint = assemble_joint(s.h, s.h_cov, 0.0);
  s.ee_joint = assemble_joint(SymmetricMatrix(s.e.matrix() + s.e_tilde.matrix()), s.e_cov + s.e_tilde_cov, 0.0);

  s.h_star = assemble_starred(s.h_cov, s.h, s.d_set, s.dc_set);
  s.e_star = assemble_starred(s.e_cov, s.e, s.d_set, s.dc_set);
  s.e_tilde_star = assemble_starred(s.e_tilde_cov, s.e_tilde, s.d_set, s.dc_set);
  s.cov_star = combination_vector(inverse_spd(sigma), cov, s.dc_set);
  return s;
}

PerturbationSplit split_joint(const JointPopulation& pop, const SymmetricMatrix& sample_joint,
                              const SymmetricMatrix& sample_joint_tilde, const IndexSet& d_set) {
  const auto m = pop.m();
  if (sample_joint.dim() != m + 1 || sample_joint_tilde.dim() != m + 1) {
    throw Error(ErrorKind::InvalidArgument, "split: joint sample matrices must be (M+1) x (M+1)");
  }
  PerturbationSplit s = split_known_population(pop.sigma, pop.cov, pop.e, pop.e_cov, top_left(sample_joint),
                                               top_left(sample_joint_tilde), last_column(sample_joint),
                                               last_column(sample_joint_tilde), d_set);
  const SymmetricMatrix joint = pop.joint();
  s.h_joint = difference(sample_joint, joint);
  s.ee_joint = difference(sample_joint_tilde, joint);
  return s;
}

CorrelationSplit split_correlation(const JointPopulation& pop, const SymmetricMatrix& sample_joint,
                                   const SymmetricMatrix& sample_joint_tilde, const IndexSet& d_set) {
  const PerturbationSplit cov_split = split_joint(pop, sample_joint, sample_joint_tilde, d_set);

  const SymmetricMatrix p_joint = correlation_from_covariance(pop.joint());
  const SymmetricMatrix p_joint_perturbed = correlation_from_covariance(pop.joint_perturbed());
  const SymmetricMatrix rho_joint = correlation_from_covariance(sample_joint);
  const SymmetricMatrix rho_joint_tilde = correlation_from_covariance(sample_joint_tilde);

  const SymmetricMatrix h_joint = difference(rho_joint, p_joint);
  const SymmetricMatrix e_joint = difference(p_joint_perturbed, p_joint);
  const SymmetricMatrix e_tilde_joint = difference(rho_joint_tilde, p_joint_perturbed);

  CorrelationSplit s;
  s.d_set = cov_split.d_set;
  s.dc_set = cov_split.dc_set;
  s.p = top_left(p_joint);
  s.corr = last_column(p_joint);
  s.sigma = pop.sigma;
  s.h_rho = top_left(h_joint);
  s.e_rho = top_left(e_joint);
  s.e_tilde_rho = top_left(e_tilde_joint);
  s.h_corr = last_column(h_joint);
  s.e_corr = last_column(e_joint);
  s.e_tilde_corr = last_column(e_tilde_joint);
  s.h_joint = h_joint;
  s.ee_joint = difference(rho_joint_tilde, p_joint);
  s.h_dagger = assemble_starred(s.h_corr, s.h_rho, s.d_set, s.dc_set);
  s.e_dagger = assemble_starred(s.e_corr, s.e_rho, s.d_set, s.dc_set);
  s.e_tilde_dagger = assemble_starred(s.e_tilde_corr, s.e_tilde_rho, s.d_set, s.dc_set);
  s.corr_dagger = combination_vector(inverse_spd(s.p), s.corr, s.dc_set);
  s.cov_star_literal = cov_split.cov_star;
  s.h_star_cov = cov_split.h_star;
  s.h_joint_cov = cov_split.h_joint;
  return s;
}

double sandwich_product(const Matrix& weights, std::size_t row, const Matrix& block, const Vector& combination) {
  const Eigen::RowVectorXd left = weights.row(static_cast<Eigen::Index>(row)) * block;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < left.size(); ++k) sum += left(k) * combination(k);
  return sum;
}

Theorem1Result check_theorem1(const PerturbationSplit& split, const SymmetricMatrix& sigma) {
  return theorem1(covariance_system(split, sigma));
}

Lemma2Result check_lemma2(const PerturbationSplit& split, const SymmetricMatrix& sigma) {
  return lemma2(covariance_system(split, sigma));
}

bool check_corollary3(const PerturbationSplit& split) {
  return rows_dominated(split.e_star + split.e_tilde_star, split.h_star);
}

ConditionReport evaluate_conditions(const PerturbationSplit& split, const SymmetricMatrix& sigma) {
  const StarredSystem sys = covariance_system(split, sigma);
  return {theorem1(sys), lemma2(sys), rows_dominated(sys.perturbation, sys.noise)};
}

Theorem1Result check_theorem1_corr(const CorrelationSplit& split, CorrelationMode mode) {
  return theorem1(correlation_system(split, mode));
}

Lemma2Result check_lemma6(const CorrelationSplit& split, CorrelationMode mode) {
  return lemma2(correlation_system(split, mode));
}

bool check_corollary7(const CorrelationSplit& split) {
  return rows_dominated(split.e_dagger + split.e_tilde_dagger, split.h_dagger);
}

ConditionReport evaluate_conditions_corr(const CorrelationSplit& split, CorrelationMode mode) {
  const StarredSystem sys = correlation_system(split, mode);
  return {theorem1(sys), lemma2(sys), rows_dominated(sys.perturbation, sys.noise)};
}

double eigengap(const Vector& values, std::size_t index) {
  const auto n = static_cast<std::size_t>(values.size());
  if (index >= n) {
    throw Error(ErrorKind::InvalidArgument,
                "eigengap: index " + std::to_string(index) + " out of range " + std::to_string(n));
  }
  const auto k = static_cast<Eigen::Index>(index);
  const double above = index == 0 ? kInf : values(k - 1);
  const double below = index + 1 == n ? -kInf : values(k + 1);
  return std::min(above - values(k), values(k) - below);
}

TauBounds tau_bounds(const PerturbationSplit& split, const SymmetricMatrix& sigma, const Vector& joint_eigenvalues,
                     const IndexSet& delta_set, double constant) {
  const StarredSystem sys = covariance_system(split, sigma);
  return tau_core(split.ee_joint.matrix().norm(), split.h_joint.matrix().norm(), sys.noise, abs_cosines(sys),
                  split.d_set, joint_eigenvalues, delta_set, constant);
}

TauBounds tau_bounds_corr(const CorrelationSplit& split, const Vector& joint_eigenvalues, const IndexSet& delta_set,
                          double constant, CorrelationMode mode) {
  if (mode == CorrelationMode::Literal) {
    // Covariance-case angle theta_d and ||H_Y||_F, as the statement is written.
    const SymmetricMatrix inv = inverse_spd(split.sigma);
    const StarredSystem angle_sys{slice(inv.matrix(), split.d_set, split.d_set), split.h_star_cov, Matrix(),
                                  split.cov_star_literal};
    return tau_core(split.ee_joint.matrix().norm(), split.h_joint_cov.matrix().norm(), split.h_dagger,
                    abs_cosines(angle_sys), split.d_set, joint_eigenvalues, delta_set, constant);
  }
  const StarredSystem sys = correlation_system(split, mode);
  return tau_core(split.ee_joint.matrix().norm(), split.h_joint.matrix().norm(), sys.noise, abs_cosines(sys),
                  split.d_set, joint_eigenvalues, delta_set, constant);
}

bool tau_satisfies_all(const TauBounds& bounds, double tau) {
  return std::all_of(bounds.tuples.begin(), bounds.tuples.end(),
                     [tau](const TauTuple& t) { return t.lower <= tau && tau <= t.upper_tight; });
}

double convergence_rate_estimate(std::span<const std::pair<double, double>> samples) {
  std::map<double, std::pair<double, std::size_t>> by_n;
  for (const auto& [n, norm] : samples) {
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "convergence rate: N must be positive");
    if (!(norm > 0.0)) throw Error(ErrorKind::InvalidArgument, "convergence rate: norms must be positive");
    auto& slot = by_n[n];
    slot.first += norm;
    slot.second += 1;
  }
  if (by_n.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, "convergence rate needs at least 3 distinct N values");
  }
  std::vector<double> xs, ys;
  for (const auto& [n, acc] : by_n) {
    xs.push_back(std::log(n));
    ys.push_back(std::log(acc.first / static_cast<double>(acc.second)));
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace plaols
