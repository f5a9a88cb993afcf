#include "plaols/ols.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace plaols {

namespace {

void require_centred(const Matrix& data, const char* what) {
  const double tol = centring_tolerance(data);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (std::abs(data.col(j).sum()) > tol) {
      throw Error(ErrorKind::ContractViolation, std::string(what) + " column " + std::to_string(j) +
                                                    " is not mean-centred");
    }
  }
}

// Continued fraction for I_x(a, b); converges quickly for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorKind::NumericalFailure, "incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::InvalidArgument, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::InvalidArgument, "incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_sf(double t, std::size_t df) {
  if (df == 0) throw Error(ErrorKind::InvalidArgument, "Student t needs df >= 1");
  if (std::isnan(t)) throw Error(ErrorKind::InvalidArgument, "Student t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const double nu = static_cast<double>(df);
  return incomplete_beta(nu / (nu + t * t), nu / 2.0, 0.5);
}

OlsFit ols_fit(const Matrix& x, const Vector& y) {
  const auto n = x.rows();
  const auto m = x.cols();
  if (y.size() != n) throw Error(ErrorKind::InvalidArgument, "ols: x and y row counts differ");
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "ols: no covariates");
  if (n <= m) {
    throw Error(ErrorKind::DegenerateInput, "ols needs more observations (" + std::to_string(n) +
                                                ") than covariates (" + std::to_string(m) + ")");
  }
  require_finite(x, "design matrix");
  require_finite(y, "response");
  require_centred(x, "design matrix");
  require_centred(y, "response");

  const SymmetricMatrix xtx(x.transpose() * x);
  const Vector xty = x.transpose() * y;
  OlsFit fit;
  SymmetricMatrix xtx_inv;
  try {
    fit.beta_hat = solve_spd(xtx, xty);
    xtx_inv = inverse_spd(xtx);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Singular) throw;
    throw Error(ErrorKind::Singular, std::string("ols: rank-deficient design, ") + e.what());
  }
  fit.residuals = y - x * fit.beta_hat;
  fit.df = static_cast<std::size_t>(n - m);
  fit.sigma2_hat = fit.residuals.squaredNorm() / static_cast<double>(fit.df);
  fit.std_errors.resize(m);
  fit.t_stats.resize(m);
  fit.p_values.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double se = std::sqrt(fit.sigma2_hat * xtx_inv(kk, kk));
    const double b = fit.beta_hat(k);
    fit.std_errors(k) = se;
    if (se > 0.0) {
      fit.t_stats(k) = b / se;
      fit.p_values(k) = student_t_sf(fit.t_stats(k), fit.df);
    } else if (b != 0.0) {
      fit.t_stats(k) = std::copysign(std::numeric_limits<double>::infinity(), b);
      fit.p_values(k) = 0.0;
    } else {
      fit.t_stats(k) = 0.0;
      fit.p_values(k) = 1.0;
    }
  }
  return fit;
}

std::vector<bool> discard_by_ols(const OlsFit& fit, const IndexSet& d_set, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
  std::vector<bool> out;
  out.reserve(d_set.size());
  for (auto d : d_set) {
    if (d >= static_cast<std::size_t>(fit.p_values.size())) {
      throw Error(ErrorKind::InvalidArgument, "coefficient index " + std::to_string(d) + " out of range");
    }
    out.push_back(fit.p_values(static_cast<Eigen::Index>(d)) > alpha);
  }
  return out;
}

ApproxCoefficients approx_coefficients(const PerturbationSplit& split, const SymmetricMatrix& sigma, const Vector& cov,
                                       const IndexSet& d_set) {
  const auto m = sigma.dim();
  check_index_set(d_set, m, "discard set");
  if (d_set != split.d_set) throw Error(ErrorKind::InvalidArgument, "discard set differs from the split's");
  constexpr double kBlockTol = 1e-12;
  for (auto d : d_set) {
    for (auto c : split.dc_set) {
      if (std::abs(sigma(d, c)) > kBlockTol) {
        throw Error(ErrorKind::Structural, "covariance between " + std::to_string(d) + " and " + std::to_string(c) +
                                               " is nonzero; the discard block is not uncorrelated");
      }
    }
    if (std::abs(cov(static_cast<Eigen::Index>(d))) > kBlockTol) {
      throw Error(ErrorKind::Structural,
                  "covariate " + std::to_string(d) + " is correlated with the response in the population");
    }
  }
  const Matrix weights = slice(inverse_spd(sigma).matrix(), d_set, d_set);
  const Matrix perturbed = split.e_star + split.e_tilde_star;
  ApproxCoefficients out;
  out.beta_approx.resize(static_cast<Eigen::Index>(d_set.size()));
  out.beta_tilde_approx.resize(static_cast<Eigen::Index>(d_set.size()));
  for (std::size_t r = 0; r < d_set.size(); ++r) {
    out.beta_approx(static_cast<Eigen::Index>(r)) = sandwich_product(weights, r, split.h_star, split.cov_star);
    out.beta_tilde_approx(static_cast<Eigen::Index>(r)) = sandwich_product(weights, r, perturbed, split.cov_star);
  }
  return out;
}

}  // namespace plaols
