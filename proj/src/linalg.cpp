#include "plaols/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace plaols {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::ContractViolation: return "contract-violation";
    case ErrorKind::Singular: return "singular-matrix";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::Structural: return "structural";
    case ErrorKind::BlockMismatch: return "block-mismatch";
    case ErrorKind::InputFormat: return "input-format";
  }
  return "unknown";
}

SymmetricMatrix::SymmetricMatrix(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument, "symmetric matrix must be square and non-empty");
  }
  require_finite(a, "symmetric matrix");
  a_ = (a + a.transpose()) / 2.0;
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t dim) {
  return SymmetricMatrix(Matrix::Identity(dim, dim));
}

SymmetricMatrix SymmetricMatrix::zero(std::size_t dim) {
  return SymmetricMatrix(Matrix::Zero(dim, dim));
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::DegenerateInput, std::string(what) + " contains non-finite entries");
  }
}

Matrix mean_center(const Matrix& data) {
  if (data.rows() < 2) {
    throw Error(ErrorKind::DegenerateInput, "mean centring needs at least 2 rows");
  }
  require_finite(data, "data");
  Matrix out = data;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) sum += data(i, j);
    const double mean = sum / static_cast<double>(data.rows());
    for (Eigen::Index i = 0; i < data.rows(); ++i) out(i, j) = data(i, j) - mean;
  }
  return out;
}

double centring_tolerance(const Matrix& data) {
  return 1e-12 * static_cast<double>(data.rows()) * data.cwiseAbs().maxCoeff();
}

SymmetricMatrix sample_covariance(const Matrix& centered) {
  const auto n = centered.rows();
  const auto m = centered.cols();
  if (n < 2) {
    throw Error(ErrorKind::DegenerateInput, "sample covariance needs at least 2 rows");
  }
  require_finite(centered, "data");
  const double tol = centring_tolerance(centered);
  for (Eigen::Index j = 0; j < m; ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += centered(i, j);
    if (std::abs(sum) > tol) {
      throw Error(ErrorKind::ContractViolation,
                  "column " + std::to_string(j) + " is not mean-centred (sum " + std::to_string(sum) + ")");
    }
  }
  const double denom = static_cast<double>(n - 1);
  Matrix cov(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) sum += centered(i, a) * centered(i, b);
      cov(a, b) = sum / denom;
      cov(b, a) = cov(a, b);
    }
  }
  return SymmetricMatrix(cov);
}

SymmetricMatrix correlation_from_covariance(const SymmetricMatrix& cov) {
  const auto m = cov.dim();
  for (std::size_t i = 0; i < m; ++i) {
    if (!(cov(i, i) > 0.0)) {
      throw Error(ErrorKind::DegenerateInput,
                  "variable " + std::to_string(i) + " has non-positive variance " + std::to_string(cov(i, i)));
    }
  }
  Matrix out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      const double r = std::clamp(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)), -1.0, 1.0);
      out(i, j) = r;
      out(j, i) = r;
    }
  }
  return SymmetricMatrix(out);
}

namespace {

std::size_t argmax_abs(const Eigen::Ref<const Vector>& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(static_cast<Eigen::Index>(best)))) best = static_cast<std::size_t>(i);
  }
  return best;
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

EigenSystem eigh(const SymmetricMatrix& sym) {
  Matrix a = sym.matrix();
  const auto n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  const double tol = 1e-12 * a.norm();

  bool converged = false;
  for (int sweep = 0; sweep <= kMaxJacobiSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol) {
      converged = true;
      break;
    }
    if (sweep == kMaxJacobiSweeps) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
          a(p, k) = a(k, p);
          a(q, k) = a(k, q);
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    throw Error(ErrorKind::NumericalFailure,
                "Jacobi eigensolver did not converge in " + std::to_string(kMaxJacobiSweeps) + " sweeps");
  }

  std::vector<std::size_t> lead(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) lead[static_cast<std::size_t>(i)] = argmax_abs(v.col(i));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    if (a(x, x) != a(y, y)) return a(x, x) > a(y, y);
    return lead[static_cast<std::size_t>(x)] < lead[static_cast<std::size_t>(y)];
  });

  EigenSystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values(i) = a(src, src);
    out.vectors.col(i) = v.col(src);
    if (out.vectors(static_cast<Eigen::Index>(lead[static_cast<std::size_t>(src)]), i) < 0.0) {
      out.vectors.col(i) = -out.vectors.col(i);
    }
  }
  return out;
}

namespace {

Eigen::LLT<Matrix> guarded_cholesky(const SymmetricMatrix& a) {
  Eigen::LLT<Matrix> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::Singular, "Cholesky factorization failed: matrix is not positive definite");
  }
  const double rcond = llt.rcond();
  if (!(rcond > 0.0) || 1.0 / rcond > kConditionGuard) {
    throw Error(ErrorKind::Singular,
                "matrix is numerically singular (condition estimate " + std::to_string(1.0 / rcond) + ")");
  }
  return llt;
}

}  // namespace

Vector solve_spd(const SymmetricMatrix& a, const Vector& b) {
  if (static_cast<std::size_t>(b.size()) != a.dim()) {
    throw Error(ErrorKind::InvalidArgument, "solve_spd: dimension mismatch");
  }
  return guarded_cholesky(a).solve(b);
}

SymmetricMatrix inverse_spd(const SymmetricMatrix& a) {
  const auto llt = guarded_cholesky(a);
  return SymmetricMatrix(llt.solve(Matrix::Identity(a.matrix().rows(), a.matrix().cols())));
}

bool is_positive_definite(const SymmetricMatrix& a) {
  Eigen::LLT<Matrix> llt(a.matrix());
  return llt.info() == Eigen::Success;
}

double cosine_angle(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::InvalidArgument, "cosine_angle: length mismatch");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "cosine_angle: zero-norm operand");
  }
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

MatrixNorms norms(const Matrix& m) {
  const double f = m.norm();
  return {f, f};
}

double row_norm(const Matrix& m, std::size_t row) {
  if (row >= static_cast<std::size_t>(m.rows())) {
    throw Error(ErrorKind::InvalidArgument, "row index " + std::to_string(row) + " out of bounds");
  }
  return m.row(static_cast<Eigen::Index>(row)).norm();
}

const IndexSet& check_index_set(const IndexSet& s, std::size_t m, const char* what) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= m) {
      throw Error(ErrorKind::InvalidArgument,
                  std::string(what) + ": index " + std::to_string(s[i]) + " out of range " + std::to_string(m));
    }
    if (i > 0 && s[i] <= s[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, std::string(what) + ": indices must be strictly increasing");
    }
  }
  return s;
}

IndexSet complement(const IndexSet& s, std::size_t m) {
  IndexSet out;
  out.reserve(m - std::min(m, s.size()));
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (k < s.size() && s[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

Matrix slice(const Matrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    }
  }
  return out;
}

Vector slice(const Vector& v, const IndexSet& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

}  // namespace plaols
