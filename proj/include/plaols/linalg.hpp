#pragma once

// Dense symmetric linear algebra and sample moments shared by every module.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "plaols/error.hpp"

namespace plaols {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sorted, duplicate-free list of zero-based indices.
using IndexSet = std::vector<std::size_t>;

/// Square matrix that is exactly symmetric and finite.
///
/// Construction symmetrizes with (A + A^T) / 2, which is bit-exact symmetric
/// and leaves an already symmetric input unchanged.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& a);

  static SymmetricMatrix identity(std::size_t dim);
  static SymmetricMatrix zero(std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(a_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return a_(i, j); }
  const Matrix& matrix() const noexcept { return a_; }

 private:
  Matrix a_;
};

/// Eigenvalues in descending order with orthonormal, sign-normalized columns.
struct EigenSystem {
  Vector values;
  Matrix vectors;  // column i belongs to values[i]

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.size()); }
};

struct MatrixNorms {
  double frobenius = 0.0;
  double spectral_upper = 0.0;  // ||M||_2 <= ||M||_F
};

/// Throws DegenerateInput when any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

/// Subtracts column means. Needs at least two rows.
Matrix mean_center(const Matrix& data);

/// Largest |column sum| allowed for data to count as centred.
double centring_tolerance(const Matrix& data);

/// (N-1)^{-1} X^T X for centred X. Sums run over rows in ascending order.
SymmetricMatrix sample_covariance(const Matrix& centered);

/// Dg(S)^{-1/2} S Dg(S)^{-1/2}; unit diagonal, entries clamped to [-1, 1].
SymmetricMatrix correlation_from_covariance(const SymmetricMatrix& cov);

/// Cyclic Jacobi eigensolver.
///
/// Stops once the off-diagonal Frobenius norm drops below 1e-12 * ||A||_F, or
/// throws NumericalFailure after kMaxJacobiSweeps sweeps. Rotations are never
/// applied to exactly-zero off-diagonal entries, so an exactly block-diagonal
/// input yields eigenvectors with exact zeros outside their block.
///
/// Columns are ordered by eigenvalue (descending), ties by the index of the
/// largest-|entry| coordinate. Each column's largest-|entry| coordinate (lowest
/// index on ties) is made non-negative.
EigenSystem eigh(const SymmetricMatrix& a);

inline constexpr int kMaxJacobiSweeps = 100;
inline constexpr double kConditionGuard = 1e12;

/// Solves A x = b for positive definite A by Cholesky. Throws Singular when the
/// factorization fails or the estimated condition number exceeds 1e12.
Vector solve_spd(const SymmetricMatrix& a, const Vector& b);

/// Inverse of a positive definite matrix, same guards as solve_spd.
SymmetricMatrix inverse_spd(const SymmetricMatrix& a);

bool is_positive_definite(const SymmetricMatrix& a);

/// u^T v / (|u| |v|) clamped to [-1, 1].
double cosine_angle(const Vector& u, const Vector& v);

MatrixNorms norms(const Matrix& m);
double row_norm(const Matrix& m, std::size_t row);

/// Validates (strictly increasing, all < m) and returns the set unchanged.
const IndexSet& check_index_set(const IndexSet& s, std::size_t m, const char* what);

/// {0..m-1} \ s for a validated s.
IndexSet complement(const IndexSet& s, std::size_t m);

Matrix slice(const Matrix& m, const IndexSet& rows, const IndexSet& cols);
Vector slice(const Vector& v, const IndexSet& idx);

}  // namespace plaols
