#pragma once

#include "plaols/linalg.hpp"
#include "plaols/rng.hpp"

namespace testutil {

inline plaols::Matrix random_matrix(plaols::SeededRng& rng, Eigen::Index rows, Eigen::Index cols) {
  plaols::Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
  }
  return a;
}

inline plaols::SymmetricMatrix random_symmetric(plaols::SeededRng& rng, Eigen::Index n) {
  const plaols::Matrix a = random_matrix(rng, n, n);
  return plaols::SymmetricMatrix(a + a.transpose());
}

inline plaols::SymmetricMatrix random_spd(plaols::SeededRng& rng, Eigen::Index n) {
  const plaols::Matrix a = random_matrix(rng, n, n);
  return plaols::SymmetricMatrix(a * a.transpose() / static_cast<double>(n) + plaols::Matrix::Identity(n, n));
}

inline plaols::SymmetricMatrix sym(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  plaols::Matrix a(n, n);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) a(i, j++) = v;
    ++i;
  }
  return plaols::SymmetricMatrix(a);
}

inline plaols::Vector vec(std::initializer_list<double> v) {
  plaols::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace testutil
