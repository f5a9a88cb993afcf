#include "plaols/pla.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace plaols {

const char* to_string(Basis basis) noexcept {
  return basis == Basis::Covariance ? "covariance" : "correlation";
}

namespace {

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "tau must lie in [0, 1), got " + std::to_string(tau));
  }
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

double max_offblock_loading(const EigenSystem& eig, const IndexSet& d_set, const IndexSet& delta_set) {
  const IndexSet dc = complement(d_set, eig.dim());
  double worst = 0.0;
  for (auto delta : delta_set) {
    for (auto i : dc) {
      worst = std::max(worst, std::abs(eig.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(delta))));
    }
  }
  return worst;
}

ExplainedVariance explained_variance(const EigenSystem& eig, const IndexSet& d_set, const IndexSet& delta_set) {
  const auto m = eig.dim();
  check_index_set(d_set, m, "discard set");
  check_index_set(delta_set, m, "eigen set");
  const double total = eig.values.sum();
  if (!(total > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "explained variance undefined: total variance is zero");
  }
  // Both sums of the exact formula (delta in Delta and delta not in Delta)
  // together run over every eigenpair.
  double exact = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double share = 0.0;
    for (auto d : d_set) {
      const double v = eig.vectors(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
      share += v * v;
    }
    exact += eig.values(static_cast<Eigen::Index>(k)) * share;
  }
  double approx = 0.0;
  for (auto delta : delta_set) approx += eig.values(static_cast<Eigen::Index>(delta));
  return {exact / total, approx / total};
}

std::vector<DiscardCandidate> find_discardable_blocks(const EigenSystem& eig, double tau,
                                                      std::optional<std::size_t> response) {
  check_tau(tau);
  const auto m = eig.dim();
  if (response && *response >= m) throw Error(ErrorKind::InvalidArgument, "response index out of range");
  // Nodes 0..m-1 are variables, m..2m-1 eigenpairs.
  DisjointSets sets(2 * m);
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t lead = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double loading = std::abs(eig.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      if (loading > tau) sets.unite(i, m + k);
      if (loading > std::abs(eig.vectors(static_cast<Eigen::Index>(lead), static_cast<Eigen::Index>(k)))) lead = i;
    }
    sets.unite(lead, m + k);
  }

  std::map<std::size_t, DiscardCandidate> components;
  for (std::size_t i = 0; i < m; ++i) components[sets.find(i)].discard_set.push_back(i);
  for (std::size_t k = 0; k < m; ++k) components[sets.find(m + k)].eigen_set.push_back(k);

  const bool has_variance = eig.values.sum() > 0.0;
  std::vector<DiscardCandidate> out;
  for (auto& [root, c] : components) {
    const auto size = c.discard_set.size();
    if (size == 0 || size >= m || size != c.eigen_set.size()) continue;
    if (response && std::binary_search(c.discard_set.begin(), c.discard_set.end(), *response)) continue;
    c.max_offblock_loading = max_offblock_loading(eig, c.discard_set, c.eigen_set);
    if (has_variance) {
      c.explained = explained_variance(eig, c.discard_set, c.eigen_set);
    } else {
      c.explained = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const DiscardCandidate& a, const DiscardCandidate& b) { return a.discard_set[0] < b.discard_set[0]; });
  return out;
}

IndexSet match_eigen_to_block(const EigenSystem& eig, const IndexSet& d_set, double tau) {
  const auto m = eig.dim();
  check_index_set(d_set, m, "discard set");
  if (d_set.empty() || d_set.size() >= m) {
    throw Error(ErrorKind::InvalidArgument, "discard set must be a non-empty proper subset");
  }
  check_tau(tau);
  const IndexSet dc = complement(d_set, m);
  IndexSet delta;
  for (std::size_t k = 0; k < m; ++k) {
    bool inside = true;
    for (auto i : dc) {
      if (std::abs(eig.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) > tau) {
        inside = false;
        break;
      }
    }
    if (inside) delta.push_back(k);
  }
  if (delta.size() != d_set.size()) {
    throw BlockMismatchError("found " + std::to_string(delta.size()) + " eigenvectors for a block of " +
                                 std::to_string(d_set.size()) + " variables",
                             std::move(delta));
  }
  return delta;
}

PlaReport pla_from_covariance(const SymmetricMatrix& cov, Basis basis, double tau,
                              std::optional<std::size_t> response) {
  check_tau(tau);
  PlaReport report;
  report.response = response;
  report.basis = basis;
  report.tau = tau;
  const auto m = cov.dim();
  if (basis == Basis::Correlation) {
    const SymmetricMatrix corr = correlation_from_covariance(cov);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (std::abs(corr(i, j)) >= 1.0 - 1e-12) {
          throw Error(ErrorKind::DegenerateInput, "variables " + std::to_string(i) + " and " + std::to_string(j) +
                                                      " are perfectly correlated; correlation matrix is singular");
        }
      }
    }
    report.eigensystem = eigh(corr);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      if (cov(i, i) == 0.0) report.zero_variance.push_back(i);
    }
    report.eigensystem = eigh(cov);
  }
  report.candidates = find_discardable_blocks(report.eigensystem, tau, response);
  return report;
}

PlaReport run_pla(const Matrix& data, Basis basis, double tau, std::optional<std::size_t> response) {
  const auto n = data.rows();
  const auto m = data.cols();
  if (m < 2) throw Error(ErrorKind::DegenerateInput, "PLA needs at least 2 variables");
  if (n <= m) {
    throw Error(ErrorKind::DegenerateInput, "PLA needs more observations (" + std::to_string(n) +
                                                ") than variables (" + std::to_string(m) + ")");
  }
  return pla_from_covariance(sample_covariance(mean_center(data)), basis, tau, response);
}

}  // namespace plaols
