#pragma once

// Principal loading analysis: find blocks of variables whose eigenvectors load
// (in absolute value) at most tau on every other variable.

#include <optional>
#include <string>
#include <vector>

#include "plaols/linalg.hpp"

namespace plaols {

enum class Basis { Covariance, Correlation };

const char* to_string(Basis basis) noexcept;

struct ExplainedVariance {
  double exact = 0.0;   // sum_d variance share, via the two-sum eigen formula
  double approx = 0.0;  // sum of matched eigenvalues over the trace
};

struct DiscardCandidate {
  IndexSet discard_set;  // D, variable indices
  IndexSet eigen_set;    // Delta, eigenpair indices
  double max_offblock_loading = 0.0;
  ExplainedVariance explained;
};

struct PlaReport {
  Basis basis = Basis::Covariance;
  double tau = 0.0;
  std::vector<DiscardCandidate> candidates;
  EigenSystem eigensystem;
  IndexSet zero_variance;  // covariance basis only: variables with zero sample variance
  std::optional<std::size_t> response;  // never discarded when set
};

/// Candidate blocks at cut-off tau.
///
/// Builds a bipartite graph between eigenpairs and variables with an edge
/// wherever |v_delta^(i)| > tau. Every eigenpair additionally keeps an edge to
/// its largest-|loading| variable, so an eigenvector with all loadings <= tau
/// still belongs to exactly one block. Connected components holding as many
/// eigenpairs as variables (and fewer than all variables) are candidates,
/// ordered by their smallest variable index. Comparisons with tau are inclusive.
/// On a joint matrix the component holding `response` is kept, not reported.
std::vector<DiscardCandidate> find_discardable_blocks(const EigenSystem& eig, double tau,
                                                      std::optional<std::size_t> response = std::nullopt);

/// Delta = { delta : max over d^c outside D of |v_delta^(d^c)| <= tau }.
/// Throws BlockMismatchError (carrying Delta) when |Delta| != |D|.
IndexSet match_eigen_to_block(const EigenSystem& eig, const IndexSet& d_set, double tau);

/// max over (d^c, delta) in D^c x Delta of |v_delta^(d^c)|; 0 when D^c is empty.
double max_offblock_loading(const EigenSystem& eig, const IndexSet& d_set, const IndexSet& delta_set);

/// Throws DegenerateInput when the eigenvalues sum to zero.
ExplainedVariance explained_variance(const EigenSystem& eig, const IndexSet& d_set, const IndexSet& delta_set);

/// PLA on an already estimated covariance matrix. With the correlation basis the
/// matrix is converted first; zero variances and perfectly correlated pairs are
/// rejected there since the correlation matrix is then undefined or singular.
PlaReport pla_from_covariance(const SymmetricMatrix& cov, Basis basis, double tau,
                              std::optional<std::size_t> response = std::nullopt);

/// mean_center -> sample_covariance -> [correlation] -> eigh -> blocks.
/// Requires N > M >= 2.
PlaReport run_pla(const Matrix& data, Basis basis, double tau, std::optional<std::size_t> response = std::nullopt);

}  // namespace plaols
