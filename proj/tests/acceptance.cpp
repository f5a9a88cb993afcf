// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "plaols/ols.hpp"
#include "plaols/perturbation.hpp"
#include "plaols/pla.hpp"
#include "plaols/simulation.hpp"

using namespace plaols;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Joint (M+1) matrix: covariates grouped into random blocks, response joined
// to one of them. Each block is G G^T / k + I, so within-block entries are
// nonzero almost surely and across blocks exactly zero.
SymmetricMatrix random_joint_blocks(SeededRng& rng, std::size_t m, std::size_t& response_block,
                                    std::vector<int>& label) {
  const int blocks = 2 + static_cast<int>(rng.next_u64() % std::min<std::size_t>(m, 4));
  label.assign(m + 1, 0);
  for (std::size_t i = 0; i < m; ++i) label[i] = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(blocks));
  response_block = rng.next_u64() % static_cast<std::uint64_t>(blocks);
  label[m] = static_cast<int>(response_block);
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m + 1));
  for (int b = 0; b < blocks; ++b) {
    IndexSet idx;
    for (std::size_t i = 0; i <= m; ++i) {
      if (label[i] == b) idx.push_back(i);
    }
    if (idx.empty()) continue;
    const auto k = static_cast<Eigen::Index>(idx.size());
    const Matrix g = testutil::random_matrix(rng, k, k);
    const Matrix block = g * g.transpose() / static_cast<double>(k) + Matrix::Identity(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        a(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)])) = block(i, j);
      }
    }
  }
  return SymmetricMatrix(a);
}

Outcome exact_block_recovery() {
  SeededRng rng(101);
  int agree = 0, instances = 0;
  while (instances < 50) {
    const std::size_t m = 2 + rng.next_u64() % 7;
    std::size_t yb = 0;
    std::vector<int> label;
    const SymmetricMatrix joint = random_joint_blocks(rng, m, yb, label);
    IndexSet d_set;
    for (std::size_t i = 0; i < m; ++i) {
      if (label[i] != static_cast<int>(yb)) d_set.push_back(i);
    }
    if (d_set.empty()) continue;
    ++instances;

    std::vector<IndexSet> expected;
    for (const auto& comp : oracle::components(joint.matrix())) {
      if (!std::binary_search(comp.begin(), comp.end(), m)) expected.push_back(comp);
    }
    const PlaReport report = pla_from_covariance(joint, Basis::Covariance, 0.0, m);
    std::vector<IndexSet> got;
    IndexSet united;
    for (const auto& c : report.candidates) {
      got.push_back(c.discard_set);
      united.insert(united.end(), c.discard_set.begin(), c.discard_set.end());
    }
    std::sort(united.begin(), united.end());
    agree += (got == expected && united == d_set);
  }
  return {agree == instances, std::to_string(agree) + "/" + std::to_string(instances) + " structures agree"};
}

Outcome eigen_correctness() {
  SeededRng rng(202);
  int bad = 0;
  double worst_orth = 0.0, worst_res = 0.0, worst_rec = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = 1 + static_cast<Eigen::Index>(trial % 12);
    const double scale = std::pow(10.0, static_cast<double>(trial % 7) - 3.0);
    const SymmetricMatrix a(scale * testutil::random_symmetric(rng, n).matrix());
    const EigenSystem e = eigh(a);
    const Matrix& v = e.vectors;
    const double orth = (v.transpose() * v - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    const double amax = a.matrix().cwiseAbs().maxCoeff();
    const double rec = (v * e.values.asDiagonal() * v.transpose() - a.matrix()).cwiseAbs().maxCoeff() /
                       std::max(1.0, amax);
    double res = 0.0;
    bool ordered = true, signs = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      res = std::max(res, (a.matrix() * v.col(i) - e.values(i) * v.col(i)).norm() /
                              std::max(1.0, std::abs(e.values(i))));
      if (i > 0 && e.values(i - 1) < e.values(i)) ordered = false;
      Eigen::Index arg = 0;
      v.col(i).cwiseAbs().maxCoeff(&arg);
      if (v(arg, i) < 0.0) signs = false;
    }
    const double trace = a.matrix().trace();
    const bool trace_ok = std::abs(e.values.sum() - trace) <= 1e-9 * std::max(1.0, std::abs(trace));
    worst_orth = std::max(worst_orth, orth);
    worst_res = std::max(worst_res, res);
    worst_rec = std::max(worst_rec, rec);
    bad += !(orth <= 1e-10 && res <= 1e-9 && rec <= 1e-9 && ordered && signs && trace_ok);
  }
  return {bad == 0, std::to_string(bad) + " failures; max orth " + fmt("%.2e", worst_orth) + ", residual " +
                        fmt("%.2e", worst_res) + ", reconstruction " + fmt("%.2e", worst_rec)};
}

Outcome implication_chain() {
  const SeededRng master(303);
  std::vector<TrialOutcome> trials(1000);
  std::vector<std::jthread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers(); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < trials.size(); i = next++) {
        const PopulationSpec spec = make_population(4, 1, 1.0, 0.01, derive_seed(303, 1, i));
        trials[i] = run_trial(spec, 500, TrialConfig{}, master.substream(2, i));
      }
    });
  }
  pool.clear();
  int l2t1 = 0, t1dom = 0, l2c3 = 0, l6c7 = 0, lemma2 = 0, lemma6 = 0;
  for (const auto& t : trials) {
    l2t1 += t.lemma2_not_theorem1;
    t1dom += t.theorem1_not_dominance;
    l2c3 += t.lemma2_not_corollary3;
    l6c7 += t.lemma6_not_corollary7;
    lemma2 += t.lemma2;
    lemma6 += t.lemma6;
  }
  const int total = l2t1 + t1dom + l2c3 + l6c7;
  return {total == 0, "violations lemma2=>thm1 " + std::to_string(l2t1) + ", thm1=>|beta| " + std::to_string(t1dom) +
                          ", lemma2=>cor3 " + std::to_string(l2c3) + ", lemma6=>cor7 " + std::to_string(l6c7) +
                          " (lemma2 held " + std::to_string(lemma2) + "x, lemma6 " + std::to_string(lemma6) + "x)"};
}

Outcome convergence_rate() {
  const PopulationSpec spec = make_population(4, 1, 1.0, 0.05, 404);
  const Study s = run_study(spec, {100, 400, 1600, 6400}, 200, TrialConfig{}, SeededRng(404), workers());
  const double a = s.summary.h_frob_slope.value_or(NAN);
  const double b = s.summary.h_rho_frob_slope.value_or(NAN);
  const bool ok = a >= -0.6 && a <= -0.4 && b >= -0.6 && b <= -0.4;
  return {ok, "slope ||H||_F " + fmt("%.4f", a) + ", ||H^rho||_F " + fmt("%.4f", b)};
}

struct BoundCheck {
  int violations = 0;
  int feasible = 0;
};

void check_bounds(const TauBounds& b, BoundCheck& out) {
  double lower = -INFINITY, upper = INFINITY, necessary = INFINITY, loose = INFINITY;
  for (const auto& t : b.tuples) {
    if (!(t.upper_tight <= t.upper_necessary && t.upper_necessary <= t.upper_loose)) ++out.violations;
    lower = std::max(lower, t.lower);
    upper = std::min(upper, t.upper_tight);
    necessary = std::min(necessary, t.upper_necessary);
    loose = std::min(loose, t.upper_loose);
  }
  if (lower != b.aggregate_lower || upper != b.aggregate_upper || necessary != b.aggregate_upper_necessary ||
      loose != b.loose_upper) {
    ++out.violations;
  }
  if (b.feasible != (b.aggregate_lower <= b.aggregate_upper)) ++out.violations;
  if (!b.feasible) return;
  ++out.feasible;
  if (!(b.aggregate_lower <= b.aggregate_upper && b.aggregate_upper <= b.aggregate_upper_necessary)) ++out.violations;
  if (!(b.loose_upper >= b.aggregate_upper_necessary)) ++out.violations;
  for (int i = 0; i <= 20; ++i) {
    const double tau = b.aggregate_lower + (b.aggregate_upper - b.aggregate_lower) * i / 20.0;
    if (!tau_satisfies_all(b, std::min(tau, b.aggregate_upper))) ++out.violations;
  }
}

Outcome tau_bound_coherence() {
  SeededRng rng(505);
  BoundCheck cov, corr;
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t m = 3 + static_cast<std::size_t>(inst % 4);
    const std::size_t d = 1 + static_cast<std::size_t>(inst % 2);
    const PopulationSpec spec = make_population(m, d, 1.0, 0.002 * (inst % 5), rng.next_u64());
    const std::size_t n = 100 + 50 * static_cast<std::size_t>(inst % 10);
    SeededRng base_rng = rng.substream(1, static_cast<std::uint64_t>(inst));
    const SymmetricMatrix sj = sample_covariance(sample_gaussian(spec, n, false, base_rng));
    // The perturbed sample is either as large as the base one, much larger,
    // or the perturbed population itself.
    SymmetricMatrix sjt = spec.joint_perturbed();
    if (inst % 3 != 2) {
      SeededRng pert_rng = rng.substream(2, static_cast<std::uint64_t>(inst));
      sjt = sample_covariance(sample_gaussian(spec, inst % 3 == 0 ? n : 100 * n, true, pert_rng));
    }
    const PerturbationSplit split = split_joint(spec, sj, sjt, spec.d_set);
    const CorrelationSplit csplit = split_correlation(spec, sj, sjt, spec.d_set);
    const EigenSystem eig = eigh(spec.joint());
    const EigenSystem ceig = eigh(correlation_from_covariance(spec.joint()));
    check_bounds(tau_bounds(split, spec.sigma, eig.values, match_eigen_to_block(eig, spec.d_set, 0.0)), cov);
    check_bounds(tau_bounds_corr(csplit, ceig.values, match_eigen_to_block(ceig, spec.d_set, 0.0)), corr);
  }
  const int violations = cov.violations + corr.violations;
  return {violations == 0 && cov.feasible > 0 && corr.feasible > 0,
          std::to_string(violations) + " violations; feasible instances: covariance " + std::to_string(cov.feasible) +
              ", correlation " + std::to_string(corr.feasible) + " of 500"};
}

Outcome approximation_rate() {
  const PopulationSpec spec = make_population(4, 1, 1.0, 0.05, 606);
  const Study s = run_study(spec, {200, 800, 3200}, 200, TrialConfig{}, SeededRng(606), workers());
  const double slope = s.summary.approx_error_slope.value_or(NAN);
  return {slope >= -1.25 && slope <= -0.75, "slope " + fmt("%.4f", slope)};
}

Outcome ols_oracle() {
  SeededRng rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = 1 + static_cast<Eigen::Index>(rng.next_u64() % 6);
    const auto n = m + 2 + static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(49 - m));
    const Matrix x = mean_center(testutil::random_matrix(rng, n, m));
    const Vector beta = testutil::random_matrix(rng, m, 1);
    const Vector y = mean_center(Matrix(x * beta + testutil::random_matrix(rng, n, 1))).col(0);
    worst = std::max(worst, (ols_fit(x, y).beta_hat - oracle::ols_beta(x, y)).cwiseAbs().maxCoeff());
  }
  const double p = student_t_sf(2.228, 10);
  const double reference = oracle::student_t_two_sided(2.228, 10.0);
  const bool ok = worst <= 1e-10 && std::abs(p - 0.050) <= 0.001 && std::abs(reference - 0.050) <= 0.001 &&
                  std::abs(p - reference) <= 1e-8;
  return {ok, "max |beta - oracle| " + fmt("%.2e", worst) + "; sf(2.228, 10) = " + fmt("%.6f", p) +
                  ", integration " + fmt("%.6f", reference)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("plaols_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto run = [&](const std::string& tag, int parallel) {
    const std::string cmd = std::string(PLAOLS_CLI) + " simulate --seed 42 --parallel " + std::to_string(parallel) +
                            " --out " + (dir / (tag + ".json")).string() + " --trials " +
                            (dir / (tag + ".csv")).string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  const bool ran = run("a", 1) && run("b", 1) && run("c", 4);
  bool same = ran;
  for (const char* ext : {".json", ".csv"}) {
    const std::string a = slurp(dir / (std::string("a") + ext));
    same = same && !a.empty() && a == slurp(dir / (std::string("b") + ext)) && a == slurp(dir / (std::string("c") + ext));
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return {same, ran ? (same ? "summary and per-trial files byte-identical" : "outputs differ") : "simulate failed"};
}

Outcome correlation_consistency() {
  PopulationOptions opts;
  opts.unit_variance = true;
  SeededRng rng(909);
  double worst = 0.0;
  int agree = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t m = 3 + static_cast<std::size_t>(inst % 4);
    const std::size_t d = 1 + static_cast<std::size_t>(inst % 2);
    const PopulationSpec spec = make_population(m, d, 1.0, 0.02, rng.next_u64(), opts);
    SeededRng a = rng.substream(1, static_cast<std::uint64_t>(inst));
    SeededRng b = rng.substream(2, static_cast<std::uint64_t>(inst));
    Matrix x = sample_gaussian(spec, 300, false, a);
    Matrix xt = sample_gaussian(spec, 300, true, b);
    // Unit sample variances, so that the sample covariance is the sample
    // correlation matrix as well.
    for (Matrix* s : {&x, &xt}) {
      for (Eigen::Index j = 0; j < s->cols(); ++j) s->col(j) /= std::sqrt(s->col(j).squaredNorm() / 299.0);
    }
    const SymmetricMatrix sj = sample_covariance(x), sjt = sample_covariance(xt);
    const Lemma2Result l2 = check_lemma2(split_joint(spec, sj, sjt, spec.d_set), spec.sigma);
    const Lemma2Result l6 = check_lemma6(split_correlation(spec, sj, sjt, spec.d_set));
    const double diff = ((l2.rhs - l2.lhs) - (l6.rhs - l6.lhs)).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    agree += diff <= 1e-9;
  }
  return {agree == 100, std::to_string(agree) + "/100 within 1e-9; max margin difference " + fmt("%.2e", worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"1 exact-block recovery", 5, exact_block_recovery},
      {"2 eigen correctness", 10, eigen_correctness},
      {"3 implication chain", 60, implication_chain},
      {"4 convergence rate", 120, convergence_rate},
      {"5 tau-bound coherence", 30, tau_bound_coherence},
      {"6 approximation-error rate", 120, approximation_rate},
      {"7 OLS oracle equivalence", 10, ols_oracle},
      {"8 determinism", 60, determinism},
      {"9 correlation/covariance consistency", 10, correlation_consistency},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  criterion %s: %s [%.2fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                secs, c.limit_seconds, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
