// plaols: principal loading analysis, OLS comparison, cut-off bounds and
// Monte Carlo studies from the command line.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plaols/csv.hpp"
#include "plaols/report.hpp"
#include "plaols/simulation.hpp"

namespace fs = std::filesystem;
using namespace plaols;

namespace {

enum Exit { kOk = 0, kFlags = 1, kInput = 2, kDegenerate = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::string response;
  std::string basis = "cov";
  std::string tau;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> n_list;
  std::size_t reps = 50;
  std::string constant = "paper";
  std::string out;
  std::string format = "json";
  std::size_t parallel = 1;
  std::string trials;
  std::string population;
  std::size_t m = 4;
  std::size_t d_size = 1;
  double signal = 1.0;
  double eps = 0.05;
};

Basis parse_basis(const std::string& s) {
  if (s == "cov") return Basis::Covariance;
  if (s == "corr") return Basis::Correlation;
  throw UsageError("--basis must be cov or corr");
}

double parse_double(const std::string& s, const std::string& flag) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError(flag + " expects a number, got '" + s + "'");
  }
  return v;
}

// nullopt means "auto".
std::optional<double> parse_tau(const std::string& s, bool allow_auto) {
  if (s == "auto") {
    if (!allow_auto) throw UsageError("--tau auto needs a known population; use bounds or simulate");
    return std::nullopt;
  }
  const double tau = parse_double(s, "--tau");
  if (!(tau >= 0.0 && tau < 1.0)) throw UsageError("--tau must lie in [0, 1)");
  return tau;
}

double parse_constant(const std::string& s) {
  if (s == "paper") return kDefaultBoundConstant;
  if (s == "dk") return kDavisKahanConstant;
  const double c = parse_double(s, "--constant");
  if (!(c > 0.0)) throw UsageError("--constant must be positive");
  return c;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("PLA_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError("PLA_SEED must be an unsigned integer");
    return v;
  }
  return 42;
}

PopulationSpec load_population(const Options& o, std::uint64_t seed) {
  if (!o.population.empty()) {
    std::ifstream in(o.population);
    if (!in) throw Error(ErrorKind::InputFormat, "cannot open '" + o.population + "'");
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InputFormat, o.population + ": " + e.what());
    }
    return population_from_json(doc);
  }
  if (o.d_size < 1 || o.d_size >= o.m) throw UsageError("--d-size must satisfy 1 <= d-size < m");
  if (!(o.signal >= 0.0)) throw UsageError("--signal must be non-negative");
  return make_population(o.m, o.d_size, o.signal, o.eps, seed);
}

Json header(const char* command) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// Writes every (path, content) pair or none: contents go to temporaries first
// and are renamed into place; anything already renamed is removed on failure.
void emit(const std::vector<std::pair<std::string, std::string>>& outputs) {
  std::vector<fs::path> temps, done;
  try {
    for (const auto& [path, content] : outputs) {
      if (path.empty()) continue;
      fs::path tmp = path + ".partial";
      temps.push_back(tmp);
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      f << content;
      f.close();
      if (!f) throw Error(ErrorKind::InputFormat, "cannot write '" + path + "'");
    }
    std::size_t k = 0;
    for (const auto& [path, content] : outputs) {
      if (path.empty()) continue;
      fs::rename(temps[k++], path);
      done.emplace_back(path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
    for (const auto& d : done) fs::remove(d, ec);
    throw;
  }
  for (const auto& [path, content] : outputs) {
    if (path.empty()) std::cout << content;
  }
}

int cmd_pla(const Options& o) {
  const Basis basis = parse_basis(o.basis);
  if (o.tau.empty()) throw UsageError("--tau is required");
  const double tau = *parse_tau(o.tau, false);
  const CsvTable table = read_csv(o.input);
  const auto m = table.data.cols();
  const auto n = table.data.rows();
  if (m < 2) throw Error(ErrorKind::DegenerateInput, "PLA needs at least two columns");
  if (n <= m) {
    throw Error(ErrorKind::DegenerateInput,
                "PLA needs more rows (" + std::to_string(n) + ") than columns (" + std::to_string(m) + ")");
  }
  std::optional<std::size_t> response;
  if (!o.response.empty()) response = table.column(o.response);
  const PlaReport report = run_pla(table.data, basis, tau, response);
  std::string content;
  if (o.format == "json") {
    Json j = header("pla");
    j["input"] = fs::path(o.input).filename().string();
    j["n"] = n;
    j["columns"] = table.header;
    j["report"] = to_json(report, table.header);
    content = dump(j);
  } else {
    std::ostringstream s;
    s << "candidate,column,eigen_set,max_offblock_loading,explained_exact,explained_approx\n";
    for (std::size_t c = 0; c < report.candidates.size(); ++c) {
      const auto& cand = report.candidates[c];
      std::string eigen;
      for (auto e : cand.eigen_set) eigen += (eigen.empty() ? "" : " ") + std::to_string(e);
      for (auto d : cand.discard_set) {
        s << c << ',' << table.header[d] << ',' << eigen << ',' << format_double(cand.max_offblock_loading) << ','
          << format_double(cand.explained.exact) << ',' << format_double(cand.explained.approx) << '\n';
      }
    }
    content = s.str();
  }
  emit({{o.out, content}});
  return kOk;
}

int cmd_compare(const Options& o) {
  const Basis basis = parse_basis(o.basis);
  check_alpha(o.alpha);
  if (o.tau.empty()) throw UsageError("--tau is required");
  const double tau = *parse_tau(o.tau, false);
  if (o.response.empty()) throw UsageError("--response is required");
  const CsvTable table = read_csv(o.input);
  const Comparison cmp = compare_methods(table, o.response, basis, tau, o.alpha);
  std::string content;
  if (o.format == "json") {
    Json j = header("compare");
    j["input"] = fs::path(o.input).filename().string();
    j["n"] = table.data.rows();
    j["basis"] = to_string(basis);
    j["tau"] = tau;
    Json body = to_json(cmp);
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    content = dump(j);
  } else {
    std::ostringstream s;
    s << "column,pla_discard,ols_discard,beta,p_value\n";
    for (std::size_t i = 0; i < cmp.covariates.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      s << cmp.covariates[i] << ',' << cmp.pla_discard[i] << ',' << cmp.ols_discard[i] << ','
        << format_double(cmp.ols.beta_hat(k)) << ',' << format_double(cmp.ols.p_values(k)) << '\n';
    }
    content = s.str();
  }
  emit({{o.out, content}});
  return kOk;
}

int cmd_bounds(const Options& o) {
  const double c = parse_constant(o.constant);
  if (o.n_list.size() > 1) throw UsageError("bounds takes at most one --n");
  const std::uint64_t seed = resolve_seed(o);
  const PopulationSpec spec = load_population(o, seed);
  std::optional<std::size_t> n;
  if (!o.n_list.empty()) n = o.n_list.front();
  if (n && *n <= spec.m() + 1) throw UsageError("--n must exceed m + 1");
  const BoundsReport b = compute_bounds(spec, n, c, study_stream(seed));

  std::string content;
  if (o.format == "json") {
    Json j = header("bounds");
    j["seed"] = seed;
    j["n"] = n ? Json(*n) : Json(nullptr);
    j["constant"] = c;
    j["gap_convention"] =
        "eigenvalues in descending order; gap(k) = min(lambda[k-1] - lambda[k], lambda[k] - lambda[k+1]) with "
        "lambda[-1] = +inf and lambda[M+1] = -inf";
    j["population"] = population_to_json(spec);
    j["delta_set"] = b.delta_set;
    j["delta_set_corr"] = b.delta_set_corr;
    j["joint_eigenvalues"] = json_vector(b.joint_eigenvalues);
    j["joint_eigenvalues_corr"] = json_vector(b.joint_eigenvalues_corr);
    j["covariance"] = to_json(b.covariance);
    j["correlation"] = to_json(b.correlation);
    content = dump(j);
  } else {
    std::ostringstream s;
    s << "basis,d,d_star,delta,gap,lower,upper_tight,upper_necessary,upper_loose\n";
    for (const auto* tb : {&b.covariance, &b.correlation}) {
      const char* name = tb == &b.covariance ? "covariance" : "correlation";
      for (const auto& t : tb->tuples) {
        s << name << ',' << t.d << ',' << t.d_star << ',' << t.delta << ',' << format_double(t.gap) << ','
          << format_double(t.lower) << ',' << format_double(t.upper_tight) << ','
          << format_double(t.upper_necessary) << ',' << format_double(t.upper_loose) << '\n';
      }
    }
    content = s.str();
  }
  emit({{o.out, content}});
  return kOk;
}

int cmd_simulate(const Options& o) {
  TrialConfig config;
  config.basis = parse_basis(o.basis);
  config.tau = parse_tau(o.tau.empty() ? "auto" : o.tau, true);
  check_alpha(o.alpha);
  config.alpha = o.alpha;
  config.constant = parse_constant(o.constant);
  if (o.reps < 1) throw UsageError("--reps must be at least 1");
  if (o.parallel < 1) throw UsageError("--parallel must be at least 1");
  std::vector<std::size_t> n_list = o.n_list.empty() ? std::vector<std::size_t>{100, 400, 1600} : o.n_list;
  const std::uint64_t seed = resolve_seed(o);
  const PopulationSpec spec = load_population(o, seed);
  for (auto n : n_list) {
    if (n <= spec.m() + 1) throw UsageError("every --n must exceed m + 1");
  }
  const Study study = run_study(spec, n_list, o.reps, config, study_stream(seed), o.parallel);

  std::ostringstream trials_csv;
  write_trials_csv(trials_csv, study.trials);
  std::string content;
  if (o.format == "json") {
    Json j = header("simulate");
    j["seed"] = seed;
    j["config"] = {{"n", n_list},
                   {"replications", o.reps},
                   {"tau", config.tau ? Json(*config.tau) : Json("auto")},
                   {"alpha", config.alpha},
                   {"constant", config.constant},
                   {"basis", to_string(config.basis)}};
    j["population"] = population_to_json(spec);
    j["summary"] = to_json(study.summary);
    content = dump(j);
  } else {
    content = trials_csv.str();
  }
  std::vector<std::pair<std::string, std::string>> outputs{{o.out, content}};
  if (!o.trials.empty()) outputs.emplace_back(o.trials, trials_csv.str());
  emit(outputs);
  return kOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return kFlags;
    case ErrorKind::InputFormat:
      return kInput;
    case ErrorKind::NumericalFailure:
      return kNumerical;
    default:
      return kDegenerate;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal loading analysis and OLS discarding"};
  app.require_subcommand(1);
  Options o;

  auto common_output = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "output file (default: stdout)");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  };
  auto population_flags = [&](CLI::App* sub) {
    sub->add_option("--population", o.population, "population JSON (sigma, cov, var_y, e, e_cov, d_set)");
    sub->add_option("--m", o.m, "number of covariates")->check(CLI::Range(2, 64));
    sub->add_option("--d-size", o.d_size, "size of the uncorrelated block");
    sub->add_option("--signal", o.signal, "norm of the true coefficients on the other covariates");
    sub->add_option("--eps", o.eps, "size of the sparse perturbation");
    sub->add_option("--seed", o.seed, "master seed (fallback: PLA_SEED, then 42)");
    sub->add_option("--constant", o.constant, "paper, dk or a positive number");
  };

  auto* pla = app.add_subcommand("pla", "find discardable blocks in a CSV sample");
  pla->add_option("--input", o.input, "CSV file")->required();
  pla->add_option("--basis", o.basis, "cov or corr");
  pla->add_option("--response", o.response, "column kept out of every candidate block");
  pla->add_option("--tau", o.tau, "cut-off in [0, 1)")->required();
  common_output(pla);

  auto* compare = app.add_subcommand("compare", "compare PLA and OLS discarding on a CSV sample");
  compare->add_option("--input", o.input, "CSV file")->required();
  compare->add_option("--response", o.response, "name of the response column")->required();
  compare->add_option("--basis", o.basis, "cov or corr");
  compare->add_option("--tau", o.tau, "cut-off in [0, 1)")->required();
  compare->add_option("--alpha", o.alpha, "significance level in (0, 1)");
  common_output(compare);

  auto* bounds = app.add_subcommand("bounds", "cut-off bounds for a known population");
  population_flags(bounds);
  bounds->add_option("--n", o.n_list, "sample size (omit for the population limit)");
  common_output(bounds);

  auto* simulate = app.add_subcommand("simulate", "seeded Monte Carlo study");
  population_flags(simulate);
  simulate->add_option("--n", o.n_list, "sample size, repeatable (default 100 400 1600)")->take_all();
  simulate->add_option("--reps", o.reps, "replications per sample size");
  simulate->add_option("--basis", o.basis, "cov or corr");
  simulate->add_option("--tau", o.tau, "cut-off in [0, 1) or auto (default)");
  simulate->add_option("--alpha", o.alpha, "significance level in (0, 1)");
  simulate->add_option("--parallel", o.parallel, "worker threads");
  simulate->add_option("--trials", o.trials, "also write per-trial CSV here");
  common_output(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFlags;
  }

  try {
    if (*pla) return cmd_pla(o);
    if (*compare) return cmd_compare(o);
    if (*bounds) return cmd_bounds(o);
    return cmd_simulate(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFlags;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
