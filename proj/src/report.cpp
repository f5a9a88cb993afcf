#include "plaols/report.hpp"

#include <algorithm>

#include <cmath>
#include <ostream>

namespace plaols {

Json json_number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

Json json_vector(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_number(v(i)));
  return out;
}

Json json_matrix(const Matrix& a) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(json_vector(a.row(i).transpose()));
  return out;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? json_number(*v) : Json(nullptr); }

Json names_of(const IndexSet& idx, const std::vector<std::string>& names) {
  Json out = Json::array();
  for (auto i : idx) out.push_back(names.at(i));
  return out;
}

Json index_array(const IndexSet& idx) {
  Json out = Json::array();
  for (auto i : idx) out.push_back(i);
  return out;
}

Matrix matrix_from_json(const Json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw Error(ErrorKind::InputFormat, std::string("population: '") + key + "' must be an array of rows");
  }
  const auto& rows = doc[key];
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw Error(ErrorKind::InputFormat, std::string("population: '") + key + "' must be square");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& cell = row[static_cast<std::size_t>(j)];
      if (!cell.is_number()) throw Error(ErrorKind::InputFormat, std::string("population: '") + key + "' holds a non-number");
      out(i, j) = cell.get<double>();
    }
  }
  return out;
}

Vector vector_from_json(const Json& doc, const char* key, Eigen::Index expected) {
  if (!doc.contains(key) || !doc[key].is_array() || static_cast<Eigen::Index>(doc[key].size()) != expected) {
    throw Error(ErrorKind::InputFormat,
                std::string("population: '") + key + "' must be an array of length " + std::to_string(expected));
  }
  Vector out(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    const auto& cell = doc[key][static_cast<std::size_t>(i)];
    if (!cell.is_number()) throw Error(ErrorKind::InputFormat, std::string("population: '") + key + "' holds a non-number");
    out(i) = cell.get<double>();
  }
  return out;
}

}  // namespace

Json to_json(const PlaReport& report, const std::vector<std::string>& names) {
  Json out;
  out["basis"] = to_string(report.basis);
  out["tau"] = report.tau;
  out["eigenvalues"] = json_vector(report.eigensystem.values);
  Json cands = Json::array();
  for (const auto& c : report.candidates) {
    Json j;
    j["discard_set"] = names_of(c.discard_set, names);
    j["discard_indices"] = index_array(c.discard_set);
    j["eigen_set"] = index_array(c.eigen_set);
    j["max_offblock_loading"] = json_number(c.max_offblock_loading);
    j["explained_variance"] = {{"exact", json_number(c.explained.exact)}, {"approx", json_number(c.explained.approx)}};
    cands.push_back(std::move(j));
  }
  out["candidates"] = std::move(cands);
  out["zero_variance"] = names_of(report.zero_variance, names);
  out["response"] = report.response ? Json(names.at(*report.response)) : Json(nullptr);
  return out;
}

Json to_json(const OlsFit& fit, const std::vector<std::string>& names) {
  Json out;
  out["df"] = fit.df;
  out["sigma2_hat"] = json_number(fit.sigma2_hat);
  Json coefs = Json::array();
  for (Eigen::Index k = 0; k < fit.beta_hat.size(); ++k) {
    coefs.push_back({{"name", names.at(static_cast<std::size_t>(k))},
                     {"beta", json_number(fit.beta_hat(k))},
                     {"std_error", json_number(fit.std_errors(k))},
                     {"t", json_number(fit.t_stats(k))},
                     {"p_value", json_number(fit.p_values(k))}});
  }
  out["coefficients"] = std::move(coefs);
  return out;
}

Json to_json(const TauBounds& bounds) {
  Json out;
  out["constant"] = bounds.constant;
  out["aggregate_lower"] = json_number(bounds.aggregate_lower);
  out["aggregate_upper"] = json_number(bounds.aggregate_upper);
  out["aggregate_upper_necessary"] = json_number(bounds.aggregate_upper_necessary);
  out["loose_upper"] = json_number(bounds.loose_upper);
  out["feasible"] = bounds.feasible;
  out["feasible_necessary"] = bounds.feasible_necessary;
  out["feasible_loose"] = bounds.feasible_loose;
  out["reason"] = bounds.reason.empty() ? Json(nullptr) : Json(bounds.reason);
  Json tuples = Json::array();
  for (const auto& t : bounds.tuples) {
    tuples.push_back({{"d", t.d},
                      {"d_star", t.d_star},
                      {"delta", t.delta},
                      {"gap", json_number(t.gap)},
                      {"lower", json_number(t.lower)},
                      {"upper_tight", json_number(t.upper_tight)},
                      {"upper_necessary", json_number(t.upper_necessary)},
                      {"upper_loose", json_number(t.upper_loose)}});
  }
  out["tuples"] = std::move(tuples);
  return out;
}

Json to_json(const StudySummary& s) {
  Json out;
  out["trials"] = s.trials;
  Json rows = Json::array();
  for (const auto& r : s.per_n) {
    rows.push_back({{"n", r.n},
                    {"mean_h_frob", json_number(r.mean_h_frob)},
                    {"mean_h_rho_frob", json_number(r.mean_h_rho_frob)},
                    {"mean_h_max_abs", json_number(r.mean_h_max_abs)},
                    {"mean_approx_error", json_number(r.mean_approx_error)}});
  }
  out["per_n"] = std::move(rows);
  out["slopes"] = {{"h_frob", optional_number(s.h_frob_slope)},
                   {"h_rho_frob", optional_number(s.h_rho_frob_slope)},
                   {"approx_error", optional_number(s.approx_error_slope)}};
  out["frequencies"] = {{"theorem1", s.freq_theorem1},         {"lemma2", s.freq_lemma2},
                        {"corollary3", s.freq_corollary3},     {"lemma6", s.freq_lemma6},
                        {"corollary7", s.freq_corollary7},     {"pla_discards", s.freq_pla_discards},
                        {"ols_discards", s.freq_ols_discards}, {"both_discard", s.freq_both_discard},
                        {"tau_feasible", s.freq_tau_feasible}};
  out["violations"] = {{"lemma2_theorem1", s.violations_lemma2_theorem1},
                       {"theorem1_dominance", s.violations_theorem1_dominance},
                       {"lemma2_corollary3", s.violations_lemma2_corollary3},
                       {"lemma6_corollary7", s.violations_lemma6_corollary7},
                       {"total", s.violations_total}};
  return out;
}

Json population_to_json(const PopulationSpec& spec) {
  Json out;
  out["m"] = spec.m();
  out["d_set"] = index_array(spec.d_set);
  out["sigma"] = json_matrix(spec.sigma.matrix());
  out["cov"] = json_vector(spec.cov);
  out["var_y"] = spec.var_y;
  out["e"] = json_matrix(spec.e.matrix());
  out["e_cov"] = json_vector(spec.e_cov);
  out["beta_true"] = json_vector(spec.beta_true);
  return out;
}

PopulationSpec population_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::InputFormat, "population: expected a JSON object");
  PopulationSpec spec;
  const Matrix sigma = matrix_from_json(doc, "sigma");
  const auto m = sigma.rows();
  spec.sigma = SymmetricMatrix(sigma);
  spec.cov = vector_from_json(doc, "cov", m);
  if (!doc.contains("var_y") || !doc["var_y"].is_number()) {
    throw Error(ErrorKind::InputFormat, "population: 'var_y' must be a number");
  }
  spec.var_y = doc["var_y"].get<double>();
  const Matrix e = doc.contains("e") ? matrix_from_json(doc, "e") : Matrix(Matrix::Zero(m, m));
  if (e.rows() != m) throw Error(ErrorKind::InputFormat, "population: 'e' and 'sigma' sizes differ");
  spec.e = SymmetricMatrix(e);
  spec.e_cov = doc.contains("e_cov") ? vector_from_json(doc, "e_cov", m) : Vector(Vector::Zero(m));
  if (!doc.contains("d_set") || !doc["d_set"].is_array()) {
    throw Error(ErrorKind::InputFormat, "population: 'd_set' must be an array of indices");
  }
  for (const auto& v : doc["d_set"]) {
    if (!v.is_number_unsigned()) throw Error(ErrorKind::InputFormat, "population: 'd_set' holds a non-index");
    spec.d_set.push_back(v.get<std::size_t>());
  }
  if (!(spec.var_y > 0.0) || !std::isfinite(spec.var_y)) {
    throw Error(ErrorKind::InputFormat, "population: 'var_y' must be positive");
  }
  check_index_set(spec.d_set, static_cast<std::size_t>(m), "population d_set");
  if (spec.d_set.empty() || spec.d_set.size() >= static_cast<std::size_t>(m)) {
    throw Error(ErrorKind::InputFormat, "population: d_set must be a nonempty proper subset");
  }
  validate_population(spec);
  spec.beta_true = solve_spd(spec.sigma, spec.cov);
  return spec;
}

Comparison compare_methods(const CsvTable& table, const std::string& response, Basis basis, double tau,
                           double alpha) {
  const std::size_t y_col = table.column(response);
  const auto cols = table.header.size();
  if (cols < 2) throw Error(ErrorKind::InputFormat, "compare needs at least one covariate besides the response");

  Comparison out;
  out.response = response;
  out.alpha = alpha;
  std::vector<Eigen::Index> order;
  for (std::size_t j = 0; j < cols; ++j) {
    if (j == y_col) continue;
    out.covariates.push_back(table.header[j]);
    order.push_back(static_cast<Eigen::Index>(j));
  }
  order.push_back(static_cast<Eigen::Index>(y_col));
  const Matrix joint = mean_center(table.data(Eigen::all, order));
  const auto m = static_cast<Eigen::Index>(out.covariates.size());

  if (joint.col(m).cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorKind::DegenerateInput, "response column '" + response + "' is constant");
  }
  out.pla = run_pla(joint, basis, tau, static_cast<std::size_t>(m));
  out.ols = ols_fit(joint.leftCols(m), joint.col(m));

  out.pla_discard.assign(static_cast<std::size_t>(m), false);
  for (const auto& c : out.pla.candidates) {
    for (auto d : c.discard_set) out.pla_discard[d] = true;
  }
  IndexSet all(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  out.ols_discard = discard_by_ols(out.ols, all, alpha);
  return out;
}

Json to_json(const Comparison& c) {
  std::vector<std::string> joint_names = c.covariates;
  joint_names.push_back(c.response);
  Json out;
  out["response"] = c.response;
  out["alpha"] = c.alpha;
  out["pla"] = to_json(c.pla, joint_names);
  out["ols"] = to_json(c.ols, c.covariates);
  Json both = Json::array(), pla_only = Json::array(), ols_only = Json::array(), neither = Json::array();
  Json rows = Json::array();
  for (std::size_t i = 0; i < c.covariates.size(); ++i) {
    const bool p = c.pla_discard[i];
    const bool o = c.ols_discard[i];
    (p && o ? both : p ? pla_only : o ? ols_only : neither).push_back(c.covariates[i]);
    rows.push_back({{"name", c.covariates[i]},
                    {"pla_discard", p},
                    {"ols_discard", o},
                    {"p_value", json_number(c.ols.p_values(static_cast<Eigen::Index>(i)))}});
  }
  out["covariates"] = std::move(rows);
  out["agreement"] = {{"discarded_by_both", std::move(both)},
                      {"pla_only", std::move(pla_only)},
                      {"ols_only", std::move(ols_only)},
                      {"neither", std::move(neither)}};
  return out;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialOutcome>& trials) {
  out << "n,replication,tau,tau_auto,tau_clamped,pla_base_discards,pla_perturbed_discards,pla_base_candidates,"
         "pla_perturbed_candidates,ols_base_discards,ols_perturbed_discards,ols_perturbed_min_p,theorem1,lemma2,"
         "corollary3,theorem1_corr,lemma6,corollary7,coefficient_dominance,tau_lower,tau_upper,"
         "tau_upper_necessary,tau_loose_upper,tau_feasible,tau_lower_corr,tau_upper_corr,tau_feasible_corr,"
         "h_frob,h_rho_frob,e_tilde_frob,h_max_abs,h_star_row_max,ee_star_row_max,approx_error,violations\n";
  const auto f = [](double v) { return format_double(v); };
  for (const auto& t : trials) {
    out << t.n << ',' << t.replication << ',' << f(t.tau) << ',' << t.tau_auto << ',' << t.tau_clamped << ','
        << t.pla_base_discards << ',' << t.pla_perturbed_discards << ',' << t.pla_base_candidates << ','
        << t.pla_perturbed_candidates << ',' << t.ols_base_discards << ',' << t.ols_perturbed_discards << ','
        << f(t.ols_perturbed_min_p) << ',' << t.theorem1 << ',' << t.lemma2 << ',' << t.corollary3 << ','
        << t.theorem1_corr << ',' << t.lemma6 << ',' << t.corollary7 << ',' << t.coefficient_dominance << ','
        << f(t.tau_lower) << ',' << f(t.tau_upper) << ',' << f(t.tau_upper_necessary) << ','
        << f(t.tau_loose_upper) << ',' << t.tau_feasible << ',' << f(t.tau_lower_corr) << ','
        << f(t.tau_upper_corr) << ',' << t.tau_feasible_corr << ',' << f(t.h_frob) << ',' << f(t.h_rho_frob)
        << ',' << f(t.e_tilde_frob) << ',' << f(t.h_max_abs) << ',' << f(t.h_star_row_max) << ','
        << f(t.ee_star_row_max) << ',' << f(t.approx_error) << ',' << t.violations() << '\n';
  }
}

}  // namespace plaols
