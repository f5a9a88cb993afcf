#pragma once

// JSON and CSV serialization of results. Every JSON document carries
// "schema_version" and "command"; non-finite numbers are written as null.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "plaols/csv.hpp"
#include "plaols/ols.hpp"
#include "plaols/perturbation.hpp"
#include "plaols/pla.hpp"
#include "plaols/simulation.hpp"

namespace plaols {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

Json json_number(double value);
Json json_vector(const Vector& v);
Json json_matrix(const Matrix& a);

Json to_json(const PlaReport& report, const std::vector<std::string>& names);
Json to_json(const OlsFit& fit, const std::vector<std::string>& names);
Json to_json(const TauBounds& bounds);
Json to_json(const StudySummary& summary);

Json population_to_json(const PopulationSpec& spec);
/// Reads sigma, cov, var_y, e, e_cov and d_set; beta_true is recomputed.
/// Throws InputFormat on missing or mistyped fields, then validates.
PopulationSpec population_from_json(const Json& doc);

/// PLA on the joint sample (covariates and response) next to OLS of the
/// response on the covariates. The block holding the response is never a
/// PLA candidate.
struct Comparison {
  std::vector<std::string> covariates;
  std::string response;
  PlaReport pla;  // on the joint data, response last
  OlsFit ols;
  std::vector<bool> pla_discard;
  std::vector<bool> ols_discard;
  double alpha = 0.05;
};

Comparison compare_methods(const CsvTable& table, const std::string& response, Basis basis, double tau,
                           double alpha);
Json to_json(const Comparison& comparison);

void write_trials_csv(std::ostream& out, const std::vector<TrialOutcome>& trials);

}  // namespace plaols
