#pragma once

// File formats.
//
//   observations CSV   case_id,t,B,T,X,D   one row per case and period
//   cases CSV          case_id,R           one row per case
//   label map JSON     {"B": [...], "T": [...], "X": [...], "R": [...]}
//                      position in each list is the dense category code
//   params JSON        {"spaces": {...}, "alpha": a, "Q_S": [...], "pi_S": [...],
//                       "Q_B": [...], "pi_B": [...]} with every bank entry
//                      labelled by its covariates
//
// Tables are UTF-8, comma separated, '\n' terminated. Reals are written as
// the shortest decimal that round-trips.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "debthmm/domain.hpp"
#include "debthmm/inference.hpp"
#include "debthmm/learning.hpp"
#include "debthmm/simulation.hpp"

namespace debthmm {

/// Human-readable names of the dense category codes.
struct LabelMap {
  std::vector<std::string> B;
  std::vector<std::string> T;
  std::vector<std::string> X;
  std::vector<std::string> R;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Labels "0", "1", ... for every observed category space.
LabelMap numeric_labels(const StateSpaces& spaces);

LabelMap load_label_map(const std::filesystem::path& path);
void save_label_map(const std::filesystem::path& path, const LabelMap& labels);

struct LoadedCohort {
  Cohort cohort;
  StateSpaces spaces;  // observed spaces; n_scheme is left at 1
  LabelMap labels;
};

/// Reads and validates a cohort. Without a label map, codes are assigned in
/// order of first appearance (observations file for B, T, X; cases file
/// for R). Throws ValidationError listing every problem found.
LoadedCohort load_cohort(const std::filesystem::path& observations,
                         const std::filesystem::path& cases,
                         const std::optional<LabelMap>& labels = std::nullopt);

void save_cohort(const std::filesystem::path& observations, const std::filesystem::path& cases,
                 const Cohort& cohort, const LabelMap& labels);

nlohmann::json params_to_json(const ModelParams& params);

struct LoadedParams {
  ModelParams params;
  std::vector<std::string> warnings;  // e.g. unknown fields that were ignored
};

/// Throws ValidationError on missing entries, dimension mismatches or rows
/// that are not stochastic.
LoadedParams params_from_json(const nlohmann::json& doc);

void save_params(const std::filesystem::path& path, const ModelParams& params);
LoadedParams load_params(const std::filesystem::path& path);

struct LoadedSpec {
  CohortSpec spec;
  std::vector<std::string> warnings;
};

LoadedSpec cohort_spec_from_json(const nlohmann::json& doc);
LoadedSpec load_cohort_spec(const std::filesystem::path& path);

nlohmann::json fit_report_to_json(const FitReport& report);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// case_id,t,s,gamma
void write_gamma_table(std::ostream& os, const Cohort& cohort,
                       const std::vector<PosteriorSet>& posteriors);

/// case_id,t,S
void write_hidden_paths(std::ostream& os, const Cohort& cohort,
                        const std::vector<std::vector<int>>& hidden);

/// alpha,l1
void write_alpha_table(std::ostream& os, const AlphaScanResult& scan);

/// scope,case_id,log_likelihood with one "case" row per case and a final
/// "total" row.
void write_loglik_table(std::ostream& os, const Cohort& cohort,
                        const std::vector<PosteriorSet>& posteriors);

}  // namespace debthmm
