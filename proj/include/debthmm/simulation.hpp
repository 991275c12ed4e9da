#pragma once

#include <cstdint>
#include <vector>

#include "debthmm/domain.hpp"
#include "debthmm/random.hpp"

namespace debthmm {

/// Debt-ratio path sampler. D_u ~ Uniform[initial_low, initial_high]; each
/// later period multiplies by exp(drift + volatility * N(0,1)) and clips at
/// `floor`. When decimals >= 0 the reported ratio is rounded to that many
/// decimal places (never below one unit of the last place).
struct DebtPathModel {
  double initial_low = 0.2;
  double initial_high = 1.2;
  double drift = -0.05;
  double volatility = 0.1;
  double floor = 1e-3;
  int decimals = 2;
};

struct CohortSpec {
  std::size_t n_cases = 200;
  std::size_t min_length = 6;
  std::size_t max_length = 24;

  // Treatment: a fixed sequence by position within the case when non-empty,
  // otherwise independent draws per period (uniform when probs are empty).
  std::vector<int> treatment_sequence;
  std::vector<double> treatment_probs;

  // Economic state is a calendar covariate shared by every case. A fixed path
  // indexed by t - first_period when non-empty, otherwise one draw per block
  // of econ_block periods (uniform when probs are empty).
  std::vector<int> econ_path;
  std::vector<double> econ_probs;
  std::size_t econ_block = 3;

  std::vector<double> result_probs;  // uniform when empty

  std::int64_t first_period = 0;
  std::int64_t start_spread = 0;  // u ~ first_period + Uniform{0..start_spread}

  DebtPathModel debt;
  std::uint64_t seed = 0;
};

/// Throws ValidationError if the spec cannot generate cases in `spaces`.
void validate_spec(const CohortSpec& spec, const StateSpaces& spaces);

struct SampledCase {
  DebtCase debt_case;
  std::vector<int> schemes;  // hidden S path, same indexing as B
};

struct SimulatedCohort {
  Cohort cases;
  std::vector<std::vector<int>> hidden;
};

/// Number of calendar periods the economic path must cover.
std::size_t economic_horizon(const CohortSpec& spec);

/// The calendar economic path for a cohort, from its own substream.
std::vector<int> sample_economic_path(const CohortSpec& spec, const StateSpaces& spaces);

/// Draws one case. R, the window, T, D come from `spec`; X is read from
/// `econ_path`; then S_u ~ pi_S^{X_u,R}, B_u ~ pi_B^{S_u} and for t > u
/// S_t ~ Q_S^{T_{t-1},X_t,R}(S_{t-1}, .), B_t ~ Q_B^{Y_{t-1},S_t}(B_{t-1}, .).
SampledCase sample_case(const ModelParams& params, const CohortSpec& spec,
                        const std::vector<int>& econ_path, std::size_t case_index, Rng& rng);

/// Case i is drawn from substream (spec.seed, i); ordering is by index.
SimulatedCohort sample_cohort(const ModelParams& params, const CohortSpec& spec);

}  // namespace debthmm
