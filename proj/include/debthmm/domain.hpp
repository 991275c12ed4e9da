#pragma once

// Data model for the debtor behaviour HMM.
//
// Observed per case, for periods t = u..l:
//   B_t  behavioural state          (categorical)
//   T_t  strongest treatment        (categorical)
//   X_t  economic state             (categorical, shared calendar covariate)
//   D_t  debt ratio                 (positive real)
// plus a case-level prior-result category R. The latent scheme S_t selects
// which behaviour-transition matrix generates B_t. Y_t = [D_t > alpha].

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "debthmm/matrix.hpp"

namespace debthmm {

struct StateSpaces {
  std::size_t n_behaviour = 1;
  std::size_t n_scheme = 1;
  std::size_t n_treatment = 1;
  std::size_t n_econ = 1;
  std::size_t n_result = 1;

  friend bool operator==(const StateSpaces&, const StateSpaces&) = default;
};

/// Throws ValidationError if any count is zero.
void validate_spaces(const StateSpaces& spaces);

struct DebtCase {
  std::string case_id;
  std::int64_t u = 0;  // first period
  std::int64_t l = 0;  // last period, inclusive
  std::vector<int> B;
  std::vector<int> T;
  std::vector<int> X;
  std::vector<double> D;
  int R = 0;

  /// Number of observed periods, l - u + 1.
  std::size_t length() const noexcept { return static_cast<std::size_t>(l - u + 1); }

  friend bool operator==(const DebtCase&, const DebtCase&) = default;
};

using Cohort = std::vector<DebtCase>;

/// Y = 0 iff d <= alpha. Throws std::domain_error on non-finite or
/// non-positive arguments.
int classify_debt_ratio(double d, double alpha);

/// Returns every invariant violation of `c` (empty when the case is valid).
std::vector<std::string> validate_case(const DebtCase& c, const StateSpaces& spaces);

/// Validates every case, throwing a ValidationError that aggregates all
/// problems (each prefixed with the case id).
void validate_cohort(const Cohort& cohort, const StateSpaces& spaces);

// ---------------------------------------------------------------------------
// Covariate keys. Each parameter bank is a flat vector indexed by a
// row-major key over its covariate tuple, slowest component first.

struct CovariateKey {
  std::size_t value = 0;
  friend bool operator==(CovariateKey, CovariateKey) = default;
};

/// Selects a scheme-transition matrix: (T_{t-1}, X_t, R).
struct SchemeTransitionCovariates {
  int treatment = 0;
  int econ = 0;
  int result = 0;
  friend bool operator==(const SchemeTransitionCovariates&,
                         const SchemeTransitionCovariates&) = default;
};

/// Selects a scheme-initial distribution: (X_u, R).
struct SchemeInitialCovariates {
  int econ = 0;
  int result = 0;
  friend bool operator==(const SchemeInitialCovariates&,
                         const SchemeInitialCovariates&) = default;
};

/// Selects a behaviour-transition matrix: (Y_{t-1}, S_t).
struct BehaviourCovariates {
  int y = 0;
  int scheme = 0;
  friend bool operator==(const BehaviourCovariates&, const BehaviourCovariates&) = default;
};

CovariateKey key_index(const SchemeTransitionCovariates& k, const StateSpaces& spaces);
CovariateKey key_index(const SchemeInitialCovariates& k, const StateSpaces& spaces);
CovariateKey key_index(const BehaviourCovariates& k, const StateSpaces& spaces);

SchemeTransitionCovariates scheme_transition_covariates(CovariateKey key,
                                                        const StateSpaces& spaces);
SchemeInitialCovariates scheme_initial_covariates(CovariateKey key, const StateSpaces& spaces);
BehaviourCovariates behaviour_covariates(CovariateKey key, const StateSpaces& spaces);

std::size_t scheme_transition_bank_size(const StateSpaces& spaces);
std::size_t scheme_initial_bank_size(const StateSpaces& spaces);
std::size_t behaviour_transition_bank_size(const StateSpaces& spaces);

// ---------------------------------------------------------------------------

struct ModelParams {
  StateSpaces spaces;
  double alpha = 1.0;
  std::vector<Matrix> Q_S;         // by (T, X, R), n_scheme x n_scheme
  std::vector<Distribution> pi_S;  // by (X, R), length n_scheme
  std::vector<Matrix> Q_B;         // by (Y, S), n_behaviour x n_behaviour
  std::vector<Distribution> pi_B;  // by S, length n_behaviour

  const Matrix& scheme_transition(int treatment, int econ, int result) const {
    return Q_S[key_index(SchemeTransitionCovariates{treatment, econ, result}, spaces).value];
  }
  const Distribution& scheme_initial(int econ, int result) const {
    return pi_S[key_index(SchemeInitialCovariates{econ, result}, spaces).value];
  }
  const Matrix& behaviour_transition(int y, int scheme) const {
    return Q_B[key_index(BehaviourCovariates{y, scheme}, spaces).value];
  }
  const Distribution& behaviour_initial(int scheme) const {
    return pi_B[static_cast<std::size_t>(scheme)];
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Tolerance on row sums of every stochastic vector in ModelParams.
inline constexpr double kStochasticTolerance = 1e-12;

/// Uniform rows everywhere; useful as a neutral starting point.
ModelParams uniform_params(const StateSpaces& spaces, double alpha);

/// Checks bank cardinalities, dimensions, entry range and row sums.
/// Returns all violations found.
std::vector<std::string> check_params(const ModelParams& params);

/// Throws ValidationError if check_params reports anything.
void validate_params(const ModelParams& params);

}  // namespace debthmm
