#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "debthmm/domain.hpp"
#include "debthmm/inference.hpp"
#include "debthmm/matrix.hpp"
#include "debthmm/random.hpp"

namespace debthmm {

/// How scheme-transition counts are weighted in the M-step.
enum class QsMode {
  kPaper,  // product of single-period marginals, gamma_t(p) * gamma_{t+1}(q)
  kJoint,  // smoothed pairwise joint Gamma_{t+1}(p, q); exact EM
};

/// E-step count accumulators, laid out like the parameter banks they
/// estimate: numerators share the bank's key and shape, denominators drop
/// the last index.
struct SufficientStats {
  explicit SufficientStats(const StateSpaces& spaces);

  StateSpaces spaces;
  std::vector<Matrix> qb_num;        // [key(y,s)](b, c)
  std::vector<Distribution> qb_den;  // [key(y,s)][b]
  std::vector<Distribution> pib_num; // [s][b]
  Distribution pib_den;              // [s]
  std::vector<Matrix> qs_num;        // [key(T,X,R)](p, q)
  std::vector<Distribution> qs_den;  // [key(T,X,R)][p]
  std::vector<Distribution> pis_num; // [key(X,R)][s]
  Distribution pis_den;              // [key(X,R)]

  SufficientStats& operator+=(const SufficientStats& other);
  SufficientStats& operator*=(double k);
};

/// Adds only the behaviour-transition (Q_B) counts of one case, splitting
/// transitions by y = classify_debt_ratio(D_{t-1}, alpha).
void accumulate_behaviour(SufficientStats& stats, const DebtCase& c, const PosteriorSet& post,
                          double alpha);

/// Adds all of one case's contributions.
void accumulate(SufficientStats& stats, const DebtCase& c, const PosteriorSet& post, double alpha,
                QsMode mode);

/// Q_B bank from the counts; rows with zero denominator keep `prev`.
std::vector<Matrix> refit_behaviour(const SufficientStats& stats, const std::vector<Matrix>& prev);

/// Ratio updates for all four banks. Alpha is copied from `prev`.
ModelParams m_step(const SufficientStats& stats, const ModelParams& prev);

/// The alpha-selection objective: sum over cases, transitions and schemes of
/// gamma_t(s) * ln Q_B^{s, y(D_{t-1})}(B_{t-1}, B_t). A zero probability
/// carrying positive weight gives -infinity.
double alpha_objective(const Cohort& cohort, const std::vector<PosteriorSet>& posteriors,
                       double alpha, const std::vector<Matrix>& Q_B, const StateSpaces& spaces);

struct AlphaScanResult {
  double alpha = 0.0;
  std::size_t best_index = 0;
  std::vector<Matrix> Q_B;  // refit at the chosen alpha
  std::vector<double> grid;
  std::vector<double> l1;   // objective per grid point
};

/// Refits Q_B and evaluates the objective at every grid value, returning the
/// maximizer (ties go to the smallest alpha). `current` supplies carry-over
/// rows for Q_B.
AlphaScanResult alpha_scan(const Cohort& cohort, const std::vector<PosteriorSet>& posteriors,
                           const std::vector<double>& grid, const ModelParams& current,
                           unsigned n_threads = 1);

/// One candidate per distinct classification of the observed debt ratios
/// that the likelihood reads (D_u .. D_{l-1}): half the minimum, midpoints
/// of consecutive distinct values, and twice the maximum.
std::vector<double> build_auto_grid(const Cohort& cohort);

/// Expected complete-data log-likelihood under the given posteriors, with
/// 0 * ln 0 = 0. In paper mode the Q_S term is weighted like the paper-mode
/// estimator (gamma * gamma).
double expected_complete_log_likelihood(const Cohort& cohort,
                                        const std::vector<PosteriorSet>& posteriors,
                                        const ModelParams& params, QsMode mode);

/// Posteriors for every case, computed on up to n_threads threads. Results
/// do not depend on the thread count.
std::vector<PosteriorSet> e_step(const Cohort& cohort, const ModelParams& params,
                                 unsigned n_threads = 1);

struct FitConfig {
  std::size_t max_iterations = 200;
  double loglik_rel_tol = 1e-6;
  std::optional<std::vector<double>> alpha_grid;  // nullopt = auto
  QsMode qs_mode = QsMode::kPaper;
  std::uint64_t seed = 0;
  std::size_t n_restarts = 1;
  double dirichlet_concentration = 1.0;
  unsigned n_threads = 1;
};

/// Throws ValidationError on bad settings.
void validate_config(const FitConfig& config);

struct FitReport {
  ModelParams params;
  std::vector<double> loglik_trace;  // observed-data log-likelihood entering each iteration
  std::vector<double> alpha_trace;   // alpha chosen in each completed M-step
  std::vector<double> l1_trace;      // objective at that alpha
  double final_log_likelihood = 0.0; // of `params`
  bool converged = false;
  std::size_t iterations = 0;        // M-steps performed
  std::size_t restart_index = 0;
  std::vector<double> restart_log_likelihoods;  // -inf for failed restarts
  std::vector<std::string> restart_failures;    // one message per failed restart
};

/// Called after every M-step with the new parameters and the 1-based
/// iteration number.
using IterationObserver = std::function<void(const ModelParams&, std::size_t)>;

/// Random symmetric-Dirichlet rows for every bank.
ModelParams random_params(const StateSpaces& spaces, double alpha, double concentration,
                          Rng& rng);

/// EM from a given starting point. Each iteration runs the E-step, stops if
/// the relative log-likelihood change is below tolerance, and otherwise
/// selects alpha and Q_B by alpha_scan before updating pi_B, Q_S and pi_S.
FitReport fit_from(const Cohort& cohort, const ModelParams& initial, const FitConfig& config,
                   const IterationObserver& observer = {});

/// EM with n_restarts seeded random initializations; returns the restart
/// with the highest final log-likelihood. Throws NumericalError when every
/// restart fails.
FitReport fit(const Cohort& cohort, const StateSpaces& spaces, const FitConfig& config,
              const IterationObserver& observer = {});

}  // namespace debthmm
