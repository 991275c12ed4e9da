#include "debthmm/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "debthmm/errors.hpp"
#include "parallel.hpp"

namespace debthmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t idx(int v) { return static_cast<std::size_t>(v); }

/// w * ln(p) with 0 * ln(anything) = 0.
double weighted_log(double w, double p) {
  if (w == 0.0) return 0.0;
  if (p == 0.0) return kNegInf;
  return w * std::log(p);
}

void add_into(std::vector<Matrix>& dst, const std::vector<Matrix>& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) {
    for (std::size_t r = 0; r < dst[k].rows(); ++r) {
      for (std::size_t c = 0; c < dst[k].cols(); ++c) dst[k](r, c) += src[k](r, c);
    }
  }
}

void add_into(std::vector<Distribution>& dst, const std::vector<Distribution>& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) {
    for (std::size_t j = 0; j < dst[k].size(); ++j) dst[k][j] += src[k][j];
  }
}

void add_into(Distribution& dst, const Distribution& src) {
  for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
}

/// Row r of the ratio num/den, or prev's row when the denominator is zero.
void ratio_row(std::span<const double> num, double den, std::span<const double> prev,
               std::span<double> out) {
  if (den > 0.0) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = num[j] / den;
  } else {
    std::copy(prev.begin(), prev.end(), out.begin());
  }
}

std::vector<Matrix> ratio_bank(const std::vector<Matrix>& num, const std::vector<Distribution>& den,
                               const std::vector<Matrix>& prev) {
  std::vector<Matrix> out = prev;
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t r = 0; r < out[k].rows(); ++r) {
      ratio_row(num[k].row(r), den[k][r], prev[k].row(r), out[k].row(r));
    }
  }
  return out;
}

std::vector<Distribution> ratio_bank(const std::vector<Distribution>& num, const Distribution& den,
                                     const std::vector<Distribution>& prev) {
  std::vector<Distribution> out = prev;
  for (std::size_t k = 0; k < out.size(); ++k) ratio_row(num[k], den[k], prev[k], out[k]);
  return out;
}

double relative_change(double current, double previous) {
  const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
  return std::abs(current - previous) / scale;
}

}  // namespace

SufficientStats::SufficientStats(const StateSpaces& s)
    : spaces(s),
      qb_num(behaviour_transition_bank_size(s), Matrix(s.n_behaviour, s.n_behaviour)),
      qb_den(behaviour_transition_bank_size(s), Distribution(s.n_behaviour, 0.0)),
      pib_num(s.n_scheme, Distribution(s.n_behaviour, 0.0)),
      pib_den(s.n_scheme, 0.0),
      qs_num(scheme_transition_bank_size(s), Matrix(s.n_scheme, s.n_scheme)),
      qs_den(scheme_transition_bank_size(s), Distribution(s.n_scheme, 0.0)),
      pis_num(scheme_initial_bank_size(s), Distribution(s.n_scheme, 0.0)),
      pis_den(scheme_initial_bank_size(s), 0.0) {}

SufficientStats& SufficientStats::operator+=(const SufficientStats& o) {
  if (!(spaces == o.spaces)) throw std::invalid_argument("SufficientStats: mismatched spaces");
  add_into(qb_num, o.qb_num);
  add_into(qb_den, o.qb_den);
  add_into(pib_num, o.pib_num);
  add_into(pib_den, o.pib_den);
  add_into(qs_num, o.qs_num);
  add_into(qs_den, o.qs_den);
  add_into(pis_num, o.pis_num);
  add_into(pis_den, o.pis_den);
  return *this;
}

SufficientStats& SufficientStats::operator*=(double k) {
  for (auto& m : qb_num) m *= k;
  for (auto& m : qs_num) m *= k;
  for (auto* bank : {&qb_den, &pib_num, &qs_den, &pis_num}) {
    for (auto& d : *bank) {
      for (double& v : d) v *= k;
    }
  }
  for (double& v : pib_den) v *= k;
  for (double& v : pis_den) v *= k;
  return *this;
}

void accumulate_behaviour(SufficientStats& stats, const DebtCase& c, const PosteriorSet& post,
                          double alpha) {
  const StateSpaces& s = stats.spaces;
  for (std::size_t k = 1; k < c.length(); ++k) {
    const int y = classify_debt_ratio(c.D[k - 1], alpha);
    const std::size_t b = idx(c.B[k - 1]);
    const std::size_t b_next = idx(c.B[k]);
    for (std::size_t sch = 0; sch < s.n_scheme; ++sch) {
      const double w = post.gamma[k][sch];
      const std::size_t key = key_index(BehaviourCovariates{y, static_cast<int>(sch)}, s).value;
      stats.qb_num[key](b, b_next) += w;
      stats.qb_den[key][b] += w;
    }
  }
}

void accumulate(SufficientStats& stats, const DebtCase& c, const PosteriorSet& post, double alpha,
                QsMode mode) {
  const StateSpaces& s = stats.spaces;
  const std::size_t n = s.n_scheme;
  accumulate_behaviour(stats, c, post, alpha);

  const Distribution& first = post.gamma[0];
  for (std::size_t sch = 0; sch < n; ++sch) {
    stats.pib_num[sch][idx(c.B[0])] += first[sch];
    stats.pib_den[sch] += first[sch];
  }

  const std::size_t init_key = key_index(SchemeInitialCovariates{c.X[0], c.R}, s).value;
  for (std::size_t sch = 0; sch < n; ++sch) stats.pis_num[init_key][sch] += first[sch];
  stats.pis_den[init_key] += 1.0;

  // Transition k -> k+1 is governed by Q_S^{T_k, X_{k+1}, R}, matching the
  // likelihood.
  for (std::size_t k = 0; k + 1 < c.length(); ++k) {
    const std::size_t key =
        key_index(SchemeTransitionCovariates{c.T[k], c.X[k + 1], c.R}, s).value;
    const Distribution& g = post.gamma[k];
    const Distribution& g_next = post.gamma[k + 1];
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        stats.qs_num[key](p, q) += mode == QsMode::kJoint ? post.Gamma[k](p, q) : g[p] * g_next[q];
      }
      stats.qs_den[key][p] += g[p];
    }
  }
}

std::vector<Matrix> refit_behaviour(const SufficientStats& stats, const std::vector<Matrix>& prev) {
  return ratio_bank(stats.qb_num, stats.qb_den, prev);
}

ModelParams m_step(const SufficientStats& stats, const ModelParams& prev) {
  if (!(stats.spaces == prev.spaces)) throw std::invalid_argument("m_step: mismatched spaces");
  ModelParams next;
  next.spaces = prev.spaces;
  next.alpha = prev.alpha;
  next.Q_B = refit_behaviour(stats, prev.Q_B);
  next.pi_B = ratio_bank(stats.pib_num, stats.pib_den, prev.pi_B);
  next.Q_S = ratio_bank(stats.qs_num, stats.qs_den, prev.Q_S);
  next.pi_S = ratio_bank(stats.pis_num, stats.pis_den, prev.pi_S);
  return next;
}

double alpha_objective(const Cohort& cohort, const std::vector<PosteriorSet>& posteriors,
                       double alpha, const std::vector<Matrix>& Q_B, const StateSpaces& spaces) {
  double total = 0.0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const DebtCase& c = cohort[i];
    const PosteriorSet& post = posteriors[i];
    for (std::size_t k = 1; k < c.length(); ++k) {
      const int y = classify_debt_ratio(c.D[k - 1], alpha);
      for (std::size_t sch = 0; sch < spaces.n_scheme; ++sch) {
        const Matrix& q = Q_B[key_index(BehaviourCovariates{y, static_cast<int>(sch)}, spaces).value];
        total += weighted_log(post.gamma[k][sch], q(idx(c.B[k - 1]), idx(c.B[k])));
      }
    }
  }
  return total;
}

AlphaScanResult alpha_scan(const Cohort& cohort, const std::vector<PosteriorSet>& posteriors,
                           const std::vector<double>& grid, const ModelParams& current,
                           unsigned n_threads) {
  if (grid.empty()) throw std::invalid_argument("alpha_scan: empty alpha grid");
  if (posteriors.size() != cohort.size()) {
    throw std::invalid_argument("alpha_scan: one posterior per case required");
  }
  const StateSpaces& s = current.spaces;
  const std::size_t n_sch = s.n_scheme;
  for (double a : grid) classify_debt_ratio(1.0, a);  // rejects invalid alpha

  // Every behaviour transition once, ordered by the ratio that sets its y.
  struct Transition {
    double d;
    std::size_t b, c;
    const Distribution* weights;
  };
  std::vector<Transition> trans;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const DebtCase& c = cohort[i];
    for (std::size_t k = 1; k < c.length(); ++k) {
      classify_debt_ratio(c.D[k - 1], grid.front());  // rejects invalid ratios
      trans.push_back({c.D[k - 1], idx(c.B[k - 1]), idx(c.B[k]), &posteriors[i].gamma[k]});
    }
  }
  std::stable_sort(trans.begin(), trans.end(),
                   [](const Transition& a, const Transition& b) { return a.d < b.d; });

  std::vector<std::size_t> order(grid.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });

  // Per grid value, counts for y = 0 (prefix, d <= alpha) and y = 1
  // (suffix). Built by addition only, so alphas that classify every ratio
  // the same way get bit-identical counts.
  auto add = [&](std::vector<Matrix>& counts, const Transition& t) {
    for (std::size_t sch = 0; sch < n_sch; ++sch) counts[sch](t.b, t.c) += (*t.weights)[sch];
  };
  const std::vector<Matrix> zero(n_sch, Matrix(s.n_behaviour, s.n_behaviour));
  std::vector<std::vector<Matrix>> low(grid.size()), high(grid.size());
  {
    std::vector<Matrix> acc = zero;
    std::size_t next = 0;
    for (std::size_t g : order) {
      while (next < trans.size() && trans[next].d <= grid[g]) add(acc, trans[next++]);
      low[g] = acc;
    }
  }
  {
    std::vector<Matrix> acc = zero;
    std::size_t next = trans.size();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t g = *it;
      while (next > 0 && trans[next - 1].d > grid[g]) add(acc, trans[--next]);
      high[g] = acc;
    }
  }

  // With Q_B refit from the counts, the objective is sum N(b,c) ln Q(b,c).
  std::vector<std::vector<Matrix>> banks(grid.size());
  std::vector<double> l1(grid.size());
  detail::parallel_for(grid.size(), n_threads, [&](std::size_t g) {
    SufficientStats stats(s);
    for (int y = 0; y < 2; ++y) {
      const std::vector<Matrix>& counts = y == 0 ? low[g] : high[g];
      for (std::size_t sch = 0; sch < n_sch; ++sch) {
        const std::size_t key = key_index(BehaviourCovariates{y, static_cast<int>(sch)}, s).value;
        stats.qb_num[key] = counts[sch];
        for (std::size_t b = 0; b < s.n_behaviour; ++b) {
          for (double v : counts[sch].row(b)) stats.qb_den[key][b] += v;
        }
      }
    }
    banks[g] = refit_behaviour(stats, current.Q_B);
    double total = 0.0;
    for (std::size_t key = 0; key < banks[g].size(); ++key) {
      for (std::size_t b = 0; b < s.n_behaviour; ++b) {
        for (std::size_t c = 0; c < s.n_behaviour; ++c) {
          total += weighted_log(stats.qb_num[key](b, c), banks[g][key](b, c));
        }
      }
    }
    l1[g] = total;
  });

  // Strict improvement in increasing alpha keeps the smallest maximizer on
  // ties.
  std::size_t best = order.front();
  for (std::size_t g : order) {
    if (l1[g] > l1[best]) best = g;
  }

  AlphaScanResult out;
  out.alpha = grid[best];
  out.best_index = best;
  out.Q_B = std::move(banks[best]);
  out.grid = grid;
  out.l1 = std::move(l1);
  return out;
}

std::vector<double> build_auto_grid(const Cohort& cohort) {
  std::vector<double> values;
  for (const DebtCase& c : cohort) {
    for (std::size_t k = 0; k + 1 < c.length(); ++k) values.push_back(c.D[k]);
  }
  if (values.empty()) {
    throw ValidationError("cannot build an alpha grid: cohort has no transition periods");
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> grid;
  grid.reserve(values.size() + 1);
  grid.push_back(values.front() / 2.0);
  for (std::size_t j = 0; j + 1 < values.size(); ++j) {
    const double lo = values[j];
    const double hi = values[j + 1];
    double mid = lo + (hi - lo) / 2.0;
    // Adjacent doubles can round the midpoint up to hi; lo classifies the
    // same way as any point of [lo, hi).
    if (mid >= hi) mid = lo;
    grid.push_back(mid);
  }
  grid.push_back(values.back() * 2.0);
  return grid;
}

double expected_complete_log_likelihood(const Cohort& cohort,
                                        const std::vector<PosteriorSet>& posteriors,
                                        const ModelParams& params, QsMode mode) {
  const StateSpaces& s = params.spaces;
  const std::size_t n = s.n_scheme;
  double total = 0.0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const DebtCase& c = cohort[i];
    const PosteriorSet& post = posteriors[i];
    const Distribution& pi_s = params.scheme_initial(c.X[0], c.R);
    for (std::size_t sch = 0; sch < n; ++sch) {
      const double w = post.gamma[0][sch];
      total += weighted_log(w, params.behaviour_initial(static_cast<int>(sch))[idx(c.B[0])]);
      total += weighted_log(w, pi_s[sch]);
    }
    for (std::size_t k = 1; k < c.length(); ++k) {
      const int y = classify_debt_ratio(c.D[k - 1], params.alpha);
      const std::size_t b = idx(c.B[k - 1]);
      const std::size_t b_next = idx(c.B[k]);
      for (std::size_t q = 0; q < n; ++q) {
        total += weighted_log(post.gamma[k][q],
                              params.behaviour_transition(y, static_cast<int>(q))(b, b_next));
      }
      const Matrix& q_s = params.scheme_transition(c.T[k - 1], c.X[k], c.R);
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
          const double w = mode == QsMode::kJoint ? post.Gamma[k - 1](p, q)
                                                  : post.gamma[k - 1][p] * post.gamma[k][q];
          total += weighted_log(w, q_s(p, q));
        }
      }
    }
  }
  return total;
}

std::vector<PosteriorSet> e_step(const Cohort& cohort, const ModelParams& params,
                                 unsigned n_threads) {
  std::vector<PosteriorSet> out(cohort.size());
  detail::parallel_for(cohort.size(), n_threads,
                       [&](std::size_t i) { out[i] = posterior(cohort[i], params); });
  return out;
}

void validate_config(const FitConfig& config) {
  std::vector<std::string> problems;
  if (config.max_iterations == 0) problems.emplace_back("max_iterations must be positive");
  if (!(config.loglik_rel_tol > 0.0)) problems.emplace_back("loglik_rel_tol must be positive");
  if (config.n_restarts == 0) problems.emplace_back("n_restarts must be positive");
  if (!(config.dirichlet_concentration > 0.0) || !std::isfinite(config.dirichlet_concentration)) {
    problems.emplace_back("dirichlet_concentration must be positive");
  }
  if (config.alpha_grid) {
    const auto& grid = *config.alpha_grid;
    if (grid.empty()) problems.emplace_back("alpha grid is empty");
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (!(grid[j] > 0.0) || !std::isfinite(grid[j])) {
        problems.emplace_back("alpha grid values must be positive and finite");
        break;
      }
      if (j > 0 && !(grid[j] > grid[j - 1])) {
        problems.emplace_back("alpha grid must be strictly increasing");
        break;
      }
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

ModelParams random_params(const StateSpaces& s, double alpha, double concentration, Rng& rng) {
  ModelParams p = uniform_params(s, alpha);
  auto fill_row = [&](std::span<double> row) {
    const auto draw = rng.dirichlet(row.size(), concentration);
    std::copy(draw.begin(), draw.end(), row.begin());
  };
  for (Matrix& m : p.Q_S) {
    for (std::size_t r = 0; r < m.rows(); ++r) fill_row(m.row(r));
  }
  for (Distribution& d : p.pi_S) fill_row(d);
  for (Matrix& m : p.Q_B) {
    for (std::size_t r = 0; r < m.rows(); ++r) fill_row(m.row(r));
  }
  for (Distribution& d : p.pi_B) fill_row(d);
  return p;
}

namespace {

double total_log_likelihood(const std::vector<PosteriorSet>& posts) {
  double total = 0.0;
  for (const PosteriorSet& p : posts) total += p.log_likelihood;
  return total;
}

}  // namespace

FitReport fit_from(const Cohort& cohort, const ModelParams& initial, const FitConfig& config,
                   const IterationObserver& observer) {
  validate_config(config);
  validate_params(initial);
  const std::vector<double> grid =
      config.alpha_grid ? *config.alpha_grid : build_auto_grid(cohort);

  FitReport report;
  report.params = initial;
  double previous = 0.0;
  bool have_final = false;

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    std::vector<PosteriorSet> posts = e_step(cohort, report.params, config.n_threads);
    const double ll = total_log_likelihood(posts);
    report.loglik_trace.push_back(ll);
    if (iter > 1 && relative_change(ll, previous) < config.loglik_rel_tol) {
      report.converged = true;
      report.final_log_likelihood = ll;
      have_final = true;
      break;
    }
    previous = ll;

    AlphaScanResult scan = alpha_scan(cohort, posts, grid, report.params, config.n_threads);
    SufficientStats stats(report.params.spaces);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      accumulate(stats, cohort[i], posts[i], scan.alpha, config.qs_mode);
    }
    ModelParams next = m_step(stats, report.params);
    next.alpha = scan.alpha;
    next.Q_B = std::move(scan.Q_B);
    report.params = std::move(next);
    report.iterations = iter;
    report.alpha_trace.push_back(scan.alpha);
    report.l1_trace.push_back(scan.l1[scan.best_index]);
    if (observer) observer(report.params, iter);
  }

  if (!have_final) {
    report.final_log_likelihood =
        total_log_likelihood(e_step(cohort, report.params, config.n_threads));
  }
  return report;
}

FitReport fit(const Cohort& cohort, const StateSpaces& spaces, const FitConfig& config,
              const IterationObserver& observer) {
  validate_config(config);
  validate_spaces(spaces);
  validate_cohort(cohort, spaces);
  const std::vector<double> grid =
      config.alpha_grid ? *config.alpha_grid : build_auto_grid(cohort);
  FitConfig run_config = config;
  run_config.alpha_grid = grid;
  const double initial_alpha = grid[(grid.size() - 1) / 2];

  std::optional<FitReport> best;
  std::vector<double> finals;
  std::vector<std::string> failures;
  for (std::size_t r = 0; r < config.n_restarts; ++r) {
    Rng rng(config.seed, Rng::Domain::kRestart, r);
    const ModelParams start =
        random_params(spaces, initial_alpha, config.dirichlet_concentration, rng);
    try {
      FitReport rep = fit_from(cohort, start, run_config, observer);
      rep.restart_index = r;
      finals.push_back(rep.final_log_likelihood);
      if (!best || rep.final_log_likelihood > best->final_log_likelihood) best = std::move(rep);
    } catch (const DegenerateLikelihoodError& e) {
      finals.push_back(kNegInf);
      std::ostringstream os;
      os << "restart " << r << ": " << e.what();
      failures.push_back(os.str());
    }
  }
  if (!best) {
    std::string msg = "every restart failed";
    for (const auto& f : failures) msg += "; " + f;
    throw NumericalError(msg);
  }
  best->restart_log_likelihoods = std::move(finals);
  best->restart_failures = std::move(failures);
  return *best;
}

}  // namespace debthmm
