#pragma once

// Exact per-case E-step.
//
// Position k = t - u indexes periods within a case. The forward recursion
// keeps the filtered scheme distribution pi'_k and the filtered pairwise
// joints F_k(p, q) = p(S_{k-1}=p, S_k=q | data up to k), normalizing every
// step; the log of each normalizer accumulates into the observed-data
// log-likelihood. Smoothing runs backwards from Gamma_last = F_last.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "debthmm/domain.hpp"
#include "debthmm/errors.hpp"
#include "debthmm/matrix.hpp"

namespace debthmm {

struct PosteriorSet {
  std::vector<Distribution> gamma;     // [k] = p(S_{u+k} | case), k = 0..n-1
  std::vector<Matrix> Gamma;           // [j] = p(S_{u+j}, S_{u+j+1} | case), j = 0..n-2
  std::vector<Distribution> filtered;  // [k] = p(S_{u+k} | data up to u+k)
  std::vector<Matrix> forwards;        // [j] = F at period u+j+1
  double log_likelihood = 0.0;
};

struct InitialFilter {
  Distribution filtered;
  double normalizer = 0.0;  // sum_s pi_B^s(B_u) pi_S^{X_u,R}(s)
};

struct ForwardStep {
  Matrix F;                 // sums to 1
  double normalizer = 0.0;  // c_t, the sum of the unnormalized entries
};

struct ForwardResult {
  std::vector<Distribution> filtered;
  std::vector<Matrix> forwards;
  double log_likelihood = 0.0;
};

/// Source of the unnormalized factors of one case's likelihood. The model
/// supplies them from a DebtCase and ModelParams (CaseFactors); tests can
/// substitute doubles.
template <typename F>
concept FactorSource = requires(const F& f, std::size_t k, std::span<double> out, Matrix& m) {
  { f.n_schemes() } -> std::convertible_to<std::size_t>;
  { f.length() } -> std::convertible_to<std::size_t>;
  { f.case_id() } -> std::convertible_to<std::string>;
  { f.start() } -> std::convertible_to<std::int64_t>;
  f.initial_weights(out);      // pi_B^s(B_u) * pi_S^{X_u,R}(s)
  f.transition_weights(k, m);  // (p,q) -> Q_B^{q,Y_{k-1}}(B_{k-1},B_k) * Q_S(p,q)
};

/// Likelihood factors of a DebtCase under ModelParams.
class CaseFactors {
public:
  CaseFactors(const DebtCase& c, const ModelParams& params) : case_(c), params_(params) {}

  std::size_t n_schemes() const { return params_.spaces.n_scheme; }
  std::size_t length() const { return case_.length(); }
  const std::string& case_id() const { return case_.case_id; }
  std::int64_t start() const { return case_.u; }

  void initial_weights(std::span<double> out) const;
  void transition_weights(std::size_t k, Matrix& out) const;

private:
  const DebtCase& case_;
  const ModelParams& params_;
};

namespace detail {

template <FactorSource Factors>
InitialFilter initial_filter(const Factors& f) {
  InitialFilter out;
  out.filtered.assign(f.n_schemes(), 0.0);
  f.initial_weights(out.filtered);
  for (double w : out.filtered) out.normalizer += w;
  if (!(out.normalizer > 0.0)) throw DegenerateLikelihoodError(f.case_id(), f.start());
  for (double& w : out.filtered) w /= out.normalizer;
  return out;
}

template <FactorSource Factors>
ForwardStep forward_step(const Distribution& prev, const Factors& f, std::size_t k) {
  const std::size_t n = f.n_schemes();
  ForwardStep out{Matrix(n, n), 0.0};
  f.transition_weights(k, out.F);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      out.F(p, q) *= prev[p];
      out.normalizer += out.F(p, q);
    }
  }
  if (!(out.normalizer > 0.0)) {
    throw DegenerateLikelihoodError(f.case_id(), f.start() + static_cast<std::int64_t>(k));
  }
  out.F /= out.normalizer;
  return out;
}

template <FactorSource Factors>
ForwardResult forward_pass(const Factors& f) {
  const std::size_t n = f.n_schemes();
  const std::size_t len = f.length();
  ForwardResult out;
  out.filtered.reserve(len);
  out.forwards.reserve(len > 0 ? len - 1 : 0);

  InitialFilter init = initial_filter(f);
  out.log_likelihood = std::log(init.normalizer);
  out.filtered.push_back(std::move(init.filtered));

  for (std::size_t k = 1; k < len; ++k) {
    ForwardStep step = forward_step(out.filtered.back(), f, k);
    out.log_likelihood += std::log(step.normalizer);
    Distribution next(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) next[q] += step.F(p, q);
    }
    out.filtered.push_back(std::move(next));
    out.forwards.push_back(std::move(step.F));
  }
  return out;
}

}  // namespace detail

/// Normalized pi'_u and its normalizer.
InitialFilter initial_filter(const DebtCase& c, const ModelParams& params);

/// One forward step into absolute period t (u < t <= l).
ForwardStep forward_step(const Distribution& prev_filtered, const DebtCase& c, std::int64_t t,
                         const ModelParams& params);

ForwardResult forward_pass(const DebtCase& c, const ModelParams& params);

/// Smoothed pairwise joints from the forward quantities. Empty for a
/// single-period case.
std::vector<Matrix> backward_pass(const std::vector<Distribution>& filtered,
                                  const std::vector<Matrix>& forwards);

/// Single-period marginals from the pairwise joints (or from the filter
/// when the case has one period).
std::vector<Distribution> responsibilities(const std::vector<Distribution>& filtered,
                                           const std::vector<Matrix>& Gamma);

/// forward_pass + backward_pass + responsibilities.
template <FactorSource Factors>
PosteriorSet posterior_from(const Factors& f) {
  ForwardResult fwd = detail::forward_pass(f);
  PosteriorSet out;
  out.Gamma = backward_pass(fwd.filtered, fwd.forwards);
  out.gamma = responsibilities(fwd.filtered, out.Gamma);
  out.filtered = std::move(fwd.filtered);
  out.forwards = std::move(fwd.forwards);
  out.log_likelihood = fwd.log_likelihood;
  return out;
}

PosteriorSet posterior(const DebtCase& c, const ModelParams& params);

/// Largest scheme-path count brute_force_posterior will enumerate.
inline constexpr std::size_t kBruteForcePathLimit = 1'000'000;

/// Reference posterior by enumerating every scheme path and multiplying the
/// model factors directly. Filtered and forward quantities come from
/// enumerating each prefix. Throws std::invalid_argument when
/// n_scheme^length exceeds kBruteForcePathLimit.
PosteriorSet brute_force_posterior(const DebtCase& c, const ModelParams& params);

}  // namespace debthmm
