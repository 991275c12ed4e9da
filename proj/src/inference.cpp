#include "debthmm/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace debthmm {

void CaseFactors::initial_weights(std::span<double> out) const {
  const Distribution& pi_s = params_.scheme_initial(case_.X[0], case_.R);
  const auto b0 = static_cast<std::size_t>(case_.B[0]);
  for (std::size_t s = 0; s < out.size(); ++s) {
    out[s] = params_.behaviour_initial(static_cast<int>(s))[b0] * pi_s[s];
  }
}

void CaseFactors::transition_weights(std::size_t k, Matrix& out) const {
  const int y = classify_debt_ratio(case_.D[k - 1], params_.alpha);
  const Matrix& q_s = params_.scheme_transition(case_.T[k - 1], case_.X[k], case_.R);
  const auto b_prev = static_cast<std::size_t>(case_.B[k - 1]);
  const auto b_next = static_cast<std::size_t>(case_.B[k]);
  const std::size_t n = n_schemes();
  for (std::size_t q = 0; q < n; ++q) {
    const double emission = params_.behaviour_transition(y, static_cast<int>(q))(b_prev, b_next);
    for (std::size_t p = 0; p < n; ++p) out(p, q) = emission * q_s(p, q);
  }
}

InitialFilter initial_filter(const DebtCase& c, const ModelParams& params) {
  return detail::initial_filter(CaseFactors(c, params));
}

ForwardStep forward_step(const Distribution& prev_filtered, const DebtCase& c, std::int64_t t,
                         const ModelParams& params) {
  if (t <= c.u || t > c.l) {
    throw std::out_of_range("forward_step: period outside (u, l]");
  }
  return detail::forward_step(prev_filtered, CaseFactors(c, params),
                              static_cast<std::size_t>(t - c.u));
}

ForwardResult forward_pass(const DebtCase& c, const ModelParams& params) {
  return detail::forward_pass(CaseFactors(c, params));
}

std::vector<Matrix> backward_pass(const std::vector<Distribution>& filtered,
                                  const std::vector<Matrix>& forwards) {
  if (forwards.size() + 1 != filtered.size()) {
    throw std::invalid_argument("backward_pass: need one forward matrix per transition");
  }
  std::vector<Matrix> Gamma(forwards.size());
  if (forwards.empty()) return Gamma;

  const std::size_t n = filtered.front().size();
  Gamma.back() = forwards.back();
  Distribution smoothed(n);
  // Gamma[j] covers (S_{u+j}, S_{u+j+1}); its column marginal is the filter
  // at position j+1, which gets rescaled to the smoothed marginal.
  for (std::size_t j = forwards.size() - 1; j-- > 0;) {
    const Matrix& next = Gamma[j + 1];
    for (std::size_t q = 0; q < n; ++q) {
      double total = 0.0;
      for (std::size_t r = 0; r < n; ++r) total += next(q, r);
      smoothed[q] = total;
    }
    const Distribution& filt = filtered[j + 1];
    Matrix g(n, n);
    for (std::size_t q = 0; q < n; ++q) {
      // A zero filtered mass forces a zero F column; define 0/0 as 0.
      if (filt[q] == 0.0) continue;
      const double ratio = smoothed[q] / filt[q];
      for (std::size_t p = 0; p < n; ++p) g(p, q) = forwards[j](p, q) * ratio;
    }
    Gamma[j] = std::move(g);
  }
  return Gamma;
}

std::vector<Distribution> responsibilities(const std::vector<Distribution>& filtered,
                                           const std::vector<Matrix>& Gamma) {
  if (Gamma.empty()) return {filtered.front()};
  const std::size_t n = Gamma.front().rows();
  std::vector<Distribution> gamma(Gamma.size() + 1, Distribution(n, 0.0));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) gamma[0][p] += Gamma[0](p, q);
  }
  for (std::size_t j = 0; j < Gamma.size(); ++j) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) gamma[j + 1][q] += Gamma[j](p, q);
    }
  }
  return gamma;
}

PosteriorSet posterior(const DebtCase& c, const ModelParams& params) {
  return posterior_from(CaseFactors(c, params));
}

namespace {

/// Product of every likelihood factor along one scheme path over positions
/// 0..path.size()-1, read straight off the parameter banks.
double path_weight(const DebtCase& c, const ModelParams& params, const std::vector<std::size_t>& path) {
  const auto b = [&](std::size_t k) { return static_cast<std::size_t>(c.B[k]); };
  double w = params.scheme_initial(c.X[0], c.R)[path[0]] *
             params.behaviour_initial(static_cast<int>(path[0]))[b(0)];
  for (std::size_t k = 1; k < path.size(); ++k) {
    const int y = classify_debt_ratio(c.D[k - 1], params.alpha);
    w *= params.scheme_transition(c.T[k - 1], c.X[k], c.R)(path[k - 1], path[k]);
    w *= params.behaviour_transition(y, static_cast<int>(path[k]))(b(k - 1), b(k));
  }
  return w;
}

/// Calls visit(path) for every scheme path of the given length.
template <typename Visit>
void for_each_path(std::size_t n_scheme, std::size_t length, Visit&& visit) {
  std::vector<std::size_t> path(length, 0);
  for (;;) {
    visit(path);
    std::size_t pos = length;
    while (pos > 0) {
      --pos;
      if (++path[pos] < n_scheme) break;
      path[pos] = 0;
      if (pos == 0) return;
    }
    if (length == 0) return;
  }
}

}  // namespace

PosteriorSet brute_force_posterior(const DebtCase& c, const ModelParams& params) {
  const std::size_t n = params.spaces.n_scheme;
  const std::size_t len = c.length();
  double paths = 1.0;
  for (std::size_t k = 0; k < len; ++k) paths *= static_cast<double>(n);
  if (paths > static_cast<double>(kBruteForcePathLimit)) {
    throw std::invalid_argument("brute_force_posterior: instance too large to enumerate");
  }

  PosteriorSet out;
  out.gamma.assign(len, Distribution(n, 0.0));
  out.Gamma.assign(len - 1, Matrix(n, n));
  out.filtered.assign(len, Distribution(n, 0.0));
  out.forwards.assign(len - 1, Matrix(n, n));

  // Full-length paths: smoothed quantities and the likelihood.
  double total = 0.0;
  for_each_path(n, len, [&](const std::vector<std::size_t>& path) {
    const double w = path_weight(c, params, path);
    total += w;
    for (std::size_t k = 0; k < len; ++k) out.gamma[k][path[k]] += w;
    for (std::size_t k = 1; k < len; ++k) out.Gamma[k - 1](path[k - 1], path[k]) += w;
  });
  if (!(total > 0.0)) throw DegenerateLikelihoodError(c.case_id, c.u);
  for (auto& g : out.gamma) {
    for (double& v : g) v /= total;
  }
  for (auto& g : out.Gamma) g /= total;
  out.log_likelihood = std::log(total);

  // Each prefix separately: filtered quantities condition only on data so far.
  for (std::size_t m = 1; m <= len; ++m) {
    double prefix_total = 0.0;
    Distribution last(n, 0.0);
    Matrix last_pair(n, n);
    for_each_path(n, m, [&](const std::vector<std::size_t>& path) {
      const double w = path_weight(c, params, path);
      prefix_total += w;
      last[path[m - 1]] += w;
      if (m > 1) last_pair(path[m - 2], path[m - 1]) += w;
    });
    for (double& v : last) v /= prefix_total;
    out.filtered[m - 1] = std::move(last);
    if (m > 1) {
      last_pair /= prefix_total;
      out.forwards[m - 2] = std::move(last_pair);
    }
  }
  return out;
}

}  // namespace debthmm
