#pragma once

// Shared fixtures for the unit tests. The "hand" fixture matches
// tests/oracles/hand_fixture.py, which produced the frozen reference values.

#include <cmath>
#include <string>
#include <vector>

#include "debthmm/domain.hpp"
#include "debthmm/learning.hpp"
#include "debthmm/random.hpp"

namespace debthmm::testing {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c) - b(r, c)));
  }
  return worst;
}

inline double max_abs_diff(const Distribution& a, const Distribution& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline Matrix matrix(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

/// n_behaviour 2, n_scheme 2, n_treatment 2, n_econ 1, n_result 1, alpha 0.5.
inline ModelParams hand_params() {
  ModelParams p;
  p.spaces = {2, 2, 2, 1, 1};
  p.alpha = 0.5;
  p.Q_S = {matrix({{0.9, 0.1}, {0.2, 0.8}}), matrix({{0.6, 0.4}, {0.3, 0.7}})};
  p.pi_S = {{0.7, 0.3}};
  // Q_B keys run y-major: (0,0), (0,1), (1,0), (1,1).
  p.Q_B = {matrix({{0.8, 0.2}, {0.3, 0.7}}), matrix({{0.4, 0.6}, {0.1, 0.9}}),
           matrix({{0.5, 0.5}, {0.6, 0.4}}), matrix({{0.2, 0.8}, {0.25, 0.75}})};
  p.pi_B = {{0.6, 0.4}, {0.3, 0.7}};
  return p;
}

inline DebtCase make_case(std::string id, std::int64_t u, std::vector<int> B, std::vector<int> T,
                          std::vector<double> D, int R = 0) {
  DebtCase c;
  c.case_id = std::move(id);
  c.u = u;
  c.l = u + static_cast<std::int64_t>(B.size()) - 1;
  c.X.assign(B.size(), 0);
  c.B = std::move(B);
  c.T = std::move(T);
  c.D = std::move(D);
  c.R = R;
  return c;
}

inline DebtCase case_a() { return make_case("A", 10, {0, 1, 1, 0}, {1, 0, 1, 0}, {0.7, 0.4, 0.5, 0.9}); }
inline DebtCase case_b() { return make_case("B", 3, {1, 0}, {0, 1}, {0.3, 0.8}); }
inline DebtCase case_c() { return make_case("C", 0, {0, 0, 1}, {0, 0, 0}, {0.45, 0.55, 0.6}); }

/// Random parameters with every entry bounded away from zero unless
/// `concentration` is small.
inline ModelParams random_model(const StateSpaces& spaces, Rng& rng, double concentration = 1.0) {
  const double alpha = 0.2 + rng.uniform();
  return random_params(spaces, alpha, concentration, rng);
}

inline DebtCase random_case(const StateSpaces& s, std::size_t length, Rng& rng,
                            std::string id = "r") {
  DebtCase c;
  c.case_id = std::move(id);
  c.u = static_cast<std::int64_t>(rng.uniform_int(100));
  c.l = c.u + static_cast<std::int64_t>(length) - 1;
  c.R = static_cast<int>(rng.uniform_int(s.n_result));
  for (std::size_t k = 0; k < length; ++k) {
    c.B.push_back(static_cast<int>(rng.uniform_int(s.n_behaviour)));
    c.T.push_back(static_cast<int>(rng.uniform_int(s.n_treatment)));
    c.X.push_back(static_cast<int>(rng.uniform_int(s.n_econ)));
    c.D.push_back(0.05 + 1.5 * rng.uniform());
  }
  return c;
}

inline StateSpaces random_spaces(Rng& rng, std::size_t max_scheme = 3) {
  StateSpaces s;
  s.n_behaviour = 1 + rng.uniform_int(3);
  s.n_scheme = 1 + rng.uniform_int(max_scheme);
  s.n_treatment = 1 + rng.uniform_int(3);
  s.n_econ = 1 + rng.uniform_int(3);
  s.n_result = 1 + rng.uniform_int(3);
  return s;
}

}  // namespace debthmm::testing
