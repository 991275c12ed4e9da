#include "debthmm/domain.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "debthmm/errors.hpp"

namespace debthmm {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (i) out += "; ";
    out += problems[i];
  }
  return out;
}

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

void check_component(int value, std::size_t count, const char* name) {
  if (value < 0 || static_cast<std::size_t>(value) >= count) {
    throw std::out_of_range(concat(name, "=", value, " outside [0, ", count, ")"));
  }
}

void check_key(CovariateKey key, std::size_t size, const char* bank) {
  if (key.value >= size) {
    throw std::out_of_range(concat(bank, " key ", key.value, " outside [0, ", size, ")"));
  }
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

DegenerateLikelihoodError::DegenerateLikelihoodError(std::string case_id, std::int64_t period)
    : NumericalError(concat("degenerate likelihood in case '", case_id, "' at t=", period)),
      case_id_(std::move(case_id)),
      period_(period) {}

void validate_spaces(const StateSpaces& s) {
  std::vector<std::string> problems;
  if (s.n_behaviour == 0) problems.emplace_back("n_behaviour must be >= 1");
  if (s.n_scheme == 0) problems.emplace_back("n_scheme must be >= 1");
  if (s.n_treatment == 0) problems.emplace_back("n_treatment must be >= 1");
  if (s.n_econ == 0) problems.emplace_back("n_econ must be >= 1");
  if (s.n_result == 0) problems.emplace_back("n_result must be >= 1");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

int classify_debt_ratio(double d, double alpha) {
  if (!std::isfinite(d) || d <= 0.0) {
    throw std::domain_error(concat("debt ratio must be positive and finite, got ", d));
  }
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw std::domain_error(concat("alpha must be positive and finite, got ", alpha));
  }
  return d <= alpha ? 0 : 1;
}

std::vector<std::string> validate_case(const DebtCase& c, const StateSpaces& spaces) {
  std::vector<std::string> problems;
  if (c.l < c.u) {
    problems.push_back(concat("end period l=", c.l, " precedes start period u=", c.u));
  }
  const std::size_t expected = c.l >= c.u ? c.length() : 0;

  auto check_length = [&](std::size_t n, const char* name) {
    if (n != expected) {
      problems.push_back(concat("length mismatch: ", name, " has ", n, " entries, window [u, l] has ",
                                expected));
    }
  };
  check_length(c.B.size(), "B");
  check_length(c.T.size(), "T");
  check_length(c.X.size(), "X");
  check_length(c.D.size(), "D");

  auto check_codes = [&](const std::vector<int>& seq, std::size_t count, const char* name) {
    for (std::size_t k = 0; k < seq.size(); ++k) {
      if (seq[k] < 0 || static_cast<std::size_t>(seq[k]) >= count) {
        problems.push_back(concat("out-of-range category: ", name, "[t=", c.u + static_cast<std::int64_t>(k),
                                  "]=", seq[k], " (count ", count, ")"));
      }
    }
  };
  check_codes(c.B, spaces.n_behaviour, "B");
  check_codes(c.T, spaces.n_treatment, "T");
  check_codes(c.X, spaces.n_econ, "X");
  if (c.R < 0 || static_cast<std::size_t>(c.R) >= spaces.n_result) {
    problems.push_back(concat("out-of-range category: R=", c.R, " (count ", spaces.n_result, ")"));
  }

  for (std::size_t k = 0; k < c.D.size(); ++k) {
    if (!std::isfinite(c.D[k]) || c.D[k] <= 0.0) {
      problems.push_back(concat("non-positive debt ratio: D[t=", c.u + static_cast<std::int64_t>(k),
                                "]=", c.D[k]));
    }
  }
  return problems;
}

void validate_cohort(const Cohort& cohort, const StateSpaces& spaces) {
  std::vector<std::string> problems;
  for (const DebtCase& c : cohort) {
    for (std::string& p : validate_case(c, spaces)) {
      problems.push_back(concat("case '", c.case_id, "': ", p));
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

std::size_t scheme_transition_bank_size(const StateSpaces& s) {
  return s.n_treatment * s.n_econ * s.n_result;
}
std::size_t scheme_initial_bank_size(const StateSpaces& s) { return s.n_econ * s.n_result; }
std::size_t behaviour_transition_bank_size(const StateSpaces& s) { return 2 * s.n_scheme; }

CovariateKey key_index(const SchemeTransitionCovariates& k, const StateSpaces& s) {
  check_component(k.treatment, s.n_treatment, "T");
  check_component(k.econ, s.n_econ, "X");
  check_component(k.result, s.n_result, "R");
  const auto t = static_cast<std::size_t>(k.treatment);
  const auto x = static_cast<std::size_t>(k.econ);
  const auto r = static_cast<std::size_t>(k.result);
  return {(t * s.n_econ + x) * s.n_result + r};
}

CovariateKey key_index(const SchemeInitialCovariates& k, const StateSpaces& s) {
  check_component(k.econ, s.n_econ, "X");
  check_component(k.result, s.n_result, "R");
  return {static_cast<std::size_t>(k.econ) * s.n_result + static_cast<std::size_t>(k.result)};
}

CovariateKey key_index(const BehaviourCovariates& k, const StateSpaces& s) {
  check_component(k.y, 2, "Y");
  check_component(k.scheme, s.n_scheme, "S");
  return {static_cast<std::size_t>(k.y) * s.n_scheme + static_cast<std::size_t>(k.scheme)};
}

SchemeTransitionCovariates scheme_transition_covariates(CovariateKey key, const StateSpaces& s) {
  check_key(key, scheme_transition_bank_size(s), "Q_S");
  const std::size_t r = key.value % s.n_result;
  const std::size_t x = (key.value / s.n_result) % s.n_econ;
  const std::size_t t = key.value / (s.n_result * s.n_econ);
  return {static_cast<int>(t), static_cast<int>(x), static_cast<int>(r)};
}

SchemeInitialCovariates scheme_initial_covariates(CovariateKey key, const StateSpaces& s) {
  check_key(key, scheme_initial_bank_size(s), "pi_S");
  return {static_cast<int>(key.value / s.n_result), static_cast<int>(key.value % s.n_result)};
}

BehaviourCovariates behaviour_covariates(CovariateKey key, const StateSpaces& s) {
  check_key(key, behaviour_transition_bank_size(s), "Q_B");
  return {static_cast<int>(key.value / s.n_scheme), static_cast<int>(key.value % s.n_scheme)};
}

ModelParams uniform_params(const StateSpaces& s, double alpha) {
  validate_spaces(s);
  ModelParams p;
  p.spaces = s;
  p.alpha = alpha;
  const double scheme_w = 1.0 / static_cast<double>(s.n_scheme);
  const double behaviour_w = 1.0 / static_cast<double>(s.n_behaviour);
  p.Q_S.assign(scheme_transition_bank_size(s), Matrix(s.n_scheme, s.n_scheme, scheme_w));
  p.pi_S.assign(scheme_initial_bank_size(s), Distribution(s.n_scheme, scheme_w));
  p.Q_B.assign(behaviour_transition_bank_size(s), Matrix(s.n_behaviour, s.n_behaviour, behaviour_w));
  p.pi_B.assign(s.n_scheme, Distribution(s.n_behaviour, behaviour_w));
  return p;
}

namespace {

void check_row(std::span<const double> row, const std::string& where,
               std::vector<std::string>& problems) {
  double total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double v = row[j];
    if (!(v >= 0.0 && v <= 1.0)) {
      problems.push_back(concat(where, " entry ", j, " = ", v, " outside [0, 1]"));
    }
    total += v;
  }
  if (!(std::abs(total - 1.0) <= kStochasticTolerance)) {
    std::ostringstream os;
    os.precision(17);
    os << where << " sums to " << total << ", expected 1";
    problems.push_back(os.str());
  }
}

void check_matrix_bank(const std::vector<Matrix>& bank, std::size_t expected_size, std::size_t dim,
                       const char* name, std::vector<std::string>& problems) {
  if (bank.size() != expected_size) {
    problems.push_back(concat(name, " has ", bank.size(), " matrices, expected ", expected_size));
    return;
  }
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const Matrix& m = bank[k];
    if (m.rows() != dim || m.cols() != dim) {
      problems.push_back(concat(name, "[", k, "] is ", m.rows(), "x", m.cols(), ", expected ", dim,
                                "x", dim));
      continue;
    }
    for (std::size_t r = 0; r < dim; ++r) {
      check_row(m.row(r), concat(name, "[", k, "] row ", r), problems);
    }
  }
}

void check_vector_bank(const std::vector<Distribution>& bank, std::size_t expected_size,
                       std::size_t dim, const char* name, std::vector<std::string>& problems) {
  if (bank.size() != expected_size) {
    problems.push_back(concat(name, " has ", bank.size(), " vectors, expected ", expected_size));
    return;
  }
  for (std::size_t k = 0; k < bank.size(); ++k) {
    if (bank[k].size() != dim) {
      problems.push_back(concat(name, "[", k, "] has length ", bank[k].size(), ", expected ", dim));
      continue;
    }
    check_row(bank[k], concat(name, "[", k, "]"), problems);
  }
}

}  // namespace

std::vector<std::string> check_params(const ModelParams& p) {
  std::vector<std::string> problems;
  const StateSpaces& s = p.spaces;
  if (s.n_behaviour == 0 || s.n_scheme == 0 || s.n_treatment == 0 || s.n_econ == 0 ||
      s.n_result == 0) {
    problems.emplace_back("state space counts must all be >= 1");
    return problems;
  }
  if (!std::isfinite(p.alpha) || p.alpha <= 0.0) {
    problems.push_back(concat("alpha must be positive and finite, got ", p.alpha));
  }
  check_matrix_bank(p.Q_S, scheme_transition_bank_size(s), s.n_scheme, "Q_S", problems);
  check_vector_bank(p.pi_S, scheme_initial_bank_size(s), s.n_scheme, "pi_S", problems);
  check_matrix_bank(p.Q_B, behaviour_transition_bank_size(s), s.n_behaviour, "Q_B", problems);
  check_vector_bank(p.pi_B, s.n_scheme, s.n_behaviour, "pi_B", problems);
  return problems;
}

void validate_params(const ModelParams& p) {
  auto problems = check_params(p);
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

}  // namespace debthmm
