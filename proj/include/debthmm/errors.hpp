#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace debthmm {

/// Input data or parameters violate a model invariant. Carries every
/// violation found, not just the first.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(std::vector<std::string> problems);
  explicit ValidationError(const std::string& problem)
      : ValidationError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
  std::vector<std::string> problems_;
};

/// Base class for failures of the numerical machinery (as opposed to bad input).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A normalizing constant in the forward recursion came out as zero: the
/// observed data is impossible under the current parameters.
class DegenerateLikelihoodError : public NumericalError {
public:
  DegenerateLikelihoodError(std::string case_id, std::int64_t period);

  const std::string& case_id() const noexcept { return case_id_; }
  std::int64_t period() const noexcept { return period_; }

private:
  std::string case_id_;
  std::int64_t period_;
};

}  // namespace debthmm
