#include "debthmm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "debthmm/errors.hpp"

namespace debthmm {

namespace {

void check_probs(const std::vector<double>& probs, std::size_t count, const char* name,
                 std::vector<std::string>& problems) {
  if (probs.empty()) return;
  std::ostringstream os;
  if (probs.size() != count) {
    os << name << " has " << probs.size() << " entries, expected " << count;
    problems.push_back(os.str());
    return;
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      os << name << " contains a negative or non-finite probability";
      problems.push_back(os.str());
      return;
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    os << name << " sums to " << total;
    problems.push_back(os.str());
  }
}

void check_codes(const std::vector<int>& seq, std::size_t count, const char* name,
                 std::vector<std::string>& problems) {
  for (int v : seq) {
    if (v < 0 || static_cast<std::size_t>(v) >= count) {
      problems.push_back(std::string(name) + " contains an out-of-range category");
      return;
    }
  }
}

int draw(Rng& rng, const std::vector<double>& probs, std::size_t count) {
  if (probs.empty()) return static_cast<int>(rng.uniform_int(count));
  return static_cast<int>(rng.categorical(probs));
}

double report_ratio(double d, int decimals) {
  if (decimals < 0) return d;
  const double scale = std::pow(10.0, decimals);
  const double units = std::max(1.0, std::round(d * scale));
  return units / scale;
}

}  // namespace

void validate_spec(const CohortSpec& spec, const StateSpaces& spaces) {
  std::vector<std::string> problems;
  if (spec.min_length < 1 || spec.max_length < spec.min_length) {
    problems.emplace_back("length range must satisfy 1 <= min_length <= max_length");
  }
  if (spec.start_spread < 0) problems.emplace_back("start_spread must be >= 0");
  if (spec.econ_block < 1) problems.emplace_back("econ_block must be >= 1");
  check_probs(spec.treatment_probs, spaces.n_treatment, "treatment_probs", problems);
  check_probs(spec.econ_probs, spaces.n_econ, "econ_probs", problems);
  check_probs(spec.result_probs, spaces.n_result, "result_probs", problems);
  check_codes(spec.treatment_sequence, spaces.n_treatment, "treatment_sequence", problems);
  check_codes(spec.econ_path, spaces.n_econ, "econ_path", problems);
  if (!spec.treatment_sequence.empty() && spec.treatment_sequence.size() < spec.max_length) {
    problems.emplace_back("treatment_sequence shorter than max_length");
  }
  if (!spec.econ_path.empty() && spec.econ_path.size() < economic_horizon(spec)) {
    problems.emplace_back("econ_path shorter than start_spread + max_length");
  }
  const DebtPathModel& d = spec.debt;
  if (!(d.initial_low > 0.0) || !(d.initial_high >= d.initial_low) || !std::isfinite(d.initial_high)) {
    problems.emplace_back("debt initial interval must satisfy 0 < low <= high");
  }
  if (!(d.floor > 0.0)) problems.emplace_back("debt floor must be positive");
  if (!(d.volatility >= 0.0) || !std::isfinite(d.drift)) {
    problems.emplace_back("debt drift must be finite and volatility non-negative");
  }
  if (d.decimals > 12) problems.emplace_back("debt decimals must be at most 12");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

std::size_t economic_horizon(const CohortSpec& spec) {
  return static_cast<std::size_t>(spec.start_spread) + spec.max_length;
}

std::vector<int> sample_economic_path(const CohortSpec& spec, const StateSpaces& spaces) {
  if (!spec.econ_path.empty()) return spec.econ_path;
  Rng rng(spec.seed, Rng::Domain::kEconomicPath, 0);
  std::vector<int> path(economic_horizon(spec));
  for (std::size_t t = 0; t < path.size(); ++t) {
    path[t] = t % spec.econ_block == 0 ? draw(rng, spec.econ_probs, spaces.n_econ) : path[t - 1];
  }
  return path;
}

SampledCase sample_case(const ModelParams& params, const CohortSpec& spec,
                        const std::vector<int>& econ_path, std::size_t case_index, Rng& rng) {
  const StateSpaces& s = params.spaces;
  SampledCase out;
  DebtCase& c = out.debt_case;
  c.case_id = "c" + std::to_string(case_index);

  const std::size_t len =
      spec.min_length + static_cast<std::size_t>(rng.uniform_int(spec.max_length - spec.min_length + 1));
  const auto offset = static_cast<std::int64_t>(
      rng.uniform_int(static_cast<std::uint64_t>(spec.start_spread) + 1));
  c.u = spec.first_period + offset;
  c.l = c.u + static_cast<std::int64_t>(len) - 1;
  c.R = draw(rng, spec.result_probs, s.n_result);

  c.T.resize(len);
  c.X.resize(len);
  c.D.resize(len);
  for (std::size_t k = 0; k < len; ++k) {
    c.T[k] = spec.treatment_sequence.empty() ? draw(rng, spec.treatment_probs, s.n_treatment)
                                             : spec.treatment_sequence[k];
    c.X[k] = econ_path[static_cast<std::size_t>(offset) + k];
  }

  const DebtPathModel& dm = spec.debt;
  double level = dm.initial_low + (dm.initial_high - dm.initial_low) * rng.uniform();
  for (std::size_t k = 0; k < len; ++k) {
    if (k > 0) level = std::max(dm.floor, level * std::exp(dm.drift + dm.volatility * rng.normal()));
    c.D[k] = report_ratio(level, dm.decimals);
  }

  c.B.resize(len);
  out.schemes.resize(len);
  int scheme = static_cast<int>(rng.categorical(params.scheme_initial(c.X[0], c.R)));
  int behaviour = static_cast<int>(rng.categorical(params.behaviour_initial(scheme)));
  out.schemes[0] = scheme;
  c.B[0] = behaviour;
  for (std::size_t k = 1; k < len; ++k) {
    const Matrix& q_s = params.scheme_transition(c.T[k - 1], c.X[k], c.R);
    scheme = static_cast<int>(rng.categorical(q_s.row(static_cast<std::size_t>(scheme))));
    const int y = classify_debt_ratio(c.D[k - 1], params.alpha);
    const Matrix& q_b = params.behaviour_transition(y, scheme);
    behaviour = static_cast<int>(rng.categorical(q_b.row(static_cast<std::size_t>(behaviour))));
    out.schemes[k] = scheme;
    c.B[k] = behaviour;
  }
  return out;
}

SimulatedCohort sample_cohort(const ModelParams& params, const CohortSpec& spec) {
  validate_params(params);
  validate_spec(spec, params.spaces);
  const std::vector<int> econ = sample_economic_path(spec, params.spaces);
  SimulatedCohort out;
  out.cases.reserve(spec.n_cases);
  out.hidden.reserve(spec.n_cases);
  for (std::size_t i = 0; i < spec.n_cases; ++i) {
    Rng rng(spec.seed, Rng::Domain::kCase, i);
    SampledCase sc = sample_case(params, spec, econ, i, rng);
    out.cases.push_back(std::move(sc.debt_case));
    out.hidden.push_back(std::move(sc.schemes));
  }
  return out;
}

}  // namespace debthmm
