#include "debthmm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "debthmm/errors.hpp"

namespace debthmm {

using nlohmann::json;

namespace {

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Reads a CSV file whose header must equal `header`. Blank lines are skipped.
std::vector<CsvRow> read_csv(const std::filesystem::path& path,
                             const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw ValidationError(concat("cannot open ", path.string()));
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (!seen_header) {
      seen_header = true;
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw ValidationError(concat(path.string(), ":", line_no, ": expected header '", expected, "'"));
      }
      continue;
    }
    if (fields.size() != header.size()) {
      problems.push_back(concat(path.string(), ":", line_no, ": expected ", header.size(),
                                " fields, found ", fields.size()));
      continue;
    }
    rows.push_back({line_no, std::move(fields)});
  }
  if (!seen_header) throw ValidationError(concat(path.string(), ": missing header"));
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return rows;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

/// Maps labels to dense codes, either from a fixed label list or by first
/// appearance.
class Coder {
public:
  Coder(const char* name, const std::vector<std::string>* fixed) : name_(name), fixed_(fixed) {
    if (fixed_) {
      for (std::size_t i = 0; i < fixed_->size(); ++i) codes_.emplace((*fixed_)[i], static_cast<int>(i));
      labels_ = *fixed_;
    }
  }

  /// Returns -1 for labels missing from a fixed map.
  int code(const std::string& label) {
    auto it = codes_.find(label);
    if (it != codes_.end()) return it->second;
    if (fixed_) return -1;
    const int c = static_cast<int>(labels_.size());
    codes_.emplace(label, c);
    labels_.push_back(label);
    return c;
  }

  const char* name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }

private:
  const char* name_;
  const std::vector<std::string>* fixed_;
  std::unordered_map<std::string, int> codes_;
  std::vector<std::string> labels_;
};

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(concat("cannot write ", path.string()));
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(concat("cannot open ", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(concat(path.string(), ": ", e.what()));
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

LabelMap numeric_labels(const StateSpaces& s) {
  auto numbered = [](std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
  };
  return {numbered(s.n_behaviour), numbered(s.n_treatment), numbered(s.n_econ),
          numbered(s.n_result)};
}

LabelMap load_label_map(const std::filesystem::path& path) {
  const json doc = read_json(path);
  LabelMap labels;
  std::vector<std::string> problems;
  auto read = [&](const char* key, std::vector<std::string>& out) {
    if (!doc.contains(key) || !doc[key].is_array()) {
      problems.push_back(concat(path.string(), ": label map needs an array '", key, "'"));
      return;
    }
    for (const auto& v : doc[key]) {
      if (!v.is_string()) {
        problems.push_back(concat(path.string(), ": labels in '", key, "' must be strings"));
        return;
      }
      out.push_back(v.get<std::string>());
    }
    if (out.empty()) problems.push_back(concat(path.string(), ": '", key, "' is empty"));
  };
  read("B", labels.B);
  read("T", labels.T);
  read("X", labels.X);
  read("R", labels.R);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return labels;
}

void save_label_map(const std::filesystem::path& path, const LabelMap& labels) {
  json doc = {{"B", labels.B}, {"T", labels.T}, {"X", labels.X}, {"R", labels.R}};
  auto out = open_for_write(path);
  out << doc.dump(2) << '\n';
}

LoadedCohort load_cohort(const std::filesystem::path& observations,
                         const std::filesystem::path& cases,
                         const std::optional<LabelMap>& labels) {
  const auto case_rows = read_csv(cases, {"case_id", "R"});
  const auto obs_rows = read_csv(observations, {"case_id", "t", "B", "T", "X", "D"});

  Coder b_coder("B", labels ? &labels->B : nullptr);
  Coder t_coder("T", labels ? &labels->T : nullptr);
  Coder x_coder("X", labels ? &labels->X : nullptr);
  Coder r_coder("R", labels ? &labels->R : nullptr);

  std::vector<std::string> problems;
  auto code_or_report = [&](Coder& coder, const std::string& label, const std::string& where) {
    const int c = coder.code(label);
    if (c < 0) problems.push_back(concat(where, ": unknown category '", label, "' for ", coder.name()));
    return c;
  };

  LoadedCohort out;
  std::unordered_map<std::string, std::size_t> case_index;
  for (const auto& row : case_rows) {
    const std::string where = concat(cases.string(), ":", row.line);
    const std::string& id = row.fields[0];
    if (!case_index.emplace(id, out.cohort.size()).second) {
      problems.push_back(concat(where, ": duplicate case_id '", id, "'"));
      continue;
    }
    DebtCase c;
    c.case_id = id;
    c.R = code_or_report(r_coder, row.fields[1], where);
    out.cohort.push_back(std::move(c));
  }

  struct Obs {
    std::int64_t t;
    int b, tr, x;
    double d;
    std::size_t line;
  };
  std::vector<std::vector<Obs>> per_case(out.cohort.size());
  for (const auto& row : obs_rows) {
    const std::string where = concat(observations.string(), ":", row.line);
    const auto& f = row.fields;
    auto it = case_index.find(f[0]);
    if (it == case_index.end()) {
      problems.push_back(concat(where, ": case_id '", f[0], "' missing from the case table"));
      continue;
    }
    Obs o{};
    o.line = row.line;
    if (!parse_number(f[1], o.t)) {
      problems.push_back(concat(where, ": t '", f[1], "' is not an integer"));
      continue;
    }
    if (!parse_number(f[5], o.d)) {
      problems.push_back(concat(where, ": D '", f[5], "' is not a number"));
      continue;
    }
    o.b = code_or_report(b_coder, f[2], where);
    o.tr = code_or_report(t_coder, f[3], where);
    o.x = code_or_report(x_coder, f[4], where);
    per_case[it->second].push_back(o);
  }

  for (std::size_t i = 0; i < out.cohort.size(); ++i) {
    DebtCase& c = out.cohort[i];
    auto& rows = per_case[i];
    if (rows.empty()) {
      problems.push_back(concat("case '", c.case_id, "': no observations"));
      continue;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Obs& a, const Obs& b) { return a.t < b.t; });
    c.u = rows.front().t;
    c.l = rows.back().t;
    bool contiguous = true;
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (rows[k].t == rows[k - 1].t) {
        problems.push_back(concat("case '", c.case_id, "': duplicate t=", rows[k].t));
        contiguous = false;
      } else if (rows[k].t != rows[k - 1].t + 1) {
        for (std::int64_t t = rows[k - 1].t + 1; t < rows[k].t; ++t) {
          problems.push_back(concat("case '", c.case_id, "': missing t=", t));
        }
        contiguous = false;
      }
    }
    if (!contiguous) continue;
    for (const Obs& o : rows) {
      c.B.push_back(o.b);
      c.T.push_back(o.tr);
      c.X.push_back(o.x);
      c.D.push_back(o.d);
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));

  out.labels = {b_coder.labels(), t_coder.labels(), x_coder.labels(), r_coder.labels()};
  out.spaces.n_behaviour = std::max<std::size_t>(1, out.labels.B.size());
  out.spaces.n_treatment = std::max<std::size_t>(1, out.labels.T.size());
  out.spaces.n_econ = std::max<std::size_t>(1, out.labels.X.size());
  out.spaces.n_result = std::max<std::size_t>(1, out.labels.R.size());
  out.spaces.n_scheme = 1;
  validate_cohort(out.cohort, out.spaces);
  return out;
}

void save_cohort(const std::filesystem::path& observations, const std::filesystem::path& cases,
                 const Cohort& cohort, const LabelMap& labels) {
  auto label = [](const std::vector<std::string>& names, int code) -> const std::string& {
    return names.at(static_cast<std::size_t>(code));
  };
  auto obs = open_for_write(observations);
  obs << "case_id,t,B,T,X,D\n";
  for (const DebtCase& c : cohort) {
    for (std::size_t k = 0; k < c.length(); ++k) {
      obs << c.case_id << ',' << c.u + static_cast<std::int64_t>(k) << ',' << label(labels.B, c.B[k])
          << ',' << label(labels.T, c.T[k]) << ',' << label(labels.X, c.X[k]) << ','
          << format_double(c.D[k]) << '\n';
    }
  }
  auto out = open_for_write(cases);
  out << "case_id,R\n";
  for (const DebtCase& c : cohort) out << c.case_id << ',' << label(labels.R, c.R) << '\n';
}

// --- parameters -------------------------------------------------------------

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

/// Reads a params document, collecting every problem before failing.
class ParamsReader {
public:
  explicit ParamsReader(const json& doc) : doc_(doc) {}

  LoadedParams read() {
    if (!doc_.is_object()) throw ValidationError("params document must be a JSON object");
    warn_unknown(doc_, {"spaces", "alpha", "Q_S", "pi_S", "Q_B", "pi_B"}, "top level");
    read_spaces();
    ModelParams& p = out_.params;
    if (doc_.contains("alpha") && doc_["alpha"].is_number()) {
      p.alpha = doc_["alpha"].get<double>();
    } else {
      problems_.emplace_back("missing numeric 'alpha'");
    }
    if (problems_.empty()) {
      const StateSpaces& s = p.spaces;
      p.Q_S.assign(scheme_transition_bank_size(s), Matrix());
      p.pi_S.assign(scheme_initial_bank_size(s), Distribution());
      p.Q_B.assign(behaviour_transition_bank_size(s), Matrix());
      p.pi_B.assign(s.n_scheme, Distribution());
      read_matrix_bank("Q_S", {"T", "X", "R"}, s.n_scheme, p.Q_S);
      read_vector_bank("pi_S", {"X", "R"}, s.n_scheme, p.pi_S);
      read_matrix_bank("Q_B", {"Y", "S"}, s.n_behaviour, p.Q_B);
      read_vector_bank("pi_B", {"S"}, s.n_behaviour, p.pi_B);
    }
    if (problems_.empty()) {
      for (auto& prob : check_params(p)) problems_.push_back(std::move(prob));
    }
    if (!problems_.empty()) throw ValidationError(std::move(problems_));
    return std::move(out_);
  }

private:
  void warn_unknown(const json& obj, const std::vector<std::string>& known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
        out_.warnings.push_back(concat("ignoring unknown field '", it.key(), "' in ", where));
      }
    }
  }

  void read_spaces() {
    if (!doc_.contains("spaces") || !doc_["spaces"].is_object()) {
      problems_.emplace_back("missing object 'spaces'");
      return;
    }
    const json& sp = doc_["spaces"];
    warn_unknown(sp, {"n_behaviour", "n_scheme", "n_treatment", "n_econ", "n_result"}, "spaces");
    auto count = [&](const char* key, std::size_t& dst) {
      if (!sp.contains(key) || !sp[key].is_number_unsigned() || sp[key].get<std::size_t>() == 0) {
        problems_.push_back(concat("spaces.", key, " must be a positive integer"));
        return;
      }
      dst = sp[key].get<std::size_t>();
    };
    StateSpaces& s = out_.params.spaces;
    count("n_behaviour", s.n_behaviour);
    count("n_scheme", s.n_scheme);
    count("n_treatment", s.n_treatment);
    count("n_econ", s.n_econ);
    count("n_result", s.n_result);
  }

  /// Flat bank index of an entry from its covariate labels.
  std::optional<std::size_t> entry_key(const std::string& bank, const json& entry,
                                       const std::vector<std::string>& labels) {
    std::vector<int> v;
    for (const auto& l : labels) {
      if (!entry.contains(l) || !entry[l].is_number_integer()) {
        problems_.push_back(concat(bank, " entry missing integer '", l, "'"));
        return std::nullopt;
      }
      v.push_back(entry[l].get<int>());
    }
    const StateSpaces& s = out_.params.spaces;
    try {
      if (bank == "Q_S") return key_index(SchemeTransitionCovariates{v[0], v[1], v[2]}, s).value;
      if (bank == "pi_S") return key_index(SchemeInitialCovariates{v[0], v[1]}, s).value;
      if (bank == "Q_B") return key_index(BehaviourCovariates{v[0], v[1]}, s).value;
      if (v[0] >= 0 && static_cast<std::size_t>(v[0]) < s.n_scheme) {
        return static_cast<std::size_t>(v[0]);
      }
    } catch (const std::out_of_range&) {
    }
    problems_.push_back(concat(bank, " entry has covariates outside the declared spaces"));
    return std::nullopt;
  }

  bool read_row(const json& j, std::size_t dim, std::vector<double>& row, const std::string& where) {
    if (!j.is_array() || j.size() != dim) {
      problems_.push_back(concat("dimension mismatch: ", where, " must hold ", dim, " numbers"));
      return false;
    }
    row.clear();
    for (const auto& v : j) {
      if (!v.is_number()) {
        problems_.push_back(concat(where, " contains a non-number"));
        return false;
      }
      row.push_back(v.get<double>());
    }
    return true;
  }

  /// Iterates the entries of a bank, calling body(key, entry, where) for
  /// each well-formed, non-duplicate entry.
  template <typename Body>
  void for_each_entry(const std::string& bank, const std::vector<std::string>& labels,
                      const std::string& payload, std::size_t expected, Body&& body) {
    if (!doc_.contains(bank) || !doc_[bank].is_array()) {
      problems_.push_back(concat("missing array '", bank, "'"));
      return;
    }
    const json& arr = doc_[bank];
    if (arr.size() != expected) {
      problems_.push_back(
          concat("dimension mismatch: ", bank, " has ", arr.size(), " entries, expected ", expected));
      return;
    }
    std::vector<std::string> known = labels;
    known.push_back(payload);
    std::vector<bool> seen(expected, false);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& entry = arr[i];
      if (!entry.is_object() || !entry.contains(payload)) {
        problems_.push_back(concat(bank, "[", i, "] must be an object with '", payload, "'"));
        continue;
      }
      warn_unknown(entry, known, concat(bank, "[", i, "]"));
      auto key = entry_key(bank, entry, labels);
      if (!key) continue;
      if (seen[*key]) {
        problems_.push_back(concat(bank, "[", i, "] duplicates an earlier entry"));
        continue;
      }
      seen[*key] = true;
      body(*key, entry[payload], concat(bank, "[", i, "]"));
    }
  }

  void read_matrix_bank(const std::string& bank, const std::vector<std::string>& labels,
                        std::size_t dim, std::vector<Matrix>& dst) {
    for_each_entry(bank, labels, "matrix", dst.size(),
                   [&](std::size_t key, const json& rows, const std::string& where) {
                     if (!rows.is_array() || rows.size() != dim) {
                       problems_.push_back(
                           concat("dimension mismatch: ", where, " needs ", dim, " rows"));
                       return;
                     }
                     Matrix m(dim, dim);
                     std::vector<double> row;
                     for (std::size_t r = 0; r < dim; ++r) {
                       if (!read_row(rows[r], dim, row, concat(where, " row ", r))) return;
                       std::copy(row.begin(), row.end(), m.row(r).begin());
                     }
                     dst[key] = std::move(m);
                   });
  }

  void read_vector_bank(const std::string& bank, const std::vector<std::string>& labels,
                        std::size_t dim, std::vector<Distribution>& dst) {
    for_each_entry(bank, labels, "probs", dst.size(),
                   [&](std::size_t key, const json& probs, const std::string& where) {
                     Distribution d;
                     if (read_row(probs, dim, d, where)) dst[key] = std::move(d);
                   });
  }

  const json& doc_;
  LoadedParams out_;
  std::vector<std::string> problems_;
};

}  // namespace

json params_to_json(const ModelParams& p) {
  const StateSpaces& s = p.spaces;
  json doc;
  doc["spaces"] = {{"n_behaviour", s.n_behaviour},
                   {"n_scheme", s.n_scheme},
                   {"n_treatment", s.n_treatment},
                   {"n_econ", s.n_econ},
                   {"n_result", s.n_result}};
  doc["alpha"] = p.alpha;

  json q_s = json::array();
  for (std::size_t k = 0; k < p.Q_S.size(); ++k) {
    const auto cov = scheme_transition_covariates({k}, s);
    q_s.push_back({{"T", cov.treatment}, {"X", cov.econ}, {"R", cov.result},
                   {"matrix", matrix_to_json(p.Q_S[k])}});
  }
  json pi_s = json::array();
  for (std::size_t k = 0; k < p.pi_S.size(); ++k) {
    const auto cov = scheme_initial_covariates({k}, s);
    pi_s.push_back({{"X", cov.econ}, {"R", cov.result}, {"probs", p.pi_S[k]}});
  }
  json q_b = json::array();
  for (std::size_t k = 0; k < p.Q_B.size(); ++k) {
    const auto cov = behaviour_covariates({k}, s);
    q_b.push_back({{"Y", cov.y}, {"S", cov.scheme}, {"matrix", matrix_to_json(p.Q_B[k])}});
  }
  json pi_b = json::array();
  for (std::size_t k = 0; k < p.pi_B.size(); ++k) {
    pi_b.push_back({{"S", k}, {"probs", p.pi_B[k]}});
  }
  doc["Q_S"] = std::move(q_s);
  doc["pi_S"] = std::move(pi_s);
  doc["Q_B"] = std::move(q_b);
  doc["pi_B"] = std::move(pi_b);
  return doc;
}

LoadedParams params_from_json(const json& doc) { return ParamsReader(doc).read(); }

void save_params(const std::filesystem::path& path, const ModelParams& params) {
  auto out = open_for_write(path);
  out << params_to_json(params).dump(2) << '\n';
}

LoadedParams load_params(const std::filesystem::path& path) {
  try {
    return params_from_json(read_json(path));
  } catch (const ValidationError& e) {
    std::vector<std::string> problems;
    for (const auto& p : e.problems()) problems.push_back(concat(path.string(), ": ", p));
    throw ValidationError(std::move(problems));
  }
}

// --- cohort spec ------------------------------------------------------------

LoadedSpec cohort_spec_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("cohort spec must be a JSON object");
  LoadedSpec out;
  CohortSpec& s = out.spec;
  std::vector<std::string> problems;

  auto get = [&](const json& obj, const char* key, auto& dst) {
    if (!obj.contains(key)) return;
    try {
      obj.at(key).get_to(dst);
    } catch (const json::exception&) {
      problems.push_back(concat("cohort spec field '", key, "' has the wrong type"));
    }
  };
  const std::vector<std::string> known = {
      "n_cases", "min_length", "max_length", "treatment_sequence", "treatment_probs",
      "econ_path", "econ_probs", "econ_block", "result_probs", "first_period",
      "start_spread", "debt", "seed"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      out.warnings.push_back(concat("ignoring unknown cohort spec field '", it.key(), "'"));
    }
  }
  get(doc, "n_cases", s.n_cases);
  get(doc, "min_length", s.min_length);
  get(doc, "max_length", s.max_length);
  get(doc, "treatment_sequence", s.treatment_sequence);
  get(doc, "treatment_probs", s.treatment_probs);
  get(doc, "econ_path", s.econ_path);
  get(doc, "econ_probs", s.econ_probs);
  get(doc, "econ_block", s.econ_block);
  get(doc, "result_probs", s.result_probs);
  get(doc, "first_period", s.first_period);
  get(doc, "start_spread", s.start_spread);
  get(doc, "seed", s.seed);
  if (doc.contains("debt")) {
    const json& d = doc["debt"];
    if (!d.is_object()) {
      problems.emplace_back("cohort spec field 'debt' must be an object");
    } else {
      get(d, "initial_low", s.debt.initial_low);
      get(d, "initial_high", s.debt.initial_high);
      get(d, "drift", s.debt.drift);
      get(d, "volatility", s.debt.volatility);
      get(d, "floor", s.debt.floor);
      get(d, "decimals", s.debt.decimals);
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return out;
}

LoadedSpec load_cohort_spec(const std::filesystem::path& path) {
  return cohort_spec_from_json(read_json(path));
}

// --- reports and tables -----------------------------------------------------

json fit_report_to_json(const FitReport& r) {
  json doc;
  doc["alpha"] = r.params.alpha;
  doc["converged"] = r.converged;
  doc["iterations"] = r.iterations;
  doc["restart_index"] = r.restart_index;
  doc["final_log_likelihood"] = r.final_log_likelihood;
  doc["loglik_trace"] = r.loglik_trace;
  doc["alpha_trace"] = r.alpha_trace;
  doc["l1_trace"] = r.l1_trace;
  // Failed restarts carry -inf, which JSON cannot hold.
  json finals = json::array();
  for (double v : r.restart_log_likelihoods) {
    finals.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  }
  doc["restart_log_likelihoods"] = std::move(finals);
  doc["restart_failures"] = r.restart_failures;
  return doc;
}

void write_gamma_table(std::ostream& os, const Cohort& cohort,
                       const std::vector<PosteriorSet>& posteriors) {
  os << "case_id,t,s,gamma\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const DebtCase& c = cohort[i];
    for (std::size_t k = 0; k < posteriors[i].gamma.size(); ++k) {
      const auto& g = posteriors[i].gamma[k];
      for (std::size_t s = 0; s < g.size(); ++s) {
        os << c.case_id << ',' << c.u + static_cast<std::int64_t>(k) << ',' << s << ','
           << format_double(g[s]) << '\n';
      }
    }
  }
}

void write_hidden_paths(std::ostream& os, const Cohort& cohort,
                        const std::vector<std::vector<int>>& hidden) {
  os << "case_id,t,S\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    for (std::size_t k = 0; k < hidden[i].size(); ++k) {
      os << cohort[i].case_id << ',' << cohort[i].u + static_cast<std::int64_t>(k) << ','
         << hidden[i][k] << '\n';
    }
  }
}

void write_alpha_table(std::ostream& os, const AlphaScanResult& scan) {
  os << "alpha,l1\n";
  for (std::size_t g = 0; g < scan.grid.size(); ++g) {
    os << format_double(scan.grid[g]) << ',' << format_double(scan.l1[g]) << '\n';
  }
}

void write_loglik_table(std::ostream& os, const Cohort& cohort,
                        const std::vector<PosteriorSet>& posteriors) {
  os << "scope,case_id,log_likelihood\n";
  double total = 0.0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    os << "case," << cohort[i].case_id << ',' << format_double(posteriors[i].log_likelihood) << '\n';
    total += posteriors[i].log_likelihood;
  }
  os << "total,," << format_double(total) << '\n';
}

}  // namespace debthmm
