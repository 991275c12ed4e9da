// debthmm: fit, simulate and query the debtor behaviour model.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "debthmm/errors.hpp"
#include "debthmm/inference.hpp"
#include "debthmm/io.hpp"
#include "debthmm/learning.hpp"
#include "debthmm/simulation.hpp"

namespace {

using namespace debthmm;

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct CohortPaths {
  std::string obs;
  std::string cases;
  std::string labels;
};

void add_cohort_options(CLI::App* cmd, CohortPaths& paths, bool outputs) {
  const char* verb = outputs ? "written" : "read";
  cmd->add_option("--obs", paths.obs, std::string("observations CSV (") + verb + ")")->required();
  cmd->add_option("--cases", paths.cases, std::string("cases CSV (") + verb + ")")->required();
  cmd->add_option("--labels", paths.labels, std::string("label map JSON (") + verb + ")");
}

std::optional<std::vector<double>> parse_grid(const std::string& text) {
  if (text.empty() || text == "auto") return std::nullopt;
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("--alpha-grid: '" + item + "' is not a number");
    }
  }
  return grid;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

ModelParams read_params(const std::string& path) {
  LoadedParams loaded = load_params(path);
  print_warnings(loaded.warnings);
  return std::move(loaded.params);
}

/// Loads a cohort and checks it fits within the categories of `params`.
Cohort read_cohort_for(const CohortPaths& paths, const ModelParams& params) {
  std::optional<LabelMap> labels;
  if (!paths.labels.empty()) labels = load_label_map(paths.labels);
  LoadedCohort loaded = load_cohort(paths.obs, paths.cases, labels);
  validate_cohort(loaded.cohort, params.spaces);
  return std::move(loaded.cohort);
}

/// Runs `write` against the named file, or stdout when the name is empty.
template <typename Write>
void emit(const std::string& path, Write&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate-conditioned hierarchical HMM of debtor behaviour"};
  app.require_subcommand(1);

  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads for the E-step and alpha scan")
      ->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "draw a synthetic cohort from a params file");
  std::string sim_params, sim_spec, sim_hidden;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::size_t> sim_cases;
  CohortPaths sim_out;
  simulate->add_option("--params", sim_params, "params JSON")->required();
  simulate->add_option("--spec", sim_spec, "cohort spec JSON (defaults when omitted)");
  simulate->add_option("--n-cases", sim_cases, "override the spec's case count");
  simulate->add_option("--seed", sim_seed, "override the spec's seed");
  simulate->add_option("--hidden", sim_hidden, "hidden scheme paths CSV (written)");
  add_cohort_options(simulate, sim_out, true);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "estimate parameters by EM");
  CohortPaths fit_in;
  std::string fit_params_out, fit_report_out, fit_grid = "auto", fit_mode = "paper";
  std::size_t fit_schemes = 2;
  FitConfig config;
  add_cohort_options(fit_cmd, fit_in, false);
  fit_cmd->add_option("--schemes", fit_schemes, "number of latent schemes")->capture_default_str();
  fit_cmd->add_option("--params-out", fit_params_out, "fitted params JSON")->required();
  fit_cmd->add_option("--report-out", fit_report_out, "fit report JSON");
  fit_cmd->add_option("--seed", config.seed, "initialization seed")->capture_default_str();
  fit_cmd->add_option("--qs-mode", fit_mode, "Q_S weighting")
      ->check(CLI::IsMember({"paper", "joint"}))
      ->capture_default_str();
  fit_cmd->add_option("--tol", config.loglik_rel_tol, "relative log-likelihood tolerance")
      ->capture_default_str();
  fit_cmd->add_option("--max-iter", config.max_iterations, "EM iteration limit")->capture_default_str();
  fit_cmd->add_option("--restarts", config.n_restarts, "random restarts")->capture_default_str();
  fit_cmd->add_option("--alpha-grid", fit_grid, "'auto' or comma-separated alphas")
      ->capture_default_str();
  fit_cmd->add_option("--concentration", config.dirichlet_concentration,
                      "Dirichlet concentration for initialization")
      ->capture_default_str();

  // posterior
  auto* post_cmd = app.add_subcommand("posterior", "write per-case scheme responsibilities");
  CohortPaths post_in;
  std::string post_params, post_out;
  add_cohort_options(post_cmd, post_in, false);
  post_cmd->add_option("--params", post_params, "params JSON")->required();
  post_cmd->add_option("--out", post_out, "gamma CSV (stdout when omitted)");

  // loglik
  auto* ll_cmd = app.add_subcommand("loglik", "observed-data log-likelihood per case and total");
  CohortPaths ll_in;
  std::string ll_params, ll_out;
  add_cohort_options(ll_cmd, ll_in, false);
  ll_cmd->add_option("--params", ll_params, "params JSON")->required();
  ll_cmd->add_option("--out", ll_out, "CSV output (stdout when omitted)");

  // alpha-scan
  auto* scan_cmd = app.add_subcommand("alpha-scan", "evaluate the alpha objective over a grid");
  CohortPaths scan_in;
  std::string scan_params, scan_out, scan_grid = "auto";
  add_cohort_options(scan_cmd, scan_in, false);
  scan_cmd->add_option("--params", scan_params, "params JSON")->required();
  scan_cmd->add_option("--alpha-grid", scan_grid, "'auto' or comma-separated alphas")
      ->capture_default_str();
  scan_cmd->add_option("--out", scan_out, "CSV output (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*simulate) {
      const ModelParams params = read_params(sim_params);
      CohortSpec spec;
      if (!sim_spec.empty()) {
        LoadedSpec loaded = load_cohort_spec(sim_spec);
        print_warnings(loaded.warnings);
        spec = std::move(loaded.spec);
      }
      if (sim_cases) spec.n_cases = *sim_cases;
      if (sim_seed) spec.seed = *sim_seed;
      const SimulatedCohort sim = sample_cohort(params, spec);
      const LabelMap labels = numeric_labels(params.spaces);
      save_cohort(sim_out.obs, sim_out.cases, sim.cases, labels);
      if (!sim_out.labels.empty()) save_label_map(sim_out.labels, labels);
      if (!sim_hidden.empty()) {
        emit(sim_hidden, [&](std::ostream& os) { write_hidden_paths(os, sim.cases, sim.hidden); });
      }
    } else if (*fit_cmd) {
      std::optional<LabelMap> labels;
      if (!fit_in.labels.empty()) labels = load_label_map(fit_in.labels);
      LoadedCohort loaded = load_cohort(fit_in.obs, fit_in.cases, labels);
      StateSpaces spaces = loaded.spaces;
      spaces.n_scheme = fit_schemes;
      config.alpha_grid = parse_grid(fit_grid);
      config.qs_mode = fit_mode == "joint" ? QsMode::kJoint : QsMode::kPaper;
      config.n_threads = threads;
      const FitReport report = fit(loaded.cohort, spaces, config);
      save_params(fit_params_out, report.params);
      if (!fit_report_out.empty()) {
        emit(fit_report_out,
             [&](std::ostream& os) { os << fit_report_to_json(report).dump(2) << '\n'; });
      }
      for (const auto& f : report.restart_failures) std::cerr << "warning: " << f << '\n';
    } else if (*post_cmd) {
      const ModelParams params = read_params(post_params);
      const Cohort cohort = read_cohort_for(post_in, params);
      const auto posts = e_step(cohort, params, threads);
      emit(post_out, [&](std::ostream& os) { write_gamma_table(os, cohort, posts); });
    } else if (*ll_cmd) {
      const ModelParams params = read_params(ll_params);
      const Cohort cohort = read_cohort_for(ll_in, params);
      const auto posts = e_step(cohort, params, threads);
      emit(ll_out, [&](std::ostream& os) { write_loglik_table(os, cohort, posts); });
    } else if (*scan_cmd) {
      const ModelParams params = read_params(scan_params);
      const Cohort cohort = read_cohort_for(scan_in, params);
      const auto grid_opt = parse_grid(scan_grid);
      const std::vector<double> grid = grid_opt ? *grid_opt : build_auto_grid(cohort);
      const auto posts = e_step(cohort, params, threads);
      const AlphaScanResult scan = alpha_scan(cohort, posts, grid, params, threads);
      emit(scan_out, [&](std::ostream& os) { write_alpha_table(os, scan); });
    }
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) std::cerr << "error: " << p << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
