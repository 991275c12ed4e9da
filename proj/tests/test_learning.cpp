#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "debthmm/errors.hpp"
#include "debthmm/inference.hpp"
#include "debthmm/learning.hpp"
#include "fixtures.hpp"

using namespace debthmm;
using namespace debthmm::testing;

namespace {

std::size_t qb_key(int y, int s) { return static_cast<std::size_t>(y * 2 + s); }

SufficientStats stats_for(const Cohort& cohort, const ModelParams& p, QsMode mode) {
  SufficientStats stats(p.spaces);
  for (const DebtCase& c : cohort) accumulate(stats, c, posterior(c, p), p.alpha, mode);
  return stats;
}

bool rows_stochastic(const ModelParams& p, double tol) {
  auto ok = [&](std::span<const double> row) {
    return std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= tol;
  };
  for (const auto* bank : {&p.Q_S, &p.Q_B}) {
    for (const Matrix& m : *bank) {
      for (std::size_t r = 0; r < m.rows(); ++r) {
        if (!ok(m.row(r))) return false;
      }
    }
  }
  for (const auto* bank : {&p.pi_S, &p.pi_B}) {
    for (const Distribution& d : *bank) {
      if (!ok(d)) return false;
    }
  }
  return true;
}

Cohort random_cohort(const StateSpaces& s, std::size_t n, std::size_t max_len, Rng& rng) {
  Cohort cohort;
  for (std::size_t i = 0; i < n; ++i) {
    cohort.push_back(random_case(s, 1 + rng.uniform_int(max_len), rng, "r" + std::to_string(i)));
  }
  return cohort;
}

}  // namespace

TEST_CASE("sufficient statistics of the hand cohort") {
  const ModelParams p = hand_params();
  const Cohort cohort = {case_a(), case_b()};
  const double tol = 1e-12;

  const SufficientStats st = stats_for(cohort, p, QsMode::kPaper);

  CHECK(near(st.qb_num[qb_key(0, 0)](1, 0), 1.5130961780380394, tol));
  CHECK(near(st.qb_num[qb_key(0, 0)](1, 1), 0.5178872741043323, tol));
  CHECK(near(st.qb_num[qb_key(1, 0)](0, 1), 0.4416722021839942, tol));
  CHECK(near(st.qb_num[qb_key(0, 1)](1, 0), 0.48690382196196036, tol));
  CHECK(near(st.qb_num[qb_key(0, 1)](1, 1), 0.48211272589566734, tol));
  CHECK(near(st.qb_num[qb_key(1, 1)](0, 1), 0.5583277978160055, tol));
  CHECK(st.qb_num[qb_key(0, 0)](0, 0) == 0.0);
  CHECK(st.qb_num[qb_key(1, 0)](1, 0) == 0.0);

  CHECK(near(st.qb_den[qb_key(0, 0)][1], 2.0309834521423715, tol));
  CHECK(near(st.qb_den[qb_key(1, 0)][0], 0.4416722021839942, tol));
  CHECK(near(st.qb_den[qb_key(0, 1)][1], 0.9690165478576278, tol));
  CHECK(near(st.qb_den[qb_key(1, 1)][0], 0.5583277978160055, tol));
  CHECK(st.qb_den[qb_key(0, 0)][0] == 0.0);

  CHECK(max_abs_diff(st.pib_num[0], {0.8049863112347203, 0.7272727272727272}) <= tol);
  CHECK(max_abs_diff(st.pib_num[1], {0.19501368876527952, 0.2727272727272727}) <= tol);
  CHECK(max_abs_diff(st.pib_den, {1.5322590385074475, 0.46774096149255223}) <= tol);
  CHECK(max_abs_diff(st.pis_num[0], {1.5322590385074475, 0.46774096149255223}) <= tol);
  CHECK(st.pis_den[0] == 2.0);

  CHECK(max_abs_diff(st.qs_num[0], matrix({{0.8237777351507758, 0.34516719430594545},
                                           {0.5122913571353744, 0.31876371340790355}})) <= tol);
  CHECK(max_abs_diff(st.qs_num[1], matrix({{0.7154273803729045, 0.6074462049661478},
                                           {0.4211591816673106, 0.2559672329936361}})) <= tol);
  CHECK(max_abs_diff(st.qs_den[0], {1.1689449294567213, 0.8310550705432782}) <= tol);
  CHECK(max_abs_diff(st.qs_den[1], {1.3228735853390527, 0.6771264146609468}) <= tol);

  const SufficientStats joint = stats_for(cohort, p, QsMode::kJoint);
  CHECK(max_abs_diff(joint.qs_num[0], matrix({{1.101401755041849, 0.0675431744148725},
                                              {0.2346673372443016, 0.5963877332989767}})) <= tol);
  CHECK(max_abs_diff(joint.qs_num[1], matrix({{0.8226556825448064, 0.5002179027942463},
                                              {0.3139308794954091, 0.36319553516553776}})) <= tol);
  CHECK(joint.qs_den == st.qs_den);
  CHECK(joint.qb_num == st.qb_num);
}

TEST_CASE("single-period case contributes only initial counts") {
  const ModelParams p = hand_params();
  const DebtCase c = make_case("one", 0, {1}, {0}, {0.4});
  const SufficientStats st = stats_for({c}, p, QsMode::kJoint);
  const Distribution g = posterior(c, p).gamma[0];
  CHECK(st.pis_den[0] == 1.0);
  CHECK(st.pis_num[0] == g);
  CHECK(st.pib_num[0][1] == g[0]);
  CHECK(st.pib_num[1][1] == g[1]);
  for (const Matrix& m : st.qb_num) CHECK(m.sum() == 0.0);
  for (const Matrix& m : st.qs_num) CHECK(m.sum() == 0.0);
}

TEST_CASE("single scheme: M-step gives empirical frequencies") {
  const StateSpaces s{3, 1, 2, 1, 1};
  ModelParams p = uniform_params(s, 0.5);
  const Cohort cohort = {make_case("a", 0, {0, 1, 1, 2}, {0, 1, 0, 0}, {0.3, 0.7, 0.2, 0.9}),
                         make_case("b", 0, {1, 1, 0}, {0, 0, 0}, {0.3, 0.4, 0.8})};
  const SufficientStats st = stats_for(cohort, p, QsMode::kPaper);
  const ModelParams next = m_step(st, p);

  // y = 0 transitions: 0->1 (0.3), 1->2 (0.2), 1->1 (0.3), 1->0 (0.4); y = 1: 1->1 (0.7)
  const Matrix& low = next.Q_B[0];  // (y=0, s=0)
  CHECK(low(0, 0) == 0.0);
  CHECK(low(0, 1) == 1.0);
  CHECK(near(low(1, 0), 1.0 / 3.0, 1e-15));
  CHECK(near(low(1, 1), 1.0 / 3.0, 1e-15));
  CHECK(near(low(1, 2), 1.0 / 3.0, 1e-15));
  CHECK(low.row(2)[0] == p.Q_B[0](2, 0));  // no y=0 transition out of 2: carried over
  const Matrix& high = next.Q_B[1];
  CHECK(high(1, 1) == 1.0);
  CHECK(high(0, 0) == p.Q_B[1](0, 0));
  CHECK(next.pi_B[0] == Distribution{0.5, 0.5, 0.0});
  CHECK(next.Q_S[0](0, 0) == 1.0);
  CHECK(next.pi_S[0][0] == 1.0);
}

TEST_CASE("m_step") {
  SUBCASE("zero denominators carry the previous row") {
    const ModelParams p = hand_params();
    SufficientStats st(p.spaces);
    const ModelParams next = m_step(st, p);
    CHECK(next.Q_B == p.Q_B);
    CHECK(next.Q_S == p.Q_S);
    CHECK(next.pi_B == p.pi_B);
    CHECK(next.pi_S == p.pi_S);
    CHECK(next.alpha == p.alpha);
  }

  SUBCASE("statistics are scale free") {
    const ModelParams p = hand_params();
    SufficientStats st = stats_for({case_a(), case_b(), case_c()}, p, QsMode::kJoint);
    const ModelParams a = m_step(st, p);
    st *= 37.5;
    const ModelParams b = m_step(st, p);
    for (std::size_t k = 0; k < a.Q_B.size(); ++k) CHECK(max_abs_diff(a.Q_B[k], b.Q_B[k]) <= 1e-15);
    for (std::size_t k = 0; k < a.Q_S.size(); ++k) CHECK(max_abs_diff(a.Q_S[k], b.Q_S[k]) <= 1e-15);
    for (std::size_t k = 0; k < a.pi_B.size(); ++k) CHECK(max_abs_diff(a.pi_B[k], b.pi_B[k]) <= 1e-15);
    CHECK(max_abs_diff(a.pi_S[0], b.pi_S[0]) <= 1e-15);
  }

  SUBCASE("rows stay stochastic on random cohorts") {
    Rng rng(21, Rng::Domain::kTest, 0);
    for (int trial = 0; trial < 30; ++trial) {
      const StateSpaces s = random_spaces(rng);
      const ModelParams p = random_model(s, rng, 0.3);
      const Cohort cohort = random_cohort(s, 10, 12, rng);
      for (QsMode mode : {QsMode::kPaper, QsMode::kJoint}) {
        CHECK(rows_stochastic(m_step(stats_for(cohort, p, mode), p), 1e-12));
      }
    }
  }

  SUBCASE("joint mode does not decrease the expected complete log-likelihood") {
    Rng rng(22, Rng::Domain::kTest, 0);
    for (int trial = 0; trial < 30; ++trial) {
      const StateSpaces s = random_spaces(rng);
      const ModelParams p = random_model(s, rng);
      const Cohort cohort = random_cohort(s, 8, 10, rng);
      const auto posts = e_step(cohort, p);
      SufficientStats st(s);
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        accumulate(st, cohort[i], posts[i], p.alpha, QsMode::kJoint);
      }
      const ModelParams next = m_step(st, p);
      const double before = expected_complete_log_likelihood(cohort, posts, p, QsMode::kJoint);
      const double after = expected_complete_log_likelihood(cohort, posts, next, QsMode::kJoint);
      CHECK(after >= before - 1e-10);
    }
  }
}

TEST_CASE("statistics marginal identities") {
  Rng rng(23, Rng::Domain::kTest, 0);
  const StateSpaces s{3, 3, 2, 2, 2};
  const ModelParams p = random_model(s, rng);
  const Cohort cohort = random_cohort(s, 12, 9, rng);
  const SufficientStats st = stats_for(cohort, p, QsMode::kJoint);

  std::size_t transitions = 0;
  for (const DebtCase& c : cohort) transitions += c.length() - 1;
  double qs_total = 0.0, qb_total = 0.0;
  for (std::size_t k = 0; k < st.qs_num.size(); ++k) {
    qs_total += st.qs_num[k].sum();
    for (std::size_t r = 0; r < s.n_scheme; ++r) {
      const auto row = st.qs_num[k].row(r);
      CHECK(near(std::accumulate(row.begin(), row.end(), 0.0), st.qs_den[k][r], 1e-10));
    }
  }
  for (const Matrix& m : st.qb_num) qb_total += m.sum();
  CHECK(near(qs_total, static_cast<double>(transitions), 1e-9));
  CHECK(near(qb_total, static_cast<double>(transitions), 1e-9));
  const double pis_total = std::accumulate(st.pis_den.begin(), st.pis_den.end(), 0.0);
  CHECK(pis_total == static_cast<double>(cohort.size()));
  CHECK(near(std::accumulate(st.pib_den.begin(), st.pib_den.end(), 0.0),
             static_cast<double>(cohort.size()), 1e-10));
}

TEST_CASE("expected complete log-likelihood") {
  SUBCASE("single period") {
    const ModelParams p = hand_params();
    const DebtCase c = make_case("one", 0, {1}, {0}, {0.4});
    const auto posts = e_step({c}, p);
    const Distribution& g = posts[0].gamma[0];
    const double expected = g[0] * (std::log(0.4) + std::log(0.7)) +
                            g[1] * (std::log(0.7) + std::log(0.3));
    CHECK(near(expected_complete_log_likelihood({c}, posts, p, QsMode::kJoint), expected, 1e-14));
  }

  SUBCASE("single scheme equals the observed log-likelihood") {
    Rng rng(24, Rng::Domain::kTest, 0);
    const StateSpaces s{3, 1, 2, 2, 2};
    const ModelParams p = random_model(s, rng);
    const Cohort cohort = random_cohort(s, 5, 8, rng);
    const auto posts = e_step(cohort, p);
    double ll = 0.0;
    for (const auto& post : posts) ll += post.log_likelihood;
    CHECK(near(expected_complete_log_likelihood(cohort, posts, p, QsMode::kPaper), ll, 1e-12));
  }
}

TEST_CASE("alpha objective and scan") {
  const ModelParams p = hand_params();
  const Cohort cohort = {case_a(), case_b(), case_c()};
  const auto posts = e_step(cohort, p);

  SUBCASE("objective at fixed Q_B") {
    CHECK(near(alpha_objective(cohort, posts, 0.42, p.Q_B, p.spaces), -4.2604161442933455, 1e-12));
    CHECK(near(alpha_objective(cohort, posts, 0.6, p.Q_B, p.spaces), -5.260604027967648, 1e-12));
  }

  SUBCASE("scan refits Q_B per candidate") {
    const AlphaScanResult scan = alpha_scan(cohort, posts, {0.42, 0.6}, p);
    CHECK(near(scan.l1[0], -3.093009551670473, 1e-12));
    CHECK(near(scan.l1[1], -3.195402560524125, 1e-12));
    CHECK(scan.alpha == 0.42);
    CHECK(scan.best_index == 0);
    CHECK(rows_stochastic(ModelParams{p.spaces, scan.alpha, p.Q_S, p.pi_S, scan.Q_B, p.pi_B}, 1e-12));
  }

  SUBCASE("ties go to the smallest alpha") {
    // 0.61 and 0.65 classify every observed ratio identically.
    const AlphaScanResult scan = alpha_scan(cohort, posts, {0.65, 0.61, 0.42}, p);
    CHECK(scan.l1[0] == scan.l1[1]);
    if (scan.l1[0] >= scan.l1[2]) {
      CHECK(scan.alpha == 0.61);
    } else {
      CHECK(scan.alpha == 0.42);
    }
    const AlphaScanResult tied = alpha_scan(cohort, posts, {0.65, 0.61}, p);
    CHECK(tied.alpha == 0.61);
    CHECK(tied.best_index == 1);
  }

  SUBCASE("one-value grid") {
    const AlphaScanResult scan = alpha_scan(cohort, posts, {0.3}, p);
    CHECK(scan.alpha == 0.3);
    CHECK(scan.l1.size() == 1);
  }

  SUBCASE("empty grid") {
    CHECK_THROWS_AS(alpha_scan(cohort, posts, {}, p), std::invalid_argument);
  }

  SUBCASE("zero probability under positive weight is -infinity") {
    std::vector<Matrix> q = p.Q_B;
    for (Matrix& m : q) m = matrix({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(alpha_objective(cohort, posts, 0.5, q, p.spaces) ==
          -std::numeric_limits<double>::infinity());
  }

  SUBCASE("thread count does not change the scan") {
    const std::vector<double> grid = build_auto_grid(cohort);
    const AlphaScanResult one = alpha_scan(cohort, posts, grid, p, 1);
    const AlphaScanResult four = alpha_scan(cohort, posts, grid, p, 4);
    CHECK(one.l1 == four.l1);
    CHECK(one.Q_B == four.Q_B);
    CHECK(one.alpha == four.alpha);
  }
}

TEST_CASE("alpha scan agrees with the direct objective on random cohorts") {
  Rng rng(27, Rng::Domain::kTest, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const StateSpaces s = random_spaces(rng);
    const ModelParams p = random_model(s, rng);
    const Cohort cohort = random_cohort(s, 15, 8, rng);
    const auto posts = e_step(cohort, p);
    std::vector<double> grid;
    try {
      grid = build_auto_grid(cohort);
    } catch (const ValidationError&) {
      continue;  // every case has one period
    }
    const AlphaScanResult scan = alpha_scan(cohort, posts, grid, p);
    for (std::size_t g = 0; g < grid.size(); g += 3) {
      SufficientStats st(s);
      for (std::size_t i = 0; i < cohort.size(); ++i) accumulate_behaviour(st, cohort[i], posts[i], grid[g]);
      const std::vector<Matrix> bank = refit_behaviour(st, p.Q_B);
      CHECK(near(scan.l1[g], alpha_objective(cohort, posts, grid[g], bank, s), 1e-10));
      if (g == scan.best_index) {
        for (std::size_t k = 0; k < bank.size(); ++k) CHECK(max_abs_diff(bank[k], scan.Q_B[k]) <= 1e-12);
      }
    }
    for (double v : scan.l1) CHECK(v <= scan.l1[scan.best_index]);
  }
}

TEST_CASE("build_auto_grid") {
  SUBCASE("two distinct values") {
    const Cohort cohort = {make_case("x", 0, {0, 0, 0}, {0, 0, 0}, {0.2, 0.6, 5.0})};
    const std::vector<double> grid = build_auto_grid(cohort);
    REQUIRE(grid.size() == 3);
    CHECK(grid[0] == 0.1);
    CHECK(near(grid[1], 0.4, 1e-15));
    CHECK(grid[2] == 1.2);
  }

  SUBCASE("identical ratios") {
    const Cohort cohort = {make_case("x", 0, {0, 0, 0}, {0, 0, 0}, {0.3, 0.3, 0.9})};
    CHECK(build_auto_grid(cohort) == std::vector<double>{0.15, 0.6});
  }

  SUBCASE("duplicates and order do not matter") {
    const Cohort a = {make_case("x", 0, {0, 0, 0, 0}, {0, 0, 0, 0}, {0.5, 0.2, 0.5, 1.0}),
                      make_case("y", 0, {0, 0}, {0, 0}, {0.2, 1.0})};
    const Cohort b = {make_case("y", 0, {0, 0, 0}, {0, 0, 0}, {0.5, 0.2, 3.0})};
    CHECK(build_auto_grid(a) == build_auto_grid(b));
  }

  SUBCASE("one grid point per classification") {
    Rng rng(25, Rng::Domain::kTest, 0);
    const StateSpaces s{2, 2, 1, 1, 1};
    const Cohort cohort = random_cohort(s, 6, 6, rng);
    const std::vector<double> grid = build_auto_grid(cohort);
    std::vector<std::vector<int>> seen;
    for (double a : grid) {
      std::vector<int> cls;
      for (const DebtCase& c : cohort) {
        for (std::size_t k = 0; k + 1 < c.length(); ++k) cls.push_back(classify_debt_ratio(c.D[k], a));
      }
      for (const auto& prev : seen) CHECK(prev != cls);
      seen.push_back(cls);
    }
  }

  SUBCASE("no transitions") {
    const Cohort cohort = {make_case("x", 0, {0}, {0}, {0.3})};
    CHECK_THROWS_AS(build_auto_grid(cohort), ValidationError);
  }
}

TEST_CASE("fit") {
  Rng rng(26, Rng::Domain::kTest, 0);
  const StateSpaces s{2, 2, 2, 2, 2};
  const ModelParams truth = random_model(s, rng);
  const Cohort cohort = random_cohort(s, 40, 10, rng);

  FitConfig config;
  config.max_iterations = 25;
  config.qs_mode = QsMode::kJoint;
  config.seed = 9;
  config.n_restarts = 2;

  SUBCASE("deterministic given the seed") {
    const FitReport a = fit(cohort, s, config);
    const FitReport b = fit(cohort, s, config);
    CHECK(a.params == b.params);
    CHECK(a.loglik_trace == b.loglik_trace);
  }

  SUBCASE("thread count does not change the result") {
    const FitReport a = fit(cohort, s, config);
    config.n_threads = 3;
    const FitReport b = fit(cohort, s, config);
    CHECK(a.params == b.params);
    CHECK(a.loglik_trace == b.loglik_trace);
  }

  SUBCASE("joint mode log-likelihood never decreases") {
    config.loglik_rel_tol = 1e-12;
    const FitReport rep = fit(cohort, s, config);
    for (std::size_t i = 1; i < rep.loglik_trace.size(); ++i) {
      CHECK(rep.loglik_trace[i] >= rep.loglik_trace[i - 1] - 1e-8);
    }
    CHECK(rep.final_log_likelihood >= rep.loglik_trace.back() - 1e-8);
    CHECK(rep.restart_log_likelihoods.size() == 2);
  }

  SUBCASE("observer sees stochastic parameters") {
    std::size_t calls = 0;
    const FitReport rep = fit_from(cohort, truth, config, [&](const ModelParams& p, std::size_t it) {
      ++calls;
      CHECK(it == calls);
      CHECK(rows_stochastic(p, 1e-12));
    });
    CHECK(calls == rep.iterations);
  }

  SUBCASE("single scheme reaches its fixed point after one M-step") {
    const StateSpaces one{2, 1, 2, 2, 2};
    FitConfig c1 = config;
    c1.alpha_grid = std::vector<double>{0.7};
    c1.n_restarts = 1;
    std::vector<ModelParams> seen;
    const FitReport rep = fit(cohort, one, c1, [&](const ModelParams& p, std::size_t) { seen.push_back(p); });
    CHECK(rep.converged);
    REQUIRE(seen.size() == 2);
    for (std::size_t k = 0; k < seen[0].Q_B.size(); ++k) {
      CHECK(max_abs_diff(seen[0].Q_B[k], seen[1].Q_B[k]) <= 1e-14);
    }
    for (std::size_t k = 0; k < seen[0].pi_B.size(); ++k) {
      CHECK(max_abs_diff(seen[0].pi_B[k], seen[1].pi_B[k]) <= 1e-14);
    }
    CHECK(near(rep.loglik_trace[1], rep.loglik_trace[2], 1e-9));
  }

  SUBCASE("bad configuration") {
    config.n_restarts = 0;
    CHECK_THROWS_AS(fit(cohort, s, config), ValidationError);
    config.n_restarts = 1;
    config.alpha_grid = std::vector<double>{0.5, 0.4};
    CHECK_THROWS_AS(fit(cohort, s, config), ValidationError);
  }

  SUBCASE("impossible start is a degenerate likelihood") {
    // Identity Q_B cannot explain B moving from 0 to 1.
    ModelParams bad = truth;
    for (Matrix& m : bad.Q_B) m = matrix({{1.0, 0.0}, {0.0, 1.0}});
    const Cohort moving = {make_case("m", 0, {0, 1}, {0, 0}, {0.3, 0.3})};
    CHECK_THROWS_AS(fit_from(moving, bad, config), DegenerateLikelihoodError);
  }
}
