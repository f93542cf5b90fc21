#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sdcam/diagnostics.hpp"
#include "sdcam/problems.hpp"
#include "sdcam/solver.hpp"
#include "test_util.hpp"

using namespace sdcam;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// f = <a, x>, g = h = 0, c(x) = x.^2.
Problem square_map_problem(const Vector& a) {
  Problem p = test::identity_problem(a.size());
  p.f.eval = [a](const Vector& x) { return a.dot(x); };
  p.f.grad = [a](const Vector&) { return a; };
  p.c.eval = [](const Vector& x) { return Vector(x.array().square()); };
  p.c.vjp = [](const Vector& x, const Vector& w) { return Vector(2.0 * x.cwiseProduct(w)); };
  return p;
}

struct Step {
  Vector x_t, x_next, y_t;
  double beta_prev = 0.0;
  TraceRow row;
};

// Runs `count` accepted steps keeping the iterates each row was produced from.
std::vector<Step> record(const RunSetup& s, const SolverConfig& cfg, int count) {
  std::vector<Step> out;
  SolverState st = initial_state(s.problem, cfg, s.x0, s.y0);
  double beta_prev = beta_at(cfg.schedule, 0);
  while (static_cast<int>(out.size()) < count) {
    const Vector x_t = st.x, y_t = st.y;
    StepResult r = step(s.problem, st, cfg, s.metric);
    st = std::move(r.state);
    if (!r.row) continue;
    out.push_back({x_t, st.x, y_t, beta_prev, *r.row});
    beta_prev = r.row->beta_t;
  }
  return out;
}

}  // namespace

TEST_CASE("stationarity_residual examples") {
  SUBCASE("no movement and equal betas cancel") {
    const Problem p = square_map_problem(vec({1.5, -0.5}));
    const Vector x = vec({0.7, -1.2}), y = vec({0.1, 0.3});
    const double r = stationarity_residual(p, x, x, y, 0.8, 2.0, 2.0);
    CHECK(r <= 1e-12 * (1.0 + p.f.grad(x).norm()));
  }
  SUBCASE("c(x^t) = y^t leaves the gradient difference") {
    Problem p = test::identity_problem(2);
    const Vector x = vec({1.0, 2.0}), xn = vec({0.5, 1.0});
    const double mu = 0.25;
    const double r = stationarity_residual(p, x, xn, p.c.eval(x), mu, 3.0, 1.0);
    const Vector expect = p.f.grad(xn) - p.f.grad(x) - (2.0 / mu) * (xn - x);
    CHECK(r == doctest::Approx(expect.norm()).epsilon(1e-14));
  }
}

TEST_CASE("qcqp first-step residual against a scalar reassembly") {
  const auto inst = qcqp_generate(1, {});
  const RunSetup s = make_setup(inst);
  SolverConfig cfg = default_solver_config("qcqp");
  const auto steps = record(s, cfg, 1);
  const Step& st = steps[0];
  const Index n = inst.params.n, m = inst.params.m;

  std::vector<double> c_t(m), qx_t(m * n), qx_n(m * n);
  for (Index i = 0; i < m; ++i) {
    double ci = inst.r_i(i);
    for (Index a = 0; a < n; ++a) {
      double qa = 0.0, qn = 0.0;
      for (Index b = 0; b < n; ++b) {
        qa += inst.Q[i](a, b) * st.x_t(b);
        qn += inst.Q[i](a, b) * st.x_next(b);
      }
      qx_t[i * n + a] = qa;
      qx_n[i * n + a] = qn;
      ci += 0.5 * st.x_t(a) * qa;
    }
    c_t[i] = ci;
  }
  double sq = 0.0;
  for (Index a = 0; a < n; ++a) {
    const double grad_t = st.x_t(a) + inst.b0(a);
    const double grad_n = st.x_next(a) + inst.b0(a);
    double jt_gap = 0.0, jt_xi = 0.0;
    for (Index i = 0; i < m; ++i) {
      jt_gap += qx_t[i * n + a] * (c_t[i] - st.y_t(i));
      jt_xi += qx_t[i * n + a] * st.beta_prev * (c_t[i] - st.y_t(i));
    }
    const double psi = -grad_t - st.row.beta_t * jt_gap -
                       (2.0 / st.row.mu_t) * (st.x_next(a) - st.x_t(a));
    const double comp = grad_n + psi + jt_xi;
    sq += comp * comp;
  }
  CHECK(st.row.residual == doctest::Approx(std::sqrt(sq)).epsilon(1e-9));
}

TEST_CASE("certificate examples") {
  const Problem p = square_map_problem(vec({1.0, -2.0}));
  // Dyadic values keep every product exact.
  const Vector x = vec({0.5, 1.0});
  const Vector xi = vec({0.25, -0.5});
  const Vector psi = -p.f.grad(x) - p.c.vjp(x, xi);
  const auto exact = certificate(p, x, p.c.eval(x), x, psi, xi, 0.0, 0.0, 0.0);
  CHECK(exact.pass);
  CHECK(exact.d1 == 0.0);
  CHECK(exact.d2 == 0.0);
  CHECK(exact.d3 == 0.0);

  const Vector z = vec({0.625, 1.0});
  const auto off = certificate(p, x, p.c.eval(x), z, psi, xi, 1e9, 1e9, 0.0);
  CHECK_FALSE(off.pass);
  CHECK(off.d3 == 0.125);
}

TEST_CASE("certificates of accepted steps equal the trace fields bitwise") {
  const Instance cases[] = {qcqp_generate(1, {}), mimo_generate(0, {}), mlp_generate(0, {})};
  for (const auto& inst : cases) {
    const RunSetup s = make_setup(inst);
    const SolverConfig cfg = default_solver_config(family_of(inst));
    for (const Step& st : record(s, cfg, 25)) {
      const auto w = subproblem_witnesses(s.problem, st.x_t, st.x_next, st.y_t, st.row.mu_t,
                                          st.row.beta_t, st.beta_prev);
      const auto cert = certificate(s.problem, st.x_next, st.y_t, st.x_t, w.psi, w.xi, 1.0, 1.0, 1.0);
      CHECK(cert.d1 == st.row.residual);
      CHECK(cert.d2 == st.row.prev_gap);
      CHECK(cert.d3 == st.row.step_norm);
      CHECK(stationarity_residual(s.problem, st.x_t, st.x_next, st.y_t, st.row.mu_t,
                                  st.row.beta_t, st.beta_prev) == st.row.residual);
    }
  }
}

TEST_CASE("select_subsequence examples") {
  const std::vector<double> a{4, 2, 3, 1};
  CHECK(running_averages(a) == std::vector<double>{4, 3, 3, 2.5});
  CHECK(select_subsequence(a) == std::vector<std::int64_t>{2, 3, 4});

  const std::vector<double> flat(7, 2.5);
  CHECK(select_subsequence(flat) == std::vector<std::int64_t>{2, 3, 4, 5, 6, 7});

  const std::vector<double> rising{1, 2, 4, 8, 16};
  CHECK(select_subsequence(rising).empty());
  CHECK(select_subsequence(std::vector<double>{5.0}).empty());
}

TEST_CASE("select_subsequence certifies a_T <= b_{T-1} on random lists") {
  std::mt19937_64 gen(42);
  std::uniform_int_distribution<int> len(1, 200);
  std::uniform_real_distribution<double> val(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(static_cast<std::size_t>(len(gen)));
    for (auto& v : a) v = trial % 3 == 0 ? std::floor(val(gen)) : val(gen);
    const auto idx = select_subsequence(a);
    // Independent running sums.
    std::vector<double> b(a.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      sum += a[k];
      b[k] = sum / static_cast<double>(k + 1);
    }
    std::size_t next = 0;
    for (std::size_t T = 2; T <= a.size(); ++T) {
      const bool selected = next < idx.size() && idx[next] == static_cast<std::int64_t>(T);
      if (selected) {
        CHECK(a[T - 1] <= b[T - 2]);
        ++next;
      } else {
        CHECK(a[T - 1] > b[T - 2]);
      }
    }
    CHECK(next == idx.size());
  }
}

TEST_CASE("suggest_delta") {
  for (double e : {0.5, 1e-2, 1e-6, 0.999}) CHECK(suggest_delta(e, e) == 1.0 / 3.0);
  CHECK(suggest_delta(1e-2, 1e-4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(suggest_delta(1e-3, 1.0 - 1e-12) < 1e-9);
  CHECK_THROWS_AS(suggest_delta(1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(suggest_delta(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("H and Theta") {
  SUBCASE("stationary feasible point") {
    Problem p = test::identity_problem(2);
    p.f.eval = [](const Vector&) { return -3.0; };
    const Vector x = vec({1.0, 1.0});
    CHECK(theta_value(p, x, 2.0, x, -3.0) == 0.0);
    CHECK(H_value(p, x, 2.0, x) == -3.0);
  }
  SUBCASE("doubling beta halves the scaled terms") {
    Problem p = test::identity_problem(2);
    p.h.eval = [](const Vector& y) { return ExtendedReal(y.lpNorm<1>()); };
    const Vector x = vec({1.0, -2.0}), y = vec({0.5, 0.5});
    const double inf_fg = -1.0;
    const double quad = 0.5 * (x - y).squaredNorm();
    const double t1 = theta_value(p, x, 1.0, y, inf_fg) - quad;
    const double t2 = theta_value(p, x, 2.0, y, inf_fg) - quad;
    CHECK(t2 == doctest::Approx(t1 / 2.0).epsilon(1e-15));
  }
  SUBCASE("infeasible inputs throw") {
    const auto inst = qcqp_generate(1, {});
    const Problem p = qcqp_problem(inst);
    CHECK_THROWS(H_value(p, Vector::Zero(p.n), 1.0, Vector::Ones(p.m)));
    CHECK_THROWS(theta_value(p, Vector::Constant(p.n, 2.0 * inst.r), 1.0, Vector::Zero(p.m), 0.0));
  }
  SUBCASE("qcqp seed 1 at x0 against a scalar recomputation") {
    const auto inst = qcqp_generate(1, {});
    const RunSetup s = make_setup(inst);
    const Vector& x = s.x0;
    const Index n = inst.params.n;
    double fg = 0.0;
    for (Index i = 0; i < n; ++i)
      fg += 0.5 * x(i) * x(i) + inst.b0(i) * x(i) + 0.05 * std::pow(std::abs(x(i)), 0.8);
    double gap_sq = 0.0;
    for (Index k = 0; k < inst.params.m; ++k) {
      double ck = inst.r_i(k);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) ck += 0.5 * x(i) * inst.Q[k](i, j) * x(j);
      gap_sq += ck * ck;
    }
    const double beta = 0.7, inf_fg = *s.problem.inf_fg_lower_bound;
    CHECK(H_value(s.problem, x, beta, s.y0) == doctest::Approx(fg + 0.5 * beta * gap_sq).epsilon(1e-12));
    CHECK(theta_value(s.problem, x, beta, s.y0, inf_fg) ==
          doctest::Approx((fg - inf_fg) / beta + 0.5 * gap_sq).epsilon(1e-12));
  }
  CHECK(theta_nonincreasing(1.0, 1.0));
  CHECK(theta_nonincreasing(1.0, 1.0 + 5e-8));
  CHECK_FALSE(theta_nonincreasing(1.0, 1.0 + 1e-6));
}

TEST_CASE("rate constants: provenance and dependency rules") {
  Problem p = test::identity_problem(2);
  p.inf_fg_lower_bound = -1.0;
  ScheduleSpec sched;
  sched.beta0 = 2.0;
  sched.delta = 0.4;

  SUBCASE("M0 reduces to the initial gap") {
    RunStart start{3.0, 0.0, -1.0, 0.0};
    const auto k = rate_constants(p, sched, 0.5, 10.0, start);
    REQUIRE(k.M0.available());
    CHECK(*k.M0 == 3.0);
    CHECK(k.M0.provenance == Provenance::computed);
    CHECK(k.L.provenance == Provenance::user_supplied);
    CHECK(*k.alpha0 == 2.0);
    CHECK(*k.gamma0 == 2.0);
  }
  SUBCASE("M0 from the second argument") {
    RunStart start{0.5, 0.25, 0.0, 1.0};
    const auto k = rate_constants(p, sched, 0.5, 10.0, start);
    const double inner = 4.0 / 2.0 * (0.0 + 1.0) + 2.0 * 1.0 + 4.0 / 2.0 * 0.25;
    CHECK(*k.M0 == doctest::Approx(std::sqrt(inner)));
    CHECK(*k.M0 >= start.initial_gap);
  }
  SUBCASE("missing M_h leaves K0 and lambda1 unavailable") {
    const auto k = rate_constants(p, sched, 0.5, 10.0, RunStart{1.0, 0.0, 0.0, 0.5});
    CHECK_FALSE(k.M_h.available());
    CHECK_FALSE(k.K0.available());
    CHECK_FALSE(k.lambda1.available());
    CHECK(k.K0.provenance == Provenance::unavailable);
    CHECK(std::find(k.K0.missing.begin(), k.K0.missing.end(), "M_h") != k.K0.missing.end());
    CHECK(k.M1.available());
  }
  SUBCASE("missing inf bound propagates to M0, M1 and K0") {
    p.inf_fg_lower_bound.reset();
    p.h_lipschitz_bound = 1.0;
    const auto k = rate_constants(p, sched, 0.5, 10.0, RunStart{1.0, 0.0, 0.0, 0.5});
    CHECK_FALSE(k.M0.available());
    CHECK_FALSE(k.M1.available());
    CHECK_FALSE(k.K0.available());
    CHECK(k.K0.missing == std::vector<std::string>{"inf_fg_lower_bound"});
  }
  SUBCASE("lambda6 needs delta below one half") {
    sched.delta = 0.5;
    const auto k = rate_constants(p, sched, 0.5, 10.0, RunStart{1.0, 0.0, 0.0, 0.5});
    CHECK_FALSE(k.lambda6.available());
  }
}

TEST_CASE("rate constants on qcqp: M0 bounds the initial gap") {
  const auto inst = qcqp_generate(1, {});
  const RunSetup s = make_setup(inst);
  SolverConfig cfg = default_solver_config("qcqp");
  cfg.max_successful_iters = 5;
  const auto res = solve(s.problem, cfg, s.x0, s.y0, s.metric);
  const auto k = rate_constants(s.problem, cfg, res);
  CHECK(*k.M0 >= (s.problem.c.eval(s.x0) - s.y0).norm());
  CHECK(*k.L == 1.0);
  CHECK(k.M_c.provenance == Provenance::user_supplied);
}

TEST_CASE("rate_bound_check on the mimo run matches an independent sum") {
  const auto inst = mimo_generate(0, {});
  const RunSetup s = make_setup(inst);
  SolverConfig cfg = default_solver_config("mimo");
  cfg.max_successful_iters = 300;
  const auto res = solve(s.problem, cfg, s.x0, s.y0, s.metric);
  const auto k = rate_constants(s.problem, cfg, res);
  const auto rep = rate_bound_check(res.trace, k, Regime::lipschitz_h);
  CHECK(rep.checkable());
  CHECK(rep.ok());
  CHECK(rep.was_checked("lip_avg_inv_mu"));
  CHECK(rep.was_checked("mu_lower_bound"));
  double sum = 0.0;
  for (std::size_t T = 1; T < res.trace.size(); ++T) {
    const auto& r = res.trace[T];
    sum += r.step_norm * r.step_norm / r.mu_t;
    CHECK(sum / T <= 2.0 * *k.K0 / T);
  }
}

TEST_CASE("rate_bound_check on the mlp run: gap bound per iteration") {
  const auto inst = mlp_generate(0, {});
  const RunSetup s = make_setup(inst);
  SolverConfig cfg = default_solver_config("mlp");
  cfg.max_successful_iters = 300;
  const auto res = solve(s.problem, cfg, s.x0, s.y0, s.metric);
  const auto k = rate_constants(s.problem, cfg, res);
  const auto rep = rate_bound_check(res.trace, k, Regime::full_domain_h);
  CHECK(rep.was_checked("fd_gap_sq"));
  CHECK(rep.ok());
  for (const auto& r : res.trace) CHECK(r.gap * r.gap <= 2.0 * *k.M3 / r.beta_t);
}

TEST_CASE("rate_bound_check edge cases") {
  const auto inst = mimo_generate(1, {});
  const RunSetup s = make_setup(inst);
  SolverConfig cfg = default_solver_config("mimo");
  cfg.max_successful_iters = 2;
  const auto res = solve(s.problem, cfg, s.x0, s.y0, s.metric);
  const auto k = rate_constants(s.problem, cfg, res);

  SUBCASE("a single horizon") {
    const auto rep = rate_bound_check(res.trace, k, Regime::lipschitz_h);
    CHECK(rep.ok());
    CHECK(rep.evaluations > 0);
  }
  SUBCASE("an inflated step is reported") {
    Trace bad = res.trace;
    bad[1].step_norm = 1e6;
    bad[1].scaled_step = 1e6 / bad[1].mu_t;
    const auto rep = rate_bound_check(bad, k, Regime::lipschitz_h);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations.front().T == 1);
    CHECK(rep.violations.front().lhs > rep.violations.front().rhs);
  }
  SUBCASE("no constants: not checkable, missing inputs listed") {
    Problem bare = test::identity_problem(2);
    bare.f.lipschitz_bound.reset();
    bare.c.jac_lipschitz_bound.reset();
    bare.c.jac_norm_bound.reset();
    const auto kb = rate_constants(bare, cfg.schedule, cfg.rho, cfg.mu_max, run_start(res));
    const auto rep = rate_bound_check(res.trace, kb, Regime::lipschitz_h);
    CHECK_FALSE(rep.checkable());
    REQUIRE_FALSE(rep.skipped.empty());
    CHECK_FALSE(rep.skipped.front().missing.empty());
  }
  CHECK(parse_regime("full_domain_h") == Regime::full_domain_h);
  CHECK_THROWS_AS(parse_regime("other"), std::invalid_argument);
}
