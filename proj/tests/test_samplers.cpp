#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "langevin/error.hpp"
#include "langevin/samplers.hpp"

using namespace langevin;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

SpdMatrix eye(Eigen::Index d) { return SpdMatrix::identity(d); }

TargetDensity std_normal(Eigen::Index d) {
  return gaussian_target(Vector::Zero(d), Matrix::Identity(d, d));
}

}  // namespace

TEST_CASE("propose examples") {
  const auto t1 = std_normal(1);
  const ProposalSpec mala(SamplerKind::Mala, 0.5, eye(1));
  const ProposalSpec mrw(SamplerKind::Mrw, 0.5, eye(1));

  const auto at_mode = make_state(std_normal(2), vec({0.0, 0.0}));
  CHECK(propose(at_mode, ProposalSpec(SamplerKind::Mala, 0.3, eye(2)), vec({0.0, 0.0})) == vec({0.0, 0.0}));
  CHECK(propose(make_state(t1, vec({1.0})), mala, vec({0.0})) == vec({0.5}));
  CHECK(propose(make_state(t1, vec({0.0})), mrw, vec({1.0})) == vec({1.0}));
}

TEST_CASE("log_q examples") {
  const auto t1 = std_normal(1);
  const ProposalSpec mrw(SamplerKind::Mrw, 0.5, eye(1));
  CHECK(log_q(mrw, t1, vec({0.3}), vec({0.3})) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(log_q(mrw, t1, vec({0.3}), vec({0.3})) == doctest::Approx(-0.9189).epsilon(1e-4));

  const ProposalSpec mala(SamplerKind::Mala, 0.5, eye(1));
  CHECK(log_q(mala, t1, vec({0.0}), vec({0.7})) == log_q(mrw, t1, vec({0.0}), vec({0.7})));

  RngStream rng(9, 0);
  for (int i = 0; i < 100; ++i) {
    const Vector a = vec({rng.normal()}), b = vec({rng.normal()});
    CHECK(log_q(mrw, t1, a, b) == log_q(mrw, t1, b, a));
  }
}

TEST_CASE("acceptance examples") {
  const auto t1 = std_normal(1);
  const ProposalSpec mala(SamplerKind::Mala, 0.5, eye(1));
  CHECK(log_acceptance_ratio(t1, mala, vec({0.0}), vec({1.0})) == doctest::Approx(-0.125).epsilon(1e-14));
  CHECK(acceptance(t1, mala, vec({0.0}), vec({1.0})) == doctest::Approx(std::exp(-0.125)));
  CHECK(acceptance(t1, mala, vec({0.0}), vec({1.0})) == doctest::Approx(0.8825).epsilon(1e-4));

  const ProposalSpec mrw(SamplerKind::Mrw, 0.5, eye(1));
  CHECK(acceptance(t1, mrw, vec({0.0}), vec({1.0})) == doctest::Approx(std::exp(-0.5)));
  CHECK(acceptance(t1, mrw, vec({1.0}), vec({0.0})) == 1.0);

  Box box{vec({-1.0}), vec({1.0})};
  const TargetDensity boxed(1, [](const Vector& x, Vector* g) {
    if (g) *g = x;
    return 0.5 * x.squaredNorm();
  }, box);
  CHECK(acceptance(boxed, mrw, vec({0.0}), vec({2.0})) == 0.0);
  CHECK(acceptance(boxed, mala, vec({0.0}), vec({2.0})) == 0.0);
  CHECK_THROWS_AS(acceptance(boxed, mrw, vec({2.0}), vec({0.0})), InvalidState);
}

TEST_CASE("proposal spec validation") {
  CHECK_THROWS_AS(ProposalSpec(SamplerKind::Mala, 0.1, eye(1), 1.0), InvalidInput);
  CHECK_THROWS_AS(ProposalSpec(SamplerKind::Mala, 0.1, eye(1), 0.51), InvalidInput);
  CHECK_THROWS_AS(ProposalSpec(SamplerKind::Mala, 0.0, eye(1)), InvalidInput);
  CHECK_NOTHROW(ProposalSpec(SamplerKind::Mala, 0.1, eye(1), 0.5));
  CHECK(sampler_kind_from_string("mrw") == SamplerKind::Mrw);
  CHECK_THROWS_AS(sampler_kind_from_string("hmc"), InvalidInput);
}

TEST_CASE("downhill symmetric move is always accepted") {
  const auto t1 = std_normal(1);
  const ProposalSpec mrw(SamplerKind::Mrw, 0.5, eye(1));
  CHECK(acceptance(t1, mrw, vec({3.0}), vec({0.5})) == 1.0);
  ChainState s = make_state(t1, vec({3.0}));
  RngStream rng(1, 0);
  // Replay the lazy uniform and the normal to recover the candidate.
  ChainState probe = s;
  RngStream copy = rng;
  copy.uniform();
  const Vector y = propose(probe, mrw, copy);
  step(s, mrw, t1, rng);
  if (std::abs(y[0]) < 3.0) CHECK(s.theta == y);
}

TEST_CASE("step consumes draws in the documented order") {
  const auto t = std_normal(2);
  const ProposalSpec spec(SamplerKind::Mala, 0.4, eye(2), 0.3);
  ChainState s = make_state(t, vec({0.5, -0.5}));
  RngStream a(17, 2), b(17, 2);
  for (int k = 0; k < 200; ++k) {
    const Vector before = s.theta;
    const auto ev = step(s, spec, t, a);
    const double lazy_u = b.uniform();
    if (lazy_u < 0.3) {
      CHECK(ev == StepEvent::LazyHold);
      CHECK(s.theta == before);
      continue;
    }
    ChainState prev = make_state(t, before);
    const Vector y = propose(prev, spec, b);
    const double acc = acceptance(t, spec, before, y);
    const double u = b.uniform();
    CHECK(ev == (u <= acc ? StepEvent::Accepted : StepEvent::Rejected));
    CHECK(s.theta == (u <= acc ? y : before));
  }
}

TEST_CASE("lazy fraction") {
  const auto t = std_normal(1);
  const ProposalSpec spec(SamplerKind::Mrw, 0.5, eye(1), 0.5);
  const auto tr = run_chain(t, spec, vec({0.0}), 100000, 1, 4);
  const double frac = static_cast<double>(tr.lazy_holds) / 1e5;
  CHECK(std::abs(frac - 0.5) <= 0.01);
  CHECK(tr.accepted + tr.rejected + tr.lazy_holds == 100000);
}

TEST_CASE("run_chain length, thinning and determinism") {
  const auto t = std_normal(3);
  const ProposalSpec spec(SamplerKind::Mala, 0.3, eye(3));
  const auto one = run_chain(t, spec, Vector::Zero(3), 1, 1, 1);
  CHECK(one.length() == 1);
  const auto a = run_chain(t, spec, Vector::Zero(3), 1000, 10, 5, 3);
  const auto b = run_chain(t, spec, Vector::Zero(3), 1000, 10, 5, 3);
  CHECK(a.length() == 100);
  CHECK(a.samples == b.samples);
  CHECK(a.events == b.events);
  CHECK(a.accepted == b.accepted);
  const auto c = run_chain(t, spec, Vector::Zero(3), 1000, 10, 5, 4);
  CHECK(a.samples != c.samples);

  const auto many = run_chains(t, spec, {Vector::Zero(3), Vector::Ones(3)}, 500, 1, 5);
  REQUIRE(many.size() == 2);
  CHECK(many[1].samples == run_chain(t, spec, Vector::Ones(3), 500, 1, 5, 1).samples);

  Box box{Vector::Constant(3, -1.0), Vector::Constant(3, 1.0)};
  const TargetDensity boxed(3, [](const Vector& x, Vector* g) {
    if (g) *g = x;
    return 0.5 * x.squaredNorm();
  }, box);
  CHECK_THROWS_AS(run_chain(boxed, spec, Vector::Constant(3, 2.0), 10, 1, 1), InvalidState);
  CHECK_THROWS_AS(run_chain(t, spec, Vector::Zero(2), 10, 1, 1), InvalidInput);
}

TEST_CASE("mala and mrw recover gaussian moments") {
  const Vector mu = vec({1.0, -2.0});
  Matrix prec(2, 2);
  prec << 2.0, 0.5, 0.5, 1.0;
  const auto t = gaussian_target(mu, prec);
  const Matrix cov = prec.inverse();
  for (auto kind : {SamplerKind::Mala, SamplerKind::Mrw}) {
    const ProposalSpec spec(kind, kind == SamplerKind::Mala ? 0.4 : 0.8, eye(2));
    const auto tr = run_chain(t, spec, mu, 100000, 1, 12);
    const Vector mean = tr.samples.colwise().mean().transpose();
    const Matrix centered = tr.samples.rowwise() - mean.transpose();
    const Matrix emp = centered.transpose() * centered / static_cast<double>(tr.length());
    CHECK((mean - mu).cwiseAbs().maxCoeff() <= 0.05);
    CHECK((emp - cov).cwiseAbs().maxCoeff() <= 0.05);
  }
}

TEST_CASE("one step from exact draws preserves the law") {
  const auto t = std_normal(1);
  const ProposalSpec spec(SamplerKind::Mala, 1.0, eye(1), 0.2);
  RngStream init(30, 0), rng(30, 1);
  const int n = 10000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    ChainState s = make_state(t, vec({init.normal()}));
    step(s, spec, t, rng);
    s1 += s.theta[0];
    s2 += s.theta[0] * s.theta[0];
  }
  // 6 sigma bands for N(0, 1).
  CHECK(std::abs(s1 / n) <= 6.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) <= 6.0 * std::sqrt(2.0 / n));
}

TEST_CASE("preconditioned chain is the plain chain in transformed coordinates") {
  Matrix g = Matrix::Zero(2, 2);
  g.diagonal() << 2.0, 0.5;
  const SpdMatrix precond(Matrix(g * g));
  Matrix prec(2, 2);
  prec << 0.3, 0.1, 0.1, 2.0;
  const auto target = gaussian_target(vec({0.5, 1.0}), prec);
  const TargetDensity pulled(2, [&](const Vector& xi, Vector* grad) {
    Vector gt;
    const double u = target.evaluate(g * xi, gt);
    if (grad) *grad = g.transpose() * gt;
    return u;
  });
  for (auto kind : {SamplerKind::Mala, SamplerKind::Mrw}) {
    const ProposalSpec pre(kind, 0.3, precond);
    const ProposalSpec plain(kind, 0.3, eye(2));
    const Vector xi0 = vec({0.25, -1.5});
    const auto a = run_chain(target, pre, g * xi0, 10000, 1, 77);
    const auto b = run_chain(pulled, plain, xi0, 10000, 1, 77);
    const Matrix mapped = b.samples * g.transpose();
    CHECK(a.samples == mapped);
    CHECK(a.events == b.events);
  }
}

TEST_CASE("mala_step_size") {
  StepSizeInputs in;
  in.dim = 1.0;
  in.warmness = std::exp(1.0);
  in.tolerance = 1.0;
  CHECK(mala_step_size(in) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  StepSizeInputs clamped;
  for (double d : {1.0, 8.0, 27.0, 1000.0}) {
    clamped.dim = d;
    clamped.warmness = clamped.tolerance / (2.0 * d);
    CHECK(mala_step_size(clamped) == doctest::Approx(1.0 / std::cbrt(d)));
  }

  StepSizeInputs base;
  base.dim = 5.0;
  base.warmness = 3.0;
  base.radius = 2.0;
  StepSizeInputs doubled = base;
  doubled.rho2 = 2.0;
  CHECK(mala_step_size(doubled) == doctest::Approx(0.5 * mala_step_size(base)));
  double prev = mala_step_size(base);
  for (double d : {10.0, 20.0, 40.0, 80.0}) {
    base.dim = d;
    const double h = mala_step_size(base);
    CHECK(h < prev);
    prev = h;
  }
  base.grad_error = 0.1;
  CHECK(mala_step_size(base) < prev);

  StepSizeInputs bad;
  bad.c0 = 0.0;
  CHECK_THROWS_AS(mala_step_size(bad), InvalidInput);
  bad = StepSizeInputs{};
  bad.tolerance = -1.0;
  CHECK_THROWS_AS(mala_step_size(bad), InvalidInput);
}

TEST_CASE("tune_c0 lands in the band") {
  const auto t = std_normal(4);
  const auto res = tune_c0(t, SamplerKind::Mala, 1.0, eye(4), Vector::Zero(4), 2000, 3, 0.5, 0.7);
  CHECK(res.in_band);
  CHECK(res.acceptance_rate >= 0.5);
  CHECK(res.acceptance_rate <= 0.7);
  CHECK_THROWS_AS(tune_c0(t, SamplerKind::Mala, 1.0, eye(4), Vector::Zero(4), 0, 3), InvalidInput);
  CHECK_THROWS_AS(tune_c0(t, SamplerKind::Mala, 1.0, eye(4), Vector::Zero(4), 10, 3, 0.7, 0.5),
                  InvalidInput);
}

TEST_CASE("warm start sampling") {
  Matrix p(2, 2);
  p << 4.0, 1.0, 1.0, 2.0;
  WarmStartSpec ws{vec({1.0, -1.0}), 25.0, SpdMatrix(p)};
  RngStream a(5, 0), b(5, 0);
  const Vector x = warm_start_sample(ws, a);
  const Vector z = vec({b.normal(), b.normal()});
  CHECK((x - (ws.center + ws.precond.sqrt() * z / 5.0)).cwiseAbs().maxCoeff() <= 1e-14);

  ws.radius = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector y = warm_start_sample(ws, a);
    CHECK((ws.precond.inv_sqrt() * (y - ws.center) * 5.0).norm() <= 1.0 + 1e-12);
  }

  ws.radius = 0.001;
  CHECK_THROWS_AS(warm_start_sample(ws, a), InvalidInput);
}

TEST_CASE("wide truncation rarely rejects") {
  const Eigen::Index d = 3;
  const double radius = std::sqrt(3.0) + 6.0;
  RngStream rng(6, 0);
  int inside = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = rng.normal();
    if (z.norm() <= radius) ++inside;
  }
  CHECK(inside >= static_cast<int>(0.99 * trials));
  WarmStartSpec ws{Vector::Zero(d), 1.0, eye(d), radius};
  CHECK_NOTHROW(warm_start_sample(ws, rng));
}

TEST_CASE("warm_bound") {
  const auto q1 = std_normal(1);
  const auto b1 = warm_bound(q1, Matrix::Identity(1, 1), eye(1), 1.0, 100000, 8);
  const double oracle = -std::log(std::erf(1.0 / std::sqrt(2.0)));
  CHECK(oracle == doctest::Approx(0.3817).epsilon(1e-4));
  CHECK(std::abs(b1.mass_term - oracle) <= 0.01);
  CHECK(b1.quadratic_term == 0.0);
  CHECK(b1.perturbation_term == 0.0);

  const auto q2 = std_normal(2);
  const auto b2 = warm_bound(q2, Matrix::Identity(2, 2), eye(2), 8.0, 20000, 9);
  CHECK(b2.total() <= 1e-6);

  const TargetDensity bumped(1, [](const Vector& x, Vector* g) {
    if (g) *g = vec({x[0] + 0.05 * std::cos(x[0])});
    return 0.5 * x[0] * x[0] + 0.05 * std::sin(x[0]);
  });
  const auto b3 = warm_bound(bumped, Matrix::Identity(1, 1), eye(1), 2.0, 20000, 10);
  CHECK(b3.perturbation_term > 0.0);
  CHECK(b3.perturbation_term <= 0.1 + 1e-12);

  CHECK_THROWS_AS(warm_bound(std_normal(4), Matrix::Identity(4, 4), eye(4), 1.0, 100, 1),
                  UnsupportedDimension);
}
