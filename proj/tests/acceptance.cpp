// Acceptance checks, one PASS/FAIL line per criterion. Exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "langevin/conductance.hpp"
#include "langevin/diagnostics.hpp"
#include "langevin/estimation.hpp"
#include "langevin/experiments.hpp"
#include "langevin/samplers.hpp"
#include "langevin/targets.hpp"

using namespace langevin;

namespace {

// Tolerances and limits.
constexpr double kBalanceTol = 1e-10;
constexpr int kBalancePairs = 10000;
constexpr std::size_t kAffineSteps = 10000;
constexpr std::size_t kStationarySteps = 200000;
constexpr double kMeanTol = 0.05;
constexpr double kCovTol = 0.1;
constexpr std::size_t kRandomChains = 50;
constexpr int kSeeds = 10;
constexpr int kOrderingNeeded = 9;
constexpr int kFactorNeeded = 8;
constexpr double kFactor = 3.0;
constexpr int kEssNeeded = 9;
constexpr double kScaledFloor = 0.10;
constexpr double kConstantCeiling = 0.01;
constexpr double kScalingC0 = 1.5;
constexpr double kMedianTol = 1e-3;
constexpr double kOlsTol = 1e-6;
constexpr double kRhatTol = 0.05;
constexpr double kAr1Tol = 0.05;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix random_spd(Eigen::Index d, RngStream& rng) {
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  }
  return a * a.transpose() / static_cast<double>(d) + 0.2 * Matrix::Identity(d, d);
}

GibbsSpec check_loss_spec(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  RngStream rng(seed, 0);
  RowMatrix x(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = rng.normal();
    y[i] = x.row(i).sum() + rng.normal();
  }
  GibbsSpec s;
  s.data = std::make_shared<const Dataset>(x, y);
  s.loss = std::make_shared<const CheckLoss>(0.5);
  s.prior = UniformBoxPrior{Box::cube(d, -10.0, 10.0)};
  return s;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome detailed_balance() {
  const Eigen::Index d = 3;
  RngStream rng(101, 0);
  const auto gauss = gaussian_target(vec({0.5, -1.0, 0.0}), random_spd(d, rng));
  const auto spec = check_loss_spec(40, d, 102);
  const auto check = gibbs_potential(spec);
  const Vector check_center = minimize_empirical_risk(spec, Vector::Zero(d)).theta;

  double worst = 0.0;
  int pairs = 0;
  struct Case {
    const TargetDensity* target;
    Vector center;
    double scale;
  };
  const std::vector<Case> cases{{&gauss, vec({0.5, -1.0, 0.0}), 1.0}, {&check, check_center, 0.2}};
  const std::vector<SpdMatrix> preconds{SpdMatrix::identity(d), SpdMatrix(random_spd(d, rng))};
  for (const auto& c : cases) {
    for (const auto& p : preconds) {
      for (auto kind : {SamplerKind::Mala, SamplerKind::Mrw}) {
        const ProposalSpec prop(kind, 0.05 * c.scale * c.scale, p);
        for (int i = 0; i < kBalancePairs / 8; ++i) {
          Vector x(d);
          for (Eigen::Index k = 0; k < d; ++k) x[k] = c.center[k] + c.scale * rng.normal();
          const ChainState s = make_state(*c.target, x);
          const Vector y = propose(s, prop, rng);
          if (!std::isfinite(c.target->potential(y))) continue;
          const double lhs = -c.target->potential(x) + log_q(prop, *c.target, x, y) +
                             std::log(acceptance(*c.target, prop, x, y));
          const double rhs = -c.target->potential(y) + log_q(prop, *c.target, y, x) +
                             std::log(acceptance(*c.target, prop, y, x));
          worst = std::max(worst, std::abs(std::expm1(lhs - rhs)));
          ++pairs;
        }
      }
    }
  }
  return {worst <= kBalanceTol && pairs >= kBalancePairs * 9 / 10,
          std::to_string(pairs) + " pairs, max relative error " + fmt("%.3g", worst)};
}

Outcome affine_invariance() {
  Matrix g = Matrix::Zero(3, 3);
  g.diagonal() << 2.0, 0.5, 0.25;
  const SpdMatrix precond(Matrix(g * g));
  RngStream rng(201, 0);
  const auto gauss = gaussian_target(Vector::Zero(3), random_spd(3, rng));
  const auto check = gibbs_potential(check_loss_spec(30, 3, 202));
  std::size_t compared = 0;
  bool all_equal = true;
  for (const TargetDensity* t : {&gauss, &check}) {
    const TargetDensity pulled(3, [t, &g](const Vector& xi, Vector* grad) {
      Vector gt;
      const double u = t->evaluate(g * xi, gt);
      if (grad) *grad = g.transpose() * gt;
      return u;
    });
    for (auto kind : {SamplerKind::Mala, SamplerKind::Mrw}) {
      const double h = t == &gauss ? 0.1 : 0.002;
      const Vector xi0 = vec({0.25, 0.5, -1.0});
      const Trace a = run_chain(*t, ProposalSpec(kind, h, precond), g * xi0, kAffineSteps, 1, 203);
      const Trace b = run_chain(pulled, ProposalSpec(kind, h, SpdMatrix::identity(3)), xi0, kAffineSteps, 1, 203);
      all_equal = all_equal && a.samples == Matrix(b.samples * g.transpose()) && a.events == b.events;
      compared += kAffineSteps;
    }
  }
  return {all_equal, std::to_string(compared) + " steps compared bit-for-bit"};
}

Outcome gaussian_stationarity() {
  bool ok = true;
  std::string detail;
  for (Eigen::Index d : {2, 10}) {
    StepSizeInputs in;
    in.dim = static_cast<double>(d);
    const double h = mala_step_size(in);
    const auto target = gaussian_target(Vector::Zero(d), Matrix::Identity(d, d));
    const Trace t = run_chain(target, ProposalSpec(SamplerKind::Mala, h, SpdMatrix::identity(d)), Vector::Zero(d),
                              kStationarySteps, 1, 301);
    const auto err = moment_discrepancy(t.samples, Vector::Zero(d), Matrix::Identity(d, d));
    ok = ok && err.mean_error <= kMeanTol && err.covariance_error <= kCovTol;
    detail += "d=" + std::to_string(d) + " h=" + fmt("%.4f", h) + " mean err " + fmt("%.4f", err.mean_error) +
              " cov err " + fmt("%.4f", err.covariance_error) + "; ";
  }
  return {ok, detail};
}

Outcome conductance_lab() {
  Matrix t(2, 2);
  const double p = 0.25;
  t << 1.0 - p, p, p, 1.0 - p;
  const DiscreteChain two(t, Vector::Constant(2, 0.5));
  const auto prof = s_conductance_profile(two, 0.0, {0.5});
  const bool phi_ok = prof[0].value && std::abs(*prof[0].value - p) <= 1e-14;
  const auto tau = chi2_mixing_time(two, Eigen::Vector2d(1.0, 0.0), 0.1);
  const bool tau_ok = tau && *tau == 4;

  ConductanceBatchConfig cfg;
  cfg.count = kRandomChains;
  cfg.sizes = {3, 4, 5, 6, 7, 8, 9, 10};
  const auto rows = run_conductance_batch(cfg);
  std::size_t holds = 0, finite = 0;
  for (const auto& r : rows) {
    holds += r.check.holds;
    finite += !r.check.infinite_bound;
  }
  return {phi_ok && tau_ok && holds == rows.size() && finite == rows.size(),
          "Phi_0(1/2)=" + fmt("%.6g", prof[0].value.value_or(NAN)) + " tau=" +
              (tau ? std::to_string(*tau) : std::string("none")) + ", bound holds on " + std::to_string(holds) +
              "/" + std::to_string(rows.size()) + " random chains"};
}

Outcome quantile_reproduction() {
  int ordering = 0, factor = 0, ess = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    ExperimentConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto res = run_quantile_experiment(cfg);
    const auto& mrw = res.arm("mrw");
    const auto& mala = res.arm("mala");
    const auto& pmala = res.arm("pmala");
    // A chain that never reached the threshold counts as max_iters + 1.
    const auto iters = [&](const ArmResult& a) {
      return a.iters_to_rhat ? static_cast<double>(*a.iters_to_rhat) : static_cast<double>(cfg.max_iters + 1);
    };
    const double im = iters(mrw), ia = iters(mala), ip = iters(pmala);
    ordering += im > ia && ia > ip;
    factor += im >= kFactor * ip;
    ess += pmala.mean_ess_at > mala.mean_ess_at && mala.mean_ess_at > mrw.mean_ess_at;
    detail += "\n    seed " + std::to_string(seed) + ": iters " + fmt("%.0f", im) + "/" + fmt("%.0f", ia) + "/" +
              fmt("%.0f", ip) + " ess " + fmt("%.0f", mrw.mean_ess_at) + "/" + fmt("%.0f", mala.mean_ess_at) + "/" +
              fmt("%.0f", pmala.mean_ess_at);
  }
  const bool ok = ordering >= kOrderingNeeded && factor >= kFactorNeeded && ess >= kEssNeeded;
  return {ok, "(a) ordering " + std::to_string(ordering) + "/10, (b) factor>=3 " + std::to_string(factor) +
                  "/10, (c) ess ordering " + std::to_string(ess) + "/10 [mrw/mala/pmala]" + detail};
}

Outcome scaling_study() {
  ScalingConfig cfg;
  cfg.c0 = kScalingC0;
  const auto rows = run_scaling_study(cfg);
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    if (r.arm == "scaled") ok = ok && r.acceptance_rate >= kScaledFloor;
    if (r.arm == "constant" && r.d == 128) ok = ok && r.acceptance_rate < kConstantCeiling;
    detail += r.arm + " d=" + std::to_string(r.d) + " acc " + fmt("%.3f", r.acceptance_rate) + "; ";
  }
  return {ok, "c0=" + fmt("%.2g", kScalingC0) + ": " + detail};
}

Outcome erm_oracles() {
  GibbsSpec med;
  med.data = std::make_shared<const Dataset>(RowMatrix::Ones(3, 1), vec({1.0, 2.0, 3.0}));
  med.loss = std::make_shared<const CheckLoss>(0.5);
  med.prior = UniformBoxPrior{Box::cube(1, -50.0, 50.0)};
  double grid_best = 0.0, grid_risk = INFINITY;
  for (int k = 0; k <= 4000; ++k) {
    const double t = 0.001 * k;
    const double r = empirical_risk(med, vec({t}));
    if (r < grid_risk) {
      grid_risk = r;
      grid_best = t;
    }
  }
  const double med_err = std::abs(minimize_empirical_risk(med, vec({0.0})).theta[0] - grid_best);

  RngStream rng(701, 0);
  RowMatrix x(100, 3);
  Vector y(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    x.row(i) << 1.0, rng.normal(), rng.normal();
    y[i] = 1.0 + 2.0 * x(i, 1) - x(i, 2) + 0.5 * rng.normal();
  }
  const Matrix xm = x;
  const Vector ols = (xm.transpose() * xm).ldlt().solve(xm.transpose() * y);
  GibbsSpec sq;
  sq.data = std::make_shared<const Dataset>(x, y);
  sq.loss = std::make_shared<const SquaredLoss>();
  sq.prior = UniformBoxPrior{Box::cube(3, -50.0, 50.0)};
  ErmConfig cfg;
  cfg.max_iters = 200000;
  cfg.step_scale = 1.0;
  const double ols_err = (minimize_empirical_risk(sq, Vector::Zero(3), cfg).theta - ols).cwiseAbs().maxCoeff();

  GibbsSpec one = med;
  one.data = std::make_shared<const Dataset>(RowMatrix::Ones(1, 1), vec({1.7}));
  const double one_err = std::abs(minimize_empirical_risk(one, vec({0.0})).theta[0] - 1.7);

  return {med_err <= kMedianTol && ols_err <= kOlsTol && one_err <= kMedianTol,
          "median err " + fmt("%.2g", med_err) + ", OLS err " + fmt("%.2g", ols_err) + ", single datum err " +
              fmt("%.2g", one_err)};
}

Outcome diagnostics_calibration() {
  std::vector<Trace> chains;
  for (std::uint64_t c = 0; c < 4; ++c) {
    RngStream rng(801, c);
    Trace t;
    t.samples.resize(10000, 1);
    for (Eigen::Index i = 0; i < 10000; ++i) t.samples(i, 0) = rng.normal();
    chains.push_back(std::move(t));
  }
  const double rhat = gelman_rubin(chains, 0, 10000).point;

  RngStream rng(802, 0);
  Vector ar(100000);
  ar[0] = rng.normal() / std::sqrt(0.75);
  for (Eigen::Index i = 1; i < ar.size(); ++i) ar[i] = 0.5 * ar[i - 1] + rng.normal();
  const double ratio = effective_sample_size(ar) / 1e5;

  const double raw = psrf_raw({vec({0.0, 2.0}), vec({1.0, 3.0})});
  const bool ok = std::abs(rhat - 1.0) <= kRhatTol && std::abs(ratio - 1.0 / 3.0) <= kAr1Tol &&
                  std::abs(raw - std::sqrt(0.75)) <= 1e-14;
  return {ok, "iid R-hat " + fmt("%.4f", rhat) + ", AR(1) ESS/N " + fmt("%.4f", ratio) + ", raw PSRF " +
                  fmt("%.6f", raw)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "detailed balance", 10, detailed_balance},
      {2, "affine invariance", 10, affine_invariance},
      {3, "gaussian stationarity", 60, gaussian_stationarity},
      {4, "conductance laboratory", 120, conductance_lab},
      {5, "quantile regression reproduction", 900, quantile_reproduction},
      {6, "step size scaling", 300, scaling_study},
      {7, "ERM oracles", 60, erm_oracles},
      {8, "diagnostics calibration", 60, diagnostics_calibration},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("CRITERION %d %s: %s (%.1fs of %.0fs) %s\n", c.id, c.name, pass ? "PASS" : "FAIL", secs, c.limit_s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
