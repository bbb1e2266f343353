#include "langevin/experiments.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "langevin/error.hpp"
#include "langevin/estimation.hpp"

namespace langevin {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed ^ (tag * 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kDataTag = 1;
constexpr std::uint64_t kStartTag = 2;
constexpr std::uint64_t kTuneTag = 3;
constexpr std::uint64_t kChainTag = 4;

std::size_t parse_size(const std::string& key, const std::string& text) {
  const double v = io::parse_double(text);
  if (v < 0.0 || v != std::floor(v)) throw InvalidInput(key + " must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> words(const std::string& text) {
  std::string s = text;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(s);
  std::vector<std::string> out;
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

std::string opt_index(const std::optional<Eigen::Index>& v) {
  return v ? std::to_string(*v) : std::string("NA");
}

std::optional<Eigen::Index> max_or_none(const std::vector<std::optional<Eigen::Index>>& v) {
  Eigen::Index best = 0;
  for (const auto& x : v) {
    if (!x) return std::nullopt;
    best = std::max(best, *x);
  }
  return best;
}

SamplerArm arm_from_name(const std::string& name) {
  // Random-walk arms aim near the classical 0.234 optimum instead of the MALA band.
  if (name == "mrw") return {"mrw", SamplerKind::Mrw, false, std::nullopt, 0.2, 0.3};
  if (name == "mala") return {"mala", SamplerKind::Mala, false, std::nullopt, 0.55, 0.6};
  if (name == "pmala") return {"pmala", SamplerKind::Mala, true, std::nullopt, 0.55, 0.6};
  if (name == "pmrw") return {"pmrw", SamplerKind::Mrw, true, std::nullopt, 0.2, 0.3};
  throw InvalidInput("unknown sampler '" + name + "' (expected mrw, mala, pmala or pmrw)");
}

}  // namespace

std::vector<SamplerArm> default_arms() {
  return {arm_from_name("mrw"), arm_from_name("mala"), arm_from_name("pmala")};
}

void ExperimentConfig::validate() const {
  if (n < 1 || d < 1) throw InvalidInput("experiment: n and d must be positive");
  if (d > 1 && !(c_off > -1.0 / static_cast<double>(d - 1) && c_off < 1.0)) {
    throw InvalidInput("experiment: c_off must lie in (-1/(d-1), 1)");
  }
  if (d == 1 && !(c_off < 1.0)) throw InvalidInput("experiment: c_off must be below 1");
  if (!(laplace_scale > 0.0)) throw InvalidInput("experiment: laplace_scale must be positive");
  if (theta_star && theta_star->size() != static_cast<Eigen::Index>(d)) {
    throw InvalidInput("experiment: theta_star must have d entries");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("experiment: tau must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw InvalidInput("experiment: learning_rate must be positive");
  if (!(prior_halfwidth > 0.0)) throw InvalidInput("experiment: prior_halfwidth must be positive");
  if (samplers.empty()) throw InvalidInput("experiment: no samplers");
  if (chains < 2) throw InvalidInput("experiment: at least two chains are needed");
  if (max_iters < 10) throw InvalidInput("experiment: max_iters must be at least 10");
  if (warmup < 1) throw InvalidInput("experiment: warmup must be positive");
  if (!(spread >= 0.0)) throw InvalidInput("experiment: spread must be nonnegative");
  if (!(rhat_threshold > 1.0)) throw InvalidInput("experiment: rhat_threshold must exceed 1");
  if (rhat_stride < 1 || ess_stride < 1) throw InvalidInput("experiment: strides must be positive");
  if (ess_at < 10 || ess_at > max_iters) throw InvalidInput("experiment: ess_at must lie in [10, max_iters]");
  for (const auto& a : samplers) {
    if (a.c0 && !(*a.c0 > 0.0)) throw InvalidInput("experiment: c0 must be positive");
    if (!(a.accept_lo > 0.0 && a.accept_lo < a.accept_hi && a.accept_hi < 1.0)) {
      throw InvalidInput("experiment: tuning band must satisfy 0 < lo < hi < 1");
    }
  }
}

void ExperimentConfig::apply(const io::KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "n") n = parse_size(key, value);
    else if (key == "d") d = parse_size(key, value);
    else if (key == "seed") seed = parse_size(key, value);
    else if (key == "c_off") c_off = io::parse_double(value);
    else if (key == "laplace_location") laplace_location = io::parse_double(value);
    else if (key == "laplace_scale") laplace_scale = io::parse_double(value);
    else if (key == "tau") tau = io::parse_double(value);
    else if (key == "learning_rate") learning_rate = io::parse_double(value);
    else if (key == "prior_halfwidth") prior_halfwidth = io::parse_double(value);
    else if (key == "chains") chains = parse_size(key, value);
    else if (key == "max_iters") max_iters = parse_size(key, value);
    else if (key == "warmup") warmup = parse_size(key, value);
    else if (key == "spread") spread = io::parse_double(value);
    else if (key == "rhat_threshold") rhat_threshold = io::parse_double(value);
    else if (key == "rhat_stride") rhat_stride = parse_size(key, value);
    else if (key == "ess_target") ess_target = io::parse_double(value);
    else if (key == "ess_stride") ess_stride = parse_size(key, value);
    else if (key == "ess_at") ess_at = parse_size(key, value);
    else if (key == "out") out = value;
    else if (key == "theta_star") {
      const auto w = words(value);
      Vector t(static_cast<Eigen::Index>(w.size()));
      for (std::size_t i = 0; i < w.size(); ++i) t[static_cast<Eigen::Index>(i)] = io::parse_double(w[i]);
      theta_star = t;
    } else if (key == "samplers") {
      std::vector<SamplerArm> arms;
      for (const auto& w : words(value)) arms.push_back(arm_from_name(w));
      samplers = arms;
    } else if (key == "c0") {
      continue;
    } else {
      throw InvalidInput("unknown config key '" + key + "'");
    }
  }
  // Applied last so that it covers a sampler list given in the same file.
  if (const auto it = kv.find("c0"); it != kv.end()) {
    const double c = io::parse_double(it->second);
    for (auto& a : samplers) a.c0 = c;
  }
}

const ArmResult& QuantileExperimentResult::arm(const std::string& name) const {
  for (const auto& a : arms) {
    if (a.arm.name == name) return a;
  }
  throw InvalidInput("no sampler named '" + name + "' in the result");
}

Dataset generate_quantile_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  Matrix sigma = Matrix::Constant(d, d, cfg.c_off);
  sigma.diagonal().setOnes();
  const Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NotSpd("covariate covariance is not positive definite");
  const Matrix l = llt.matrixL();

  Vector theta_star(d);
  if (cfg.theta_star) {
    theta_star = *cfg.theta_star;
  } else {
    for (Eigen::Index k = 0; k < d; ++k) theta_star[k] = static_cast<double>(k + 1);
  }

  RngStream rng(mix_seed(cfg.seed, kDataTag), 0);
  RowMatrix x(n, d);
  Vector y(n);
  Vector z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) z[k] = rng.normal();
    x.row(i) = (l * z).transpose();
    double u = rng.uniform();
    while (u == 0.0) u = rng.uniform();
    const double c = u - 0.5;
    const double noise = cfg.laplace_location - cfg.laplace_scale * std::copysign(1.0, c) *
                                                    std::log1p(-2.0 * std::abs(c));
    y[i] = x.row(i).dot(theta_star) + noise;
  }
  return Dataset(std::move(x), std::move(y));
}

QuantileExperimentResult run_quantile_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const double n = static_cast<double>(cfg.n);

  QuantileExperimentResult res;
  res.data = std::make_shared<const Dataset>(generate_quantile_data(cfg));
  GibbsSpec spec;
  spec.data = res.data;
  spec.loss = std::make_shared<const CheckLoss>(cfg.tau);
  spec.learning_rate = cfg.learning_rate;
  spec.prior = UniformBoxPrior{Box::cube(d, -cfg.prior_halfwidth, cfg.prior_halfwidth)};
  spec.validate();

  res.theta_hat = minimize_empirical_risk(spec, Vector::Zero(d)).theta;
  res.precond = empirical_gram_precond(*res.data);
  const SpdMatrix gram_inv(res.precond);
  const SpdMatrix identity = SpdMatrix::identity(d);
  const TargetDensity target = gibbs_potential(spec);

  StepSizeInputs base;
  base.dim = static_cast<double>(cfg.d);
  const double base_step = mala_step_size(base) / n;

  std::vector<Vector> starts;
  RngStream start_rng(mix_seed(cfg.seed, kStartTag), 0);
  Vector z(d);
  for (std::size_t i = 0; i < cfg.chains; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) z[k] = start_rng.normal();
    starts.push_back(res.theta_hat + cfg.spread / std::sqrt(n) * (gram_inv.sqrt() * z));
  }

  for (std::size_t a = 0; a < cfg.samplers.size(); ++a) {
    const SamplerArm& arm = cfg.samplers[a];
    ArmResult out;
    out.arm = arm;
    const SpdMatrix& precond = arm.preconditioned ? gram_inv : identity;
    if (arm.c0) {
      out.c0 = *arm.c0;
    } else {
      const TuneResult t = tune_c0(target, arm.kind, base_step, precond, res.theta_hat, cfg.warmup,
                                   mix_seed(cfg.seed, kTuneTag + 16 * a), arm.accept_lo, arm.accept_hi);
      out.c0 = t.c0;
      out.tune_acceptance = t.acceptance_rate;
    }
    out.step = out.c0 * base_step;
    const ProposalSpec proposal(arm.kind, out.step, precond);
    const std::vector<Trace> traces =
        run_chains(target, proposal, starts, cfg.max_iters, 1, mix_seed(cfg.seed, kChainTag + 16 * a));

    for (const auto& t : traces) out.acceptance_rate += t.acceptance_rate;
    out.acceptance_rate /= static_cast<double>(traces.size());
    out.report = diagnose(traces, static_cast<Eigen::Index>(cfg.rhat_stride), cfg.rhat_threshold);
    out.iters_to_rhat = out.report.iters_to_threshold_max;

    const auto len = static_cast<Eigen::Index>(cfg.max_iters);
    const auto chains = static_cast<double>(traces.size());
    out.iters_to_ess.assign(static_cast<std::size_t>(d), std::nullopt);
    for (Eigen::Index c = 0; c < d; ++c) {
      for (auto p = static_cast<Eigen::Index>(cfg.ess_stride); p <= len;
           p += static_cast<Eigen::Index>(cfg.ess_stride)) {
        if (p < 10) continue;
        double ess = 0.0;
        for (const auto& t : traces) ess += effective_sample_size(t.samples.col(c).head(p));
        if (ess / chains >= cfg.ess_target) {
          out.iters_to_ess[static_cast<std::size_t>(c)] = p;
          break;
        }
      }
    }
    out.ess_at = Vector::Zero(d);
    const auto at = static_cast<Eigen::Index>(cfg.ess_at);
    for (Eigen::Index c = 0; c < d; ++c) {
      for (const auto& t : traces) out.ess_at[c] += effective_sample_size(t.samples.col(c).head(at));
    }
    out.ess_at /= chains;
    out.mean_ess_at = out.ess_at.mean();
    res.arms.push_back(std::move(out));
  }

  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    {
      std::ofstream f(cfg.out / "summary.csv");
      write_summary_csv(f, res, cfg.tau);
    }
    {
      std::ofstream f(cfg.out / "data.csv");
      io::write_dataset_csv(f, *res.data);
    }
    io::write_matrix_csv(cfg.out / "theta_hat.csv", Matrix(res.theta_hat.transpose()));
    io::write_matrix_csv(cfg.out / "precond.csv", res.precond);
    io::KeyValues meta{{"n", std::to_string(cfg.n)},
                       {"d", std::to_string(cfg.d)},
                       {"seed", std::to_string(cfg.seed)},
                       {"tau", io::format_double(cfg.tau)},
                       {"chains", std::to_string(cfg.chains)},
                       {"max_iters", std::to_string(cfg.max_iters)},
                       {"spread", io::format_double(cfg.spread)},
                       {"target", target.id()}};
    io::write_key_values(cfg.out / "metadata.txt", meta);
    for (const auto& a : res.arms) {
      const auto dir = cfg.out / a.arm.name;
      std::filesystem::create_directories(dir);
      std::ofstream rhat(dir / "rhat.csv");
      io::write_rhat_csv(rhat, a.report);
      std::ofstream ess(dir / "ess.csv");
      io::write_ess_csv(ess, a.report);
    }
  }
  return res;
}

void ScalingConfig::validate() const {
  if (dims.empty()) throw InvalidInput("scaling: no dimensions");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 1) throw InvalidInput("scaling: dimensions must be positive");
    if (i > 0 && dims[i] <= dims[i - 1]) throw InvalidInput("scaling: dimensions must be sorted ascending");
  }
  if (!(c0 > 0.0)) throw InvalidInput("scaling: c0 must be positive");
  if (steps < 10) throw InvalidInput("scaling: at least 10 steps are needed");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw InvalidInput("scaling: tolerance must lie in (0, 1)");
}

std::vector<ScalingRow> run_scaling_study(const ScalingConfig& cfg) {
  cfg.validate();
  auto step_for = [&](std::size_t d) {
    StepSizeInputs in;
    in.dim = static_cast<double>(d);
    in.c0 = cfg.c0;
    in.tolerance = cfg.tolerance;
    // Makes M0 d kappa / eps = 1/2, so the log terms clamp to zero.
    in.warmness = cfg.tolerance / (2.0 * static_cast<double>(d));
    return mala_step_size(in);
  };
  auto run = [&](const std::string& arm, std::size_t d, double h) {
    const auto di = static_cast<Eigen::Index>(d);
    const TargetDensity target = gaussian_target(Vector::Zero(di), Matrix::Identity(di, di));
    RngStream init_rng(mix_seed(cfg.seed, kStartTag), d);
    Vector init(di);
    for (Eigen::Index k = 0; k < di; ++k) init[k] = init_rng.normal();
    const ProposalSpec spec(SamplerKind::Mala, h, SpdMatrix::identity(di));
    const Trace t = run_chain(target, spec, init, cfg.steps, 1, mix_seed(cfg.seed, kChainTag), d);
    ScalingRow row;
    row.arm = arm;
    row.d = d;
    row.h = h;
    row.acceptance_rate = t.acceptance_rate;
    double ess = 0.0;
    for (Eigen::Index c = 0; c < di; ++c) {
      try {
        ess += effective_sample_size(t, c);
      } catch (const DegenerateChains&) {
        // A chain that never moved has no information.
      }
    }
    row.ess_per_step = ess / static_cast<double>(di) / static_cast<double>(cfg.steps);
    return row;
  };

  std::vector<ScalingRow> rows;
  for (std::size_t d : cfg.dims) rows.push_back(run("scaled", d, step_for(d)));
  if (cfg.constant_arm) {
    const double h0 = step_for(cfg.dims.front());
    for (std::size_t d : cfg.dims) rows.push_back(run("constant", d, h0));
  }
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream f(cfg.out / "summary.csv");
    write_summary_csv(f, rows);
  }
  return rows;
}

void ConductanceBatchConfig::validate() const {
  if (count > 0 && sizes.empty()) throw InvalidInput("conductance: no chain sizes");
  for (auto m : sizes) {
    if (m < 2 || m > 15) throw InvalidInput("conductance: chain sizes must lie in 2..15");
  }
  if (!(lazy >= 0.05 && lazy < 1.0)) throw InvalidInput("conductance: lazy must lie in [0.05, 1)");
  if (!(warmness >= 1.0)) throw InvalidInput("conductance: warmness must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("conductance: eps must lie in (0, 1)");
}

DiscreteChain disconnected_chain() {
  Matrix t = Matrix::Zero(4, 4);
  t.topLeftCorner(2, 2).setConstant(0.5);
  t.bottomRightCorner(2, 2).setConstant(0.5);
  return DiscreteChain(std::move(t), Vector::Constant(4, 0.25));
}

std::vector<ConductanceRow> run_conductance_batch(const ConductanceBatchConfig& cfg) {
  cfg.validate();
  std::vector<ConductanceRow> rows;
  for (std::size_t i = 0; i < cfg.count; ++i) {
    RngStream rng(cfg.seed, i);
    const Eigen::Index m = cfg.sizes[i % cfg.sizes.size()];
    const DiscreteChain chain = random_reversible_lazy_chain(m, rng, cfg.lazy);
    rows.push_back({i, m, verify_mixing_bound(chain, cfg.warmness, cfg.eps)});
  }
  if (cfg.inject_disconnected) {
    const DiscreteChain chain = disconnected_chain();
    rows.push_back({cfg.count, chain.size(), verify_mixing_bound(chain, cfg.warmness, cfg.eps)});
  }
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream f(cfg.out / "summary.csv");
    write_summary_csv(f, rows);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const QuantileExperimentResult& res, double tau) {
  const Eigen::Index d = res.theta_hat.size();
  out << "sampler,tau,c0,step,tune_acceptance,acceptance_rate,iters_to_rhat,iters_to_ess_max,mean_ess_at";
  for (Eigen::Index k = 1; k <= d; ++k) out << ",ess_at_" << k;
  out << "\n";
  for (const auto& a : res.arms) {
    out << a.arm.name << "," << io::format_double(tau) << "," << io::format_double(a.c0) << ","
        << io::format_double(a.step) << "," << io::format_double(a.tune_acceptance) << ","
        << io::format_double(a.acceptance_rate) << "," << opt_index(a.iters_to_rhat) << ","
        << opt_index(max_or_none(a.iters_to_ess)) << "," << io::format_double(a.mean_ess_at);
    for (Eigen::Index k = 0; k < d; ++k) out << "," << io::format_double(a.ess_at[k]);
    out << "\n";
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
  out << "arm,d,h,acceptance_rate,ess_per_step\n";
  for (const auto& r : rows) {
    out << r.arm << "," << r.d << "," << io::format_double(r.h) << "," << io::format_double(r.acceptance_rate)
        << "," << io::format_double(r.ess_per_step) << "\n";
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ConductanceRow>& rows) {
  out << "index,m,tau_actual,tau_bound,infinite_bound,holds\n";
  for (const auto& r : rows) {
    out << r.index << "," << r.size << ","
        << (r.check.tau_actual ? std::to_string(*r.check.tau_actual) : std::string("NA")) << ","
        << (r.check.infinite_bound ? std::string("inf") : io::format_double(r.check.tau_bound)) << ","
        << (r.check.infinite_bound ? 1 : 0) << "," << (r.check.holds ? 1 : 0) << "\n";
  }
}

}  // namespace langevin
