#include "langevin/samplers.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <future>
#include <numbers>
#include <sstream>

#include "langevin/error.hpp"

namespace langevin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// -||P^{-1/2}(to - mean)||^2 / (4 step): the proposal log density without
// its normalizer, which cancels in every forward/backward ratio.
double log_q_kernel(const ProposalSpec& spec, const Vector& mean, const Vector& to) {
  const Vector r = to - mean;
  const double quad = spec.precond().is_identity() ? r.squaredNorm()
                                                   : r.dot(spec.precond().inverse() * r);
  return -quad / (4.0 * spec.step());
}

double log_q_normalizer(const ProposalSpec& spec) {
  const double d = static_cast<double>(spec.dim());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * 2.0 * spec.step()) -
         0.5 * spec.precond().log_det();
}

double log_ratio_from_cache(const ProposalSpec& spec, const Vector& x, double ux,
                            const Vector& gx, const Vector& y, double uy, const Vector& gy) {
  if (!std::isfinite(uy)) return -kInf;
  double lr = ux - uy;
  if (spec.kind() == SamplerKind::Mala) {
    lr += log_q_kernel(spec, proposal_mean(spec, y, gy), x) -
          log_q_kernel(spec, proposal_mean(spec, x, gx), y);
  }
  return lr;
}

}  // namespace

const char* to_string(SamplerKind kind) {
  return kind == SamplerKind::Mala ? "mala" : "mrw";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "mala" || name == "MALA") return SamplerKind::Mala;
  if (name == "mrw" || name == "MRW") return SamplerKind::Mrw;
  throw InvalidInput("unknown sampler kind '" + name + "' (expected mala or mrw)");
}

ProposalSpec::ProposalSpec(SamplerKind kind, double step, SpdMatrix precond, double lazy)
    : kind_(kind), step_(step), precond_(std::move(precond)), lazy_(lazy) {
  if (!(step_ > 0.0) || !std::isfinite(step_)) {
    throw InvalidInput("proposal step size must be positive and finite");
  }
  if (!(lazy_ >= 0.0 && lazy_ <= 0.5)) {
    std::ostringstream os;
    os << "lazy parameter " << lazy_ << " outside [0, 1/2]";
    throw InvalidInput(os.str());
  }
}

ChainState make_state(const TargetDensity& target, const Vector& theta) {
  if (theta.size() != target.dim()) throw InvalidInput("initial point dimension mismatch");
  ChainState s;
  s.theta = theta;
  s.potential = target.evaluate(theta, s.grad);
  if (!std::isfinite(s.potential)) {
    throw InvalidState("chain state has zero target density (U = +inf)");
  }
  return s;
}

Vector proposal_mean(const ProposalSpec& spec, const Vector& theta, const Vector& grad) {
  if (spec.kind() == SamplerKind::Mrw) return theta;
  return theta - spec.step() * (spec.precond().mat() * grad);
}

Vector propose(const ChainState& state, const ProposalSpec& spec, const Vector& z) {
  const double scale = std::sqrt(2.0 * spec.step());
  return proposal_mean(spec, state.theta, state.grad) + scale * (spec.precond().sqrt() * z);
}

Vector propose(const ChainState& state, const ProposalSpec& spec, RngStream& rng) {
  Vector z(spec.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return propose(state, spec, z);
}

double log_q(const ProposalSpec& spec, const TargetDensity& target, const Vector& from,
             const Vector& to) {
  Vector g = Vector::Zero(from.size());
  if (spec.kind() == SamplerKind::Mala) g = target.subgrad(from);
  return log_q_normalizer(spec) + log_q_kernel(spec, proposal_mean(spec, from, g), to);
}

double log_acceptance_ratio(const TargetDensity& target, const ProposalSpec& spec, const Vector& x,
                            const Vector& y) {
  Vector gx, gy;
  const double ux = target.evaluate(x, gx);
  if (!std::isfinite(ux)) throw InvalidState("acceptance evaluated from a zero-density point");
  const double uy = target.evaluate(y, gy);
  return log_ratio_from_cache(spec, x, ux, gx, y, uy, gy);
}

double acceptance(const TargetDensity& target, const ProposalSpec& spec, const Vector& x,
                  const Vector& y) {
  const double lr = log_acceptance_ratio(target, spec, x, y);
  return lr >= 0.0 ? 1.0 : std::exp(lr);
}

namespace {

StepEvent step_with_prob(ChainState& state, const ProposalSpec& spec, const TargetDensity& target,
                         RngStream& rng, double* accept_prob) {
  ++state.step;
  const double lazy_u = rng.uniform();
  if (lazy_u < spec.lazy()) return StepEvent::LazyHold;

  const Vector y = propose(state, spec, rng);
  Vector gy;
  const double uy = target.evaluate(y, gy);
  const double lr = log_ratio_from_cache(spec, state.theta, state.potential, state.grad, y, uy, gy);
  const double a = !std::isfinite(uy) ? 0.0 : (lr >= 0.0 ? 1.0 : std::exp(lr));
  if (accept_prob) *accept_prob = a;
  const double u = rng.uniform();
  if (std::isfinite(uy) && u <= a) {
    state.theta = y;
    state.potential = uy;
    state.grad = std::move(gy);
    return StepEvent::Accepted;
  }
  return StepEvent::Rejected;
}

}  // namespace

StepEvent step(ChainState& state, const ProposalSpec& spec, const TargetDensity& target,
               RngStream& rng) {
  return step_with_prob(state, spec, target, rng, nullptr);
}

Trace run_chain(const TargetDensity& target, const ProposalSpec& spec, const Vector& init,
                std::size_t n_steps, std::size_t thin, std::uint64_t seed, std::uint64_t chain_id) {
  if (n_steps < 1) throw InvalidInput("run_chain: n_steps must be >= 1");
  if (thin < 1) throw InvalidInput("run_chain: thin must be >= 1");
  if (spec.dim() != target.dim()) throw InvalidInput("run_chain: proposal/target dimension mismatch");
  ChainState state = make_state(target, init);
  RngStream rng(seed, chain_id);

  Trace tr;
  tr.chain_id = chain_id;
  tr.seed = seed;
  tr.thin = thin;
  const std::size_t records = n_steps / thin;
  tr.samples.resize(static_cast<Eigen::Index>(records), target.dim());
  tr.events.reserve(records);
  Eigen::Index row = 0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const StepEvent ev = step(state, spec, target, rng);
    switch (ev) {
      case StepEvent::Accepted: ++tr.accepted; break;
      case StepEvent::Rejected: ++tr.rejected; break;
      case StepEvent::LazyHold: ++tr.lazy_holds; break;
    }
    if (k % thin == 0) {
      tr.samples.row(row++) = state.theta.transpose();
      tr.events.push_back(ev);
    }
  }
  const std::size_t moves = tr.accepted + tr.rejected;
  tr.acceptance_rate = moves == 0 ? 0.0 : static_cast<double>(tr.accepted) / static_cast<double>(moves);
  return tr;
}

std::vector<Trace> run_chains(const TargetDensity& target, const ProposalSpec& spec,
                              const std::vector<Vector>& inits, std::size_t n_steps,
                              std::size_t thin, std::uint64_t seed) {
  std::vector<std::future<Trace>> jobs;
  jobs.reserve(inits.size());
  for (std::size_t i = 0; i < inits.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      return run_chain(target, spec, inits[i], n_steps, thin, seed, i);
    }));
  }
  std::vector<Trace> out;
  out.reserve(inits.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

double mala_step_size(const StepSizeInputs& in) {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidInput(std::string("mala_step_size: ") + name + " must be positive");
    }
  };
  positive(in.dim, "d");
  positive(in.rho2, "rho2");
  positive(in.kappa, "kappa");
  positive(in.warmness, "M0");
  positive(in.tolerance, "epsilon");
  positive(in.c0, "c0");
  positive(in.precond_op_norm, "precond op norm");
  if (!(in.radius >= 0.0) || !(in.grad_error >= 0.0)) {
    throw InvalidInput("mala_step_size: R and eps1 must be nonnegative");
  }
  const double log_term = std::max(0.0, std::log(in.warmness * in.dim * in.kappa / in.tolerance));
  const double bracket = std::cbrt(in.dim) + std::pow(in.dim, 0.25) * std::pow(log_term, 0.25) +
                         std::sqrt(log_term) +
                         in.precond_op_norm * in.radius * in.radius * in.grad_error * in.grad_error;
  return in.c0 / (in.rho2 * bracket);
}

TuneResult tune_c0(const TargetDensity& target, SamplerKind kind, double base_step,
                   const SpdMatrix& precond, const Vector& init, std::size_t warmup,
                   std::uint64_t seed, double lo, double hi) {
  if (!(lo < hi)) throw InvalidInput("tune_c0: empty acceptance band");
  if (warmup < 1) throw InvalidInput("tune_c0: warmup must be positive");
  TuneResult res;
  auto rate_at = [&](double c0) {
    ++res.trials;
    const ProposalSpec spec(kind, c0 * base_step, precond);
    ChainState state = make_state(target, init);
    RngStream rng(seed, 0);
    double sum = 0.0;
    for (std::size_t k = 0; k < warmup; ++k) {
      double a = 0.0;
      step_with_prob(state, spec, target, rng, &a);
      sum += a;
    }
    return sum / static_cast<double>(warmup);
  };
  // Acceptance decreases in c0; bracket on a log scale, then bisect.
  double log_c = 0.0;
  double rate = rate_at(1.0);
  double log_lo = -kInf, log_hi = kInf;  // rate(lo) > hi, rate(hi) < lo
  constexpr int kMaxTrials = 60;
  while (res.trials < kMaxTrials) {
    if (rate >= lo && rate <= hi) {
      res.in_band = true;
      break;
    }
    if (rate > hi) {
      log_lo = log_c;
      log_c = std::isfinite(log_hi) ? 0.5 * (log_lo + log_hi) : log_c + std::log(2.0);
    } else {
      log_hi = log_c;
      log_c = std::isfinite(log_lo) ? 0.5 * (log_lo + log_hi) : log_c - std::log(2.0);
    }
    rate = rate_at(std::exp(log_c));
  }
  res.c0 = std::exp(log_c);
  res.acceptance_rate = rate;
  if (!res.in_band) res.in_band = rate >= lo && rate <= hi;
  return res;
}

Vector warm_start_sample(const WarmStartSpec& ws, RngStream& rng) {
  const Eigen::Index d = ws.precond.dim();
  if (ws.center.size() != d) throw InvalidInput("warm start: center dimension mismatch");
  if (!(ws.n > 0.0)) throw InvalidInput("warm start: n must be positive");
  if (!(ws.radius > 0.0)) throw InvalidInput("warm start: truncation radius must be positive");
  if (std::isfinite(ws.radius)) {
    const double mass = boost::math::gamma_p(0.5 * static_cast<double>(d), 0.5 * ws.radius * ws.radius);
    if (mass < 1e-6) throw InvalidInput("warm start: truncation region has Gaussian mass below 1e-6");
  }
  const double scale = 1.0 / std::sqrt(ws.n);
  Vector z(d);
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    if (z.norm() <= ws.radius) return ws.center + scale * (ws.precond.sqrt() * z);
  }
  throw NumericalFailure("warm start: 1e6 consecutive rejections");
}

WarmBound warm_bound(const TargetDensity& v, const Matrix& j, const SpdMatrix& precond,
                     double radius, std::size_t mc_samples, std::uint64_t seed, double grid_step) {
  const Eigen::Index d = v.dim();
  if (d > 3) throw UnsupportedDimension("warm_bound supports dimension <= 3");
  if (j.rows() != d || precond.dim() != d) throw InvalidInput("warm_bound: dimension mismatch");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("warm_bound: radius must be positive");
  if (mc_samples == 0) throw InvalidInput("warm_bound: mc_samples must be positive");
  const SpdMatrix jm(j);

  WarmBound out;
  if (grid_step <= 0.0) grid_step = radius * std::sqrt(precond.op_norm()) / 40.0;
  const Matrix quad_gap = precond.inverse() - j;
  double sup_quad = 0.0, sup_pert = 0.0;
  for_each_ellipsoid_grid_point(precond, radius, grid_step, [&](const Vector& xi) {
    const double q = 0.5 * xi.dot(j * xi);
    sup_quad = std::max(sup_quad, std::abs(xi.dot(quad_gap * xi)));
    sup_pert = std::max(sup_pert, std::abs(v.potential(xi) - q));
  });
  out.quadratic_term = sup_quad;
  out.perturbation_term = 2.0 * sup_pert;

  // Self-normalized importance sampling of pi_loc(K) with proposal N(0, J^{-1}).
  RngStream rng(seed, 0);
  std::vector<double> logw(mc_samples);
  std::vector<char> inside(mc_samples);
  Vector z(d);
  double max_logw = -kInf;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    const Vector xi = jm.inv_sqrt() * z;
    logw[s] = -v.potential(xi) + 0.5 * z.squaredNorm();
    inside[s] = (precond.inv_sqrt() * xi).norm() <= radius;
    max_logw = std::max(max_logw, logw[s]);
  }
  if (!std::isfinite(max_logw)) throw UnreliableEstimate("warm_bound: all importance weights vanish");
  double sum = 0.0, sum_sq = 0.0, sum_in = 0.0;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const double w = std::exp(logw[s] - max_logw);
    sum += w;
    sum_sq += w * w;
    if (inside[s]) sum_in += w;
  }
  out.weight_ess = sum * sum / sum_sq;
  if (out.weight_ess < 10.0) {
    std::ostringstream os;
    os << "warm_bound: importance weights degenerate (ESS " << out.weight_ess << " < 10)";
    throw UnreliableEstimate(os.str());
  }
  if (sum_in <= 0.0) throw UnreliableEstimate("warm_bound: no importance samples fell inside K");
  out.mass_term = -std::log(sum_in / sum);
  return out;
}

WarmBound warm_bound(const RescaledPotential& v, const Matrix& j, const SpdMatrix& precond,
                     double radius, std::size_t mc_samples, std::uint64_t seed, double grid_step) {
  return warm_bound(v.density(), j, precond, radius, mc_samples, seed, grid_step);
}

}  // namespace langevin
