#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "langevin/linalg.hpp"
#include "langevin/rng.hpp"
#include "langevin/targets.hpp"

namespace langevin {

enum class SamplerKind { Mala, Mrw };

const char* to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

/// Gaussian proposal N(theta - step * P * grad U(theta), 2 step P) for MALA,
/// N(theta, 2 step P) for MRW, with P the preconditioner, wrapped in a lazy
/// hold of probability `lazy` in [0, 1/2].
class ProposalSpec {
 public:
  ProposalSpec(SamplerKind kind, double step, SpdMatrix precond, double lazy = 0.0);

  SamplerKind kind() const { return kind_; }
  double step() const { return step_; }
  const SpdMatrix& precond() const { return precond_; }
  double lazy() const { return lazy_; }
  Eigen::Index dim() const { return precond_.dim(); }

 private:
  SamplerKind kind_;
  double step_;
  SpdMatrix precond_;
  double lazy_;
};

/// Current chain position with cached potential and subgradient. The RNG
/// stream driving the chain is owned alongside it by the same worker.
struct ChainState {
  Vector theta;
  double potential = 0.0;
  Vector grad;
  std::uint64_t step = 0;
};

/// Throws InvalidState if U(theta) is not finite.
ChainState make_state(const TargetDensity& target, const Vector& theta);

enum class StepEvent : char { Accepted = 'A', Rejected = 'R', LazyHold = 'L' };

/// Proposal mean: theta - step P grad for MALA, theta for MRW.
Vector proposal_mean(const ProposalSpec& spec, const Vector& theta, const Vector& grad);

/// Candidate for a given standard-normal vector z.
Vector propose(const ChainState& state, const ProposalSpec& spec, const Vector& z);
/// Draws z (exactly d normals) from `rng` and returns the candidate.
Vector propose(const ChainState& state, const ProposalSpec& spec, RngStream& rng);

/// Log density of the proposal from `from` evaluated at `to`, normalization included.
double log_q(const ProposalSpec& spec, const TargetDensity& target, const Vector& from,
             const Vector& to);

/// Metropolis-Hastings acceptance probability min(1, f(y)Q(y,x) / f(x)Q(x,y)).
/// Zero when U(y) is infinite; throws InvalidState when U(x) is.
double acceptance(const TargetDensity& target, const ProposalSpec& spec, const Vector& x,
                  const Vector& y);
/// Log of the acceptance ratio before the min with 1.
double log_acceptance_ratio(const TargetDensity& target, const ProposalSpec& spec, const Vector& x,
                            const Vector& y);

/// One lazy MH transition. Draw order: one lazy uniform, then (unless held)
/// d normals and one accept uniform.
StepEvent step(ChainState& state, const ProposalSpec& spec, const TargetDensity& target,
               RngStream& rng);

struct Trace {
  std::uint64_t chain_id = 0;
  std::uint64_t seed = 0;
  std::size_t thin = 1;
  Matrix samples;                 ///< one recorded state per row
  std::vector<StepEvent> events;  ///< event of the step that produced each row
  std::size_t accepted = 0;       ///< over all steps, recorded or not
  std::size_t rejected = 0;
  std::size_t lazy_holds = 0;
  double acceptance_rate = 0.0;   ///< accepted / (accepted + rejected)

  Eigen::Index length() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
};

/// Runs n_steps transitions from `init` on stream (seed, chain_id),
/// recording every thin-th state.
Trace run_chain(const TargetDensity& target, const ProposalSpec& spec, const Vector& init,
                std::size_t n_steps, std::size_t thin, std::uint64_t seed,
                std::uint64_t chain_id = 0);

/// One chain per initial point, chain i on stream (seed, i), run on worker threads.
std::vector<Trace> run_chains(const TargetDensity& target, const ProposalSpec& spec,
                              const std::vector<Vector>& inits, std::size_t n_steps,
                              std::size_t thin, std::uint64_t seed);

struct StepSizeInputs {
  double dim = 1.0;
  double rho2 = 1.0;
  double kappa = 1.0;
  double warmness = 1.0;  ///< M0
  double tolerance = 0.1;  ///< epsilon
  double c0 = 1.0;
  double precond_op_norm = 1.0;
  double radius = 0.0;
  double grad_error = 0.0;  ///< epsilon_1
};

/// h = c0 / (rho2 (d^{1/3} + d^{1/4} L^{1/4} + L^{1/2} + |P|_op R^2 eps1^2)),
/// L = max(0, log(M0 d kappa / eps)). The physical step is h / n.
double mala_step_size(const StepSizeInputs& in);

struct TuneResult {
  double c0 = 1.0;
  double acceptance_rate = 0.0;
  int trials = 0;
  bool in_band = false;
};

/// Bisects c0 on a log scale so that a `warmup`-step chain from `init` with
/// step c0 * base_step has mean acceptance probability in [lo, hi]. Every
/// trial reuses stream (seed, 0).
TuneResult tune_c0(const TargetDensity& target, SamplerKind kind, double base_step,
                   const SpdMatrix& precond, const Vector& init, std::size_t warmup,
                   std::uint64_t seed, double lo = 0.5, double hi = 0.7);

struct WarmStartSpec {
  Vector center;
  double n = 1.0;
  SpdMatrix precond;
  double radius = std::numeric_limits<double>::infinity();
};

/// center + n^{-1/2} P^{1/2} z, z ~ N(0, I) conditioned on ||z|| <= radius.
/// Throws InvalidInput if the region has Gaussian mass below 1e-6 and
/// NumericalFailure after 1e6 rejections.
Vector warm_start_sample(const WarmStartSpec& ws, RngStream& rng);

struct WarmBound {
  double mass_term = 0.0;          ///< -log pi_loc(K), importance-sampled
  double quadratic_term = 0.0;     ///< sup_K |xi'(P^{-1} - J) xi|
  double perturbation_term = 0.0;  ///< 2 sup_K |V(xi) - 0.5 xi'J xi|
  double weight_ess = 0.0;
  double total() const { return mass_term + quadratic_term + perturbation_term; }
};

/// Upper bound on log M0 for the truncated Gaussian warm start over
/// K = {xi : ||P^{-1/2} xi|| <= radius}. Sup terms use a grid (d <= 3); the
/// mass term uses self-normalized importance sampling from N(0, J^{-1}).
/// grid_step <= 0 picks about 40 points per half-axis.
WarmBound warm_bound(const RescaledPotential& v, const Matrix& j, const SpdMatrix& precond,
                     double radius, std::size_t mc_samples, std::uint64_t seed,
                     double grid_step = 0.0);
WarmBound warm_bound(const TargetDensity& v, const Matrix& j, const SpdMatrix& precond,
                     double radius, std::size_t mc_samples, std::uint64_t seed,
                     double grid_step = 0.0);

}  // namespace langevin
