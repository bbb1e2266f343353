#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "langevin/linalg.hpp"
#include "langevin/rng.hpp"
#include "langevin/samplers.hpp"
#include "langevin/targets.hpp"

namespace langevin {

/// Subset of a finite state space; bit i set means state i is in the set.
using StateSet = std::uint32_t;

/// Finite row-stochastic transition matrix with its stationary distribution.
class DiscreteChain {
 public:
  /// Checks rows sum to 1 (1e-12), pi > 0 sums to 1 (1e-12), pi T = pi (1e-10).
  DiscreteChain(Matrix transition, Vector stationary);
  /// Solves for pi as the left eigenvector of T for eigenvalue 1.
  static DiscreteChain from_transition(Matrix transition);

  Eigen::Index size() const { return t_.rows(); }
  const Matrix& transition() const { return t_; }
  const Vector& stationary() const { return pi_; }
  /// max |pi_i T_ij - pi_j T_ji|
  double reversibility_residual() const;
  bool is_reversible(double tol = 1e-10) const { return reversibility_residual() <= tol; }
  /// min_i T_ii
  double laziness() const { return t_.diagonal().minCoeff(); }

 private:
  Matrix t_;
  Vector pi_;
};

/// phi(S) = sum_{i in S} pi_i sum_{j not in S} T_ij. S must be proper and nonempty.
double ergodic_flow(const DiscreteChain& chain, StateSet s);
double set_mass(const DiscreteChain& chain, StateSet s);

/// Visits every proper nonempty subset with its mass and flow (Gray-code
/// order, O(m) per subset). Requires m <= 20.
void for_each_subset(const DiscreteChain& chain,
                     const std::function<void(StateSet, double mass, double flow)>& visit);

struct ProfilePoint {
  double v = 0.0;
  double s = 0.0;
  std::optional<double> value;  ///< nullopt when no set has s < pi(S) <= v
  StateSet argmin = 0;
};

/// Exact Phi_s(v) = min { phi(S) / (pi(S) - s) : s < pi(S) <= v } for each v.
std::vector<ProfilePoint> s_conductance_profile(const DiscreteChain& chain, double s,
                                                const std::vector<double>& v_grid);

/// min phi(S) / pi(S) over pi(S) <= 1/2, by a direct loop over all subsets.
double classical_conductance(const DiscreteChain& chain);

double chi2_divergence(const Vector& mu, const Vector& pi);

/// First k with chi^2(mu_0 T^k, pi) <= eps^2; nullopt if not reached in 1e6 steps.
std::optional<std::size_t> chi2_mixing_time(const DiscreteChain& chain, const Vector& mu0, double eps);

/// Places mass M0 pi_i on states in increasing-pi order until mass runs out.
Vector worst_warm_start(const DiscreteChain& chain, double warmness);

struct MixingBoundCheck {
  std::optional<std::size_t> tau_actual;
  double tau_bound = 0.0;  ///< +inf when Phi_s vanishes somewhere on the range
  bool infinite_bound = false;
  bool holds = false;
  double zeta = 0.0;  ///< laziness used, min(min_i T_ii, 1/2)
  double s = 0.0;
};

/// Compares the chi^2 mixing time from the worst M0-warm start with
///   16/zeta int_{4/M0}^{1/2} dv / (v Phi_s(v)^2) + 64/zeta int_{1/2}^{4 sqrt2 / eps} dv / (v Phi_s(1/2)^2),
/// s = eps^2 / (16 M0^2), integrating the piecewise-constant profile exactly.
MixingBoundCheck verify_mixing_bound(const DiscreteChain& chain, double warmness, double eps);

/// Metropolis-Hastings chain on a 1-d grid whose proposal is the sampler's
/// Gaussian kernel renormalized over the grid, with the sampler's lazy hold.
DiscreteChain discretize_mala(const TargetDensity& target, const std::vector<double>& grid,
                              const ProposalSpec& spec);

/// Random reversible chain: Metropolis filter of a random symmetric
/// proposal toward a random stationary law, then mixed with the identity
/// at weight `lazy`.
DiscreteChain random_reversible_lazy_chain(Eigen::Index m, RngStream& rng, double lazy = 0.5);

}  // namespace langevin
