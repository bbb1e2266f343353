#pragma once

#include <optional>
#include <vector>

#include "langevin/linalg.hpp"
#include "langevin/targets.hpp"

namespace langevin {

struct ErmConfig {
  std::size_t max_iters = 20000;
  double step_scale = 0.5;       ///< c in the c / sqrt(t) schedule
  std::optional<Box> projection;  ///< defaults to the prior box, if any
  double tolerance = 1e-12;      ///< stop when best risk improves less than this per check window
  std::size_t check_window = 2000;
  bool average = true;           ///< average the second half of the iterates
  bool record_history = false;

  void validate() const;
};

struct ErmResult {
  Vector theta;
  double risk = 0.0;
  std::size_t iterations = 0;
  std::vector<double> best_risk;  ///< best-so-far risk per iteration, when recorded
};

/// Projected subgradient descent on R_n with step c / sqrt(t). Returns the
/// tail average (or the best iterate if it has lower risk), so that
/// R_n(result) <= R_n(init) always holds.
ErmResult minimize_empirical_risk(const GibbsSpec& spec, const Vector& init,
                                  const ErmConfig& cfg = {});

/// (n^{-1} sum X_i X_i')^{-1}. Throws NotSpd naming the null direction when
/// the Gram matrix has an eigenvalue below 1e-10.
Matrix empirical_gram_precond(const Dataset& data);

/// (n^{-1} sum Hess l(X_i, theta_hat))^{-1}. Requires a loss with Hessians.
Matrix empirical_hessian_precond(const GibbsSpec& spec, const Vector& theta_hat);

}  // namespace langevin
