#include "langevin/conductance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "langevin/error.hpp"

namespace langevin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxMixingSteps = 1'000'000;

StateSet full_set(Eigen::Index m) { return static_cast<StateSet>((1ull << m) - 1); }

bool in_set(StateSet s, Eigen::Index i) { return (s >> i) & 1u; }

// Feasible (mass, ratio) pairs sorted by mass, with the running minimum so
// that Phi_s(v) is the last prefix value whose mass is <= v.
struct ProfileTable {
  std::vector<double> mass;
  std::vector<double> prefix_min;
  std::vector<StateSet> prefix_arg;

  std::optional<std::size_t> index_at(double v) const {
    const auto it = std::upper_bound(mass.begin(), mass.end(), v);
    if (it == mass.begin()) return std::nullopt;
    return static_cast<std::size_t>(it - mass.begin()) - 1;
  }
};

ProfileTable build_profile(const DiscreteChain& chain, double s, double v_max) {
  struct Entry {
    double mass;
    double ratio;
    StateSet set;
  };
  std::vector<Entry> entries;
  for_each_subset(chain, [&](StateSet set, double mass, double flow) {
    if (mass > s && mass <= v_max) entries.push_back({mass, std::max(0.0, flow) / (mass - s), set});
  });
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.mass < b.mass || (a.mass == b.mass && a.set < b.set);
  });
  ProfileTable t;
  double best = kInf;
  StateSet arg = 0;
  for (const auto& e : entries) {
    if (e.ratio < best) {
      best = e.ratio;
      arg = e.set;
    }
    t.mass.push_back(e.mass);
    t.prefix_min.push_back(best);
    t.prefix_arg.push_back(arg);
  }
  return t;
}

// int_lo^hi dv / (v Phi(v)^2) for the step function in `t`; Phi = +inf
// (integrand 0) where no set is feasible.
double integrate_profile(const ProfileTable& t, double lo, double hi) {
  if (!(lo < hi)) return 0.0;
  std::vector<double> cuts{lo};
  for (double m : t.mass) {
    if (m > cuts.back() && m < hi) cuts.push_back(m);
  }
  cuts.push_back(hi);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const auto idx = t.index_at(cuts[k]);
    if (!idx) continue;
    const double phi = t.prefix_min[*idx];
    if (phi <= 0.0) return kInf;
    total += std::log(cuts[k + 1] / cuts[k]) / (phi * phi);
  }
  return total;
}

}  // namespace

DiscreteChain::DiscreteChain(Matrix transition, Vector stationary)
    : t_(std::move(transition)), pi_(std::move(stationary)) {
  const Eigen::Index m = t_.rows();
  if (m < 2 || t_.cols() != m) throw InvalidInput("chain: transition matrix must be square with m >= 2");
  if (pi_.size() != m) throw InvalidInput("chain: stationary vector size mismatch");
  if ((t_.array() < 0.0).any() || !t_.allFinite()) throw InvalidInput("chain: negative or non-finite transition entry");
  const double row_err = (t_.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (row_err > 1e-12) {
    std::ostringstream os;
    os << "chain: rows sum to 1 only within " << row_err;
    throw InvalidInput(os.str());
  }
  if ((pi_.array() <= 0.0).any()) throw InvalidInput("chain: stationary distribution must be positive");
  if (std::abs(pi_.sum() - 1.0) > 1e-12) throw InvalidInput("chain: stationary distribution must sum to 1");
  const double stat_err = (pi_.transpose() * t_ - pi_.transpose()).cwiseAbs().maxCoeff();
  if (stat_err > 1e-10) {
    std::ostringstream os;
    os << "chain: pi T differs from pi by " << stat_err;
    throw InvalidInput(os.str());
  }
}

DiscreteChain DiscreteChain::from_transition(Matrix transition) {
  if (transition.rows() != transition.cols()) throw InvalidInput("chain: transition matrix must be square");
  Eigen::EigenSolver<Matrix> es(transition.transpose());
  if (es.info() != Eigen::Success) throw NumericalFailure("chain: eigen-solve did not converge");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i] - 1.0) < std::abs(es.eigenvalues()[best] - 1.0)) best = i;
  }
  Vector pi = es.eigenvectors().col(best).real();
  pi /= pi.sum();
  // One power step polishes the eigenvector to the stationarity tolerance.
  pi = (pi.transpose() * transition).transpose();
  pi /= pi.sum();
  return DiscreteChain(std::move(transition), std::move(pi));
}

double DiscreteChain::reversibility_residual() const {
  const Matrix flow = pi_.asDiagonal() * t_;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

double set_mass(const DiscreteChain& chain, StateSet s) {
  double mass = 0.0;
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    if (in_set(s, i)) mass += chain.stationary()[i];
  }
  return mass;
}

double ergodic_flow(const DiscreteChain& chain, StateSet s) {
  const Eigen::Index m = chain.size();
  if (m > 32) throw UnsupportedDimension("ergodic_flow supports at most 32 states");
  if (s == 0 || (s & full_set(m)) == full_set(m) || (s >> m) != 0) {
    throw InvalidInput("ergodic_flow: subset must be proper and nonempty");
  }
  double flow = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!in_set(s, i)) continue;
    double out = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!in_set(s, j)) out += chain.transition()(i, j);
    }
    flow += chain.stationary()[i] * out;
  }
  return flow;
}

void for_each_subset(const DiscreteChain& chain,
                     const std::function<void(StateSet, double, double)>& visit) {
  const Eigen::Index m = chain.size();
  if (m > 20) throw UnsupportedDimension("subset enumeration supports at most 20 states");
  const Matrix& t = chain.transition();
  const Vector& pi = chain.stationary();
  const StateSet full = full_set(m);
  StateSet set = 0;
  double flow = 0.0;
  const std::uint64_t count = 1ull << m;
  for (std::uint64_t g = 1; g < count; ++g) {
    // Gray code: the bit flipped between g-1 and g is the lowest set bit of g.
    const auto k = static_cast<Eigen::Index>(std::countr_zero(g));
    const bool adding = !in_set(set, k);
    // Flow contributions of state k: out of k into the complement, into k from the set.
    double k_to_rest = 0.0, set_to_k = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == k) continue;
      if (in_set(set, j)) {
        set_to_k += pi[j] * t(j, k);
      } else {
        k_to_rest += t(k, j);
      }
    }
    if (adding) {
      flow += pi[k] * k_to_rest - set_to_k;
      set |= (StateSet{1} << k);
    } else {
      set &= ~(StateSet{1} << k);
      flow += set_to_k - pi[k] * k_to_rest;
    }
    if (set != full) visit(set, set_mass(chain, set), flow);
  }
}

std::vector<ProfilePoint> s_conductance_profile(const DiscreteChain& chain, double s,
                                                const std::vector<double>& v_grid) {
  if (chain.size() > 20) throw UnsupportedDimension("profile supports at most 20 states");
  if (!(s >= 0.0 && s < 0.5)) throw InvalidInput("profile: s must lie in [0, 1/2)");
  double v_max = 0.0;
  for (double v : v_grid) {
    if (!(v > s && v <= 0.5)) throw InvalidInput("profile: every v must lie in (s, 1/2]");
    v_max = std::max(v_max, v);
  }
  const ProfileTable table = build_profile(chain, s, v_max);
  std::vector<ProfilePoint> out;
  out.reserve(v_grid.size());
  for (double v : v_grid) {
    ProfilePoint p;
    p.v = v;
    p.s = s;
    if (const auto idx = table.index_at(v)) {
      p.value = table.prefix_min[*idx];
      p.argmin = table.prefix_arg[*idx];
    }
    out.push_back(p);
  }
  return out;
}

double classical_conductance(const DiscreteChain& chain) {
  const Eigen::Index m = chain.size();
  if (m > 20) throw UnsupportedDimension("conductance supports at most 20 states");
  double best = kInf;
  for (StateSet s = 1; s < full_set(m); ++s) {
    const double mass = set_mass(chain, s);
    if (mass <= 0.5) best = std::min(best, ergodic_flow(chain, s) / mass);
  }
  return best;
}

double chi2_divergence(const Vector& mu, const Vector& pi) {
  if (mu.size() != pi.size()) throw InvalidInput("chi2: size mismatch");
  if ((pi.array() <= 0.0).any()) throw InvalidInput("chi2: stationary distribution has a zero entry");
  return ((mu - pi).array().square() / pi.array()).sum();
}

std::optional<std::size_t> chi2_mixing_time(const DiscreteChain& chain, const Vector& mu0, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("chi2 mixing time: eps must lie in (0, 1)");
  if (mu0.size() != chain.size() || (mu0.array() < 0.0).any() || std::abs(mu0.sum() - 1.0) > 1e-9) {
    throw InvalidInput("chi2 mixing time: mu0 is not a distribution on the chain's states");
  }
  const double target = eps * eps;
  Eigen::RowVectorXd mu = mu0.transpose();
  const Matrix& t = chain.transition();
  for (std::size_t k = 0; k <= kMaxMixingSteps; ++k) {
    if (chi2_divergence(mu.transpose(), chain.stationary()) <= target) return k;
    mu = mu * t;
  }
  return std::nullopt;
}

Vector worst_warm_start(const DiscreteChain& chain, double warmness) {
  if (!(warmness >= 1.0)) throw InvalidInput("warm start: M0 must be >= 1");
  const Vector& pi = chain.stationary();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pi.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pi[a] < pi[b]; });
  Vector mu = Vector::Zero(pi.size());
  double remaining = 1.0;
  for (auto i : order) {
    const double put = std::min(warmness * pi[i], remaining);
    mu[i] = put;
    remaining -= put;
    if (remaining <= 0.0) break;
  }
  return mu / mu.sum();
}

MixingBoundCheck verify_mixing_bound(const DiscreteChain& chain, double warmness, double eps) {
  if (chain.size() > 15) throw UnsupportedDimension("verify_mixing_bound supports at most 15 states");
  if (!chain.is_reversible()) throw InvalidInput("verify_mixing_bound: chain is not reversible");
  if (!(warmness >= 1.0)) throw InvalidInput("verify_mixing_bound: M0 must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("verify_mixing_bound: eps must lie in (0, 1)");
  const double laziness = chain.laziness();
  if (laziness < 0.05) throw InvalidInput("verify_mixing_bound: chain is not lazy enough (min T_ii < 0.05)");

  MixingBoundCheck out;
  out.zeta = std::min(laziness, 0.5);
  out.s = eps * eps / (16.0 * warmness * warmness);
  const ProfileTable table = build_profile(chain, out.s, 0.5);

  const auto half = table.index_at(0.5);
  const double phi_half = half ? table.prefix_min[*half] : kInf;
  const double first = integrate_profile(table, std::max(4.0 / warmness, out.s), 0.5);
  const double upper = 4.0 * std::sqrt(2.0) / eps;
  const double second = phi_half <= 0.0 ? kInf : std::log(upper / 0.5) / (phi_half * phi_half);
  out.tau_bound = 16.0 / out.zeta * first + 64.0 / out.zeta * second;
  out.infinite_bound = !std::isfinite(out.tau_bound);

  out.tau_actual = chi2_mixing_time(chain, worst_warm_start(chain, warmness), eps);
  if (out.infinite_bound) {
    out.holds = true;
  } else {
    out.holds = out.tau_actual && static_cast<double>(*out.tau_actual) <= out.tau_bound;
  }
  return out;
}

DiscreteChain discretize_mala(const TargetDensity& target, const std::vector<double>& grid,
                              const ProposalSpec& spec) {
  if (target.dim() != 1 || spec.dim() != 1) throw InvalidInput("discretize_mala: target must be 1-d");
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (m < 2 || m > 20) throw InvalidInput("discretize_mala: grid must have 2..20 points");
  std::vector<Vector> x(grid.size());
  Vector log_f(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    x[i] = Vector::Constant(1, grid[i]);
    log_f[i] = -target.potential(x[i]);
    if (!std::isfinite(log_f[i])) throw InvalidInput("discretize_mala: target is not finite on the grid");
  }
  // Grid-renormalized proposal, in logs.
  Matrix log_q_bar(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector row(m);
    for (Eigen::Index j = 0; j < m; ++j) row[j] = log_q(spec, target, x[i], x[j]);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    log_q_bar.row(i) = (row.array() - lse).transpose();
  }
  const double move = 1.0 - spec.lazy();
  Matrix t = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      const double log_a = std::min(0.0, log_f[j] + log_q_bar(j, i) - log_f[i] - log_q_bar(i, j));
      t(i, j) = move * std::exp(log_q_bar(i, j) + log_a);
      off += t(i, j);
    }
    t(i, i) = 1.0 - off;
  }
  DiscreteChain chain = DiscreteChain::from_transition(t);

  Vector f = (log_f.array() - log_f.maxCoeff()).exp();
  f /= f.sum();
  const double gap = (chain.stationary() - f).cwiseAbs().maxCoeff();
  if (gap > 1e-8) {
    std::ostringstream os;
    os << "discretize_mala: eigenvector differs from the grid target by " << gap;
    throw NumericalFailure(os.str());
  }
  return chain;
}

DiscreteChain random_reversible_lazy_chain(Eigen::Index m, RngStream& rng, double lazy) {
  if (m < 2 || m > 20) throw InvalidInput("random chain: m must lie in 2..20");
  if (!(lazy >= 0.0 && lazy < 1.0)) throw InvalidInput("random chain: lazy must lie in [0, 1)");
  Vector pi(m);
  for (Eigen::Index i = 0; i < m; ++i) pi[i] = 0.05 + rng.uniform();
  pi /= pi.sum();
  Matrix w = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) w(i, j) = w(j, i) = rng.uniform();
  }
  w /= w.rowwise().sum().maxCoeff();
  Matrix t = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      t(i, j) = (1.0 - lazy) * w(i, j) * std::min(1.0, pi[j] / pi[i]);
      off += t(i, j);
    }
    t(i, i) = 1.0 - off;
  }
  return DiscreteChain(std::move(t), std::move(pi));
}

}  // namespace langevin
