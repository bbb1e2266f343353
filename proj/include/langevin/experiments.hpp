#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "langevin/conductance.hpp"
#include "langevin/diagnostics.hpp"
#include "langevin/io.hpp"
#include "langevin/samplers.hpp"
#include "langevin/targets.hpp"

namespace langevin {

/// One sampler in the quantile-regression study.
struct SamplerArm {
  std::string name;
  SamplerKind kind = SamplerKind::Mala;
  bool preconditioned = false;
  std::optional<double> c0;  ///< nullopt: tune during warmup
  double accept_lo = 0.5;    ///< tuning band
  double accept_hi = 0.7;
};

std::vector<SamplerArm> default_arms();

struct ExperimentConfig {
  std::size_t n = 500;
  std::size_t d = 5;
  std::uint64_t seed = 20240601;
  double c_off = 0.2;               ///< off-diagonal covariate correlation
  double laplace_location = 0.0;
  double laplace_scale = 2.0;
  std::optional<Vector> theta_star;  ///< defaults to (1, 2, ..., d)
  double tau = 0.5;
  double learning_rate = 1.0;
  double prior_halfwidth = 100.0;
  std::vector<SamplerArm> samplers = default_arms();
  std::size_t chains = 32;
  std::size_t max_iters = 10000;
  std::size_t warmup = 500;
  double spread = 5.0;  ///< starts at theta_hat + spread n^{-1/2} P^{1/2} z
  double rhat_threshold = 1.01;
  std::size_t rhat_stride = 50;
  double ess_target = 300.0;
  std::size_t ess_stride = 100;
  std::size_t ess_at = 5000;
  std::filesystem::path out;  ///< empty: write nothing

  /// Throws InvalidInput on inconsistent settings.
  void validate() const;
  /// Applies `key=value` settings; unknown keys throw.
  void apply(const io::KeyValues& kv);
};

struct ArmResult {
  SamplerArm arm;
  double c0 = 1.0;
  double step = 0.0;
  double tune_acceptance = 0.0;
  double acceptance_rate = 0.0;  ///< mean over chains
  std::optional<Eigen::Index> iters_to_rhat;
  std::vector<std::optional<Eigen::Index>> iters_to_ess;  ///< per coordinate
  Vector ess_at;                                          ///< per coordinate, chain-averaged
  double mean_ess_at = 0.0;
  DiagnosticsReport report;
};

struct QuantileExperimentResult {
  std::shared_ptr<const Dataset> data;
  Vector theta_hat;
  Matrix precond;
  std::vector<ArmResult> arms;

  const ArmResult& arm(const std::string& name) const;
};

/// Covariates N(0, Sigma) with unit diagonal and off-diagonal c_off;
/// responses x' theta_star + Laplace(location, scale) noise.
Dataset generate_quantile_data(const ExperimentConfig& cfg);

QuantileExperimentResult run_quantile_experiment(const ExperimentConfig& cfg);

struct ScalingConfig {
  std::vector<std::size_t> dims{2, 8, 32, 128};
  double c0 = 1.0;
  std::size_t steps = 20000;
  std::uint64_t seed = 7;
  double tolerance = 0.1;  ///< epsilon fed to the step-size formula
  bool constant_arm = true;
  std::filesystem::path out;

  void validate() const;
};

struct ScalingRow {
  std::string arm;  ///< "scaled" or "constant"
  std::size_t d = 0;
  double h = 0.0;
  double acceptance_rate = 0.0;
  double ess_per_step = 0.0;
};

/// MALA on N_d(0, I) with h from mala_step_size (rho2 = kappa = 1, eps1 = 0,
/// log terms clamped), and optionally with h frozen at its value for dims[0].
std::vector<ScalingRow> run_scaling_study(const ScalingConfig& cfg);

struct ConductanceBatchConfig {
  std::uint64_t seed = 11;
  std::size_t count = 50;
  std::vector<Eigen::Index> sizes{3, 4, 5, 6, 7, 8};
  double lazy = 0.5;
  double warmness = 2.0;
  double eps = 0.1;
  bool inject_disconnected = false;
  std::filesystem::path out;

  void validate() const;
};

struct ConductanceRow {
  std::size_t index = 0;
  Eigen::Index size = 0;
  MixingBoundCheck check;
};

/// Random reversible lazy chains, chain i of size sizes[i % sizes.size()] on
/// stream (seed, i), each checked with verify_mixing_bound.
std::vector<ConductanceRow> run_conductance_batch(const ConductanceBatchConfig& cfg);

/// Two disjoint lazy 2-state blocks, uniform stationary law.
DiscreteChain disconnected_chain();

void write_summary_csv(std::ostream& out, const QuantileExperimentResult& res, double tau);
void write_summary_csv(std::ostream& out, const std::vector<ScalingRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<ConductanceRow>& rows);

}  // namespace langevin
