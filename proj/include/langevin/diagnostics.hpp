#pragma once

#include <optional>
#include <vector>

#include "langevin/linalg.hpp"
#include "langevin/samplers.hpp"

namespace langevin {

/// One scalar series per chain.
using ChainSeries = std::vector<Vector>;

/// Column `coordinate` of the first `prefix_len` rows of each trace.
ChainSeries extract_series(const std::vector<Trace>& chains, Eigen::Index coordinate,
                           Eigen::Index prefix_len);

struct ShrinkFactor {
  double point = 0.0;
  double upper = 0.0;  ///< 97.5% quantile
};

/// sqrt(V / W) with V = (n-1)/n W + B/n, using all n values of each chain.
/// No burn-in discard, no degrees-of-freedom correction.
double psrf_raw(const ChainSeries& chains);

/// Gelman-Rubin shrink factor on the given (already burned-in) series with
/// the Brooks-Gelman degrees-of-freedom correction and the F-approximation
/// upper bound. Throws DegenerateChains when W = 0.
ShrinkFactor psrf(const ChainSeries& chains);

/// psrf on the second half of each chain's first `prefix_len` values.
/// Requires m >= 2 and prefix_len >= 4.
ShrinkFactor gelman_rubin(const std::vector<Trace>& chains, Eigen::Index coordinate,
                          Eigen::Index prefix_len);

/// Smallest prefix length (a multiple of stride, >= 4) at which every
/// coordinate's upper shrink factor is below threshold; nullopt if none.
std::optional<Eigen::Index> iterations_to_threshold(const std::vector<Trace>& chains,
                                                    double threshold = 1.01,
                                                    Eigen::Index stride = 50);

/// N / (1 + 2 sum rho_t) with Geyer's initial positive sequence, clamped to
/// (0, N]. Throws InvalidInput for N < 10, DegenerateChains for zero variance.
double effective_sample_size(const Eigen::Ref<const Vector>& series);
double effective_sample_size(const Trace& trace, Eigen::Index coordinate);

struct MomentError {
  double mean_error = 0.0;        ///< max |mean_hat - mu|
  double covariance_error = 0.0;  ///< max |Sigma_hat - Sigma| (1/N normalization)
};

MomentError moment_discrepancy(const Matrix& samples, const Vector& mean, const Matrix& covariance);

struct RhatRow {
  Eigen::Index prefix_len = 0;
  Eigen::Index coordinate = 0;
  double point = 0.0;
  double upper = 0.0;
};

struct DiagnosticsReport {
  std::vector<RhatRow> rhat;  ///< trajectory over prefixes, every coordinate
  Vector ess;                 ///< per coordinate, averaged over chains
  std::vector<std::optional<Eigen::Index>> iters_to_threshold;  ///< per coordinate
  std::optional<Eigen::Index> iters_to_threshold_max;           ///< all coordinates at once
  std::optional<MomentError> moment_error;
};

/// Full report: rhat trajectories at multiples of `stride`, ESS of every
/// full trace, and, when `moments` is given, the pooled moment discrepancy.
DiagnosticsReport diagnose(const std::vector<Trace>& chains, Eigen::Index stride = 50,
                           double threshold = 1.01,
                           const std::optional<GaussianMoments>& moments = std::nullopt);

}  // namespace langevin
