#include "langevin/diagnostics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <limits>

#include "langevin/error.hpp"

namespace langevin {
namespace {

double mean_of(const Vector& v) { return v.mean(); }

double sample_var(const Vector& v) {
  const double mu = v.mean();
  return (v.array() - mu).square().sum() / static_cast<double>(v.size() - 1);
}

double sample_cov(const Vector& a, const Vector& b) {
  const double ma = a.mean(), mb = b.mean();
  return ((a.array() - ma) * (b.array() - mb)).sum() / static_cast<double>(a.size() - 1);
}

void check_chains(const ChainSeries& chains) {
  if (chains.size() < 2) throw InvalidInput("Gelman-Rubin needs at least two chains");
  const Eigen::Index n = chains.front().size();
  if (n < 2) throw InvalidInput("Gelman-Rubin needs at least two values per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw InvalidInput("Gelman-Rubin chains must have equal length");
  }
}

}  // namespace

ChainSeries extract_series(const std::vector<Trace>& chains, Eigen::Index coordinate,
                           Eigen::Index prefix_len) {
  ChainSeries out;
  out.reserve(chains.size());
  for (const auto& t : chains) {
    if (coordinate < 0 || coordinate >= t.dim()) throw InvalidInput("coordinate out of range");
    if (prefix_len > t.length()) throw InvalidInput("prefix longer than trace");
    out.push_back(t.samples.col(coordinate).head(prefix_len));
  }
  return out;
}

double psrf_raw(const ChainSeries& chains) {
  check_chains(chains);
  const auto m = static_cast<Eigen::Index>(chains.size());
  const double n = static_cast<double>(chains.front().size());
  Vector means(m), vars(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    means[i] = mean_of(chains[i]);
    vars[i] = sample_var(chains[i]);
  }
  const double w = vars.mean();
  if (w <= 0.0) throw DegenerateChains("within-chain variance is zero");
  const double b_over_n = sample_var(means);
  const double v = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(v / w);
}

ShrinkFactor psrf(const ChainSeries& chains) {
  check_chains(chains);
  const auto m_idx = static_cast<Eigen::Index>(chains.size());
  const double m = static_cast<double>(m_idx);
  const double n = static_cast<double>(chains.front().size());
  Vector means(m_idx), vars(m_idx);
  for (Eigen::Index i = 0; i < m_idx; ++i) {
    means[i] = mean_of(chains[i]);
    vars[i] = sample_var(chains[i]);
  }
  const double w = vars.mean();
  if (w <= 0.0) throw DegenerateChains("within-chain variance is zero");
  const double b = n * sample_var(means);
  const double mu = means.mean();

  const double var_w = sample_var(vars) / m;
  const double var_b = 2.0 * b * b / (m - 1.0);
  const Vector means_sq = means.array().square();
  const double cov_wb = (n / m) * (sample_cov(vars, means_sq) - 2.0 * mu * sample_cov(vars, means));

  const double v = (n - 1.0) / n * w + (1.0 + 1.0 / m) * b / n;
  const double var_v = ((n - 1.0) * (n - 1.0) * var_w + (1.0 + 1.0 / m) * (1.0 + 1.0 / m) * var_b +
                        2.0 * (n - 1.0) * (1.0 + 1.0 / m) * cov_wb) /
                       (n * n);
  const double df_adj = var_v > 0.0 ? ((2.0 * v * v / var_v) + 3.0) / ((2.0 * v * v / var_v) + 1.0) : 1.0;

  const double r2_fixed = (n - 1.0) / n;
  const double r2_random = (1.0 + 1.0 / m) * (1.0 / n) * (b / w);
  const double df_b = m - 1.0;
  double f_quantile;
  if (var_w > 0.0) {
    const double df_w = 2.0 * w * w / var_w;
    f_quantile = boost::math::quantile(boost::math::fisher_f(df_b, df_w), 0.975);
  } else {
    // W known exactly: F(df_b, inf) is chi^2(df_b) / df_b.
    f_quantile = boost::math::quantile(boost::math::chi_squared(df_b), 0.975) / df_b;
  }
  ShrinkFactor out;
  out.point = std::sqrt(df_adj * (r2_fixed + r2_random));
  out.upper = std::sqrt(df_adj * (r2_fixed + f_quantile * r2_random));
  return out;
}

ShrinkFactor gelman_rubin(const std::vector<Trace>& chains, Eigen::Index coordinate,
                          Eigen::Index prefix_len) {
  if (chains.size() < 2) throw InvalidInput("Gelman-Rubin needs at least two chains");
  if (prefix_len < 4) throw InvalidInput("Gelman-Rubin prefix must have length >= 4");
  const Eigen::Index start = prefix_len / 2;
  ChainSeries kept;
  for (auto& s : extract_series(chains, coordinate, prefix_len)) {
    kept.push_back(s.tail(prefix_len - start));
  }
  return psrf(kept);
}

std::optional<Eigen::Index> iterations_to_threshold(const std::vector<Trace>& chains,
                                                    double threshold, Eigen::Index stride) {
  if (!(threshold > 1.0)) throw InvalidInput("iterations_to_threshold: threshold must exceed 1");
  if (stride < 1) throw InvalidInput("iterations_to_threshold: stride must be positive");
  if (chains.empty()) return std::nullopt;
  const Eigen::Index len = chains.front().length();
  const Eigen::Index d = chains.front().dim();
  for (Eigen::Index prefix = stride; prefix <= len; prefix += stride) {
    if (prefix < 4) continue;
    bool ok = true;
    for (Eigen::Index c = 0; c < d && ok; ++c) {
      ok = gelman_rubin(chains, c, prefix).upper < threshold;
    }
    if (ok) return prefix;
  }
  return std::nullopt;
}

double effective_sample_size(const Eigen::Ref<const Vector>& x) {
  const Eigen::Index n = x.size();
  if (n < 10) throw InvalidInput("effective sample size needs at least 10 values");
  const double mu = x.mean();
  const Vector c = x.array() - mu;
  if (x.maxCoeff() == x.minCoeff()) throw DegenerateChains("series has zero variance");
  const double gamma0 = c.squaredNorm() / static_cast<double>(n);

  auto rho = [&](Eigen::Index lag) {
    return c.head(n - lag).dot(c.tail(n - lag)) / static_cast<double>(n) / gamma0;
  };
  double tau = -1.0;
  for (Eigen::Index k = 0; 2 * k + 1 <= n / 2; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  const double nd = static_cast<double>(n);
  if (tau < 1.0) return nd;
  return std::min(nd, nd / tau);
}

double effective_sample_size(const Trace& trace, Eigen::Index coordinate) {
  if (coordinate < 0 || coordinate >= trace.dim()) throw InvalidInput("coordinate out of range");
  return effective_sample_size(trace.samples.col(coordinate));
}

MomentError moment_discrepancy(const Matrix& samples, const Vector& mean, const Matrix& covariance) {
  if (samples.rows() == 0) throw InvalidInput("moment_discrepancy: empty trace");
  if (samples.cols() != mean.size() || covariance.rows() != mean.size() ||
      covariance.cols() != mean.size()) {
    throw InvalidInput("moment_discrepancy: dimension mismatch");
  }
  const Vector mu_hat = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - mu_hat.transpose();
  const Matrix cov_hat = centered.transpose() * centered / static_cast<double>(samples.rows());
  MomentError e;
  e.mean_error = (mu_hat - mean).cwiseAbs().maxCoeff();
  e.covariance_error = (cov_hat - covariance).cwiseAbs().maxCoeff();
  return e;
}

DiagnosticsReport diagnose(const std::vector<Trace>& chains, Eigen::Index stride, double threshold,
                           const std::optional<GaussianMoments>& moments) {
  if (chains.size() < 2) throw InvalidInput("diagnose needs at least two chains");
  if (stride < 1) throw InvalidInput("diagnose: stride must be positive");
  const Eigen::Index len = chains.front().length();
  const Eigen::Index d = chains.front().dim();
  for (const auto& t : chains) {
    if (t.length() != len || t.dim() != d) throw InvalidInput("diagnose: traces differ in shape");
  }
  DiagnosticsReport rep;
  rep.iters_to_threshold.assign(static_cast<std::size_t>(d), std::nullopt);
  for (Eigen::Index prefix = stride; prefix <= len; prefix += stride) {
    if (prefix < 4) continue;
    bool all_below = true;
    for (Eigen::Index c = 0; c < d; ++c) {
      const ShrinkFactor sf = gelman_rubin(chains, c, prefix);
      rep.rhat.push_back({prefix, c, sf.point, sf.upper});
      auto& first = rep.iters_to_threshold[static_cast<std::size_t>(c)];
      if (sf.upper < threshold) {
        if (!first) first = prefix;
      } else {
        all_below = false;
      }
    }
    if (all_below && !rep.iters_to_threshold_max) rep.iters_to_threshold_max = prefix;
  }
  rep.ess = Vector::Zero(d);
  for (const auto& t : chains) {
    for (Eigen::Index c = 0; c < d; ++c) rep.ess[c] += effective_sample_size(t, c);
  }
  rep.ess /= static_cast<double>(chains.size());
  if (moments) {
    Matrix pooled(len * static_cast<Eigen::Index>(chains.size()), d);
    for (std::size_t i = 0; i < chains.size(); ++i) {
      pooled.middleRows(static_cast<Eigen::Index>(i) * len, len) = chains[i].samples;
    }
    rep.moment_error = moment_discrepancy(pooled, moments->mean, moments->covariance);
  }
  return rep;
}

}  // namespace langevin
