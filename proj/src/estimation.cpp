#include "langevin/estimation.hpp"

#include <cmath>
#include <sstream>

#include "langevin/error.hpp"

namespace langevin {
namespace {

Vector project(const std::optional<Box>& box, Vector theta) {
  if (box) theta = theta.cwiseMax(box->lo).cwiseMin(box->hi);
  return theta;
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

Matrix inverse_checked(const Matrix& avg, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (avg + avg.transpose()));
  if (es.info() != Eigen::Success) throw NumericalFailure(std::string(what) + ": eigensolver failed");
  if (es.eigenvalues()[0] < 1e-10) {
    std::ostringstream os;
    os << what << " is singular: eigenvalue " << es.eigenvalues()[0] << " along direction "
       << format_vector(es.eigenvectors().col(0));
    throw NotSpd(os.str());
  }
  const Matrix& q = es.eigenvectors();
  Matrix inv = q * es.eigenvalues().cwiseInverse().asDiagonal() * q.transpose();
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

void ErmConfig::validate() const {
  if (!(step_scale > 0.0)) throw InvalidInput("ErmConfig: step scale must be positive");
  if (!(tolerance > 0.0)) throw InvalidInput("ErmConfig: tolerance must be positive");
  if (max_iters == 0) throw InvalidInput("ErmConfig: max_iters must be positive");
  if (check_window == 0) throw InvalidInput("ErmConfig: check_window must be positive");
}

ErmResult minimize_empirical_risk(const GibbsSpec& spec, const Vector& init, const ErmConfig& cfg) {
  spec.validate();
  cfg.validate();
  std::optional<Box> box = cfg.projection;
  if (!box) {
    if (const auto* p = std::get_if<UniformBoxPrior>(&spec.prior)) box = p->box;
  }
  if (init.size() != spec.data->dim()) throw InvalidInput("ERM: init dimension mismatch");
  if (box && !box->contains(init)) throw InvalidInput("ERM: init lies outside the projection box");

  const double inv_n = 1.0 / static_cast<double>(spec.data->n());
  auto risk_and_grad = [&](const Vector& theta, Vector& g) {
    const double r = spec.loss->total(*spec.data, theta, &g) * inv_n;
    g *= inv_n;
    if (!std::isfinite(r) || !g.allFinite()) throw NumericalFailure("ERM: non-finite loss encountered");
    return r;
  };

  ErmResult res;
  Vector theta = init, g;
  Vector best_theta = init;
  double best = risk_and_grad(theta, g);
  const double init_risk = best;
  Vector avg = Vector::Zero(init.size());
  std::size_t avg_count = 0;
  double window_start_best = best;

  std::size_t t = 1;
  for (; t <= cfg.max_iters; ++t) {
    theta = project(box, theta - (cfg.step_scale / std::sqrt(static_cast<double>(t))) * g);
    const double r = risk_and_grad(theta, g);
    if (r < best) {
      best = r;
      best_theta = theta;
    }
    if (cfg.record_history) res.best_risk.push_back(best);
    if (2 * t > cfg.max_iters) {
      avg += theta;
      ++avg_count;
    }
    if (t % cfg.check_window == 0) {
      if (window_start_best - best < cfg.tolerance) break;
      window_start_best = best;
    }
  }
  res.iterations = std::min(t, cfg.max_iters);

  res.theta = best_theta;
  res.risk = best;
  if (cfg.average && avg_count > 0) {
    const Vector averaged = project(box, avg / static_cast<double>(avg_count));
    const double r = empirical_risk(spec, averaged);
    if (r <= best) {
      res.theta = averaged;
      res.risk = r;
    }
  }
  if (res.risk > init_risk) {
    res.theta = init;
    res.risk = init_risk;
  }
  return res;
}

Matrix empirical_gram_precond(const Dataset& data) {
  const Matrix gram = data.covariates().transpose() * data.covariates() / static_cast<double>(data.n());
  return inverse_checked(gram, "empirical Gram matrix");
}

Matrix empirical_hessian_precond(const GibbsSpec& spec, const Vector& theta_hat) {
  spec.validate();
  const Eigen::Index d = spec.data->dim();
  Matrix sum = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < spec.data->n(); ++i) {
    const auto h = spec.loss->hessian(spec.data->row(i), spec.data->response(i), theta_hat);
    if (!h) throw InvalidInput("empirical_hessian_precond: loss '" + spec.loss->name() + "' has no Hessian");
    sum += *h;
  }
  return inverse_checked(sum / static_cast<double>(spec.data->n()), "averaged Hessian");
}

}  // namespace langevin
