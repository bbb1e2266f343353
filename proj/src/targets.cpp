#include "langevin/targets.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "langevin/error.hpp"

namespace langevin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxGridPoints = 20'000'000;

void require_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    std::ostringstream os;
    os << "quantile level tau=" << tau << " must lie strictly inside (0, 1)";
    throw InvalidInput(os.str());
  }
}

}  // namespace

Box Box::cube(Eigen::Index d, double lo, double hi) {
  return Box{Vector::Constant(d, lo), Vector::Constant(d, hi)};
}

bool Box::contains(const Vector& theta) const {
  return (theta.array() >= lo.array()).all() && (theta.array() <= hi.array()).all();
}

TargetDensity::TargetDensity(Eigen::Index dim, Evaluator eval, std::optional<Box> support,
                             std::optional<GaussianMoments> moments, std::string id)
    : dim_(dim),
      eval_(std::move(eval)),
      support_(std::move(support)),
      moments_(std::move(moments)),
      id_(std::move(id)) {
  if (dim_ <= 0) throw InvalidInput("target dimension must be positive");
  if (!eval_) throw InvalidInput("target evaluator is empty");
  if (support_ && (support_->lo.size() != dim_ || support_->hi.size() != dim_)) {
    throw InvalidInput("support box dimension mismatch");
  }
}

double TargetDensity::potential(const Vector& theta) const {
  if (support_ && !support_->contains(theta)) return kInf;
  return eval_(theta, nullptr);
}

Vector TargetDensity::subgrad(const Vector& theta) const {
  Vector g(dim_);
  evaluate(theta, g);
  return g;
}

double TargetDensity::evaluate(const Vector& theta, Vector& grad) const {
  grad.setZero(dim_);
  if (support_ && !support_->contains(theta)) return kInf;
  const double u = eval_(theta, &grad);
  if (!std::isfinite(u)) grad.setZero();
  return u;
}

TargetDensity gaussian_target(const Vector& mean, const Matrix& precision) {
  require_spd(precision, "gaussian_target precision");
  if (mean.size() != precision.rows()) throw InvalidInput("gaussian_target: mean/precision size mismatch");
  const Eigen::Index d = mean.size();
  GaussianMoments moments{mean, SpdMatrix(precision).inverse()};
  auto eval = [mean, precision](const Vector& theta, Vector* grad) {
    const Vector r = theta - mean;
    const Vector pr = precision * r;
    if (grad) *grad = pr;
    return 0.5 * r.dot(pr);
  };
  return TargetDensity(d, std::move(eval), std::nullopt, std::move(moments), "gaussian");
}

Dataset::Dataset(RowMatrix covariates, Vector responses)
    : x_(std::move(covariates)), y_(std::move(responses)) {
  if (x_.rows() != y_.size()) {
    std::ostringstream os;
    os << "dataset has " << x_.rows() << " covariate rows but " << y_.size() << " responses";
    throw InvalidInput(os.str());
  }
  if (x_.rows() == 0 || x_.cols() == 0) throw InvalidInput("dataset is empty");
  if (!x_.allFinite() || !y_.allFinite()) throw InvalidInput("dataset contains non-finite values");
}

double LossOracle::total(const Dataset& data, const Vector& theta, Vector* grad_sum) const {
  double sum = 0.0;
  if (grad_sum) grad_sum->setZero(theta.size());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    sum += value(data.row(i), data.response(i), theta);
    if (grad_sum) *grad_sum += subgrad(data.row(i), data.response(i), theta);
  }
  return sum;
}

double check_loss(ConstVectorRef x, double y, const Vector& theta, double tau) {
  require_tau(tau);
  const double q = x.dot(theta);
  const double r = y - q;
  return r * (tau - (y < q ? 1.0 : 0.0));
}

Vector check_loss_subgrad(ConstVectorRef x, double y, const Vector& theta, double tau) {
  require_tau(tau);
  const double q = x.dot(theta);
  return ((y < q ? 1.0 : 0.0) - tau) * x;
}

CheckLoss::CheckLoss(double tau) : tau_(tau) { require_tau(tau); }

std::string CheckLoss::name() const {
  std::ostringstream os;
  os << "check(tau=" << tau_ << ")";
  return os.str();
}

double CheckLoss::value(ConstVectorRef x, double y, const Vector& theta) const {
  return check_loss(x, y, theta, tau_);
}

Vector CheckLoss::subgrad(ConstVectorRef x, double y, const Vector& theta) const {
  return check_loss_subgrad(x, y, theta, tau_);
}

double CheckLoss::total(const Dataset& data, const Vector& theta, Vector* grad_sum) const {
  const Vector q = data.covariates() * theta;
  const Vector& y = data.responses();
  double sum = 0.0;
  Vector weights(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double below = y[i] < q[i] ? 1.0 : 0.0;
    sum += (y[i] - q[i]) * (tau_ - below);
    weights[i] = below - tau_;
  }
  if (grad_sum) *grad_sum = data.covariates().transpose() * weights;
  return sum;
}

double SquaredLoss::value(ConstVectorRef x, double y, const Vector& theta) const {
  const double r = y - x.dot(theta);
  return 0.5 * r * r;
}

Vector SquaredLoss::subgrad(ConstVectorRef x, double y, const Vector& theta) const {
  return -(y - x.dot(theta)) * x;
}

std::optional<Matrix> SquaredLoss::hessian(ConstVectorRef x, double, const Vector&) const {
  return Matrix(x * x.transpose());
}

double SquaredLoss::total(const Dataset& data, const Vector& theta, Vector* grad_sum) const {
  const Vector r = data.responses() - data.covariates() * theta;
  if (grad_sum) *grad_sum = -(data.covariates().transpose() * r);
  return 0.5 * r.squaredNorm();
}

void GibbsSpec::validate() const {
  if (!data) throw InvalidInput("GibbsSpec: dataset missing");
  if (!loss) throw InvalidInput("GibbsSpec: loss oracle missing");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidInput("GibbsSpec: learning rate must be positive");
  }
  const Eigen::Index d = data->dim();
  if (const auto* box = std::get_if<UniformBoxPrior>(&prior)) {
    if (box->box.lo.size() != d || box->box.hi.size() != d) {
      throw InvalidInput("GibbsSpec: prior box dimension mismatch");
    }
    if ((box->box.lo.array() > box->box.hi.array()).any()) {
      throw InvalidInput("GibbsSpec: prior box is empty");
    }
  } else {
    const auto& g = std::get<GaussianPrior>(prior);
    if (g.mean.size() != d) throw InvalidInput("GibbsSpec: prior mean dimension mismatch");
    require_spd(g.covariance, "GibbsSpec prior covariance");
  }
}

double empirical_risk(const GibbsSpec& spec, const Vector& theta) {
  return spec.loss->total(*spec.data, theta, nullptr) / static_cast<double>(spec.data->n());
}

TargetDensity gibbs_potential(const GibbsSpec& spec) {
  spec.validate();
  const Eigen::Index d = spec.data->dim();
  std::optional<Box> support;
  Matrix prior_precision;
  Vector prior_mean;
  const bool gaussian_prior = std::holds_alternative<GaussianPrior>(spec.prior);
  if (gaussian_prior) {
    const auto& g = std::get<GaussianPrior>(spec.prior);
    prior_mean = g.mean;
    prior_precision = SpdMatrix(g.covariance).inverse();
  } else {
    support = std::get<UniformBoxPrior>(spec.prior).box;
  }
  auto eval = [data = spec.data, loss = spec.loss, alpha = spec.learning_rate, gaussian_prior,
               prior_mean, prior_precision](const Vector& theta, Vector* grad) {
    double u = alpha * loss->total(*data, theta, grad);
    if (grad) *grad *= alpha;
    if (gaussian_prior) {
      const Vector r = theta - prior_mean;
      const Vector pr = prior_precision * r;
      u += 0.5 * r.dot(pr);
      if (grad) *grad += pr;
    }
    return u;
  };
  return TargetDensity(d, std::move(eval), std::move(support), std::nullopt,
                       "gibbs:" + spec.loss->name());
}

RescaledPotential::RescaledPotential(TargetDensity base, Vector center, double n)
    : base_(std::move(base)), center_(std::move(center)) {
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("rescaled potential: n must be positive");
  if (center_.size() != base_.dim()) throw InvalidInput("rescaled potential: center dimension mismatch");
  sqrt_n_ = std::sqrt(n);
  base_at_center_ = base_.potential(center_);
  if (!std::isfinite(base_at_center_)) {
    throw InvalidInput("rescaled potential: center lies outside the prior support");
  }
}

RescaledPotential::RescaledPotential(const GibbsSpec& spec, Vector center)
    : RescaledPotential(gibbs_potential(spec), std::move(center),
                        static_cast<double>(spec.data ? spec.data->n() : 0)) {}

double RescaledPotential::value(const Vector& xi) const {
  return base_.potential(center_ + xi / sqrt_n_) - base_at_center_;
}

Vector RescaledPotential::subgrad(const Vector& xi) const {
  Vector g;
  evaluate(xi, g);
  return g;
}

double RescaledPotential::evaluate(const Vector& xi, Vector& grad) const {
  const double u = base_.evaluate(center_ + xi / sqrt_n_, grad);
  grad /= sqrt_n_;
  return u - base_at_center_;
}

TargetDensity RescaledPotential::density() const {
  auto self = *this;
  auto eval = [self](const Vector& xi, Vector* grad) {
    if (!grad) return self.value(xi);
    return self.evaluate(xi, *grad);
  };
  return TargetDensity(dim(), std::move(eval), std::nullopt, std::nullopt, "rescaled:" + base_.id());
}

TargetDensity RescaledPotential::pushforward(const Matrix& transform) const {
  if (transform.rows() != dim() || transform.cols() != dim()) {
    throw InvalidInput("pushforward: transform dimension mismatch");
  }
  auto self = *this;
  auto eval = [self, transform](const Vector& z, Vector* grad) {
    const Vector xi = transform * z;
    if (!grad) return self.value(xi);
    Vector g;
    const double v = self.evaluate(xi, g);
    *grad = transform.transpose() * g;
    return v;
  };
  return TargetDensity(dim(), std::move(eval), std::nullopt, std::nullopt,
                       "pushforward:" + base_.id());
}

void for_each_ellipsoid_grid_point(const SpdMatrix& precond, double radius, double step,
                                   const std::function<void(const Vector&)>& visit) {
  const Eigen::Index d = precond.dim();
  if (d > 3) {
    throw UnsupportedDimension("grid scan supports dimension <= 3, got " + std::to_string(d));
  }
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidInput("grid step must be positive");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw InvalidInput("grid radius must be finite and >= 0");

  // |xi_i| <= radius * sqrt(precond_ii) on the ellipsoid.
  std::vector<long> half(static_cast<std::size_t>(d));
  double total = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    half[i] = static_cast<long>(std::floor(radius * std::sqrt(precond.mat()(i, i)) / step));
    total *= static_cast<double>(2 * half[i] + 1);
  }
  if (total > static_cast<double>(kMaxGridPoints)) {
    throw InvalidInput("grid scan would visit too many points; increase grid_step");
  }
  std::vector<long> k(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) k[i] = -half[i];
  Vector xi(d);
  while (true) {
    for (Eigen::Index i = 0; i < d; ++i) xi[i] = static_cast<double>(k[i]) * step;
    if ((precond.inv_sqrt() * xi).norm() <= radius) visit(xi);
    Eigen::Index i = 0;
    while (i < d && ++k[i] > half[i]) {
      k[i] = -half[i];
      ++i;
    }
    if (i == d) break;
  }
}

ConditionAResult condition_a_scan(const TargetDensity& v, const Matrix& j, const SpdMatrix& precond,
                                  double radius, double grid_step) {
  if (j.rows() != v.dim() || precond.dim() != v.dim()) {
    throw InvalidInput("condition_a_scan: dimension mismatch");
  }
  ConditionAResult out;
  Vector grad;
  for_each_ellipsoid_grid_point(precond, radius, grid_step, [&](const Vector& xi) {
    const Vector jxi = j * xi;
    const double val = v.evaluate(xi, grad);
    out.value_error = std::max(out.value_error, std::abs(val - 0.5 * xi.dot(jxi)));
    out.gradient_error = std::max(out.gradient_error, (grad - jxi).norm());
    ++out.grid_points;
  });
  if (out.grid_points == 0) throw InvalidInput("condition_a_scan: grid contains no points");
  out.within_threshold = out.value_error <= kConditionAThreshold;
  return out;
}

ConditionAResult condition_a_scan(const RescaledPotential& v, const Matrix& j,
                                  const SpdMatrix& precond, double radius, double grid_step) {
  return condition_a_scan(v.density(), j, precond, radius, grid_step);
}

}  // namespace langevin
