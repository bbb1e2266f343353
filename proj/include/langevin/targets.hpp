#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "langevin/linalg.hpp"

namespace langevin {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstVectorRef = Eigen::Ref<const Vector>;

/// Closed axis-aligned box [lo_i, hi_i].
struct Box {
  Vector lo;
  Vector hi;

  static Box cube(Eigen::Index d, double lo, double hi);
  bool contains(const Vector& theta) const;
};

struct GaussianMoments {
  Vector mean;
  Matrix covariance;
};

/// Unnormalized density exp(-U) on R^d with a subgradient oracle for U.
///
/// The evaluator returns U(theta) and, when `grad` is non-null, writes a
/// subgradient into it. Points outside `support` evaluate to +inf without
/// calling the evaluator. Evaluation is const and thread-safe provided the
/// evaluator is.
class TargetDensity {
 public:
  using Evaluator = std::function<double(const Vector& theta, Vector* grad)>;

  TargetDensity(Eigen::Index dim, Evaluator eval, std::optional<Box> support = std::nullopt,
                std::optional<GaussianMoments> moments = std::nullopt, std::string id = "custom");

  Eigen::Index dim() const { return dim_; }
  const std::string& id() const { return id_; }
  const std::optional<Box>& support() const { return support_; }
  const std::optional<GaussianMoments>& known_moments() const { return moments_; }

  double potential(const Vector& theta) const;
  Vector subgrad(const Vector& theta) const;
  /// U(theta); `grad` receives the subgradient when U is finite, zeros otherwise.
  double evaluate(const Vector& theta, Vector& grad) const;

 private:
  Eigen::Index dim_;
  Evaluator eval_;
  std::optional<Box> support_;
  std::optional<GaussianMoments> moments_;
  std::string id_;
};

/// N(mean, precision^{-1}): U = 0.5 (x-mean)' P (x-mean). Throws NotSpd.
TargetDensity gaussian_target(const Vector& mean, const Matrix& precision);

/// Immutable regression data: covariate rows X_i and responses Y_i.
class Dataset {
 public:
  Dataset(RowMatrix covariates, Vector responses);

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index dim() const { return x_.cols(); }
  const RowMatrix& covariates() const { return x_; }
  const Vector& responses() const { return y_; }
  ConstVectorRef row(Eigen::Index i) const { return x_.row(i).transpose(); }
  double response(Eigen::Index i) const { return y_[i]; }

 private:
  RowMatrix x_;
  Vector y_;
};

/// Per-datum loss l((x, y), theta) with a subgradient and an optional Hessian.
///
/// `total` sums the loss over a dataset and accumulates the summed
/// subgradient; the default loops over `value`/`subgrad`, concrete losses
/// may vectorize it.
class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual std::string name() const = 0;
  virtual double value(ConstVectorRef x, double y, const Vector& theta) const = 0;
  virtual Vector subgrad(ConstVectorRef x, double y, const Vector& theta) const = 0;
  virtual std::optional<Matrix> hessian(ConstVectorRef /*x*/, double /*y*/,
                                        const Vector& /*theta*/) const {
    return std::nullopt;
  }

  virtual double total(const Dataset& data, const Vector& theta, Vector* grad_sum) const;
};

/// Quantile check loss (y - x'theta)(tau - 1{y < x'theta}).
class CheckLoss final : public LossOracle {
 public:
  explicit CheckLoss(double tau);
  double tau() const { return tau_; }

  std::string name() const override;
  double value(ConstVectorRef x, double y, const Vector& theta) const override;
  /// (1{y < x'theta} - tau) x; the indicator is 0 at a tie.
  Vector subgrad(ConstVectorRef x, double y, const Vector& theta) const override;
  double total(const Dataset& data, const Vector& theta, Vector* grad_sum) const override;

 private:
  double tau_;
};

/// 0.5 (y - x'theta)^2.
class SquaredLoss final : public LossOracle {
 public:
  std::string name() const override { return "squared"; }
  double value(ConstVectorRef x, double y, const Vector& theta) const override;
  Vector subgrad(ConstVectorRef x, double y, const Vector& theta) const override;
  std::optional<Matrix> hessian(ConstVectorRef x, double y, const Vector& theta) const override;
  double total(const Dataset& data, const Vector& theta, Vector* grad_sum) const override;
};

double check_loss(ConstVectorRef x, double y, const Vector& theta, double tau);
Vector check_loss_subgrad(ConstVectorRef x, double y, const Vector& theta, double tau);

struct UniformBoxPrior {
  Box box;
};

struct GaussianPrior {
  Vector mean;
  Matrix covariance;
};

using Prior = std::variant<UniformBoxPrior, GaussianPrior>;

struct GibbsSpec {
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const LossOracle> loss;
  double learning_rate = 1.0;
  Prior prior;

  /// Throws InvalidInput on a missing dataset/loss, alpha <= 0, a mismatched
  /// or empty prior box, or a non-SPD prior covariance.
  void validate() const;
};

/// R_n(theta) = n^{-1} sum_i l(X_i, theta).
double empirical_risk(const GibbsSpec& spec, const Vector& theta);

/// U(theta) = alpha n R_n(theta) - log pi(theta), dropping constants; +inf
/// outside a box prior.
TargetDensity gibbs_potential(const GibbsSpec& spec);

/// V_n(xi) = U(center + xi / sqrt(n)) - U(center), the potential of the
/// localized measure sqrt(n)(theta - center) under exp(-U).
class RescaledPotential {
 public:
  RescaledPotential(TargetDensity base, Vector center, double n);
  RescaledPotential(const GibbsSpec& spec, Vector center);

  Eigen::Index dim() const { return base_.dim(); }
  const Vector& center() const { return center_; }
  double scale() const { return sqrt_n_; }
  const TargetDensity& base() const { return base_; }

  double value(const Vector& xi) const;
  Vector subgrad(const Vector& xi) const;
  double evaluate(const Vector& xi, Vector& grad) const;

  /// V_n as a target in the xi coordinates.
  TargetDensity density() const;
  /// xi -> V_n(transform * xi); used for the preconditioned pushforward.
  TargetDensity pushforward(const Matrix& transform) const;

 private:
  TargetDensity base_;
  Vector center_;
  double sqrt_n_;
  double base_at_center_;
};

/// Visits every point k * step (k integer) with ||precond^{-1/2} xi|| <= radius.
/// Dimension must be <= 3.
void for_each_ellipsoid_grid_point(const SpdMatrix& precond, double radius, double step,
                                   const std::function<void(const Vector&)>& visit);

struct ConditionAResult {
  double value_error = 0.0;     ///< max |V(xi) - 0.5 xi'J xi|
  double gradient_error = 0.0;  ///< max ||subgrad V(xi) - J xi||
  bool within_threshold = false;
  std::size_t grid_points = 0;
};

inline constexpr double kConditionAThreshold = 0.04;

/// Brute-force check of how close V is to the quadratic 0.5 xi'J xi (and its
/// subgradient to J xi) over the grid of for_each_ellipsoid_grid_point.
ConditionAResult condition_a_scan(const TargetDensity& v, const Matrix& j, const SpdMatrix& precond,
                                  double radius, double grid_step);
ConditionAResult condition_a_scan(const RescaledPotential& v, const Matrix& j,
                                  const SpdMatrix& precond, double radius, double grid_step);

}  // namespace langevin
