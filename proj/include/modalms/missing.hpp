#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modalms/dataset.hpp"
#include "modalms/kernel_density.hpp"

namespace modalms {

//! The five modal regression estimators. complete uses every response
//! (valid only when none are missing); simplified drops incomplete rows;
//! ipw reweights complete rows by inverse observation probability;
//! the imputation estimators fill the missing responses first.
enum class Estimator {
  complete,
  simplified,
  ipw,
  single_imputation,
  multiple_imputation,
};

std::string estimator_tag(Estimator e);
std::optional<Estimator> estimator_from_tag(const std::string& tag);
std::vector<Estimator> all_estimators();

//! Observation probability as a function of the covariates. Either one
//! of the closed-form cosine models, a constant, or a model fitted from
//! the observation indicators. Evaluations are clamped from below so
//! inverse weights stay bounded.
class PropensityModel {
 public:
  enum class Kind { cosine1, cosine2, cosine_sq, constant, logistic, kernel };

  //! p(x) = 0.6 + 0.3 cos(pi x). One covariate only.
  static PropensityModel known_m1();
  //! p(x) = 0.6 + 0.3 cos(2 pi x).
  static PropensityModel known_m2();
  //! p(x) = 0.7 + 0.3 cos(2 pi x^2).
  static PropensityModel known_m3();
  //! p(x) = 0.75.
  static PropensityModel known_m4();
  static PropensityModel constant(double p);

  double eval(std::span<const double> x) const;

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }

  //! Evaluations below this are raised to it.
  double clamp_floor = 0.05;
  //! Diagnostic multiplier applied after clamping. Rescaling a model
  //! must not change any inverse-propensity estimate.
  double output_scale = 1.0;

  //! Intercept and slopes of a fitted logistic model.
  const std::vector<double>& coefficients() const { return coef_; }
  double kernel_bandwidth() const { return kernel_h_; }

  friend PropensityModel fit_propensity_logistic(const Dataset& ds);
  friend PropensityModel fit_propensity_kernel(const Dataset& ds, double h);

 private:
  PropensityModel(Kind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

  Kind kind_;
  std::size_t dim_;
  double constant_ = 0.0;
  std::vector<double> coef_;
  double kernel_h_ = 0.0;
  std::vector<double> train_x_;
  std::vector<std::uint8_t> train_delta_;
};

double propensity_eval(const PropensityModel& model, std::span<const double> x);

//! Logistic regression of the observation indicator on the covariates,
//! fitted by iteratively reweighted least squares. Throws FitError when
//! the indicators are all equal, the normal equations are singular, or
//! the coefficients diverge (separation).
PropensityModel fit_propensity_logistic(const Dataset& ds);

//! Kernel (locally constant) regression of the observation indicator on
//! the covariates. h <= 0 selects a plug-in bandwidth.
PropensityModel fit_propensity_kernel(const Dataset& ds, double h = 0.0);

//! Plug-in bandwidth for a one-dimensional sample (Silverman's rule).
double silverman_bandwidth(std::span<const double> values);

//! The weight vector that turns the shared kernel engine into the given
//! estimator: all ones for complete, the observation indicators for
//! simplified, indicators divided by the propensity for ipw.
//! The imputation estimators are not weight schemes and are rejected.
WeightVector weights_for(Estimator kind, const Dataset& ds,
                         const PropensityModel* model = nullptr);

}  // namespace modalms
