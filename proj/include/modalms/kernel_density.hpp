#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modalms/dataset.hpp"

namespace modalms {

//! Bandwidths of the joint density estimate: h1 for the covariates,
//! h2 for the response. Both must be positive and finite.
struct Bandwidths {
  double h1 = 0.0;
  double h2 = 0.0;
};

void validate(const Bandwidths& bw);

//! Per-row kernel weights. The estimators differ only in this vector:
//! all ones (complete data), the observation indicators, or the
//! inverse-propensity weights. Rows with a missing response must carry
//! weight zero.
struct WeightVector {
  std::vector<double> values;
};

WeightVector unit_weights(const Dataset& ds);
void validate_weights(const Dataset& ds, const WeightVector& w);

//! Standard normal density, the kernel used throughout.
double gaussian_kernel(double u);

//! Kernel products whose combined squared argument exceeds
//! 2 * kKernelExpCutoff are dropped from the sums. exp(-50) is below
//! 2e-22, so the dropped mass is far below every tolerance in use.
inline constexpr double kKernelExpCutoff = 50.0;

//! All kernel sums at one covariate point, with the covariate kernels
//! precomputed. Mean-shift iterations, conditional densities and
//! leave-one-out scores at a fixed x all share one instance, which is
//! what makes sweeping y along the response axis cheap.
//!
//! Weights are divided by their maximum on entry; every reported
//! quantity is invariant to that scaling, and it keeps proportional
//! weight vectors on identical floating-point paths.
class XSlice {
 public:
  //! skip >= 0 forces that row's weight to zero (leave-one-out).
  XSlice(const Dataset& ds, const WeightVector& w, const Bandwidths& bw,
         std::span<const double> x, std::ptrdiff_t skip = -1);

  struct Eval {
    double density;   //!< joint density estimate at (x, y)
    double mass;      //!< unnormalized kernel mass at y
    double target;    //!< mean-shift target m(x, y); NaN when mass is 0
    double dtarget;   //!< derivative of the target in y; 0 when mass is 0
  };

  Eval evaluate(double y) const;

  double joint_density(double y) const { return evaluate(y).density; }

  //! Partial derivative of the joint density in y.
  double y_gradient(double y) const;

  //! Weighted covariate marginal density at x.
  double marginal_density() const { return marginal_; }

  //! Joint density divided by the covariate marginal.
  double conditional_density(double y) const;

  //! Rows whose covariate kernel survived the cutoff.
  std::size_t active_count() const { return ys_.size(); }

  const Bandwidths& bandwidths() const { return bw_; }
  double active_y_min() const { return active_y_min_; }
  double active_y_max() const { return active_y_max_; }

 private:
  std::vector<double> ys_;
  std::vector<double> amp_;    // scaled weight times covariate kernel
  std::vector<double> u1sq_;   // squared scaled covariate distance
  Bandwidths bw_;
  double inv_h2_ = 0.0;
  double norm_ = 0.0;          // 1 / (h1^d * h2 * sum of scaled weights)
  double marginal_ = 0.0;
  double active_y_min_ = 0.0;
  double active_y_max_ = 0.0;
};

//! One-off evaluations. Engines that sweep y should build an XSlice.
double joint_density(const Dataset& ds, const WeightVector& w,
                     const Bandwidths& bw, std::span<const double> x,
                     double y);
double conditional_density(const Dataset& ds, const WeightVector& w,
                           const Bandwidths& bw, std::span<const double> x,
                           double y);
double density_y_gradient(const Dataset& ds, const WeightVector& w,
                          const Bandwidths& bw, std::span<const double> x,
                          double y);

}  // namespace modalms
