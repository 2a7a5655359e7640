#include "modalms/kernel_density.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "modalms/errors.hpp"

namespace modalms {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kInv2Pi = 0.15915494309189533577;

double int_pow(double base, std::size_t e) {
  double p = 1.0;
  for (std::size_t i = 0; i < e; ++i) p *= base;
  return p;
}

void validate_query(const Dataset& ds, std::span<const double> x) {
  if (x.size() != ds.dim())
    throw ConfigError("query point has " + std::to_string(x.size()) +
                      " coordinates, dataset has " + std::to_string(ds.dim()));
  for (double v : x)
    if (!std::isfinite(v))
      throw ConfigError("query point has a non-finite coordinate");
}

}  // namespace

void validate(const Bandwidths& bw) {
  if (!(bw.h1 > 0.0) || !std::isfinite(bw.h1))
    throw ConfigError("covariate bandwidth must be positive and finite");
  if (!(bw.h2 > 0.0) || !std::isfinite(bw.h2))
    throw ConfigError("response bandwidth must be positive and finite");
}

WeightVector unit_weights(const Dataset& ds) {
  return WeightVector{std::vector<double>(ds.size(), 1.0)};
}

void validate_weights(const Dataset& ds, const WeightVector& w) {
  if (w.values.size() != ds.size())
    throw ConfigError("weight vector has " + std::to_string(w.values.size()) +
                      " entries, dataset has " + std::to_string(ds.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    double v = w.values[i];
    if (!std::isfinite(v) || v < 0.0)
      throw ConfigError("weight " + std::to_string(i) +
                        " is negative or non-finite");
    if (v > 0.0 && !ds.observed(i))
      throw ConfigError("row " + std::to_string(i) +
                        " has positive weight but no observed response");
    total += v;
  }
  if (!(total > 0.0))
    throw DegenerateWeightsError("all kernel weights are zero");
}

double gaussian_kernel(double u) {
  return kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

XSlice::XSlice(const Dataset& ds, const WeightVector& w, const Bandwidths& bw,
               std::span<const double> x, std::ptrdiff_t skip)
    : bw_(bw) {
  validate(bw);
  validate_query(ds, x);
  if (w.values.size() != ds.size())
    throw ConfigError("weight vector does not match the dataset");
  inv_h2_ = 1.0 / bw.h2;

  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  double wmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<std::ptrdiff_t>(i) == skip) continue;
    double v = w.values[i];
    if (v < 0.0)
      throw ConfigError("weight " + std::to_string(i) + " is negative");
    if (v > wmax) wmax = v;
  }
  if (!(wmax > 0.0))
    throw DegenerateWeightsError("all kernel weights are zero");

  const double inv_h1 = 1.0 / bw.h1;
  double wsum = 0.0;
  double marg_mass = 0.0;
  double ylo = std::numeric_limits<double>::infinity();
  double yhi = -std::numeric_limits<double>::infinity();
  ys_.reserve(n);
  amp_.reserve(n);
  u1sq_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<std::ptrdiff_t>(i) == skip) continue;
    double wv = w.values[i];
    if (!(wv > 0.0)) continue;
    double nw = wv / wmax;
    wsum += nw;
    auto xv = ds.x(i);
    double u1sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double dj = (x[j] - xv[j]) * inv_h1;
      u1sq += dj * dj;
    }
    if (u1sq > 2.0 * kKernelExpCutoff) continue;
    double e1 = std::exp(-0.5 * u1sq);
    ys_.push_back(ds.y(i));
    u1sq_.push_back(u1sq);
    amp_.push_back(nw * kInv2Pi * e1);
    marg_mass += nw * kInvSqrt2Pi * e1;
    ylo = std::min(ylo, ds.y(i));
    yhi = std::max(yhi, ds.y(i));
  }
  double h1d = int_pow(bw.h1, d);
  norm_ = 1.0 / (h1d * bw.h2 * wsum);
  marginal_ = marg_mass / (h1d * wsum);
  if (ys_.empty()) {
    active_y_min_ = 0.0;
    active_y_max_ = 0.0;
  } else {
    active_y_min_ = ylo;
    active_y_max_ = yhi;
  }
}

XSlice::Eval XSlice::evaluate(double y) const {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  const std::size_t m = ys_.size();
  const double* ys = ys_.data();
  const double* amp = amp_.data();
  const double* u1sq = u1sq_.data();
  for (std::size_t i = 0; i < m; ++i) {
    double u2 = (y - ys[i]) * inv_h2_;
    double u2sq = u2 * u2;
    if (u1sq[i] + u2sq > 2.0 * kKernelExpCutoff) continue;
    double c = amp[i] * std::exp(-0.5 * u2sq);
    s0 += c;
    double cy = c * ys[i];
    s1 += cy;
    s2 += cy * ys[i];
  }
  Eval e;
  e.mass = s0;
  e.density = s0 * norm_;
  if (s0 > 0.0) {
    e.target = s1 / s0;
    double var = s2 / s0 - e.target * e.target;
    if (var < 0.0) var = 0.0;
    e.dtarget = var * inv_h2_ * inv_h2_;
  } else {
    e.target = std::numeric_limits<double>::quiet_NaN();
    e.dtarget = 0.0;
  }
  return e;
}

double XSlice::y_gradient(double y) const {
  Eval e = evaluate(y);
  if (!(e.mass > 0.0)) return 0.0;
  return e.density * (e.target - y) * inv_h2_ * inv_h2_;
}

double XSlice::conditional_density(double y) const {
  if (!(marginal_ > 0.0))
    throw IsolatedPointError(
        "covariate marginal density is zero at the query point");
  return joint_density(y) / marginal_;
}

double joint_density(const Dataset& ds, const WeightVector& w,
                     const Bandwidths& bw, std::span<const double> x,
                     double y) {
  validate_weights(ds, w);
  return XSlice(ds, w, bw, x).joint_density(y);
}

double conditional_density(const Dataset& ds, const WeightVector& w,
                           const Bandwidths& bw, std::span<const double> x,
                           double y) {
  validate_weights(ds, w);
  return XSlice(ds, w, bw, x).conditional_density(y);
}

double density_y_gradient(const Dataset& ds, const WeightVector& w,
                          const Bandwidths& bw, std::span<const double> x,
                          double y) {
  validate_weights(ds, w);
  return XSlice(ds, w, bw, x).y_gradient(y);
}

}  // namespace modalms
