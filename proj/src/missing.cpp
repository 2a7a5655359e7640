#include "modalms/missing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "modalms/errors.hpp"
#include "stats_util.hpp"

namespace modalms {

namespace {

constexpr double kPi = std::numbers::pi;

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

//! Solves A x = b for a symmetric positive definite A, in place.
//! Returns false when a pivot collapses (singular system).
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b,
                    std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (!(diag > 1e-12)) return false;
    diag = std::sqrt(diag);
    a[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / diag;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t ii = n; ii > 0; --ii) {
    std::size_t i = ii - 1;
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
    b[i] = v / a[i * n + i];
  }
  return true;
}

}  // namespace

std::string estimator_tag(Estimator e) {
  switch (e) {
    case Estimator::complete: return "C";
    case Estimator::simplified: return "S";
    case Estimator::ipw: return "W";
    case Estimator::single_imputation: return "SI";
    case Estimator::multiple_imputation: return "MI";
  }
  throw ConfigError("unknown estimator");
}

std::optional<Estimator> estimator_from_tag(const std::string& tag) {
  std::string t;
  for (char c : tag) t.push_back(static_cast<char>(std::toupper(
      static_cast<unsigned char>(c))));
  if (t == "C") return Estimator::complete;
  if (t == "S") return Estimator::simplified;
  if (t == "W") return Estimator::ipw;
  if (t == "SI") return Estimator::single_imputation;
  if (t == "MI") return Estimator::multiple_imputation;
  return std::nullopt;
}

std::vector<Estimator> all_estimators() {
  return {Estimator::complete, Estimator::simplified, Estimator::ipw,
          Estimator::single_imputation, Estimator::multiple_imputation};
}

PropensityModel PropensityModel::known_m1() {
  return PropensityModel(Kind::cosine1, 1);
}
PropensityModel PropensityModel::known_m2() {
  return PropensityModel(Kind::cosine2, 1);
}
PropensityModel PropensityModel::known_m3() {
  return PropensityModel(Kind::cosine_sq, 1);
}
PropensityModel PropensityModel::known_m4() {
  PropensityModel m(Kind::constant, 1);
  m.constant_ = 0.75;
  return m;
}

PropensityModel PropensityModel::constant(double p) {
  if (!(p > 0.0) || !(p <= 1.0) || !std::isfinite(p))
    throw ConfigError("constant propensity must lie in (0, 1]");
  PropensityModel m(Kind::constant, 1);
  m.constant_ = p;
  return m;
}

double PropensityModel::eval(std::span<const double> x) const {
  if (!(clamp_floor > 0.0) || !(clamp_floor < 0.5))
    throw ConfigError("propensity clamp floor must lie in (0, 0.5)");
  if (!(output_scale > 0.0) || !std::isfinite(output_scale))
    throw ConfigError("propensity output scale must be positive");

  double p = 0.0;
  switch (kind_) {
    case Kind::cosine1:
      if (x.size() != 1)
        throw ConfigError("cosine propensity models take one covariate");
      p = 0.6 + 0.3 * std::cos(kPi * x[0]);
      break;
    case Kind::cosine2:
      if (x.size() != 1)
        throw ConfigError("cosine propensity models take one covariate");
      p = 0.6 + 0.3 * std::cos(2.0 * kPi * x[0]);
      break;
    case Kind::cosine_sq:
      if (x.size() != 1)
        throw ConfigError("cosine propensity models take one covariate");
      p = 0.7 + 0.3 * std::cos(2.0 * kPi * x[0] * x[0]);
      break;
    case Kind::constant:
      p = constant_;
      break;
    case Kind::logistic: {
      if (x.size() != dim_)
        throw StateError("logistic propensity model was fitted on " +
                         std::to_string(dim_) + " covariates");
      double eta = coef_[0];
      for (std::size_t j = 0; j < dim_; ++j) eta += coef_[j + 1] * x[j];
      p = logistic(eta);
      break;
    }
    case Kind::kernel: {
      if (x.size() != dim_)
        throw StateError("kernel propensity model was fitted on " +
                         std::to_string(dim_) + " covariates");
      const std::size_t n = train_delta_.size();
      double num = 0.0, den = 0.0;
      double inv_h = 1.0 / kernel_h_;
      for (std::size_t i = 0; i < n; ++i) {
        double usq = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
          double d = (x[j] - train_x_[i * dim_ + j]) * inv_h;
          usq += d * d;
        }
        if (usq > 2.0 * kKernelExpCutoff) continue;
        double k = std::exp(-0.5 * usq);
        den += k;
        if (train_delta_[i]) num += k;
      }
      if (!(den > 0.0)) {
        double mean = 0.0;
        for (auto d : train_delta_) mean += d;
        p = mean / static_cast<double>(n);
      } else {
        p = num / den;
      }
      break;
    }
  }
  p = std::clamp(p, clamp_floor, 1.0);
  return p * output_scale;
}

double propensity_eval(const PropensityModel& model,
                       std::span<const double> x) {
  return model.eval(x);
}

PropensityModel fit_propensity_logistic(const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  const std::size_t q = d + 1;

  std::size_t ones = ds.observed_count();
  if (ones == 0 || ones == n)
    throw FitError("observation indicators are all equal; nothing to fit");

  // Standardize the covariates for a well-conditioned solve.
  std::vector<double> mean(d, 0.0), sd(d, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto xv = ds.x(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += xv[j];
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  std::vector<double> ss(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto xv = ds.x(i);
    for (std::size_t j = 0; j < d; ++j)
      ss[j] += (xv[j] - mean[j]) * (xv[j] - mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double v = std::sqrt(ss[j] / static_cast<double>(n > 1 ? n - 1 : 1));
    sd[j] = v > 0.0 ? v : 1.0;
  }
  auto design = [&](std::size_t i, std::size_t j) {
    if (j == 0) return 1.0;
    return (ds.x(i)[j - 1] - mean[j - 1]) / sd[j - 1];
  };

  std::vector<double> beta(q, 0.0);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    std::vector<double> info(q * q, 0.0);
    std::vector<double> score(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < q; ++j) eta += beta[j] * design(i, j);
      double p = logistic(eta);
      double wi = std::max(p * (1.0 - p), 1e-10);
      double resid = (ds.observed(i) ? 1.0 : 0.0) - p;
      for (std::size_t j = 0; j < q; ++j) {
        double xij = design(i, j);
        score[j] += resid * xij;
        for (std::size_t k = 0; k <= j; ++k)
          info[j * q + k] += wi * xij * design(i, k);
      }
    }
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t k = j + 1; k < q; ++k) info[j * q + k] = info[k * q + j];

    std::vector<double> step = score;
    if (!cholesky_solve(info, step, q))
      throw FitError("logistic fit failed: singular information matrix");
    double move = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      beta[j] += step[j];
      move = std::max(move, std::abs(step[j]));
      scale = std::max(scale, std::abs(beta[j]));
    }
    if (scale > 30.0)
      throw FitError(
          "logistic fit failed: coefficients diverged, indicators may be "
          "separable in the covariates");
    if (move <= 1e-10 * (1.0 + scale)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw FitError("logistic fit did not converge");

  PropensityModel m(PropensityModel::Kind::logistic, d);
  m.coef_.assign(q, 0.0);
  m.coef_[0] = beta[0];
  for (std::size_t j = 0; j < d; ++j) {
    m.coef_[j + 1] = beta[j + 1] / sd[j];
    m.coef_[0] -= beta[j + 1] * mean[j] / sd[j];
  }
  return m;
}

double silverman_bandwidth(std::span<const double> values) {
  if (values.size() < 2)
    throw ConfigError("plug-in bandwidth needs at least two values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sd = detail::sample_sd(v);
  double iqr = detail::sorted_quantile(v, 0.75) - detail::sorted_quantile(v, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (!(spread > 0.0))
    throw ConfigError("sample has no spread, no plug-in bandwidth exists");
  return 0.9 * spread *
         std::pow(static_cast<double>(v.size()), -0.2);
}

PropensityModel fit_propensity_kernel(const Dataset& ds, double h) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  if (n < 2) throw FitError("kernel propensity fit needs at least two rows");
  if (h <= 0.0) {
    double acc = 0.0;
    std::vector<double> col(n);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) col[i] = ds.x(i)[j];
      acc += silverman_bandwidth(col);
    }
    h = acc / static_cast<double>(d);
  }
  if (!std::isfinite(h) || !(h > 0.0))
    throw ConfigError("kernel propensity bandwidth must be positive");

  PropensityModel m(PropensityModel::Kind::kernel, d);
  m.kernel_h_ = h;
  m.train_x_.assign(n * d, 0.0);
  m.train_delta_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto xv = ds.x(i);
    std::copy(xv.begin(), xv.end(), m.train_x_.begin() + i * d);
    m.train_delta_[i] = ds.observed(i) ? 1 : 0;
  }
  return m;
}

WeightVector weights_for(Estimator kind, const Dataset& ds,
                         const PropensityModel* model) {
  const std::size_t n = ds.size();
  WeightVector w;
  w.values.assign(n, 0.0);
  switch (kind) {
    case Estimator::complete:
      if (ds.missing_count() > 0)
        throw ConfigError(
            "complete-data weights are only defined when every response is "
            "observed");
      std::fill(w.values.begin(), w.values.end(), 1.0);
      return w;
    case Estimator::simplified:
      for (std::size_t i = 0; i < n; ++i)
        w.values[i] = ds.observed(i) ? 1.0 : 0.0;
      return w;
    case Estimator::ipw: {
      if (model == nullptr)
        throw ConfigError("inverse-propensity weights need a propensity model");
      for (std::size_t i = 0; i < n; ++i)
        if (ds.observed(i)) w.values[i] = 1.0 / model->eval(ds.x(i));
      return w;
    }
    case Estimator::single_imputation:
    case Estimator::multiple_imputation:
      throw ConfigError(
          "imputation estimators fill responses first; they are not weight "
          "schemes");
  }
  throw ConfigError("unknown estimator");
}

}  // namespace modalms
