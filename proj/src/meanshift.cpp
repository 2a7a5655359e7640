#include "modalms/meanshift.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <string>

#include "modalms/errors.hpp"
#include "modalms/parallel.hpp"

namespace modalms {

namespace {

constexpr double kResidualFactor = 1e-6;  // cap: tol <= 1e-6 * h2^2
constexpr double kNewtonRange = 0.5;      // try Newton once |resid| < 0.5 h2
constexpr double kNewtonMinDenom = 1e-4;
constexpr double kAscentSlack = 1e-14;    // relative density slack for Newton

double clamp(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

void validate_resolved(const MeanShiftConfig& cfg) {
  if (!(cfg.tol > 0.0) || !std::isfinite(cfg.tol))
    throw ConfigError("mean-shift tolerance must be positive and finite");
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(cfg.merge_tol > 0.0) || !std::isfinite(cfg.merge_tol))
    throw ConfigError("merge tolerance must be positive and finite");
  if (cfg.merge_tol <= cfg.tol)
    throw ConfigError("merge tolerance must exceed the step tolerance");
  if (cfg.n_starts < 2) throw ConfigError("need at least two starting points");
  if (cfg.start_range) {
    auto [lo, hi] = *cfg.start_range;
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi))
      throw ConfigError("start range must be a finite, ordered interval");
  }
}

//! The threshold actually used for the stopping rule. Tight enough that
//! the density gradient at the reported point is far below the density
//! scale, with a floor at the rounding granularity of the responses.
double effective_tol(const MeanShiftConfig& cfg, const Bandwidths& bw,
                     double y_scale) {
  double t = std::min(cfg.tol, kResidualFactor * bw.h2 * bw.h2);
  return std::max(t, 8.0 * DBL_EPSILON * y_scale);
}

struct Converged {
  double y;
  double density;
  int iterations;
};

//! Core ascent on a slice. Plain mean-shift steps, with a guarded Newton
//! correction near the mode that is only accepted when the density does
//! not drop; either way accepted iterates never descend.
Converged ascend_on_slice(const XSlice& slice, double y0,
                          const MeanShiftConfig& cfg, double step_tol,
                          double lo, double hi, std::vector<double>* trace) {
  double y = clamp(y0, lo, hi);
  if (trace) trace->push_back(y);
  XSlice::Eval e = slice.evaluate(y);
  const double h2 = slice.bandwidths().h2;
  for (int t = 1; t <= cfg.max_iter; ++t) {
    if (!(e.mass > 0.0))
      throw StallError("no kernel mass at the current iterate");
    double resid = e.target - y;
    if (std::abs(resid) <= step_tol) return {y, e.density, t - 1};
    bool stepped = false;
    double denom = 1.0 - e.dtarget;
    if (std::abs(resid) <= kNewtonRange * h2 && denom > kNewtonMinDenom) {
      double y_trial = clamp(y + resid / denom, lo, hi);
      XSlice::Eval et = slice.evaluate(y_trial);
      if (et.mass > 0.0 && et.density >= e.density * (1.0 - kAscentSlack)) {
        y = y_trial;
        e = et;
        stepped = true;
      }
    }
    if (!stepped) {
      y = clamp(e.target, lo, hi);
      e = slice.evaluate(y);
    }
    if (trace) trace->push_back(y);
  }
  throw StallError("mean-shift did not converge within " +
                   std::to_string(cfg.max_iter) + " iterations");
}

double y_scale_of(double lo, double hi) {
  return std::max({1.0, std::abs(lo), std::abs(hi)});
}

}  // namespace

MeanShiftConfig MeanShiftConfig::resolved(double y_lo, double y_hi,
                                          const Bandwidths& bw) const {
  validate(bw);
  MeanShiftConfig r = *this;
  if (r.tol == 0.0) {
    double range = y_hi - y_lo;
    r.tol = range > 0.0 ? 1e-6 * range : 1e-12 * y_scale_of(y_lo, y_hi);
  }
  if (r.merge_tol == 0.0) r.merge_tol = 0.5 * bw.h2;
  validate_resolved(r);
  return r;
}

MeanShiftConfig MeanShiftConfig::resolved(const Dataset& ds,
                                          const Bandwidths& bw) const {
  return resolved(ds.observed_y_min(), ds.observed_y_max(), bw);
}

std::size_t ModalCurve::empty_count() const {
  std::size_t n = 0;
  for (const auto& s : sets)
    if (s.empty()) ++n;
  return n;
}

double mean_shift_step(const Dataset& ds, const WeightVector& w,
                       const Bandwidths& bw, std::span<const double> x,
                       double y) {
  validate_weights(ds, w);
  XSlice slice(ds, w, bw, x);
  XSlice::Eval e = slice.evaluate(y);
  if (!(e.mass > 0.0))
    throw StallError("no kernel mass at the query point");
  return e.target;
}

AscentResult ascend(const Dataset& ds, const WeightVector& w,
                    const Bandwidths& bw, std::span<const double> x, double y0,
                    const MeanShiftConfig& cfg, std::vector<double>* trace) {
  validate_weights(ds, w);
  MeanShiftConfig r = cfg.resolved(ds, bw);
  XSlice slice(ds, w, bw, x);
  double lo = ds.observed_y_min();
  double hi = ds.observed_y_max();
  double step_tol = effective_tol(r, bw, y_scale_of(lo, hi));
  Converged c = ascend_on_slice(slice, y0, r, step_tol, lo, hi, trace);
  return {c.y, c.iterations, true};
}

std::vector<double> starting_points(const Dataset& ds,
                                    const MeanShiftConfig& cfg) {
  double lo, hi;
  if (cfg.start_range) {
    lo = cfg.start_range->first;
    hi = cfg.start_range->second;
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi))
      throw ConfigError("start range must be a finite, ordered interval");
  } else {
    lo = ds.observed_y_min();
    hi = ds.observed_y_max();
  }
  int n = cfg.n_starts;
  if (n < 2) throw ConfigError("need at least two starting points");
  std::vector<double> pts(n);
  double span = hi - lo;
  for (int i = 0; i < n; ++i)
    pts[i] = lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
  // the lerp can overshoot by an ulp; the ends are known exactly
  pts.front() = lo;
  pts.back() = hi;
  return pts;
}

ModalSet modal_set_on_slice(const XSlice& slice, std::span<const double> x,
                            const MeanShiftConfig& cfg,
                            std::pair<double, double> y_bounds) {
  validate_resolved(cfg);
  auto [lo, hi] = y_bounds;
  double step_tol = effective_tol(cfg, slice.bandwidths(), y_scale_of(lo, hi));

  double start_lo = lo, start_hi = hi;
  if (cfg.start_range) {
    start_lo = cfg.start_range->first;
    start_hi = cfg.start_range->second;
  }
  std::vector<Converged> hits;
  hits.reserve(cfg.n_starts);
  double span = start_hi - start_lo;
  for (int i = 0; i < cfg.n_starts; ++i) {
    double y0 = start_lo + span * static_cast<double>(i) /
                               static_cast<double>(cfg.n_starts - 1);
    try {
      hits.push_back(ascend_on_slice(slice, y0, cfg, step_tol, lo, hi, nullptr));
    } catch (const StallError&) {
      // A stalled start contributes nothing; the others may still converge.
    }
  }
  if (hits.empty())
    throw EmptyModalSetError("no mean-shift start converged at this point");

  std::sort(hits.begin(), hits.end(),
            [](const Converged& a, const Converged& b) { return a.y < b.y; });

  ModalSet out;
  out.x.assign(x.begin(), x.end());
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= hits.size(); ++i) {
    bool boundary =
        i == hits.size() || hits[i].y - hits[i - 1].y > cfg.merge_tol;
    if (!boundary) continue;
    std::size_t best = begin;
    for (std::size_t j = begin + 1; j < i; ++j)
      if (hits[j].density > hits[best].density) best = j;
    out.modes.push_back(hits[best].y);
    out.densities.push_back(hits[best].density);
    begin = i;
  }
  return out;
}

ModalSet modal_set(const Dataset& ds, const WeightVector& w,
                   const Bandwidths& bw, std::span<const double> x,
                   const MeanShiftConfig& cfg) {
  validate_weights(ds, w);
  MeanShiftConfig r = cfg.resolved(ds, bw);
  XSlice slice(ds, w, bw, x);
  return modal_set_on_slice(slice, x, r,
                            {ds.observed_y_min(), ds.observed_y_max()});
}

namespace {

ModalCurve modal_curve_impl(const Dataset& ds, const WeightVector& w,
                            const Bandwidths& bw,
                            const std::vector<std::vector<double>>& mesh,
                            const MeanShiftConfig& cfg, bool parallel) {
  validate_weights(ds, w);
  MeanShiftConfig r = cfg.resolved(ds, bw);
  std::pair<double, double> bounds{ds.observed_y_min(), ds.observed_y_max()};

  ModalCurve curve;
  curve.mesh = mesh;
  curve.sets.resize(mesh.size());
  auto body = [&](std::size_t j) {
    try {
      XSlice slice(ds, w, bw, mesh[j]);
      curve.sets[j] = modal_set_on_slice(slice, mesh[j], r, bounds);
    } catch (const EmptyModalSetError&) {
      curve.sets[j].x = mesh[j];  // flagged by the empty mode list
    }
  };
  if (parallel) {
    parallel_for(mesh.size(), body);
  } else {
    for (std::size_t j = 0; j < mesh.size(); ++j) body(j);
  }
  return curve;
}

}  // namespace

ModalCurve modal_curve(const Dataset& ds, const WeightVector& w,
                       const Bandwidths& bw,
                       const std::vector<std::vector<double>>& mesh,
                       const MeanShiftConfig& cfg) {
  return modal_curve_impl(ds, w, bw, mesh, cfg, true);
}

ModalCurve modal_curve_serial(const Dataset& ds, const WeightVector& w,
                              const Bandwidths& bw,
                              const std::vector<std::vector<double>>& mesh,
                              const MeanShiftConfig& cfg) {
  return modal_curve_impl(ds, w, bw, mesh, cfg, false);
}

}  // namespace modalms
