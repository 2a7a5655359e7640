#include "modalms/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "modalms/errors.hpp"
#include "modalms/metrics.hpp"
#include "modalms/parallel.hpp"
#include "stats_util.hpp"

namespace modalms {

namespace {

struct Term {
  double value = 0.0;
  std::uint8_t state = 0;  // 0 not usable, 1 evaluated, 2 skipped
};

//! All leave-one-out terms of the criterion for one bandwidth pair.
CvScore cv_terms(const Dataset& ds, const PropensityModel& model,
                 const Bandwidths& bw, const CovariateWeight& weight,
                 const MeanShiftConfig& cfg, bool parallel, bool* reliable) {
  validate(bw);
  MeanShiftConfig rcfg = cfg.resolved(ds, bw);
  WeightVector sw = weights_for(Estimator::simplified, ds);
  std::pair<double, double> bounds{ds.observed_y_min(), ds.observed_y_max()};
  const std::size_t n = ds.size();

  std::vector<Term> terms(n);
  auto body = [&](std::size_t i) {
    if (!ds.observed(i)) return;
    double wx = weight ? weight(ds.x(i)) : 1.0;
    if (!(wx > 0.0)) return;
    Term& t = terms[i];
    try {
      XSlice slice(ds, sw, bw, ds.x(i), static_cast<std::ptrdiff_t>(i));
      ModalSet ms = modal_set_on_slice(slice, ds.x(i), rcfg, bounds);
      double dist = dist_point_set(ds.y(i), ms.modes);
      double count = static_cast<double>(ms.modes.size());
      double p = model.eval(ds.x(i));
      t.value = dist * dist * count * count * wx / p;
      t.state = 1;
    } catch (const EmptyModalSetError&) {
      t.state = 2;
    } catch (const DegenerateWeightsError&) {
      t.state = 2;
    }
  };
  if (parallel) {
    parallel_for(n, body);
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }

  CvScore out;
  double sum = 0.0;
  for (const Term& t : terms) {
    if (t.state == 1) {
      sum += t.value;
      ++out.evaluated;
    } else if (t.state == 2) {
      ++out.skipped;
    }
  }
  out.value = sum / static_cast<double>(n);
  std::size_t usable = out.evaluated + out.skipped;
  *reliable = usable > 0 &&
              static_cast<double>(out.skipped) <=
                  0.2 * static_cast<double>(usable);
  return out;
}

CvScore cv_checked(const Dataset& ds, const PropensityModel& model,
                   const Bandwidths& bw, const CovariateWeight& weight,
                   const MeanShiftConfig& cfg, bool parallel) {
  bool reliable = false;
  CvScore s = cv_terms(ds, model, bw, weight, cfg, parallel, &reliable);
  if (!reliable)
    throw UnreliableScoreError(
        "cross-validation skipped " + std::to_string(s.skipped) + " of " +
        std::to_string(s.evaluated + s.skipped) +
        " usable rows; the score is not comparable across bandwidths");
  return s;
}

}  // namespace

BandwidthGrid BandwidthGrid::defaults_for(const Dataset& ds) {
  CovariateRange cr = covariate_range(ds);
  double x_range = 0.0;
  for (std::size_t j = 0; j < ds.dim(); ++j)
    x_range = std::max(x_range, cr.hi[j] - cr.lo[j]);
  if (!(x_range > 0.0))
    throw ConfigError("covariates have no spread, no default grid exists");
  double y_sd = observed_y_sd(ds);
  if (!(y_sd > 0.0))
    throw ConfigError("responses have no spread, no default grid exists");

  BandwidthGrid g;
  for (int k = 0; k <= 10; ++k)
    g.h1_values.push_back((0.05 + 0.025 * k) * x_range);
  for (int k = 0; k <= 10; ++k)
    g.h2_values.push_back((0.1 + 0.05 * k) * y_sd);
  return g;
}

CovariateWeight central_region_weight(const Dataset& ds, double lo_q,
                                      double hi_q) {
  if (!(0.0 <= lo_q) || !(lo_q < hi_q) || !(hi_q <= 1.0))
    throw ConfigError("quantile bounds must satisfy 0 <= lo < hi <= 1");
  const std::size_t d = ds.dim();
  std::vector<double> lo(d), hi(d);
  std::vector<double> col(ds.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < ds.size(); ++i) col[i] = ds.x(i)[j];
    std::sort(col.begin(), col.end());
    lo[j] = detail::sorted_quantile(col, lo_q);
    hi[j] = detail::sorted_quantile(col, hi_q);
  }
  return [lo = std::move(lo), hi = std::move(hi)](std::span<const double> x) {
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] < lo[j] || x[j] > hi[j]) return 0.0;
    return 1.0;
  };
}

CvScore cv_score_detail(const Dataset& ds, const PropensityModel& model,
                        const Bandwidths& bw, const CovariateWeight& weight,
                        const MeanShiftConfig& cfg) {
  return cv_checked(ds, model, bw, weight, cfg, true);
}

double cv_score(const Dataset& ds, const PropensityModel& model,
                const Bandwidths& bw, const CovariateWeight& weight,
                const MeanShiftConfig& cfg) {
  return cv_score_detail(ds, model, bw, weight, cfg).value;
}

CvScore cv_score_serial_detail(const Dataset& ds, const PropensityModel& model,
                               const Bandwidths& bw,
                               const CovariateWeight& weight,
                               const MeanShiftConfig& cfg) {
  return cv_checked(ds, model, bw, weight, cfg, false);
}

CvSelection select_bandwidths(const Dataset& ds, const PropensityModel& model,
                              const BandwidthGrid& grid,
                              const CovariateWeight& weight,
                              const MeanShiftConfig& cfg) {
  if (grid.h1_values.empty() || grid.h2_values.empty())
    throw ConfigError("bandwidth grid is empty");
  for (double h : grid.h1_values)
    if (!(h > 0.0) || !std::isfinite(h))
      throw ConfigError("grid bandwidths must be positive and finite");
  for (double h : grid.h2_values)
    if (!(h > 0.0) || !std::isfinite(h))
      throw ConfigError("grid bandwidths must be positive and finite");

  CvSelection sel;
  sel.table.resize(grid.size());
  for (std::size_t a = 0; a < grid.h1_values.size(); ++a)
    for (std::size_t b = 0; b < grid.h2_values.size(); ++b)
      sel.table[a * grid.h2_values.size() + b].bw = {grid.h1_values[a],
                                                     grid.h2_values[b]};

  parallel_for(sel.table.size(), [&](std::size_t c) {
    CvCell& cell = sel.table[c];
    bool reliable = false;
    CvScore s = cv_terms(ds, model, cell.bw, weight, cfg, false, &reliable);
    cell.score = s.value;
    cell.evaluated = s.evaluated;
    cell.skipped = s.skipped;
    cell.reliable = reliable;
    if (!reliable) cell.score = std::numeric_limits<double>::quiet_NaN();
  });

  const CvCell* best = nullptr;
  for (const CvCell& cell : sel.table) {
    if (!cell.reliable) continue;
    if (best == nullptr || cell.score < best->score ||
        (cell.score == best->score &&
         (cell.bw.h2 < best->bw.h2 ||
          (cell.bw.h2 == best->bw.h2 && cell.bw.h1 < best->bw.h1))))
      best = &cell;
  }
  if (best == nullptr)
    throw SelectionError("no bandwidth pair produced a reliable score");
  sel.selected = best->bw;
  return sel;
}

}  // namespace modalms
