#include "modalms/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "modalms/errors.hpp"
#include "modalms/missing.hpp"
#include "modalms/rng.hpp"

namespace modalms {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

struct RowModes {
  std::size_t row;
  std::vector<double> modes;
  std::vector<double> cond;  // conditional density at each mode
};

//! The simplified-estimator modal set and conditional density values at
//! every missing row. Shared by both imputation rules and by the
//! multiple-imputation driver.
std::vector<RowModes> missing_row_modes(const Dataset& ds,
                                        const Bandwidths& bw,
                                        const MeanShiftConfig& cfg) {
  WeightVector sw = weights_for(Estimator::simplified, ds);
  MeanShiftConfig rcfg = cfg.resolved(ds, bw);
  std::pair<double, double> bounds{ds.observed_y_min(), ds.observed_y_max()};

  std::vector<RowModes> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.observed(i)) continue;
    XSlice slice(ds, sw, bw, ds.x(i));
    ModalSet ms;
    try {
      ms = modal_set_on_slice(slice, ds.x(i), rcfg, bounds);
    } catch (const EmptyModalSetError&) {
      throw ImputationError("row " + std::to_string(i) +
                            ": no mode is reachable at its covariates");
    }
    double marginal = slice.marginal_density();
    RowModes rm;
    rm.row = i;
    rm.modes = ms.modes;
    rm.cond.reserve(ms.densities.size());
    for (double dj : ms.densities) rm.cond.push_back(dj / marginal);
    rows.push_back(std::move(rm));
  }
  return rows;
}

ImputedDataset fill_rows(
    const Dataset& ds, const std::vector<RowModes>& rows,
    const std::function<double(const RowModes&)>& choose) {
  std::vector<Sample> samples = ds.to_samples();
  ImputedDataset out;
  out.imputed.assign(ds.size(), 0);
  for (const RowModes& rm : rows) {
    samples[rm.row].y = choose(rm);
    out.imputed[rm.row] = 1;
  }
  out.completed = Dataset::from_samples(samples);
  return out;
}

double draw_from_row(const RowModes& rm, std::uint64_t seed) {
  rng::Engine eng(rng::derive(seed, rm.row));
  return rm.modes[eng.categorical(rm.cond)];
}

}  // namespace

std::size_t ImputedDataset::imputed_count() const {
  std::size_t n = 0;
  for (auto f : imputed) n += f;
  return n;
}

ImputedDataset impute_single(const Dataset& ds, const Bandwidths& bw,
                             const MeanShiftConfig& cfg) {
  validate(bw);
  auto rows = missing_row_modes(ds, bw, cfg);
  return fill_rows(ds, rows, [](const RowModes& rm) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < rm.cond.size(); ++j)
      if (rm.cond[j] > rm.cond[best]) best = j;
    return rm.modes[best];
  });
}

ImputedDataset impute_random_draw(const Dataset& ds, const Bandwidths& bw,
                                  const MeanShiftConfig& cfg,
                                  std::uint64_t seed) {
  validate(bw);
  auto rows = missing_row_modes(ds, bw, cfg);
  return fill_rows(ds, rows, [seed](const RowModes& rm) {
    return draw_from_row(rm, seed);
  });
}

ModalSet combine_modal_sets(const PooledModes& pool,
                            const PoolCombineConfig& cfg) {
  if (pool.values.empty())
    throw EmptyModalSetError("cannot combine an empty pool of modes");
  for (double v : pool.values)
    if (!std::isfinite(v))
      throw ConfigError("pooled mode values must be finite");
  if (!(cfg.prune_fraction >= 0.0) || !(cfg.prune_fraction < 1.0))
    throw ConfigError("prune fraction must lie in [0, 1)");
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be at least 1");

  const std::vector<double>& v = pool.values;
  const std::size_t n = v.size();
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it, hi = *hi_it;

  double h = cfg.bandwidth;
  if (h <= 0.0) {
    if (n >= 2 && hi > lo) {
      h = silverman_bandwidth(v);
    } else {
      // All values coincide; any narrow kernel reports the same mode.
      h = 1e-6 * std::max(1.0, std::abs(lo));
    }
  }
  if (!std::isfinite(h) || !(h > 0.0))
    throw ConfigError("pool bandwidth must be positive and finite");
  double merge_tol = cfg.merge_tol > 0.0 ? cfg.merge_tol : 0.5 * h;

  double inv_h = 1.0 / h;
  auto density = [&](double y) {
    double s = 0.0;
    for (double vi : v) {
      double u = (y - vi) * inv_h;
      if (u * u > 2.0 * kKernelExpCutoff) continue;
      s += std::exp(-0.5 * u * u);
    }
    return s * kInvSqrt2Pi * inv_h / static_cast<double>(n);
  };
  auto shift = [&](double y) {
    double s0 = 0.0, s1 = 0.0;
    for (double vi : v) {
      double u = (y - vi) * inv_h;
      if (u * u > 2.0 * kKernelExpCutoff) continue;
      double k = std::exp(-0.5 * u * u);
      s0 += k;
      s1 += k * vi;
    }
    return s0 > 0.0 ? s1 / s0 : std::numeric_limits<double>::quiet_NaN();
  };

  double tol = std::max(1e-9 * std::max(1.0, hi - lo),
                        1e-6 * h * h);
  struct Hit {
    double y;
    double density;
  };
  std::vector<Hit> hits;
  for (double start : v) {
    double y = start;
    bool ok = false;
    for (int t = 0; t < cfg.max_iter; ++t) {
      double m = shift(y);
      if (!std::isfinite(m)) break;
      double step = m - y;
      y = std::clamp(m, lo, hi);
      if (std::abs(step) <= tol) {
        ok = true;
        break;
      }
    }
    if (ok) hits.push_back({y, density(y)});
  }
  if (hits.empty())
    throw EmptyModalSetError("no pooled mode-seeking start converged");

  std::sort(hits.begin(), hits.end(),
            [](const Hit& a, const Hit& b) { return a.y < b.y; });

  std::vector<double> modes, dens;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= hits.size(); ++i) {
    bool boundary = i == hits.size() || hits[i].y - hits[i - 1].y > merge_tol;
    if (!boundary) continue;
    std::size_t best = begin;
    for (std::size_t j = begin + 1; j < i; ++j)
      if (hits[j].density > hits[best].density) best = j;
    modes.push_back(hits[best].y);
    dens.push_back(hits[best].density);
    begin = i;
  }

  double peak = *std::max_element(dens.begin(), dens.end());
  ModalSet out;
  out.x = pool.x;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    if (dens[j] < cfg.prune_fraction * peak) continue;
    out.modes.push_back(modes[j]);
    out.densities.push_back(dens[j]);
  }
  return out;
}

ModalCurve multiple_imputation_curve(const Dataset& ds, const Bandwidths& bw,
                                     const MeanShiftConfig& cfg,
                                     int num_imputations,
                                     const std::vector<std::vector<double>>& mesh,
                                     std::uint64_t seed,
                                     const PoolCombineConfig& pool_cfg) {
  validate(bw);
  if (num_imputations < 2)
    throw ConfigError("multiple imputation needs at least two draws");

  if (ds.missing_count() == 0)
    return modal_curve(ds, unit_weights(ds), bw, mesh, cfg);

  auto rows = missing_row_modes(ds, bw, cfg);
  std::vector<Sample> base = ds.to_samples();

  std::vector<ModalCurve> curves;
  curves.reserve(num_imputations);
  for (int b = 0; b < num_imputations; ++b) {
    std::uint64_t draw_seed = rng::derive(seed, static_cast<std::uint64_t>(b));
    std::vector<Sample> samples = base;
    for (const RowModes& rm : rows)
      samples[rm.row].y = draw_from_row(rm, draw_seed);
    Dataset completed = Dataset::from_samples(samples);
    curves.push_back(
        modal_curve(completed, unit_weights(completed), bw, mesh, cfg));
  }

  ModalCurve out;
  out.mesh = mesh;
  out.sets.resize(mesh.size());
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    PooledModes pool;
    pool.x = mesh[j];
    for (const ModalCurve& c : curves)
      pool.values.insert(pool.values.end(), c.sets[j].modes.begin(),
                         c.sets[j].modes.end());
    if (pool.values.empty()) {
      out.sets[j].x = mesh[j];
      continue;
    }
    try {
      out.sets[j] = combine_modal_sets(pool, pool_cfg);
    } catch (const EmptyModalSetError&) {
      out.sets[j].x = mesh[j];
    }
  }
  return out;
}

}  // namespace modalms
