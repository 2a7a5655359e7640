#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "modalms/dataset.hpp"
#include "modalms/kernel_density.hpp"

namespace modalms {

//! Controls for the mode-seeking iteration. Zero-valued fields are
//! resolved against the data and bandwidths before use: tol becomes
//! 1e-6 times the observed response range, merge_tol becomes h2 / 2.
struct MeanShiftConfig {
  double tol = 0.0;
  int max_iter = 500;
  double merge_tol = 0.0;
  int n_starts = 30;
  //! Range the starting points span; defaults to the observed response range.
  std::optional<std::pair<double, double>> start_range;

  MeanShiftConfig resolved(const Dataset& ds, const Bandwidths& bw) const;
  MeanShiftConfig resolved(double y_lo, double y_hi, const Bandwidths& bw) const;
};

//! The estimated modes of the conditional density at one covariate point,
//! in increasing order, each with the density value that selected it.
struct ModalSet {
  std::vector<double> x;
  std::vector<double> modes;
  std::vector<double> densities;

  bool empty() const { return modes.empty(); }
  std::size_t size() const { return modes.size(); }
};

//! Modal sets over a mesh of covariate points. A set may be empty when
//! no start converged there; those points are counted, not errors.
struct ModalCurve {
  std::vector<std::vector<double>> mesh;
  std::vector<ModalSet> sets;

  std::size_t empty_count() const;
};

struct AscentResult {
  double mode = 0.0;
  int iterations = 0;
  bool converged = false;
};

//! One fixed-point update of the response coordinate: the kernel-weighted
//! average of the responses, with weights centered at (x, y).
double mean_shift_step(const Dataset& ds, const WeightVector& w,
                       const Bandwidths& bw, std::span<const double> x,
                       double y);

//! Iterates mean_shift_step from y0 until the update is below tolerance.
//! The density along accepted iterates never decreases, every iterate
//! stays inside the observed response range, and the returned point has
//! a residual (hence a density gradient in y) below tolerance.
//! Throws StallError if the iteration cap is reached.
//! When trace is given, it receives the start and every accepted iterate.
AscentResult ascend(const Dataset& ds, const WeightVector& w,
                    const Bandwidths& bw, std::span<const double> x, double y0,
                    const MeanShiftConfig& cfg = {},
                    std::vector<double>* trace = nullptr);

//! Equispaced starting values spanning the configured range.
std::vector<double> starting_points(const Dataset& ds,
                                    const MeanShiftConfig& cfg = {});

//! Runs the ascent from every starting point, drops stalled starts,
//! merges converged points closer than merge_tol, and keeps the highest
//! density representative of each cluster.
ModalSet modal_set(const Dataset& ds, const WeightVector& w,
                   const Bandwidths& bw, std::span<const double> x,
                   const MeanShiftConfig& cfg = {});

//! Same, on a prebuilt slice. cfg must already be resolved; y_bounds is
//! the response range that confines the iterates.
ModalSet modal_set_on_slice(const XSlice& slice, std::span<const double> x,
                            const MeanShiftConfig& cfg,
                            std::pair<double, double> y_bounds);

//! Modal sets at every mesh point. Parallel over mesh points; each point
//! writes only its own slot, so results match the serial version exactly.
ModalCurve modal_curve(const Dataset& ds, const WeightVector& w,
                       const Bandwidths& bw,
                       const std::vector<std::vector<double>>& mesh,
                       const MeanShiftConfig& cfg = {});

//! Reference implementation on a plain loop, kept for testing and for
//! benchmarking the parallel version.
ModalCurve modal_curve_serial(const Dataset& ds, const WeightVector& w,
                              const Bandwidths& bw,
                              const std::vector<std::vector<double>>& mesh,
                              const MeanShiftConfig& cfg = {});

}  // namespace modalms
