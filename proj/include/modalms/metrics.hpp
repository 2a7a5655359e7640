#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modalms/meanshift.hpp"

namespace modalms {

//! Distance from a point to a non-empty finite set of reals.
double dist_point_set(double b, std::span<const double> set);

//! Hausdorff distance between two non-empty finite sets of reals.
double hausdorff(std::span<const double> a, std::span<const double> b);

//! Average squared error between two modal curves on the same mesh:
//! the squared Hausdorff distance between the per-point mode sets,
//! summed with mesh cell weight delta. A mesh point where the estimate
//! is empty but the reference is not contributes the squared response
//! range as a penalty and is counted in empty_penalties.
struct AseResult {
  double value = 0.0;
  std::size_t empty_penalties = 0;
};

AseResult ase_detail(const ModalCurve& estimate, const ModalCurve& reference,
                     double delta);
double ase(const ModalCurve& estimate, const ModalCurve& reference,
           double delta);

}  // namespace modalms
