#include "modalms/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "modalms/errors.hpp"

namespace modalms {

namespace {

void check_finite_set(std::span<const double> s) {
  for (double v : s)
    if (!std::isfinite(v))
      throw ConfigError("set contains a non-finite value");
}

//! Max over a of the distance to sorted b, by a single forward sweep.
double directed_hausdorff(std::span<const double> a_sorted,
                          std::span<const double> b_sorted) {
  double worst = 0.0;
  std::size_t j = 0;
  for (double v : a_sorted) {
    while (j + 1 < b_sorted.size() &&
           std::abs(b_sorted[j + 1] - v) <= std::abs(b_sorted[j] - v))
      ++j;
    worst = std::max(worst, std::abs(b_sorted[j] - v));
  }
  return worst;
}

}  // namespace

double dist_point_set(double b, std::span<const double> set) {
  if (set.empty())
    throw DomainError("distance to an empty set is undefined");
  if (!std::isfinite(b)) throw ConfigError("query point is not finite");
  check_finite_set(set);
  double best = std::numeric_limits<double>::infinity();
  for (double v : set) best = std::min(best, std::abs(b - v));
  return best;
}

double hausdorff(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw DomainError("Hausdorff distance needs two non-empty sets");
  check_finite_set(a);
  check_finite_set(b);
  std::vector<double> as(a.begin(), a.end());
  std::vector<double> bs(b.begin(), b.end());
  std::sort(as.begin(), as.end());
  std::sort(bs.begin(), bs.end());
  return std::max(directed_hausdorff(as, bs), directed_hausdorff(bs, as));
}

AseResult ase_detail(const ModalCurve& estimate, const ModalCurve& reference,
                     double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ConfigError("mesh cell weight must be positive and finite");
  if (estimate.mesh.size() != reference.mesh.size())
    throw AlignmentError("curves are on meshes of different sizes");
  for (std::size_t j = 0; j < estimate.mesh.size(); ++j)
    if (estimate.mesh[j] != reference.mesh[j])
      throw AlignmentError("curves disagree on mesh point " +
                           std::to_string(j));

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  auto widen = [&](const ModalCurve& c) {
    for (const auto& s : c.sets)
      for (double v : s.modes) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  };
  widen(estimate);
  widen(reference);
  double range = hi > lo ? hi - lo : 0.0;

  AseResult out;
  for (std::size_t j = 0; j < estimate.mesh.size(); ++j) {
    const ModalSet& est = estimate.sets[j];
    const ModalSet& ref = reference.sets[j];
    if (ref.empty())
      throw DomainError("reference curve has no modes at mesh point " +
                        std::to_string(j));
    if (est.empty()) {
      out.value += range * range * delta;
      ++out.empty_penalties;
      continue;
    }
    double h = hausdorff(est.modes, ref.modes);
    out.value += h * h * delta;
  }
  return out;
}

double ase(const ModalCurve& estimate, const ModalCurve& reference,
           double delta) {
  return ase_detail(estimate, reference, delta).value;
}

}  // namespace modalms
