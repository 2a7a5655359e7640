#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "modalms/dataset.hpp"
#include "modalms/kernel_density.hpp"
#include "modalms/meanshift.hpp"
#include "modalms/missing.hpp"

namespace modalms {

//! Candidate bandwidth pairs: the cross product of the two lists.
struct BandwidthGrid {
  std::vector<double> h1_values;
  std::vector<double> h2_values;

  //! 0.05 to 0.3 of the covariate range (step 0.025) for h1, 0.1 to 0.6
  //! of the observed response sd (step 0.05) for h2.
  static BandwidthGrid defaults_for(const Dataset& ds);

  std::size_t size() const { return h1_values.size() * h2_values.size(); }
};

//! Covariate weight in the cross-validation criterion. An empty function
//! means constant one.
using CovariateWeight = std::function<double(std::span<const double>)>;

//! Indicator of the box between the per-dimension lo_q and hi_q
//! covariate quantiles. Trims boundary terms from the criterion.
CovariateWeight central_region_weight(const Dataset& ds, double lo_q = 0.05,
                                      double hi_q = 0.95);

struct CvScore {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

//! Inverse-propensity-weighted leave-one-out score of a bandwidth pair:
//! for each observed row, the squared distance from its response to the
//! modal set estimated without it, scaled by the squared mode count, the
//! covariate weight, and the inverse propensity, averaged over all rows.
//! Rows where the leave-one-out modal set is empty are skipped; if more
//! than 20% of the usable rows are skipped the score is not comparable
//! across bandwidths and UnreliableScoreError is thrown.
//! With every response observed and a constant-one propensity this is
//! the ordinary complete-data criterion.
CvScore cv_score_detail(const Dataset& ds, const PropensityModel& model,
                        const Bandwidths& bw,
                        const CovariateWeight& weight = {},
                        const MeanShiftConfig& cfg = {});
double cv_score(const Dataset& ds, const PropensityModel& model,
                const Bandwidths& bw, const CovariateWeight& weight = {},
                const MeanShiftConfig& cfg = {});

//! Reference implementation on a plain loop, kept for testing and for
//! benchmarking the parallel version.
CvScore cv_score_serial_detail(const Dataset& ds, const PropensityModel& model,
                               const Bandwidths& bw,
                               const CovariateWeight& weight = {},
                               const MeanShiftConfig& cfg = {});

struct CvCell {
  Bandwidths bw;
  double score = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  bool reliable = false;
};

struct CvSelection {
  Bandwidths selected;
  std::vector<CvCell> table;
};

//! Scores every pair in the grid and picks the reliable pair with the
//! lowest score; ties go to the smaller h2, then the smaller h1.
//! Throws SelectionError when no pair is reliable.
CvSelection select_bandwidths(const Dataset& ds, const PropensityModel& model,
                              const BandwidthGrid& grid,
                              const CovariateWeight& weight = {},
                              const MeanShiftConfig& cfg = {});

}  // namespace modalms
