#pragma once

#include <cstdint>
#include <vector>

#include "modalms/dataset.hpp"
#include "modalms/kernel_density.hpp"
#include "modalms/meanshift.hpp"

namespace modalms {

//! A dataset with every response present, plus the record of which rows
//! were filled in.
struct ImputedDataset {
  Dataset completed;
  std::vector<std::uint8_t> imputed;

  std::size_t imputed_count() const;
};

//! Fills each missing response with the best mode at its covariates:
//! the mode of the observed-row conditional density with the highest
//! conditional density value. Throws ImputationError when a missing row
//! has no reachable mode.
ImputedDataset impute_single(const Dataset& ds, const Bandwidths& bw,
                             const MeanShiftConfig& cfg = {});

//! Fills each missing response with a mode drawn at random, with
//! probabilities proportional to the conditional density values.
//! Each row draws from its own stream derived from seed and the row
//! index, so results do not depend on traversal order.
ImputedDataset impute_random_draw(const Dataset& ds, const Bandwidths& bw,
                                  const MeanShiftConfig& cfg,
                                  std::uint64_t seed);

//! Mode values pooled across imputed-data curves at one covariate point.
struct PooledModes {
  std::vector<double> x;
  std::vector<double> values;
};

//! Controls for reducing a pool of mode values to one modal set.
//! Zero-valued fields are resolved from the pool: the bandwidth by
//! Silverman's rule, the merge tolerance as half the bandwidth.
struct PoolCombineConfig {
  double bandwidth = 0.0;
  double prune_fraction = 0.1;
  double merge_tol = 0.0;
  int max_iter = 500;
};

//! Reduces pooled mode values to the modes of their kernel density,
//! pruning shallow modes below prune_fraction of the highest peak.
//! The reported densities are those of the pooled kernel density.
ModalSet combine_modal_sets(const PooledModes& pool,
                            const PoolCombineConfig& cfg = {});

//! The multiple-imputation estimate: draws num_imputations completed
//! datasets with impute_random_draw (draw b uses the stream derived from
//! seed and b), runs the complete-data estimator on each, pools the
//! resulting modes per mesh point and combines them. With nothing
//! missing this is exactly the complete-data curve.
ModalCurve multiple_imputation_curve(const Dataset& ds, const Bandwidths& bw,
                                     const MeanShiftConfig& cfg,
                                     int num_imputations,
                                     const std::vector<std::vector<double>>& mesh,
                                     std::uint64_t seed,
                                     const PoolCombineConfig& pool_cfg = {});

}  // namespace modalms
