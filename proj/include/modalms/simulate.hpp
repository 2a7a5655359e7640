#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modalms/bandwidth.hpp"
#include "modalms/dataset.hpp"
#include "modalms/imputation.hpp"
#include "modalms/meanshift.hpp"
#include "modalms/metrics.hpp"
#include "modalms/missing.hpp"
#include "modalms/rng.hpp"

namespace modalms {

//! The response-deletion mechanisms of the simulation study. Each is a
//! probability of observing the response given the covariate.
enum class MissingModel { none, m1, m2, m3, m4 };

std::string missing_model_tag(MissingModel m);
std::optional<MissingModel> missing_model_from_tag(const std::string& tag);
PropensityModel known_propensity(MissingModel m);

//! The synthetic regression: X uniform on [0, 1], Y = 2 sin(2 pi X) plus
//! a two-component normal mixture error. Scenario 1 fixes the moving
//! component at its leftmost location and varies its weight k; scenario
//! 2 fixes k = 0.75 and slides the component by a in [0, 1]; scenario 3
//! slides it by the covariate itself, so the shape changes along x.
struct ScenarioSpec {
  int id = 1;
  double k = 0.5;
  double a = 0.0;
  int n = 200;

  //! Validates and pins the fields the scenario does not use.
  ScenarioSpec normalized() const;
};

struct MixtureComponent {
  double weight = 0.0;
  double mean = 0.0;
  double sd = 1.0;
};

//! The error mixture at covariate value x, zero-weight components dropped.
std::vector<MixtureComponent> mixture_components(const ScenarioSpec& spec,
                                                 double x);

//! One error draw. Consumes a fixed number of engine values per call.
double mixture_error_draw(const ScenarioSpec& spec, double x,
                          rng::Engine& eng);

//! A fully observed sample of size spec.n.
Dataset gen_scenario(const ScenarioSpec& spec, std::uint64_t seed);

//! Midpoints of m equal cells of [0, 1], as one-dimensional mesh points.
std::vector<std::vector<double>> unit_mesh(std::size_t m);

//! The exact modal curve of the scenario: per mesh point, the local
//! maxima of the error mixture located by a fine grid scan plus a
//! fixed-point refinement, shifted by the regression curve.
ModalCurve true_modal_curve(const ScenarioSpec& spec,
                            const std::vector<std::vector<double>>& mesh);

//! Deletes responses at random, keeping each with the model's
//! observation probability at its covariate.
Dataset apply_missingness(const Dataset& ds, MissingModel model,
                          std::uint64_t seed);

//! How each replicate obtains its bandwidths.
enum class BandwidthPolicyKind {
  fixed,     //!< one pair, given up front
  cv_pilot,  //!< cross-validate once on a pilot sample, reuse everywhere
  cv_each,   //!< cross-validate inside every replicate
};

struct BandwidthPolicy {
  BandwidthPolicyKind kind = BandwidthPolicyKind::fixed;
  Bandwidths fixed;

  static BandwidthPolicy fixed_at(Bandwidths bw);
  static BandwidthPolicy cv_pilot();
  static BandwidthPolicy cv_each();
};

//! Where inverse-propensity weights come from: the deletion model's own
//! formula, or a logistic or kernel fit of the observation indicators.
enum class PropensityMode { known, logistic, kernel };

struct ExperimentConfig {
  ScenarioSpec scenario;
  MissingModel missing = MissingModel::none;
  std::vector<Estimator> estimators;
  int replicates = 100;
  int mesh_points = 200;
  BandwidthPolicy bandwidths;
  PropensityMode propensity = PropensityMode::known;
  int mi_draws = 20;
  std::uint64_t seed = 1;
  MeanShiftConfig mode_search;
  PoolCombineConfig pool;
  //! Pilot sample size for the cv_pilot policy; 0 means scenario.n.
  int pilot_n = 0;
  //! Replicates may fail (degenerate masks, stalled fits); beyond this
  //! fraction the whole experiment is reported as an error.
  double max_failure_fraction = 0.1;
};

struct ExperimentResult {
  std::vector<Estimator> estimators;
  //! ase[e][r]: average squared error of estimator e in replicate r;
  //! NaN marks a failed replicate.
  std::vector<std::vector<double>> ase;
  //! Total mesh points flagged empty, per estimator, over all replicates.
  std::vector<std::size_t> empty_mesh_points;
  std::size_t failed = 0;
  std::vector<std::string> failure_messages;
  //! Bandwidths used for the complete-data and incomplete-data fits
  //! (meaningful for the fixed and cv_pilot policies).
  Bandwidths complete_bw;
  Bandwidths missing_bw;

  std::size_t successful() const;
  //! Mean over successful replicates.
  double mean_ase(std::size_t est_index) const;
};

//! Runs the Monte Carlo study. Replicates are parallel and each draws
//! its generation, deletion and imputation streams from the master seed
//! by replicate index, so results are independent of thread count, and
//! the complete-data estimator sees identical samples whatever the
//! deletion model.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace modalms
