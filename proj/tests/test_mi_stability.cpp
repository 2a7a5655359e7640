#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "modalms/simulate.hpp"

using namespace modalms;

// more imputation draws must not hurt the estimator on average; the two
// runs share generation and deletion streams, so the draw count is the
// only difference between them

TEST_SUITE("mi stability") {
  TEST_CASE("twenty draws do no worse than two over fifty replicates") {
    auto mean_ase_for = [](int draws) {
      ExperimentConfig cfg;
      cfg.scenario = ScenarioSpec{1, 0.75, 0.0, 200}.normalized();
      cfg.missing = MissingModel::m1;
      cfg.estimators = {Estimator::multiple_imputation};
      cfg.replicates = 50;
      cfg.mesh_points = 100;
      cfg.bandwidths = BandwidthPolicy::fixed_at({0.1, 0.5});
      cfg.mi_draws = draws;
      cfg.seed = 31;
      ExperimentResult res = run_experiment(cfg);
      CHECK(res.failed == 0);
      return res.mean_ase(0);
    };
    double few = mean_ase_for(2);
    double many = mean_ase_for(20);
    CHECK(many <= few + 0.002);
  }
}
