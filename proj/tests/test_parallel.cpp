#include <doctest.h>

#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "modalms/bandwidth.hpp"
#include "modalms/errors.hpp"
#include "modalms/meanshift.hpp"
#include "modalms/missing.hpp"
#include "modalms/parallel.hpp"
#include "modalms/simulate.hpp"
#include "oracles.hpp"

using namespace modalms;

namespace {

//! Restores the configured thread count on scope exit.
struct ThreadGuard {
  int saved = thread_count();
  ~ThreadGuard() { set_thread_count(saved); }
};

}  // namespace

TEST_SUITE("parallel") {
  TEST_CASE("thread count setting round-trips and validates") {
    ThreadGuard guard;
    set_thread_count(3);
    CHECK(thread_count() == 3);
    CHECK(effective_threads() == 3);
    set_thread_count(0);
    CHECK(thread_count() == 0);
    CHECK(effective_threads() >= 1);
    CHECK_THROWS_AS(set_thread_count(-1), ConfigError);
  }

  TEST_CASE("loop covers every index exactly once") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
    parallel_for(0, [&](std::size_t) { hits[0].fetch_add(1); });
    CHECK(hits[0].load() == 1);
  }

  TEST_CASE("exceptions inside the loop reach the caller") {
    CHECK_THROWS_WITH_AS(
        parallel_for(64,
                     [](std::size_t i) {
                       if (i == 13) throw ConfigError("boom at 13");
                     }),
        "boom at 13", ConfigError);
    // All other iterations still ran before the rethrow.
    std::atomic<int> done{0};
    CHECK_THROWS_AS(parallel_for(64,
                                 [&](std::size_t i) {
                                   if (i % 2 == 1) throw std::runtime_error("odd");
                                   done.fetch_add(1);
                                 }),
                    std::runtime_error);
    CHECK(done.load() == 32);
  }

  TEST_CASE("modal curves are identical for every thread count") {
    ThreadGuard guard;
    Dataset ds = gen_scenario(ScenarioSpec{1, 0.5, 0.0, 150}, 17);
    Dataset masked = apply_missingness(ds, MissingModel::m1, 18);
    WeightVector w = weights_for(Estimator::simplified, masked);
    Bandwidths bw{0.12, 0.5};
    auto mesh = unit_mesh(40);

    set_thread_count(1);
    ModalCurve one = modal_curve(masked, w, bw, mesh, MeanShiftConfig{});
    set_thread_count(4);
    ModalCurve four = modal_curve(masked, w, bw, mesh, MeanShiftConfig{});
    ModalCurve serial =
        modal_curve_serial(masked, w, bw, mesh, MeanShiftConfig{});

    REQUIRE(one.sets.size() == four.sets.size());
    REQUIRE(one.sets.size() == serial.sets.size());
    for (std::size_t j = 0; j < one.sets.size(); ++j) {
      CHECK(one.sets[j].modes == four.sets[j].modes);
      CHECK(one.sets[j].modes == serial.sets[j].modes);
      CHECK(one.sets[j].densities == serial.sets[j].densities);
    }
  }

  TEST_CASE("experiments are identical for every thread count") {
    ThreadGuard guard;
    ExperimentConfig cfg;
    cfg.scenario = ScenarioSpec{1, 0.75, 0.0, 60};
    cfg.missing = MissingModel::m4;
    cfg.estimators = {Estimator::simplified, Estimator::ipw};
    cfg.replicates = 4;
    cfg.mesh_points = 20;
    cfg.bandwidths = BandwidthPolicy::fixed_at(Bandwidths{0.15, 0.5});
    cfg.seed = 23;

    set_thread_count(1);
    ExperimentResult one = run_experiment(cfg);
    set_thread_count(4);
    ExperimentResult four = run_experiment(cfg);
    for (std::size_t e = 0; e < one.ase.size(); ++e)
      for (std::size_t r = 0; r < one.ase[e].size(); ++r)
        CHECK(one.ase[e][r] == four.ase[e][r]);
    CHECK(one.empty_mesh_points == four.empty_mesh_points);
  }
}
