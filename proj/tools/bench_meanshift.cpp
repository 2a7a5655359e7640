// Compares the parallel kernels against their serial references on a
// typical workload and checks that the results match exactly.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "modalms/bandwidth.hpp"
#include "modalms/meanshift.hpp"
#include "modalms/missing.hpp"
#include "modalms/parallel.hpp"
#include "modalms/simulate.hpp"

using namespace modalms;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(dt).count();
}

bool curves_equal(const ModalCurve& a, const ModalCurve& b) {
  if (a.sets.size() != b.sets.size()) return false;
  for (std::size_t j = 0; j < a.sets.size(); ++j) {
    if (a.sets[j].modes != b.sets[j].modes) return false;
    if (a.sets[j].densities != b.sets[j].densities) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 800;
  int mesh_points = argc > 2 ? std::atoi(argv[2]) : 400;
  int threads = argc > 3 ? std::atoi(argv[3]) : 0;
  set_thread_count(threads);

  ScenarioSpec spec{1, 0.5, 0.0, n};
  Dataset complete = gen_scenario(spec, 7151);
  Dataset masked = apply_missingness(complete, MissingModel::m1, 7152);
  WeightVector w = weights_for(Estimator::simplified, masked);
  Bandwidths bw{0.1, 0.25};
  auto mesh = unit_mesh(mesh_points);

  std::printf("n=%d mesh=%d threads=%d\n", n, mesh_points,
              effective_threads());

  auto t0 = std::chrono::steady_clock::now();
  ModalCurve serial = modal_curve_serial(masked, w, bw, mesh);
  double t_serial = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  ModalCurve parallel = modal_curve(masked, w, bw, mesh);
  double t_parallel = ms_since(t0);

  bool match = curves_equal(serial, parallel);
  std::printf("modal_curve   serial %8.1f ms   parallel %8.1f ms   "
              "speedup %.2fx   results %s\n",
              t_serial, t_parallel, t_serial / t_parallel,
              match ? "identical" : "DIFFER");

  PropensityModel prop = PropensityModel::known_m1();
  t0 = std::chrono::steady_clock::now();
  CvScore cv_serial = cv_score_serial_detail(masked, prop, bw);
  double t_cv_serial = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  CvScore cv_parallel = cv_score_detail(masked, prop, bw);
  double t_cv_parallel = ms_since(t0);

  bool cv_match = cv_serial.value == cv_parallel.value &&
                  cv_serial.skipped == cv_parallel.skipped;
  std::printf("cv_score      serial %8.1f ms   parallel %8.1f ms   "
              "speedup %.2fx   results %s\n",
              t_cv_serial, t_cv_parallel, t_cv_serial / t_cv_parallel,
              cv_match ? "identical" : "DIFFER");

  return match && cv_match ? 0 : 1;
}
