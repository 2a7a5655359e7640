#include "modalms/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "modalms/errors.hpp"
#include "modalms/parallel.hpp"

namespace modalms {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMovingMean = -1.5;
constexpr double kFixedMean = 1.5;
constexpr double kMovingSd = 0.5;
constexpr double kFixedSd = 0.5;

double regression_curve(double x) { return 2.0 * std::sin(2.0 * kPi * x); }

//! Error-mixture density at e, for the components at one x.
double mixture_density(const std::vector<MixtureComponent>& comps, double e) {
  double g = 0.0;
  for (const auto& c : comps)
    g += c.weight * gaussian_kernel((e - c.mean) / c.sd) / c.sd;
  return g;
}

}  // namespace

std::string missing_model_tag(MissingModel m) {
  switch (m) {
    case MissingModel::none: return "none";
    case MissingModel::m1: return "M1";
    case MissingModel::m2: return "M2";
    case MissingModel::m3: return "M3";
    case MissingModel::m4: return "M4";
  }
  throw ConfigError("unknown deletion model");
}

std::optional<MissingModel> missing_model_from_tag(const std::string& tag) {
  std::string t;
  for (char c : tag)
    t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "none") return MissingModel::none;
  if (t == "m1") return MissingModel::m1;
  if (t == "m2") return MissingModel::m2;
  if (t == "m3") return MissingModel::m3;
  if (t == "m4") return MissingModel::m4;
  return std::nullopt;
}

PropensityModel known_propensity(MissingModel m) {
  switch (m) {
    case MissingModel::m1: return PropensityModel::known_m1();
    case MissingModel::m2: return PropensityModel::known_m2();
    case MissingModel::m3: return PropensityModel::known_m3();
    case MissingModel::m4: return PropensityModel::known_m4();
    case MissingModel::none: break;
  }
  throw ConfigError("no deletion model, no propensity to evaluate");
}

ScenarioSpec ScenarioSpec::normalized() const {
  if (id < 1 || id > 3)
    throw ConfigError("scenario id must be 1, 2, or 3");
  if (!std::isfinite(k) || k < 0.0 || k > 1.0)
    throw ConfigError("mixture weight k must lie in [0, 1]");
  if (!std::isfinite(a) || a < 0.0 || a > 1.0)
    throw ConfigError("location parameter a must lie in [0, 1]");
  if (n < 2) throw ConfigError("sample size must be at least 2");
  ScenarioSpec s = *this;
  if (s.id == 1) s.a = 0.0;
  if (s.id == 2) s.k = 0.75;
  if (s.id == 3) s.a = 0.0;
  return s;
}

std::vector<MixtureComponent> mixture_components(const ScenarioSpec& spec,
                                                 double x) {
  ScenarioSpec s = spec.normalized();
  double a_eff = s.id == 3 ? x : s.a;
  std::vector<MixtureComponent> comps;
  if (s.k > 0.0)
    comps.push_back(
        {s.k, kMovingMean + (kFixedMean - kMovingMean) * a_eff, kMovingSd});
  if (1.0 - s.k > 0.0) comps.push_back({1.0 - s.k, kFixedMean, kFixedSd});
  return comps;
}

double mixture_error_draw(const ScenarioSpec& spec, double x,
                          rng::Engine& eng) {
  ScenarioSpec s = spec.normalized();
  double a_eff = s.id == 3 ? x : s.a;
  // Always one indicator plus one normal draw, so the stream layout does
  // not depend on the parameters.
  bool moving = eng.bernoulli(s.k);
  double mean = moving ? kMovingMean + (kFixedMean - kMovingMean) * a_eff
                       : kFixedMean;
  double sd = moving ? kMovingSd : kFixedSd;
  return eng.normal(mean, sd);
}

Dataset gen_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  ScenarioSpec s = spec.normalized();
  rng::Engine eng(seed);
  std::vector<Sample> samples;
  samples.reserve(s.n);
  for (int i = 0; i < s.n; ++i) {
    double x = eng.uniform01();
    double eps = mixture_error_draw(s, x, eng);
    samples.push_back({{x}, regression_curve(x) + eps});
  }
  return Dataset::from_samples(samples);
}

std::vector<std::vector<double>> unit_mesh(std::size_t m) {
  if (m == 0) throw ConfigError("mesh needs at least one point");
  std::vector<std::vector<double>> mesh;
  mesh.reserve(m);
  for (std::size_t j = 0; j < m; ++j)
    mesh.push_back({(static_cast<double>(j) + 0.5) / static_cast<double>(m)});
  return mesh;
}

ModalCurve true_modal_curve(const ScenarioSpec& spec,
                            const std::vector<std::vector<double>>& mesh) {
  ScenarioSpec s = spec.normalized();
  constexpr int kGridPoints = 4001;
  constexpr double kLo = -3.5, kHi = 3.5;  // means +/- 4 sd
  constexpr double kStep = (kHi - kLo) / (kGridPoints - 1);

  ModalCurve curve;
  curve.mesh = mesh;
  curve.sets.resize(mesh.size());
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    if (mesh[j].size() != 1)
      throw ConfigError("scenario meshes are one-dimensional");
    double x = mesh[j][0];
    auto comps = mixture_components(s, x);

    std::vector<double> g(kGridPoints);
    for (int i = 0; i < kGridPoints; ++i)
      g[i] = mixture_density(comps, kLo + kStep * i);

    struct Hit {
      double y;
      double density;
    };
    std::vector<Hit> hits;
    for (int i = 1; i + 1 < kGridPoints; ++i) {
      if (!(g[i] > g[i - 1] && g[i] >= g[i + 1])) continue;
      double y = kLo + kStep * i;
      for (int t = 0; t < 500; ++t) {
        double num = 0.0, den = 0.0;
        for (const auto& c : comps) {
          double w = c.weight * gaussian_kernel((y - c.mean) / c.sd) /
                     (c.sd * c.sd * c.sd);
          num += w * c.mean;
          den += w;
        }
        if (!(den > 0.0)) break;
        double next = num / den;
        double step = next - y;
        y = std::clamp(next, kLo, kHi);
        if (std::abs(step) <= 1e-13) break;
      }
      hits.push_back({y, mixture_density(comps, y)});
    }
    std::sort(hits.begin(), hits.end(),
              [](const Hit& a, const Hit& b) { return a.y < b.y; });

    ModalSet& out = curve.sets[j];
    out.x = mesh[j];
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= hits.size(); ++i) {
      bool boundary = i == hits.size() || hits[i].y - hits[i - 1].y > 1e-9;
      if (!boundary) continue;
      std::size_t best = begin;
      for (std::size_t q = begin + 1; q < i; ++q)
        if (hits[q].density > hits[best].density) best = q;
      out.modes.push_back(hits[best].y + regression_curve(x));
      out.densities.push_back(hits[best].density);
      begin = i;
    }
  }
  return curve;
}

Dataset apply_missingness(const Dataset& ds, MissingModel model,
                          std::uint64_t seed) {
  if (model == MissingModel::none) return ds;
  PropensityModel p = known_propensity(model);
  rng::Engine eng(seed);
  std::vector<Sample> samples = ds.to_samples();
  for (auto& s : samples)
    if (!eng.bernoulli(p.eval(s.x))) s.y.reset();
  return Dataset::from_samples(samples);
}

BandwidthPolicy BandwidthPolicy::fixed_at(Bandwidths bw) {
  validate(bw);
  return {BandwidthPolicyKind::fixed, bw};
}
BandwidthPolicy BandwidthPolicy::cv_pilot() {
  return {BandwidthPolicyKind::cv_pilot, {}};
}
BandwidthPolicy BandwidthPolicy::cv_each() {
  return {BandwidthPolicyKind::cv_each, {}};
}

std::size_t ExperimentResult::successful() const {
  return (ase.empty() ? 0 : ase.front().size()) - failed;
}

double ExperimentResult::mean_ase(std::size_t est_index) const {
  const auto& row = ase.at(est_index);
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : row) {
    if (std::isnan(v)) continue;
    sum += v;
    ++count;
  }
  if (count == 0) throw ExperimentError("no successful replicates");
  return sum / static_cast<double>(count);
}

namespace {

bool contains(const std::vector<Estimator>& v, Estimator e) {
  return std::find(v.begin(), v.end(), e) != v.end();
}

PropensityModel replicate_propensity(const ExperimentConfig& cfg,
                                     const Dataset& masked) {
  if (cfg.missing == MissingModel::none) return PropensityModel::constant(1.0);
  switch (cfg.propensity) {
    case PropensityMode::known: return known_propensity(cfg.missing);
    case PropensityMode::logistic: return fit_propensity_logistic(masked);
    case PropensityMode::kernel: return fit_propensity_kernel(masked);
  }
  throw ConfigError("unknown propensity mode");
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ScenarioSpec spec = cfg.scenario.normalized();
  if (cfg.replicates < 1) throw ConfigError("need at least one replicate");
  if (cfg.mesh_points < 1) throw ConfigError("need at least one mesh point");
  if (cfg.estimators.empty()) throw ConfigError("no estimators requested");
  {
    std::set<Estimator> seen(cfg.estimators.begin(), cfg.estimators.end());
    if (seen.size() != cfg.estimators.size())
      throw ConfigError("estimator list has duplicates");
  }
  bool want_mi = contains(cfg.estimators, Estimator::multiple_imputation);
  if (want_mi && cfg.mi_draws < 2)
    throw ConfigError("multiple imputation needs at least two draws");
  if (!(cfg.max_failure_fraction >= 0.0) || !(cfg.max_failure_fraction <= 1.0))
    throw ConfigError("failure fraction must lie in [0, 1]");

  const bool need_complete = contains(cfg.estimators, Estimator::complete);
  const bool need_masked = contains(cfg.estimators, Estimator::simplified) ||
                           contains(cfg.estimators, Estimator::ipw) ||
                           contains(cfg.estimators,
                                    Estimator::single_imputation) ||
                           want_mi;
  const bool need_prop =
      contains(cfg.estimators, Estimator::ipw) ||
      (cfg.bandwidths.kind == BandwidthPolicyKind::cv_each && need_masked &&
       cfg.missing != MissingModel::none);

  auto mesh = unit_mesh(static_cast<std::size_t>(cfg.mesh_points));
  ModalCurve truth = true_modal_curve(spec, mesh);
  const double delta = 1.0 / static_cast<double>(cfg.mesh_points);

  Bandwidths bw_complete{}, bw_missing{};
  switch (cfg.bandwidths.kind) {
    case BandwidthPolicyKind::fixed:
      validate(cfg.bandwidths.fixed);
      bw_complete = bw_missing = cfg.bandwidths.fixed;
      break;
    case BandwidthPolicyKind::cv_pilot: {
      ScenarioSpec pilot_spec = spec;
      pilot_spec.n = cfg.pilot_n > 0 ? cfg.pilot_n : spec.n;
      Dataset pilot = gen_scenario(
          pilot_spec, rng::derive(cfg.seed, rng::Stage::pilot, 0));
      bw_complete =
          select_bandwidths(pilot, PropensityModel::constant(1.0),
                            BandwidthGrid::defaults_for(pilot),
                            central_region_weight(pilot), cfg.mode_search)
              .selected;
      if (cfg.missing == MissingModel::none) {
        bw_missing = bw_complete;
      } else {
        Dataset pilot_masked = apply_missingness(
            pilot, cfg.missing, rng::derive(cfg.seed, rng::Stage::pilot, 1));
        PropensityModel prop = replicate_propensity(cfg, pilot_masked);
        bw_missing = select_bandwidths(pilot_masked, prop,
                                       BandwidthGrid::defaults_for(pilot_masked),
                                       central_region_weight(pilot_masked),
                                       cfg.mode_search)
                         .selected;
      }
      break;
    }
    case BandwidthPolicyKind::cv_each:
      break;
  }

  const std::size_t E = cfg.estimators.size();
  const std::size_t R = static_cast<std::size_t>(cfg.replicates);
  ExperimentResult result;
  result.estimators = cfg.estimators;
  result.ase.assign(E, std::vector<double>(
                           R, std::numeric_limits<double>::quiet_NaN()));
  result.empty_mesh_points.assign(E, 0);
  result.complete_bw = bw_complete;
  result.missing_bw = bw_missing;

  std::vector<std::vector<std::size_t>> empties(
      E, std::vector<std::size_t>(R, 0));
  std::vector<std::string> failures(R);
  std::vector<std::uint8_t> failed(R, 0);

  parallel_for(R, [&](std::size_t r) {
    try {
      Dataset complete =
          gen_scenario(spec, rng::derive(cfg.seed, rng::Stage::generate, r));
      Dataset masked =
          cfg.missing == MissingModel::none
              ? complete
              : apply_missingness(complete, cfg.missing,
                                  rng::derive(cfg.seed, rng::Stage::mask, r));

      std::optional<PropensityModel> prop;
      if (need_prop) prop = replicate_propensity(cfg, masked);

      Bandwidths rc = bw_complete, rm = bw_missing;
      if (cfg.bandwidths.kind == BandwidthPolicyKind::cv_each) {
        if (need_complete || cfg.missing == MissingModel::none) {
          rc = select_bandwidths(complete, PropensityModel::constant(1.0),
                                 BandwidthGrid::defaults_for(complete),
                                 central_region_weight(complete),
                                 cfg.mode_search)
                   .selected;
        }
        if (cfg.missing == MissingModel::none) {
          rm = rc;
        } else if (need_masked) {
          PropensityModel cv_prop =
              prop ? *prop : replicate_propensity(cfg, masked);
          rm = select_bandwidths(masked, cv_prop,
                                 BandwidthGrid::defaults_for(masked),
                                 central_region_weight(masked),
                                 cfg.mode_search)
                   .selected;
        }
      }

      for (std::size_t e = 0; e < E; ++e) {
        ModalCurve est;
        switch (cfg.estimators[e]) {
          case Estimator::complete:
            est = modal_curve(complete, unit_weights(complete), rc, mesh,
                              cfg.mode_search);
            break;
          case Estimator::simplified:
            est = modal_curve(masked,
                              weights_for(Estimator::simplified, masked), rm,
                              mesh, cfg.mode_search);
            break;
          case Estimator::ipw:
            est = modal_curve(masked,
                              weights_for(Estimator::ipw, masked, &*prop), rm,
                              mesh, cfg.mode_search);
            break;
          case Estimator::single_imputation: {
            ImputedDataset imp =
                impute_single(masked, rm, cfg.mode_search);
            est = modal_curve(imp.completed, unit_weights(imp.completed), rm,
                              mesh, cfg.mode_search);
            break;
          }
          case Estimator::multiple_imputation:
            est = multiple_imputation_curve(
                masked, rm, cfg.mode_search, cfg.mi_draws, mesh,
                rng::derive(cfg.seed, rng::Stage::impute, r), cfg.pool);
            break;
        }
        AseResult ar = ase_detail(est, truth, delta);
        result.ase[e][r] = ar.value;
        empties[e][r] = ar.empty_penalties;
      }
    } catch (const Error& ex) {
      failed[r] = 1;
      failures[r] = ex.what();
      for (std::size_t e = 0; e < E; ++e)
        result.ase[e][r] = std::numeric_limits<double>::quiet_NaN();
    }
  });

  for (std::size_t r = 0; r < R; ++r) {
    if (failed[r]) {
      ++result.failed;
      if (result.failure_messages.size() < 5 &&
          std::find(result.failure_messages.begin(),
                    result.failure_messages.end(),
                    failures[r]) == result.failure_messages.end())
        result.failure_messages.push_back(failures[r]);
    }
    for (std::size_t e = 0; e < E; ++e)
      result.empty_mesh_points[e] += empties[e][r];
  }

  double max_failed = cfg.max_failure_fraction * static_cast<double>(R);
  if (static_cast<double>(result.failed) > max_failed) {
    std::string detail = result.failure_messages.empty()
                             ? std::string("no diagnostics")
                             : result.failure_messages.front();
    throw ExperimentError(std::to_string(result.failed) + " of " +
                          std::to_string(R) +
                          " replicates failed; first error: " + detail);
  }
  return result;
}

}  // namespace modalms
