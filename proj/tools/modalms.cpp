#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modalms/bandwidth.hpp"
#include "modalms/dataset.hpp"
#include "modalms/errors.hpp"
#include "modalms/imputation.hpp"
#include "modalms/meanshift.hpp"
#include "modalms/metrics.hpp"
#include "modalms/missing.hpp"
#include "modalms/parallel.hpp"
#include "modalms/simulate.hpp"
#include "modalms/version.hpp"

namespace {

using nlohmann::json;

//! Six significant digits for report files; NaN becomes NA.
std::string fmt6(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string iso8601_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "unreadable";
  std::uint64_t h = 1469598103934665603ULL;
  char chunk[4096];
  while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(chunk[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& csv) {
  std::vector<double> out;
  for (const auto& s : split_names(csv)) out.push_back(std::stod(s));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw modalms::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw modalms::IoError("failed writing '" + path + "'");
}

void write_manifest(const std::string& path, json j) {
  j["tool"] = "modalms";
  j["version"] = modalms::kVersion;
  j["created_utc"] = iso8601_now();
  j["threads"] = modalms::effective_threads();
  write_text(path, j.dump(2) + "\n");
}

json input_record(const std::string& path) {
  return json{{"path", path}, {"fnv1a64", fnv1a64_file(path)}};
}

//! Shared dataset flags for the subcommands that read a CSV file.
struct DataArgs {
  std::string input;
  std::string x_cols = "x";
  std::string y_col = "y";

  void attach(CLI::App* cmd) {
    cmd->add_option("-i,--input", input, "input CSV file")->required();
    cmd->add_option("--x-cols", x_cols,
                    "comma-separated covariate column names");
    cmd->add_option("--y-col", y_col, "response column name");
  }

  modalms::ColumnSpec spec() const {
    modalms::ColumnSpec s;
    s.covariates = split_names(x_cols);
    s.response = y_col;
    return s;
  }

  modalms::Dataset load() const {
    return modalms::load_dataset(input, spec());
  }
};

//! Builds the propensity model named on the command line.
modalms::PropensityModel make_propensity(const std::string& name,
                                         const modalms::Dataset& ds) {
  if (name == "known-m1") return modalms::PropensityModel::known_m1();
  if (name == "known-m2") return modalms::PropensityModel::known_m2();
  if (name == "known-m3") return modalms::PropensityModel::known_m3();
  if (name == "known-m4") return modalms::PropensityModel::known_m4();
  if (name == "logistic") return modalms::fit_propensity_logistic(ds);
  if (name == "kernel") return modalms::fit_propensity_kernel(ds);
  if (name.rfind("constant:", 0) == 0)
    return modalms::PropensityModel::constant(std::stod(name.substr(9)));
  throw modalms::ConfigError("unknown propensity model '" + name + "'");
}

std::vector<std::vector<double>> make_mesh(const modalms::Dataset& ds,
                                           int points) {
  if (ds.dim() != 1)
    throw modalms::ConfigError(
        "automatic meshes need one covariate; supply --mesh-file instead");
  if (points < 1) throw modalms::ConfigError("mesh needs at least one point");
  auto cr = modalms::covariate_range(ds);
  double lo = cr.lo[0], hi = cr.hi[0];
  std::vector<std::vector<double>> mesh;
  mesh.reserve(points);
  for (int j = 0; j < points; ++j)
    mesh.push_back({lo + (hi - lo) * (static_cast<double>(j) + 0.5) /
                             static_cast<double>(points)});
  return mesh;
}

//! Reads a CSV of covariate points: a header with the covariate columns,
//! then one mesh point per row.
std::vector<std::vector<double>> load_mesh_file(
    const std::string& path, const std::vector<std::string>& covariates) {
  std::ifstream in(path);
  if (!in) throw modalms::IoError("cannot open '" + path + "' for reading");
  std::string header;
  if (!std::getline(in, header))
    throw modalms::SchemaError("'" + path + "' is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  auto names = split_names(header);
  std::vector<std::size_t> idx;
  for (const auto& want : covariates) {
    auto it = std::find(names.begin(), names.end(), want);
    if (it == names.end())
      throw modalms::SchemaError("mesh file lacks column '" + want + "'");
    idx.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  std::vector<std::vector<double>> mesh;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_names(line);
    std::vector<double> pt;
    for (std::size_t j : idx) {
      if (j >= cells.size())
        throw modalms::ParseError("mesh file row has too few fields");
      pt.push_back(std::stod(cells[j]));
    }
    mesh.push_back(std::move(pt));
  }
  if (mesh.empty()) throw modalms::ConfigError("mesh file has no rows");
  return mesh;
}

void write_curve_csv(const std::string& path,
                     const std::vector<std::string>& x_names,
                     const modalms::ModalCurve& curve,
                     const std::string& estimator_tag) {
  std::ostringstream out;
  out << "estimator,";
  for (const auto& n : x_names) out << n << ',';
  out << "mode_rank,mode,density\n";
  for (const auto& set : curve.sets) {
    for (std::size_t r = 0; r < set.modes.size(); ++r) {
      out << estimator_tag << ',';
      for (double xv : set.x) out << fmt6(xv) << ',';
      out << (r + 1) << ',' << fmt6(set.modes[r]) << ','
          << fmt6(set.densities[r]) << '\n';
    }
  }
  write_text(path, out.str());
}

int run_fit(const DataArgs& data, const std::string& estimator_name,
            double h1, double h2, bool use_cv, const std::string& propensity,
            int mesh_points, const std::string& mesh_file,
            int mi_draws, std::uint64_t seed, const std::string& out_path,
            const std::string& manifest_path) {
  auto est = modalms::estimator_from_tag(estimator_name);
  if (!est)
    throw modalms::ConfigError("unknown estimator '" + estimator_name + "'");
  modalms::Dataset ds = data.load();
  auto mesh = mesh_file.empty() ? make_mesh(ds, mesh_points)
                                : load_mesh_file(mesh_file, data.spec().covariates);

  std::optional<modalms::PropensityModel> prop;
  bool incomplete = ds.missing_count() > 0;
  bool needs_prop =
      *est == modalms::Estimator::ipw || (use_cv && incomplete);
  if (needs_prop) prop = make_propensity(propensity, ds);

  modalms::Bandwidths bw{h1, h2};
  if (use_cv) {
    modalms::PropensityModel cv_model =
        incomplete ? *prop : modalms::PropensityModel::constant(1.0);
    auto sel = modalms::select_bandwidths(
        ds, cv_model, modalms::BandwidthGrid::defaults_for(ds),
        modalms::central_region_weight(ds));
    bw = sel.selected;
    std::cout << "selected bandwidths: h1=" << fmt6(bw.h1)
              << " h2=" << fmt6(bw.h2) << "\n";
  }
  modalms::validate(bw);

  modalms::MeanShiftConfig cfg;
  modalms::ModalCurve curve;
  switch (*est) {
    case modalms::Estimator::complete:
      curve = modalms::modal_curve(
          ds, modalms::weights_for(modalms::Estimator::complete, ds), bw, mesh,
          cfg);
      break;
    case modalms::Estimator::simplified:
      curve = modalms::modal_curve(
          ds, modalms::weights_for(modalms::Estimator::simplified, ds), bw,
          mesh, cfg);
      break;
    case modalms::Estimator::ipw:
      curve = modalms::modal_curve(
          ds, modalms::weights_for(modalms::Estimator::ipw, ds, &*prop), bw,
          mesh, cfg);
      break;
    case modalms::Estimator::single_imputation: {
      auto imp = modalms::impute_single(ds, bw, cfg);
      curve = modalms::modal_curve(imp.completed,
                                   modalms::unit_weights(imp.completed), bw,
                                   mesh, cfg);
      break;
    }
    case modalms::Estimator::multiple_imputation:
      curve = modalms::multiple_imputation_curve(ds, bw, cfg, mi_draws, mesh,
                                                 seed);
      break;
  }

  write_curve_csv(out_path, data.spec().covariates, curve,
                  modalms::estimator_tag(*est));
  std::size_t total_modes = 0;
  for (const auto& s : curve.sets) total_modes += s.modes.size();
  std::cout << "fit: estimator=" << modalms::estimator_tag(*est)
            << " rows=" << ds.size() << " observed=" << ds.observed_count()
            << " h1=" << fmt6(bw.h1) << " h2=" << fmt6(bw.h2)
            << " mesh=" << curve.mesh.size() << " modes=" << total_modes
            << " empty=" << curve.empty_count() << "\n"
            << "wrote " << out_path << "\n";

  if (!manifest_path.empty()) {
    json j{{"command", "fit"},
           {"inputs", json::array({input_record(data.input)})},
           {"outputs", json::array({out_path})},
           {"options",
            {{"estimator", modalms::estimator_tag(*est)},
             {"x_cols", data.x_cols},
             {"y_col", data.y_col},
             {"h1", bw.h1},
             {"h2", bw.h2},
             {"cv", use_cv},
             {"propensity", needs_prop ? propensity : ""},
             {"mesh_points", static_cast<int>(mesh.size())},
             {"mi_draws", mi_draws},
             {"seed", seed}}},
           {"summary",
            {{"rows", ds.size()},
             {"observed", ds.observed_count()},
             {"modes", total_modes},
             {"empty_mesh_points", curve.empty_count()}}}};
    write_manifest(manifest_path, std::move(j));
    std::cout << "wrote " << manifest_path << "\n";
  }
  return 0;
}

int run_impute(const DataArgs& data, const std::string& method, double h1,
               double h2, std::uint64_t seed, const std::string& out_path,
               const std::string& manifest_path) {
  modalms::Dataset ds = data.load();
  modalms::Bandwidths bw{h1, h2};
  modalms::MeanShiftConfig cfg;
  modalms::ImputedDataset imp;
  if (method == "single") {
    imp = modalms::impute_single(ds, bw, cfg);
  } else if (method == "draw") {
    imp = modalms::impute_random_draw(ds, bw, cfg, seed);
  } else {
    throw modalms::ConfigError("unknown imputation method '" + method + "'");
  }

  // Dataset columns plus a provenance flag per row.
  std::string tmp = out_path + ".data.tmp";
  modalms::save_dataset(imp.completed, tmp, data.spec());
  std::ifstream in(tmp);
  std::ostringstream out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (row == 0)
      out << line << ",imputed\n";
    else
      out << line << ',' << static_cast<int>(imp.imputed[row - 1]) << '\n';
    ++row;
  }
  in.close();
  std::remove(tmp.c_str());
  write_text(out_path, out.str());

  std::cout << "impute: method=" << method << " rows=" << ds.size()
            << " filled=" << imp.imputed_count() << " h1=" << fmt6(h1)
            << " h2=" << fmt6(h2) << "\n"
            << "wrote " << out_path << "\n";

  if (!manifest_path.empty()) {
    json j{{"command", "impute"},
           {"inputs", json::array({input_record(data.input)})},
           {"outputs", json::array({out_path})},
           {"options",
            {{"method", method},
             {"x_cols", data.x_cols},
             {"y_col", data.y_col},
             {"h1", h1},
             {"h2", h2},
             {"seed", seed}}},
           {"summary",
            {{"rows", ds.size()}, {"filled", imp.imputed_count()}}}};
    write_manifest(manifest_path, std::move(j));
    std::cout << "wrote " << manifest_path << "\n";
  }
  return 0;
}

int run_bandwidth(const DataArgs& data, const std::string& propensity,
                  const std::string& h1_grid, const std::string& h2_grid,
                  const std::string& out_path,
                  const std::string& manifest_path) {
  modalms::Dataset ds = data.load();
  bool incomplete = ds.missing_count() > 0;
  modalms::PropensityModel model =
      incomplete ? make_propensity(propensity, ds)
                 : modalms::PropensityModel::constant(1.0);

  modalms::BandwidthGrid grid = modalms::BandwidthGrid::defaults_for(ds);
  if (!h1_grid.empty()) grid.h1_values = split_doubles(h1_grid);
  if (!h2_grid.empty()) grid.h2_values = split_doubles(h2_grid);

  auto sel = modalms::select_bandwidths(ds, model, grid,
                                        modalms::central_region_weight(ds));

  std::ostringstream out;
  out << "h1,h2,cv,evaluated,skipped_terms,reliable\n";
  for (const auto& cell : sel.table) {
    out << fmt6(cell.bw.h1) << ',' << fmt6(cell.bw.h2) << ','
        << fmt6(cell.score) << ',' << cell.evaluated << ',' << cell.skipped
        << ',' << (cell.reliable ? 1 : 0) << '\n';
  }
  write_text(out_path, out.str());

  std::cout << json{{"h1", sel.selected.h1}, {"h2", sel.selected.h2}}.dump()
            << "\n"
            << "wrote " << out_path << "\n";

  if (!manifest_path.empty()) {
    json j{{"command", "bandwidth"},
           {"inputs", json::array({input_record(data.input)})},
           {"outputs", json::array({out_path})},
           {"options",
            {{"x_cols", data.x_cols},
             {"y_col", data.y_col},
             {"propensity", incomplete ? propensity : "constant:1"},
             {"h1_grid", h1_grid},
             {"h2_grid", h2_grid}}},
           {"summary",
            {{"h1", sel.selected.h1}, {"h2", sel.selected.h2}}}};
    write_manifest(manifest_path, std::move(j));
    std::cout << "wrote " << manifest_path << "\n";
  }
  return 0;
}

int run_simulate(int scenario, double k, double a, int n,
                 const std::string& missing, const std::string& estimators,
                 int replicates, int mesh_points, double h1, double h2,
                 bool cv_pilot, bool cv_each, int pilot_n,
                 const std::string& propensity, int mi_draws,
                 std::uint64_t seed, const std::string& summary_path,
                 const std::string& long_path,
                 const std::string& manifest_path) {
  modalms::ExperimentConfig cfg;
  cfg.scenario = modalms::ScenarioSpec{scenario, k, a, n}.normalized();
  auto mm = modalms::missing_model_from_tag(missing);
  if (!mm) throw modalms::ConfigError("unknown deletion model '" + missing + "'");
  cfg.missing = *mm;
  for (const auto& tag : split_names(estimators)) {
    auto e = modalms::estimator_from_tag(tag);
    if (!e) throw modalms::ConfigError("unknown estimator '" + tag + "'");
    cfg.estimators.push_back(*e);
  }
  cfg.replicates = replicates;
  cfg.mesh_points = mesh_points;
  if (cv_pilot && cv_each)
    throw modalms::ConfigError("choose one of --cv-pilot and --cv-each");
  if (cv_pilot) {
    cfg.bandwidths = modalms::BandwidthPolicy::cv_pilot();
  } else if (cv_each) {
    cfg.bandwidths = modalms::BandwidthPolicy::cv_each();
  } else {
    cfg.bandwidths = modalms::BandwidthPolicy::fixed_at({h1, h2});
  }
  cfg.pilot_n = pilot_n;
  if (propensity == "known") {
    cfg.propensity = modalms::PropensityMode::known;
  } else if (propensity == "logistic") {
    cfg.propensity = modalms::PropensityMode::logistic;
  } else if (propensity == "kernel") {
    cfg.propensity = modalms::PropensityMode::kernel;
  } else {
    throw modalms::ConfigError("unknown propensity mode '" + propensity + "'");
  }
  cfg.mi_draws = mi_draws;
  cfg.seed = seed;

  modalms::ExperimentResult res = modalms::run_experiment(cfg);

  // One table row per run: the deletion model, then mean ASE x1000 per
  // estimator column.
  std::ostringstream sum;
  sum << "missing";
  for (auto e : res.estimators) sum << ',' << modalms::estimator_tag(e);
  sum << '\n' << modalms::missing_model_tag(cfg.missing);
  for (std::size_t e = 0; e < res.estimators.size(); ++e)
    sum << ',' << fmt6(res.mean_ase(e) * 1000.0);
  sum << '\n';
  write_text(summary_path, sum.str());

  std::ostringstream lng;
  lng << "replicate,estimator,ase\n";
  for (std::size_t r = 0; r < (res.ase.empty() ? 0 : res.ase[0].size()); ++r)
    for (std::size_t e = 0; e < res.estimators.size(); ++e)
      lng << (r + 1) << ',' << modalms::estimator_tag(res.estimators[e]) << ','
          << fmt6(res.ase[e][r]) << '\n';
  write_text(long_path, lng.str());

  std::cout << "simulate: scenario=" << scenario << " k=" << fmt6(cfg.scenario.k)
            << " a=" << fmt6(cfg.scenario.a) << " n=" << n
            << " missing=" << missing << " replicates=" << replicates
            << " failed=" << res.failed << "\n";
  for (std::size_t e = 0; e < res.estimators.size(); ++e)
    std::cout << "  " << modalms::estimator_tag(res.estimators[e])
              << ": mean ASE x1000 = " << fmt6(res.mean_ase(e) * 1000.0)
              << "\n";
  std::cout << "wrote " << summary_path << "\n"
            << "wrote " << long_path << "\n";

  if (!manifest_path.empty()) {
    json j{{"command", "simulate"},
           {"inputs", json::array()},
           {"outputs", json::array({summary_path, long_path})},
           {"options",
            {{"scenario", scenario},
             {"k", cfg.scenario.k},
             {"a", cfg.scenario.a},
             {"n", n},
             {"missing", missing},
             {"estimators", estimators},
             {"replicates", replicates},
             {"mesh_points", mesh_points},
             {"bandwidth_policy",
              cv_pilot ? "cv_pilot" : (cv_each ? "cv_each" : "fixed")},
             {"h1", h1},
             {"h2", h2},
             {"pilot_n", pilot_n},
             {"propensity", propensity},
             {"mi_draws", mi_draws},
             {"seed", seed}}},
           {"summary",
            {{"failed", res.failed},
             {"successful", res.successful()},
             {"complete_h1", res.complete_bw.h1},
             {"complete_h2", res.complete_bw.h2},
             {"missing_h1", res.missing_bw.h1},
             {"missing_h2", res.missing_bw.h2}}}};
    json per_est = json::object();
    json empties = json::object();
    for (std::size_t e = 0; e < res.estimators.size(); ++e) {
      per_est[modalms::estimator_tag(res.estimators[e])] =
          res.mean_ase(e) * 1000.0;
      empties[modalms::estimator_tag(res.estimators[e])] =
          res.empty_mesh_points[e];
    }
    j["summary"]["mean_ase_x1000"] = per_est;
    j["summary"]["empty_mesh_points"] = empties;
    write_manifest(manifest_path, std::move(j));
    std::cout << "wrote " << manifest_path << "\n";
  }
  return 0;
}

int env_threads() {
  const char* env = std::getenv("MODALMS_THREADS");
  if (!env) return 0;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 0) {
    std::cerr << "ignoring invalid MODALMS_THREADS='" << env << "'\n";
    return 0;
  }
  return static_cast<int>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel modal regression with missing responses"};
  app.set_version_flag("--version", modalms::kVersion);
  app.require_subcommand(1);

  int threads = env_threads();
  app.add_option("--threads", threads,
                 "worker threads for parallel kernels (0 = default)");

  // fit
  auto* fit = app.add_subcommand("fit", "estimate a modal curve from a CSV");
  DataArgs fit_data;
  fit_data.attach(fit);
  std::string fit_estimator = "s";
  double fit_h1 = 0.0, fit_h2 = 0.0;
  bool fit_cv = false;
  std::string fit_prop = "logistic";
  int fit_mesh = 200;
  std::string fit_mesh_file;
  int fit_mi = 20;
  std::uint64_t fit_seed = 1;
  std::string fit_out = "curve.csv", fit_manifest;
  fit->add_option("--estimator", fit_estimator,
                  "one of c, s, w, si, mi");
  fit->add_option("--h1", fit_h1, "covariate bandwidth");
  fit->add_option("--h2", fit_h2, "response bandwidth");
  fit->add_flag("--cv", fit_cv, "select bandwidths by cross-validation");
  fit->add_option("--propensity", fit_prop,
                  "known-m1..known-m4, logistic, kernel, constant:P");
  fit->add_option("--mesh", fit_mesh, "mesh points over the covariate range")
      ->check(CLI::Range(1, 1 << 30));
  fit->add_option("--mesh-file", fit_mesh_file,
                  "CSV of covariate points to evaluate instead");
  fit->add_option("--mi-draws,--imputations", fit_mi,
                  "imputed datasets for estimator mi");
  fit->add_option("--seed", fit_seed, "seed for randomized imputation");
  fit->add_option("-o,--output", fit_out, "curve CSV path");
  fit->add_option("--manifest", fit_manifest, "write a run manifest JSON");

  // impute
  auto* impute = app.add_subcommand("impute", "fill missing responses");
  DataArgs imp_data;
  imp_data.attach(impute);
  std::string imp_method = "single";
  double imp_h1 = 0.0, imp_h2 = 0.0;
  std::uint64_t imp_seed = 1;
  std::string imp_out = "imputed.csv", imp_manifest;
  impute->add_option("--method", imp_method, "single or draw");
  impute->add_option("--h1", imp_h1, "covariate bandwidth")->required();
  impute->add_option("--h2", imp_h2, "response bandwidth")->required();
  impute->add_option("--seed", imp_seed, "seed for method draw");
  impute->add_option("-o,--output", imp_out, "imputed dataset CSV path");
  impute->add_option("--manifest", imp_manifest, "write a run manifest JSON");

  // bandwidth
  auto* bwcmd = app.add_subcommand("bandwidth",
                                   "cross-validated bandwidth selection");
  DataArgs bw_data;
  bw_data.attach(bwcmd);
  std::string bw_prop = "logistic";
  std::string bw_h1_grid, bw_h2_grid;
  std::string bw_out = "cv_table.csv", bw_manifest;
  bwcmd->add_option("--propensity", bw_prop,
                    "propensity for the criterion on incomplete data");
  bwcmd->add_option("--h1-grid", bw_h1_grid,
                    "comma-separated h1 values (default: data-driven)");
  bwcmd->add_option("--h2-grid", bw_h2_grid,
                    "comma-separated h2 values (default: data-driven)");
  bwcmd->add_option("-o,--output", bw_out, "score table CSV path");
  bwcmd->add_option("--manifest", bw_manifest, "write a run manifest JSON");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo study");
  int sim_scenario = 1;
  double sim_k = 0.5, sim_a = 0.0;
  int sim_n = 200;
  std::string sim_missing = "none";
  std::string sim_estimators = "c,s,w,si,mi";
  int sim_reps = 100, sim_mesh = 200;
  double sim_h1 = 0.0, sim_h2 = 0.0;
  bool sim_cv_pilot = false, sim_cv_each = false;
  int sim_pilot_n = 0;
  std::string sim_prop = "known";
  int sim_mi = 20;
  std::uint64_t sim_seed = 1;
  std::string sim_summary = "summary.csv", sim_long = "replicates.csv",
              sim_manifest;
  sim->add_option("--scenario", sim_scenario, "1, 2, or 3");
  sim->add_option("-k,--k", sim_k, "mixture weight");
  sim->add_option("-a,--a", sim_a, "location parameter (scenario 2)");
  sim->add_option("-n", sim_n, "sample size per replicate");
  sim->add_option("--missing", sim_missing, "none, m1, m2, m3, m4");
  sim->add_option("--estimators", sim_estimators,
                  "comma-separated subset of c,s,w,si,mi");
  sim->add_option("--replicates", sim_reps, "Monte Carlo replicates")
      ->check(CLI::Range(1, 1 << 30));
  sim->add_option("--mesh", sim_mesh, "mesh points on [0,1]")
      ->check(CLI::Range(1, 1 << 30));
  sim->add_option("--h1", sim_h1, "fixed covariate bandwidth");
  sim->add_option("--h2", sim_h2, "fixed response bandwidth");
  sim->add_flag("--cv-pilot", sim_cv_pilot,
                "cross-validate once on a pilot sample");
  sim->add_flag("--cv-each", sim_cv_each,
                "cross-validate inside every replicate");
  sim->add_option("--pilot-n", sim_pilot_n,
                  "pilot sample size (0 = same as -n)");
  sim->add_option("--propensity", sim_prop, "known, logistic, or kernel");
  sim->add_option("--mi-draws", sim_mi, "imputed datasets per replicate");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--out-summary", sim_summary, "summary CSV path");
  sim->add_option("--out-replicates", sim_long, "per-replicate CSV path");
  sim->add_option("--manifest", sim_manifest, "write a run manifest JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    modalms::set_thread_count(threads);
    if (fit->parsed()) {
      auto est = modalms::estimator_from_tag(fit_estimator);
      if (est && *est == modalms::Estimator::ipw &&
          fit->count("--propensity") == 0) {
        std::cerr << "estimator w weights by inverse propensity; pass an "
                     "explicit --propensity\n";
        return 2;
      }
      return run_fit(fit_data, fit_estimator, fit_h1, fit_h2, fit_cv,
                     fit_prop, fit_mesh, fit_mesh_file, fit_mi, fit_seed,
                     fit_out, fit_manifest);
    }
    if (impute->parsed())
      return run_impute(imp_data, imp_method, imp_h1, imp_h2, imp_seed,
                        imp_out, imp_manifest);
    if (bwcmd->parsed())
      return run_bandwidth(bw_data, bw_prop, bw_h1_grid, bw_h2_grid, bw_out,
                           bw_manifest);
    if (sim->parsed())
      return run_simulate(sim_scenario, sim_k, sim_a, sim_n, sim_missing,
                          sim_estimators, sim_reps, sim_mesh, sim_h1, sim_h2,
                          sim_cv_pilot, sim_cv_each, sim_pilot_n, sim_prop,
                          sim_mi, sim_seed, sim_summary, sim_long,
                          sim_manifest);
  } catch (const modalms::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
