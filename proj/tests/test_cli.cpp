#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "modalms/dataset.hpp"
#include "modalms/simulate.hpp"

using namespace modalms;
namespace fs = std::filesystem;

namespace {

//! Scratch directory for one test-binary run.
fs::path scratch() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("modalms_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string path_of(const std::string& name) {
  return (scratch() / name).string();
}

int run_cli(const std::string& args, const std::string& capture = "") {
  std::string cmd = std::string("\"") + MODALMS_BIN + "\" " + args;
  if (capture.empty())
    cmd += " > /dev/null 2>&1";
  else
    cmd += " > " + capture + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

//! The curve CSV minus its leading estimator-tag column.
std::vector<std::string> strip_tag_column(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& line : lines_of(text)) {
    auto comma = line.find(',');
    out.push_back(comma == std::string::npos ? line
                                             : line.substr(comma + 1));
  }
  return out;
}

std::string write_scenario_file(const std::string& name, int n,
                                bool masked) {
  Dataset ds = gen_scenario(ScenarioSpec{1, 0.5, 0.0, n}, 2024);
  if (masked) ds = apply_missingness(ds, MissingModel::m1, 2025);
  std::string path = path_of(name);
  save_dataset(ds, path, ColumnSpec{{"x"}, "y"});
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("version flag exits cleanly") {
    CHECK(run_cli("--version") == 0);
    CHECK(run_cli("definitely-not-a-command") == 2);
  }

  TEST_CASE("fit on complete data gives the same curve for s and c") {
    std::string data = write_scenario_file("complete.csv", 120, false);
    std::string out_s = path_of("curve_s.csv"), out_c = path_of("curve_c.csv");
    REQUIRE(run_cli("fit -i " + data + " --estimator s --h1 0.15 --h2 0.6 "
                    "--mesh 40 -o " + out_s) == 0);
    REQUIRE(run_cli("fit -i " + data + " --estimator c --h1 0.15 --h2 0.6 "
                    "--mesh 40 -o " + out_c) == 0);
    auto s_rows = strip_tag_column(read_file(out_s));
    auto c_rows = strip_tag_column(read_file(out_c));
    REQUIRE(s_rows.size() == c_rows.size());
    REQUIRE(s_rows.size() > 40);
    CHECK(s_rows == c_rows);
    // The tag column itself differs.
    CHECK(read_file(out_s) != read_file(out_c));
  }

  TEST_CASE("seeded multiple-imputation fits are byte-identical") {
    std::string data = write_scenario_file("masked.csv", 120, true);
    std::string out_a = path_of("mi_a.csv"), out_b = path_of("mi_b.csv");
    std::string args = "fit -i " + data +
                       " --estimator mi --imputations 4 --seed 7 "
                       "--h1 0.15 --h2 0.6 --mesh 25 -o ";
    REQUIRE(run_cli(args + out_a) == 0);
    REQUIRE(run_cli(args + out_b) == 0);
    std::string a = read_file(out_a);
    CHECK(!a.empty());
    CHECK(a == read_file(out_b));
  }

  TEST_CASE("ipw fit demands an explicit propensity") {
    std::string data = write_scenario_file("masked2.csv", 80, true);
    CHECK(run_cli("fit -i " + data + " --estimator w --h1 0.15 --h2 0.6 "
                  "-o " + path_of("w.csv")) == 2);
    CHECK(run_cli("fit -i " + data + " --estimator w --propensity known-m1 "
                  "--h1 0.15 --h2 0.6 -o " + path_of("w.csv")) == 0);
  }

  TEST_CASE("data errors exit with code 1") {
    CHECK(run_cli("fit -i " + path_of("no_such.csv") +
                  " --h1 0.1 --h2 0.5 -o " + path_of("x.csv")) == 1);
    std::string bad = path_of("bad.csv");
    std::ofstream(bad) << "x,y\n0.1,zero\n";
    CHECK(run_cli("fit -i " + bad + " --h1 0.1 --h2 0.5 -o " +
                  path_of("x.csv")) == 1);
    // Missing required flag is a usage error instead.
    CHECK(run_cli("fit --h1 0.1 --h2 0.5") == 2);
  }

  TEST_CASE("impute appends a provenance flag column") {
    std::string data = write_scenario_file("to_impute.csv", 100, true);
    std::string out = path_of("imputed.csv");
    REQUIRE(run_cli("impute -i " + data + " --method single --h1 0.15 "
                    "--h2 0.6 -o " + out) == 0);
    auto rows = lines_of(read_file(out));
    REQUIRE(rows.size() == 101);
    CHECK(rows[0] == "x,y,imputed");
    auto source = lines_of(read_file(data));
    std::size_t flagged = 0, holes = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      auto cells = fields_of(rows[i]);
      REQUIRE(cells.size() == 3);
      CHECK(!cells[1].empty());
      bool was_missing = source[i].back() == ',';
      if (was_missing) ++holes;
      CHECK(cells[2] == (was_missing ? "1" : "0"));
      flagged += cells[2] == "1";
    }
    CHECK(holes > 0);
    CHECK(flagged == holes);
    // The input file is untouched.
    CHECK(source == lines_of(read_file(data)));
  }

  TEST_CASE("simulate writes the study-table summary layout") {
    std::string sum = path_of("summary.csv"), lng = path_of("reps.csv");
    REQUIRE(run_cli("simulate --scenario 1 --k 0.5 --missing m4 "
                    "--estimators c,s,w,si,mi --replicates 1 -n 40 "
                    "--mesh 10 --h1 0.15 --h2 0.6 --mi-draws 3 --seed 1 "
                    "--out-summary " + sum + " --out-replicates " + lng) == 0);
    auto rows = lines_of(read_file(sum));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "missing,C,S,W,SI,MI");
    auto cells = fields_of(rows[1]);
    REQUIRE(cells.size() == 6);
    CHECK(cells[0] == "M4");
    for (std::size_t i = 1; i < cells.size(); ++i)
      CHECK(std::stod(cells[i]) >= 0.0);

    auto long_rows = lines_of(read_file(lng));
    REQUIRE(long_rows.size() == 6);
    CHECK(long_rows[0] == "replicate,estimator,ase");
    CHECK(fields_of(long_rows[1])[0] == "1");
    CHECK(fields_of(long_rows[1])[1] == "C");
  }

  TEST_CASE("simulate flag validation") {
    CHECK(run_cli("simulate --replicates 0") == 2);
    CHECK(run_cli("simulate --mesh 0") == 2);
    // The a = 5/6 grid point of the study is a legal location.
    std::string sum = path_of("s2.csv"), lng = path_of("r2.csv");
    CHECK(run_cli("simulate --scenario 2 --a 0.8333 --missing m1 "
                  "--estimators s --replicates 1 -n 40 --mesh 10 "
                  "--h1 0.15 --h2 0.6 --out-summary " + sum +
                  " --out-replicates " + lng) == 0);
    // Out-of-range location is a config error from the library.
    CHECK(run_cli("simulate --scenario 2 --a 1.5 --missing m1 "
                  "--estimators s --replicates 1 -n 40 --mesh 10 "
                  "--h1 0.15 --h2 0.6 --out-summary " + sum +
                  " --out-replicates " + lng) == 1);
  }

  TEST_CASE("bandwidth echoes its selection and writes the full table") {
    std::string data = write_scenario_file("bw_data.csv", 90, true);
    std::string table = path_of("cv.csv"), log = path_of("cv_out.txt");

    // Singleton grid: the selection is forced to the only cell.
    REQUIRE(run_cli("bandwidth -i " + data + " --propensity known-m1 "
                    "--h1-grid 0.25 --h2-grid 0.5 -o " + table, log) == 0);
    std::string echoed;
    for (const auto& line : lines_of(read_file(log)))
      if (!line.empty() && line.front() == '{') echoed = line;
    REQUIRE(!echoed.empty());
    auto sel = nlohmann::json::parse(echoed);
    CHECK(sel["h1"].get<double>() == doctest::Approx(0.25));
    CHECK(sel["h2"].get<double>() == doctest::Approx(0.5));
    CHECK(lines_of(read_file(table)).size() == 2);

    // Full grid: one row per cell, argmin consistent with the echo.
    REQUIRE(run_cli("bandwidth -i " + data + " --propensity known-m1 "
                    "--h1-grid 0.15,0.2,0.3 --h2-grid 0.4,0.6 -o " + table,
                    log) == 0);
    auto rows = lines_of(read_file(table));
    REQUIRE(rows.size() == 1 + 3 * 2);
    CHECK(rows[0] == "h1,h2,cv,evaluated,skipped_terms,reliable");
    for (const auto& line : lines_of(read_file(log)))
      if (!line.empty() && line.front() == '{') echoed = line;
    sel = nlohmann::json::parse(echoed);
    double best = 1e300, selected_cv = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      auto cells = fields_of(rows[i]);
      REQUIRE(cells.size() == 6);
      if (cells[5] != "1") continue;
      double cv = std::stod(cells[2]);
      best = std::min(best, cv);
      if (std::abs(std::stod(cells[0]) - sel["h1"].get<double>()) < 1e-9 &&
          std::abs(std::stod(cells[1]) - sel["h2"].get<double>()) < 1e-9)
        selected_cv = cv;
    }
    REQUIRE(selected_cv >= 0.0);
    CHECK(selected_cv <= best * (1.0 + 1e-9));
  }

  TEST_CASE("rerunning a command reproduces its outputs byte for byte") {
    std::string sum_a = path_of("ra.csv"), lng_a = path_of("la.csv"),
                man_a = path_of("ma.json");
    std::string sum_b = path_of("rb.csv"), lng_b = path_of("lb.csv"),
                man_b = path_of("mb.json");
    std::string flags =
        "simulate --scenario 1 --k 0.75 --missing m1 --estimators s,si "
        "--replicates 2 -n 50 --mesh 12 --h1 0.15 --h2 0.6 --seed 11 ";
    REQUIRE(run_cli(flags + "--out-summary " + sum_a + " --out-replicates " +
                    lng_a + " --manifest " + man_a) == 0);
    REQUIRE(run_cli(flags + "--out-summary " + sum_b + " --out-replicates " +
                    lng_b + " --manifest " + man_b) == 0);
    CHECK(read_file(sum_a) == read_file(sum_b));
    CHECK(read_file(lng_a) == read_file(lng_b));

    auto ja = nlohmann::json::parse(read_file(man_a));
    auto jb = nlohmann::json::parse(read_file(man_b));
    CHECK(ja["command"] == "simulate");
    CHECK(ja["options"]["seed"] == 11);
    // Scenario 1 pins a = 0 in the recorded configuration.
    CHECK(ja["options"]["a"].get<double>() == 0.0);
    // the recorded output paths differ by construction; everything else
    // must agree once the timestamp is dropped
    for (auto* j : {&ja, &jb}) {
      j->erase("created_utc");
      j->erase("outputs");
    }
    CHECK(ja == jb);
  }

  TEST_CASE("environment thread override is accepted and sanitized") {
    std::string sum = path_of("t.csv"), lng = path_of("t2.csv");
    std::string base = "simulate --scenario 1 --missing m4 --estimators s "
                       "--replicates 1 -n 40 --mesh 10 --h1 0.15 --h2 0.6 "
                       "--out-summary " + sum + " --out-replicates " + lng;
    std::string cmd = std::string("MODALMS_THREADS=2 \"") + MODALMS_BIN +
                      "\" " + base + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    CHECK((WIFEXITED(rc) ? WEXITSTATUS(rc) : -1) == 0);
    std::string ref = read_file(sum);
    cmd = std::string("MODALMS_THREADS=junk \"") + MODALMS_BIN + "\" " + base +
          " > /dev/null 2>&1";
    rc = std::system(cmd.c_str());
    CHECK((WIFEXITED(rc) ? WEXITSTATUS(rc) : -1) == 0);
    CHECK(read_file(sum) == ref);
  }
}
