#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eraser/experiment.hpp"
#include "eraser/rng.hpp"
#include "oracles.hpp"

using namespace eraser;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("eraser_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int parse_error_line(const std::string& text) {
  try {
    parse_experiment(text);
  } catch (const ParseError& e) {
    return e.line;
  }
  return -1;
}

ExperimentFile random_file(Rng& rng) {
  ExperimentFile file;
  const double mode_pick = rng.uniform01();
  file.mode = mode_pick < 0.34 ? RunMode::analytic
                               : (mode_pick < 0.67 ? RunMode::montecarlo : RunMode::cw);
  file.grid_points = 16 + static_cast<int>(rng.uniform01() * 700.0);
  file.grid_min_deg = -400.0 + 40.0 * rng.uniform01();
  file.grid_max_deg = 320.0 + 60.0 * rng.uniform01();
  file.i0 = 0.25 + 4.0 * rng.uniform01();
  for (int d = 0; d < 4; ++d) {
    file.polarizer_deg[d] = -90.0 + 180.0 * rng.uniform01();
    file.qwp_deg[d] = rng.uniform01() < 0.5
                          ? std::nullopt
                          : std::optional<double>(-90.0 + 180.0 * rng.uniform01());
  }
  file.mean_photons = 0.001 + rng.uniform01();
  file.window_s = 1e-7;
  file.integration_s = (1.0 + std::floor(rng.uniform01() * 1000.0)) * 1e-7;
  file.noise_enabled = rng.uniform01() < 0.5;
  file.noise_sigma = rng.uniform01() * 0.01;
  file.cw_samples = 1 + static_cast<int>(rng.uniform01() * 100.0);
  file.cw_power = 1.0 + 500.0 * rng.uniform01();
  file.seed = rng.next_u64();
  const auto all = all_curve_masks();
  file.outputs.clear();
  for (DetectorMask mask : all)
    if (rng.uniform01() < 0.6) file.outputs.push_back(mask);
  if (file.outputs.empty()) file.outputs.push_back(all[0]);
  file.output_dir = rng.uniform01() < 0.5 ? "." : "results/run_a";
  return file;
}

}  // namespace

TEST_CASE("a minimal file gets the documented defaults") {
  const ExperimentFile file = parse_experiment("mode = analytic\n");
  CHECK(file.mode == RunMode::analytic);
  CHECK(file.grid_points == 360);
  CHECK(file.grid_min_deg == -360.0);
  CHECK(file.grid_max_deg == 360.0);
  for (double deg : file.polarizer_deg) CHECK(deg == 45.0);
  CHECK(file.qwp_deg[0] == 0.0);
  CHECK(file.qwp_deg[1] == 0.0);
  CHECK(!file.qwp_deg[2].has_value());
  CHECK(!file.qwp_deg[3].has_value());
  CHECK(file.mean_photons == 0.01);
  CHECK(file.integration_s == 0.1);
  CHECK(file.cw_samples == 30);
  CHECK(file.seed == 1);
  CHECK(file.outputs.size() == 11);

  // the defaults reproduce the quarter-wave-shifted analytic family
  const ResultBundle bundle = run(file);
  const EraserConfig reference = build_eraser_config(file);
  for (std::size_t i = 0; i < bundle.curves.size(); ++i) {
    CorrelationSpec spec;
    for (int d = 1; d <= 4; ++d)
      if (file.outputs[i] & detector_bit(d)) spec.detectors.push_back(d);
    const FringeCurve expect = correlate(reference, spec);
    REQUIRE(bundle.curves[i].values.size() == expect.values.size());
    for (std::size_t j = 0; j < expect.values.size(); ++j)
      CHECK(bundle.curves[i].values[j] == doctest::Approx(expect.values[j]).epsilon(1e-12));
  }
}

TEST_CASE("single keys override single fields") {
  const ExperimentFile file = parse_experiment(
      "mode = analytic\n"
      "qwp.3 = 45\n"
      "polarizer.2 = 30\n"
      "seed = 77\n");
  REQUIRE(file.qwp_deg[2].has_value());
  CHECK(*file.qwp_deg[2] == 45.0);
  CHECK(file.polarizer_deg[1] == 30.0);
  CHECK(file.seed == 77);

  const EraserConfig cfg = build_eraser_config(file);
  REQUIRE(cfg.branch(3).qwp_xi.has_value());
  CHECK(*cfg.branch(3).qwp_xi == doctest::Approx(kPi / 4.0).epsilon(1e-15));
}

TEST_CASE("parse errors carry the line and the offending key") {
  SUBCASE("negative grid size") {
    try {
      parse_experiment("mode = analytic\ngrid.points = -5\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
      CHECK(std::string(e.what()).find("grid.points") != std::string::npos);
    }
  }
  CHECK(parse_error_line("mode = nonsense\n") == 1);
  CHECK(parse_error_line("mode = analytic\nbogus.key = 3\n") == 2);
  CHECK(parse_error_line("mode = analytic\nmode = cw\n") == 2);
  CHECK(parse_error_line("grid.points = 10\n") > 0);  // missing mode
  CHECK(parse_error_line("mode = analytic\nqwp.7 = 45\n") == 2);
  CHECK(parse_error_line("mode = analytic\noutputs = 5\n") == 2);
  CHECK(parse_error_line("mode = analytic\noutputs = 123\n") == 2);
  CHECK(parse_error_line("mode = analytic\noutputs = 12,12\n") == 2);
  CHECK(parse_error_line("mode = analytic\nsource.mean_photons = -2\n") == 2);
  CHECK(parse_error_line("mode = analytic\nsource.dark_rate_hz = 3\n") == 2);
  CHECK(parse_error_line("mode = analytic\nsource.dead_time_s = 1e-9\n") == 2);
  CHECK(parse_error_line("mode = analytic\nnoise.enabled = yes\n") == 2);
  CHECK(parse_error_line("mode = analytic\ni0 = nan\n") == 2);
  CHECK(parse_error_line("mode = analytic\nno equals sign\n") == 2);
  CHECK(parse_error_line("mode = analytic\ngrid.min_deg = 10\ngrid.max_deg = 5\n") > 0);
  CHECK(parse_error_line("mode = montecarlo\nsource.window_s = 0.03\n") > 0);  // not whole windows
}

TEST_CASE("comments and blank lines are ignored") {
  const ExperimentFile file = parse_experiment(
      "# eraser run\n"
      "\n"
      "mode = cw\n"
      "  # indented comment\n"
      "cw.samples = 12\n");
  CHECK(file.mode == RunMode::cw);
  CHECK(file.cw_samples == 12);
}

TEST_CASE("parse and serialize round-trip across randomized configurations") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const ExperimentFile file = random_file(rng);
    const ExperimentFile back = parse_experiment(serialize_experiment(file));
    CHECK(back == file);
  }
}

TEST_CASE("the plain-eraser preset reproduces the reference curve family") {
  const ExperimentFile file = preset("fig2_top");
  const ResultBundle bundle = run(file);
  CHECK(bundle.curves.size() == 11);
  const auto reference = no_qwp_reference(build_eraser_config(file));
  for (const auto& curve : bundle.curves) {
    const auto& expect = reference.at(curve.label);
    for (std::size_t j = 0; j < curve.values.size(); ++j)
      CHECK(std::abs(curve.values[j] - expect.values[j]) <= 1e-12);
  }
}

TEST_CASE("every documented preset parses and is listed") {
  const auto names = preset_names();
  CHECK(names.size() == 8);
  for (const auto& name : names) {
    const ExperimentFile file = preset(name);
    const ExperimentFile back = parse_experiment(serialize_experiment(file));
    CHECK(back == file);
  }
  CHECK_THROWS_AS(preset("fig9"), std::invalid_argument);
}

TEST_CASE("the shifted-eraser counting preset classifies the fourfold fringe at the Heisenberg limit") {
  ExperimentFile file = preset("fig2_mid_mc");
  file.seed = 1;
  const ResultBundle bundle = run(file);
  bool found = false;
  for (const auto& record : bundle.fits) {
    if (record.label != "C1234") continue;
    found = true;
    REQUIRE(record.fitted);
    CHECK(std::abs(record.fit.period - kPi / 2.0) <= 0.01 * kPi / 2.0);
    REQUIRE(record.classified);
    CHECK(record.report.classification == Resolution::heisenberg);
  }
  CHECK(found);
}

TEST_CASE("csv output format is fixed-notation with 12 significant digits") {
  CHECK(format_fixed12(0.0) == "0.000000000000");
  CHECK(format_fixed12(1.0) == "1.00000000000");
  CHECK(format_fixed12(-6.2831853071795862) == "-6.28318530718");
  CHECK(format_fixed12(1250.25) == "1250.25000000");
  CHECK(format_fixed12(0.000125) == "0.000125000000");

  TempDir dir("csv_format");
  ResultBundle bundle;
  bundle.config_hash = "0";
  bundle.seed = 0;
  bundle.timestamp = "1970-01-01T00:00:00Z";
  FringeCurve curve;
  curve.label = "I1";
  curve.phi = {0.0, kPi};
  curve.values = {0.0, 2.0};
  bundle.curves.push_back(curve);
  FitRecord record;
  record.label = "I1";
  record.message = "not fitted";
  bundle.fits.push_back(record);
  emit_csv(bundle, dir.path.string());

  const std::string text = slurp(dir.path / "I1.csv");
  CHECK(text ==
        "phi_rad,value,stderr\n"
        "0.000000000000,0.000000000000,0\n"
        "3.14159265359,2.00000000000,0\n");
}

TEST_CASE("counting curves write square-root error bars") {
  ExperimentFile file = preset("fig2_mid_mc");
  file.grid_points = 16;
  file.integration_s = 1e-3;  // 10^4 windows
  file.outputs = {subset_mask({1, 2})};
  const ResultBundle bundle = run(file);
  TempDir dir("mc_stderr");
  emit_csv(bundle, dir.path.string());
  std::istringstream in(slurp(dir.path / "C12.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "phi_rad,value,stderr");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double value = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const double err = std::stod(line.substr(c2 + 1));
    CHECK(err == doctest::Approx(std::sqrt(value)).epsilon(1e-9));
    ++rows;
  }
  CHECK(rows == 16);
}

TEST_CASE("emitting the same bundle twice is byte-identical") {
  ExperimentFile file = preset("fig2_mid");
  file.grid_points = 64;
  const ResultBundle bundle = run(file);
  TempDir dir_a("emit_a");
  TempDir dir_b("emit_b");
  emit_csv(bundle, dir_a.path.string());
  emit_report(bundle, dir_a.path.string());
  emit_csv(bundle, dir_b.path.string());
  emit_report(bundle, dir_b.path.string());
  for (const auto& entry : fs::directory_iterator(dir_a.path)) {
    const auto name = entry.path().filename();
    CHECK(slurp(entry.path()) == slurp(dir_b.path / name));
  }
  CHECK(fs::exists(dir_a.path / "report.json"));
}

TEST_CASE("counting runs rewrite identical csv bytes for any worker count") {
  ExperimentFile file = preset("fig2_mid_mc");
  file.grid_points = 24;
  file.integration_s = 1e-3;
  file.seed = 9;

  TempDir serial_dir("golden_serial");
  TempDir parallel_dir("golden_parallel");
  setenv("ERASER_SIM_THREADS", "1", 1);
  emit_csv(run(file), serial_dir.path.string());
  setenv("ERASER_SIM_THREADS", "4", 1);
  emit_csv(run(file), parallel_dir.path.string());
  unsetenv("ERASER_SIM_THREADS");

  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(serial_dir.path)) {
    CHECK(slurp(entry.path()) == slurp(parallel_dir.path / entry.path().filename()));
    ++files;
  }
  CHECK(files == 11);
}

TEST_CASE("run rejects inconsistent requests early") {
  ExperimentFile file = preset("fig2_top");
  file.grid_points = 1;
  CHECK_THROWS_AS(run(file), std::invalid_argument);
}

#ifdef ERASER_SIM_BIN
TEST_CASE("command line interface round trip") {
  TempDir dir("cli");
  const std::string binary = ERASER_SIM_BIN;
  const std::string null_sink = " > /dev/null 2>&1";

  SUBCASE("list-presets succeeds") {
    const std::string out_file = (dir.path / "presets.txt").string();
    const int rc = std::system((binary + " list-presets > " + out_file).c_str());
    CHECK(rc == 0);
    CHECK(slurp(out_file).find("fig2_top") != std::string::npos);
  }
  SUBCASE("run executes a config file and honors --out") {
    const fs::path conf = dir.path / "small.conf";
    {
      std::ofstream out(conf);
      out << "mode = analytic\ngrid.points = 90\noutputs = 1,12\n";
    }
    const std::string out_dir = (dir.path / "results").string();
    const int rc =
        std::system((binary + " run " + conf.string() + " --out " + out_dir + null_sink).c_str());
    CHECK(rc == 0);
    CHECK(fs::exists(fs::path(out_dir) / "I1.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "C12.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "report.json"));

    // and the emitted fringe can be fitted back
    const std::string fit_out = (dir.path / "fit.json").string();
    const int fit_rc = std::system(
        (binary + " fit " + (fs::path(out_dir) / "C12.csv").string() + " --order 2 > " + fit_out)
            .c_str());
    CHECK(fit_rc == 0);
    CHECK(slurp(fit_out).find("period_rad") != std::string::npos);
  }
  SUBCASE("validation failures exit with code 1") {
    const fs::path conf = dir.path / "broken.conf";
    {
      std::ofstream out(conf);
      out << "mode = analytic\ngrid.points = -5\n";
    }
    int rc = std::system((binary + " run " + conf.string() + null_sink).c_str());
    CHECK(WEXITSTATUS(rc) == 1);
    rc = std::system((binary + " run " + (dir.path / "missing.conf").string() + null_sink).c_str());
    CHECK(WEXITSTATUS(rc) == 1);
    rc = std::system((binary + " preset fig9" + null_sink).c_str());
    CHECK(WEXITSTATUS(rc) == 1);
  }
}
#endif
