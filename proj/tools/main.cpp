#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "eraser/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

eraser::FringeCurve read_curve_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  eraser::FringeCurve curve;
  curve.label = std::filesystem::path(path).stem().string();
  std::string line;
  if (!std::getline(in, line) || line.rfind("phi_rad,value,stderr", 0) != 0)
    throw std::invalid_argument("'" + path + "' is not a fringe CSV (bad header)");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string phi, value, err;
    if (!std::getline(row, phi, ',') || !std::getline(row, value, ',') || !std::getline(row, err))
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected 3 columns");
    curve.phi.push_back(std::stod(phi));
    curve.values.push_back(std::stod(value));
    curve.error_bars.push_back(std::stod(err));
  }
  return curve;
}

void print_summary(const eraser::ResultBundle& bundle, const std::string& dir) {
  std::cout << "wrote " << bundle.curves.size() << " curve(s) to " << dir
            << " (config " << bundle.config_hash << ", seed " << bundle.seed << ")\n";
  for (const auto& record : bundle.fits) {
    std::cout << "  " << record.label << ": ";
    if (record.fitted)
      std::cout << "period=" << record.fit.period << " rad, visibility=" << record.fit.visibility;
    if (record.classified)
      std::cout << ", fwhm=" << record.report.fwhm
                << ", class=" << eraser::to_string(record.report.classification);
    if (!record.message.empty()) std::cout << " [" << record.message << "]";
    std::cout << "\n";
  }
}

void execute(const eraser::ExperimentFile& file, const std::string& dir) {
  const eraser::ResultBundle bundle = eraser::run(file);
  eraser::emit_csv(bundle, dir);
  eraser::emit_report(bundle, dir);
  print_summary(bundle, dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-eraser interferometry simulator"};
  app.require_subcommand(1);

  std::string run_file;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment file");
  run_cmd->add_option("file", run_file, "experiment description file")->required();
  run_cmd->add_option("--out", run_out, "output directory (overrides output.dir)");

  std::string preset_name;
  std::string preset_out;
  std::optional<std::uint64_t> preset_seed;
  auto* preset_cmd = app.add_subcommand("preset", "Run a named preset");
  preset_cmd->add_option("name", preset_name, "preset name")->required();
  preset_cmd->add_option("--seed", preset_seed, "override the preset seed");
  preset_cmd->add_option("--out", preset_out, "output directory");

  auto* list_cmd = app.add_subcommand("list-presets", "List available presets");

  std::string fit_file;
  std::optional<int> fit_harmonic;
  int fit_order = 1;
  double fit_reference = eraser::kPi;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a fringe CSV");
  fit_cmd->add_option("file", fit_file, "curve CSV to fit")->required();
  fit_cmd->add_option("--harmonic", fit_harmonic, "fringe periods per 2 pi of phase");
  fit_cmd->add_option("--order", fit_order, "correlation order for classification");
  fit_cmd->add_option("--reference-fwhm", fit_reference, "first-order reference width, radians");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run_cmd) {
      const eraser::ExperimentFile file = eraser::parse_experiment(read_file(run_file));
      execute(file, run_out.empty() ? file.output_dir : run_out);
    } else if (*preset_cmd) {
      eraser::ExperimentFile file = eraser::preset(preset_name);
      if (preset_seed) file.seed = *preset_seed;
      if (!preset_out.empty()) file.output_dir = preset_out;
      execute(file, file.output_dir);
    } else if (*list_cmd) {
      for (const auto& name : eraser::preset_names()) std::cout << name << "\n";
    } else if (*fit_cmd) {
      const eraser::FringeCurve curve = read_curve_csv(fit_file);
      const eraser::FringeFit fit = eraser::fit_sinusoid(curve, fit_harmonic);
      nlohmann::ordered_json row;
      row["label"] = curve.label;
      row["period_rad"] = fit.period;
      row["phase_offset_rad"] = fit.phase_offset;
      row["amplitude"] = fit.amplitude;
      row["offset"] = fit.offset;
      row["visibility"] = fit.visibility;
      row["rms_residual"] = fit.rms_residual;
      try {
        const double width = eraser::fwhm(curve);
        const auto report = eraser::classify_resolution(fit, width, fit_reference, fit_order);
        row["fwhm_rad"] = width;
        row["scale_vs_reference"] = report.scale_vs_reference;
        row["classification"] = eraser::to_string(report.classification);
      } catch (const eraser::FitError& e) {
        row["classification_error"] = e.what();
      }
      std::cout << row.dump(2) << "\n";
    }
  } catch (const eraser::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const eraser::FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
