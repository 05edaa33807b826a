// pri_attack: synth / gestures / attack / report stages driven by a JSON config.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 experiment error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pri/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitExperiment = 4;

int exit_code(const pri::Error& e) {
  switch (e.kind()) {
    case pri::ErrorKind::Config: return kExitConfig;
    case pri::ErrorKind::Sampling:
    case pri::ErrorKind::Training:
    case pri::ErrorKind::Experiment: return kExitExperiment;
    default: return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physiological re-identification attack pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic datasets named in the config");
  synth->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();

  bool dump_images = false;
  auto* gestures = app.add_subcommand("gestures", "Detect and classify gesture windows; score against truth.json");
  gestures->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();
  gestures->add_flag("--dump-images", dump_images, "Write a recurrence-plot PNG per detected window");

  bool curve = false;
  std::string windows;
  auto* attack = app.add_subcommand("attack", "Run the re-identification experiment and write the report");
  attack->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();
  attack->add_flag("--curve", curve, "Also compute the learning curve over experiment.curve_grid");
  attack->add_option("--windows", windows, "Gesture windows: truth or detected (overrides experiment.windows)")
      ->check(CLI::IsMember({"truth", "detected"}));

  std::string input, out;
  auto* rep = app.add_subcommand("report", "Re-render table.csv and learning_curve.svg from a report.json");
  rep->add_option("-c,--config", config_path, "Pipeline config; defaults --input to <output_dir>/attack/<windows>/report.json");
  rep->add_option("-i,--input", input, "report.json to render");
  rep->add_option("-o,--out", out, "Output directory (default: next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) {
      const auto cfg = pri::config::load_config(config_path);
      for (const auto& dir : pri::pipeline::run_synth(cfg)) std::cout << "wrote " << dir.string() << "\n";
    } else if (*gestures) {
      const auto cfg = pri::config::load_config(config_path);
      pri::pipeline::run_gestures(cfg, dump_images);
      for (const auto& d : cfg.datasets) {
        const auto path = cfg.output_dir / "gestures" / d.name / "detection_report.json";
        if (!std::filesystem::exists(path)) continue;
        const auto r = pri::pipeline::read_json(path);
        std::cout << d.name << ": onset recall " << r["onsets"]["recall"].get<double>() << ", precision "
                  << r["onsets"]["precision"].get<double>() << "; localized label accuracy "
                  << r["localized"]["label_accuracy"].get<double>() << "\n";
      }
    } else if (*attack) {
      const auto cfg = pri::config::load_config(config_path);
      auto source = cfg.windows;
      if (windows == "truth") source = pri::config::WindowSource::Truth;
      if (windows == "detected") source = pri::config::WindowSource::Detected;
      const auto report = pri::pipeline::run_attack(cfg, curve, source);
      std::cout << pri::report::to_csv(report);
    } else if (*rep) {
      std::filesystem::path in = input;
      if (in.empty()) {
        if (config_path.empty()) throw pri::ConfigError("report needs --input or --config");
        const auto cfg = pri::config::load_config(config_path);
        in = cfg.output_dir / "attack" / (cfg.windows == pri::config::WindowSource::Truth ? "truth" : "detected") /
             "report.json";
      }
      const std::filesystem::path dir = out.empty() ? in.parent_path() : std::filesystem::path(out);
      for (const auto& f : pri::pipeline::run_report(in, dir)) std::cout << "wrote " << (dir / f).string() << "\n";
    }
  } catch (const pri::Error& e) {
    std::cerr << "pri_attack: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "pri_attack: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
