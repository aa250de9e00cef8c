#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "server.hpp"
#include "teegi/inverse/spherical_model.hpp"
#include "teegi/recording.hpp"
#include "teegi/session/render.hpp"
#include "teegi/synth/generator.hpp"

namespace fs = std::filesystem;
using namespace teegi;

namespace {

void setupLogging() {
  auto logger = spdlog::stderr_color_mt("teegi");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("TEEGI_LOG")) {
    const auto l = spdlog::level::from_str(level);
    // from_str maps unknown names to "off"; only accept that when asked for.
    if (l != spdlog::level::off || std::string_view(level) == "off") spdlog::set_level(l);
  }
}

synth::Scenario loadScenario(const fs::path& path) {
  try {
    return synth::parseScenario(readFile(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

/// Samples from --input (CSV) or --scenario (generated in memory).
SampleBlock loadSamples(const std::string& input, const std::string& scenario) {
  if (!input.empty()) return loadRecording(input, standardMontage()).samples;
  return synth::generate(loadScenario(scenario), standardMontage()).samples;
}

std::optional<double> parseAlpha(const std::string& text) {
  if (text == "auto") return std::nullopt;
  std::size_t used = 0;
  double a = 0;
  try {
    a = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw ConfigError("--alpha must be 'auto' or a number, got '" + text + "'");
  return a;
}

pipelines::PipelineKind parsePipeline(const std::string& name) {
  try {
    return pipelines::pipelineKindFromString(name);
  } catch (const ContractError&) {
    throw ConfigError("unknown pipeline '" + name + "' (raw, motor, vision, meditation)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teegi real-time EEG engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "teegi 0.1.0");

  // serve
  auto* serve = app.add_subcommand("serve", "stream a recording or scenario to websocket clients");
  std::string input, scenario, leadfield, alpha = "auto";
  unsigned short port = 8765;
  std::string host = "127.0.0.1";
  double frameRate = pipelines::kDefaultFrameRateHz, speed = 1.0;
  std::optional<double> calibrateUntil;
  std::size_t grid = topomap::kDefaultGridSize;
  auto* inOpt = serve->add_option("--input", input, "recording CSV")->check(CLI::ExistingFile);
  auto* scOpt = serve->add_option("--scenario", scenario, "scenario JSON, generated live")->check(CLI::ExistingFile);
  inOpt->excludes(scOpt);
  serve->add_option("--host", host, "address to bind")->capture_default_str();
  serve->add_option("--port", port, "TCP port, 0 for any free port")->capture_default_str();
  serve->add_option("--frame-rate", frameRate, "display frames per second")->capture_default_str()->check(CLI::PositiveNumber);
  serve->add_option("--speed", speed, "replay speed relative to real time, 0 = as fast as possible")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  serve->add_option("--leadfield", leadfield, "lead field file enabling the source view")->check(CLI::ExistingFile);
  serve->add_option("--alpha", alpha, "sLORETA regularization: auto or a number >= 0")->capture_default_str();
  serve->add_option("--calibrate-until", calibrateUntil, "record the baseline over [0, S) seconds automatically")
      ->check(CLI::PositiveNumber);
  serve->add_option("--grid", grid, "scalp grid side in pixels (>= 32, 0 disables)")->capture_default_str();

  // synth
  auto* synthCmd = app.add_subcommand("synth", "generate a synthetic recording with markers");
  std::string synthScenario, outDir;
  synthCmd->add_option("--scenario", synthScenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  synthCmd->add_option("--out", outDir, "output directory")->required();

  // render
  auto* render = app.add_subcommand("render", "headless snapshot of one frame");
  std::string renderInput, renderScenario, pipelineName, renderOut;
  session::RenderRequest req;
  auto* rIn = render->add_option("--input", renderInput, "recording CSV")->check(CLI::ExistingFile);
  auto* rSc = render->add_option("--scenario", renderScenario, "scenario JSON")->check(CLI::ExistingFile);
  rIn->excludes(rSc);
  render->add_option("--pipeline", pipelineName, "raw, motor, vision or meditation")->required();
  render->add_option("--at", req.at, "time in seconds")->required()->check(CLI::NonNegativeNumber);
  render->add_option("--out", renderOut, "output file: .json grid dump or .ppm image")->required();
  render->add_option("--calibrate-until", req.calibration.end, "baseline span [0, S) seconds")->capture_default_str()
      ->check(CLI::PositiveNumber);
  render->add_option("--gain", req.gain, "color gain in (0, 8]")->capture_default_str();
  render->add_option("--grid", req.gridSize, "grid side in pixels (>= 32)")->capture_default_str();

  // kernel
  auto* kernel = app.add_subcommand("kernel", "precompute the sLORETA operator for a lead field");
  std::string kernelLead, kernelAlpha = "auto", kernelOut;
  kernel->add_option("--leadfield", kernelLead, "lead field file")->required()->check(CLI::ExistingFile);
  kernel->add_option("--alpha", kernelAlpha, "auto or a number >= 0")->capture_default_str();
  kernel->add_option("--out", kernelOut, "kernel file")->required();

  // leadfield
  auto* lead = app.add_subcommand("leadfield", "write the spherical-head sample lead field");
  std::size_t voxels = 500;
  std::string leadOut;
  lead->add_option("--voxels", voxels, "source count")->capture_default_str()->check(CLI::PositiveNumber);
  lead->add_option("--out", leadOut, "lead field file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  setupLogging();
  try {
    const auto& montage = standardMontage();
    if (*serve) {
      if (input.empty() && scenario.empty()) throw ConfigError("serve needs --input or --scenario");
      session::SessionConfig cfg;
      cfg.frameRateHz = frameRate;
      cfg.gridSize = grid;
      if (calibrateUntil) cfg.autoCalibration = session::CalibrationSpan{0.0, *calibrateUntil};
      std::optional<inverse::SLORETAKernel> k;
      std::vector<Vec3> positions;
      if (!leadfield.empty()) {
        auto lf = inverse::loadLeadField(leadfield, montage.size());
        k = inverse::computeKernel(lf, parseAlpha(alpha));
        positions = lf.voxelPositions;
        spdlog::info("source view: {} voxels, alpha {}", lf.voxels(), k->alpha);
      }
      auto samples = loadSamples(input, scenario);
      session::Engine engine(montage, samples.fs, cfg, std::move(k), std::move(positions));
      session::BlockSource source(std::move(samples));
      const auto stats = server::serve(source, engine, {host, port, speed});
      spdlog::info("session ended: {} frames, {} traces", stats.frames, stats.traces);
    } else if (*synthCmd) {
      const auto s = loadScenario(synthScenario);
      const auto g = synth::generate(s, montage);
      const auto csv = fs::path(outDir) / "recording.csv";
      writeRecording(g.samples, g.truth, montage, csv);
      std::cout << "wrote " << csv.string() << " and " << markersPathFor(csv).string() << "\n";
    } else if (*render) {
      if (renderInput.empty() && renderScenario.empty()) throw ConfigError("render needs --input or --scenario");
      req.pipeline = parsePipeline(pipelineName);
      const auto samples = loadSamples(renderInput, renderScenario);
      const auto snap = session::renderSnapshot(samples, montage, req);
      const auto ext = fs::path(renderOut).extension();
      if (ext == ".ppm")
        writeFile(renderOut, session::snapshotPpm(snap));
      else if (ext == ".json")
        writeFile(renderOut, session::snapshotJson(snap));
      else
        throw ConfigError("--out must end in .json or .ppm");
    } else if (*kernel) {
      const auto lf = inverse::loadLeadField(kernelLead, montage.size());
      const auto k = inverse::computeKernel(lf, parseAlpha(kernelAlpha));
      writeFile(kernelOut, inverse::formatKernel(k));
      std::cout << "kernel " << k.electrodes() << "x" << k.voxels() << " alpha=" << k.alpha << "\n";
    } else if (*lead) {
      inverse::saveLeadField(inverse::sphericalLeadField(montage, voxels), leadOut);
    }
  } catch (const std::exception& e) {
    std::cerr << "teegi: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
