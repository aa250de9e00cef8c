#pragma once

#include <cstdio>
#include <string>

#include "teegi/session/engine.hpp"
#include "teegi/topomap/topomap.hpp"

namespace teegi::session {

struct RenderRequest {
  PipelineKind pipeline = PipelineKind::Raw;
  double at = 0.0;  ///< the first frame with t >= at is rendered
  CalibrationSpan calibration{0.0, 10.0};
  std::size_t gridSize = topomap::kDefaultGridSize;
  double gain = 1.0;
  double frameRateHz = pipelines::kDefaultFrameRateHz;
};

struct Snapshot {
  Frame frame;
  topomap::TopoGrid grid;
};

/// Replays `samples` from the start with the pipeline selected throughout
/// and the baseline recorded over the calibration span, and returns the
/// frame at the requested instant.
inline Snapshot renderSnapshot(const SampleBlock& samples, const Montage& montage, const RenderRequest& req) {
  if (!(req.at >= 0)) throw ConfigError("render: --at must be >= 0");
  if (req.at < req.calibration.end)
    throw ConfigError("render: --at " + std::to_string(req.at) + " s falls inside the calibration span, which ends at " +
                      std::to_string(req.calibration.end) + " s");
  SessionConfig cfg;
  cfg.frameRateHz = req.frameRateHz;
  cfg.gridSize = req.gridSize;
  cfg.initialPipeline = req.pipeline;
  cfg.gain = req.gain;
  cfg.traces = false;
  cfg.autoCalibration = req.calibration;
  Engine engine(montage, samples.fs, cfg);
  const double at = samples.t0 + req.at;
  for (std::size_t i = 0; i < samples.length();) {
    const auto n = std::max<std::size_t>(1, engine.samplesUntilNextFrame());
    const auto end = std::min(samples.length(), i + n);
    for (auto& f : engine.pushFrames(samples.slice(i, end))) {
      if (f.output.t < at - 1e-9) continue;
      if (f.calibration != CalibrationState::Ready)
        throw CalibrationIncomplete("render: calibration over [0, " + std::to_string(req.calibration.end) +
                                    ") s did not yield 3 s of baseline frames after the first second");
      return {std::move(f), *engine.grid()};
    }
    i = end;
  }
  throw ConfigError("render: --at " + std::to_string(req.at) + " s is past the end of the recording (" +
                    std::to_string(samples.duration()) + " s)");
}

/// Grid dump: the frame message plus the mask, as indented JSON.
inline std::string snapshotJson(const Snapshot& s) {
  auto j = frameToJson(s.frame, s.grid.montage());
  j["grid"]["mask"] = protocol::encodeMask(s.grid.mask());
  return j.dump(2) + "\n";
}

/// Binary PPM of the colorized field; pixels outside the head are white.
inline std::string snapshotPpm(const Snapshot& s) {
  const auto img = topomap::colorize(*s.frame.grid, s.frame.output.highlight, s.grid, {.gain = s.frame.gain});
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.width * img.height * 3);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      const auto c = img.rgb(x, y);
      const bool inside = img.alpha(x, y) != 0;
      out.push_back(static_cast<char>(inside ? c.r : 255));
      out.push_back(static_cast<char>(inside ? c.g : 255));
      out.push_back(static_cast<char>(inside ? c.b : 255));
    }
  return out;
}

}  // namespace teegi::session
