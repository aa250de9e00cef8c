#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "teegi/dsp/butterworth.hpp"
#include "teegi/errors.hpp"
#include "teegi/montage.hpp"

namespace teegi::pipelines {

enum class PipelineKind { Raw, Motor, Vision, Meditation };

inline constexpr std::array<PipelineKind, 4> kAllKinds{PipelineKind::Raw, PipelineKind::Motor,
                                                       PipelineKind::Vision,
                                                       PipelineKind::Meditation};

inline constexpr std::string_view toString(PipelineKind k) {
  switch (k) {
    case PipelineKind::Raw: return "raw";
    case PipelineKind::Motor: return "motor";
    case PipelineKind::Vision: return "vision";
    case PipelineKind::Meditation: return "meditation";
  }
  return "?";
}

inline PipelineKind pipelineKindFromString(std::string_view s) {
  for (auto k : kAllKinds)
    if (toString(k) == s) return k;
  throw ContractError("unknown pipeline '" + std::string(s) + "'");
}

struct Band {
  double lowHz, highHz;
};

/// Pass band of each pipeline.
inline constexpr Band bandOf(PipelineKind k) {
  switch (k) {
    case PipelineKind::Raw: return {3.0, 26.0};
    case PipelineKind::Motor: return {16.0, 24.0};
    case PipelineKind::Vision: return {8.0, 12.0};
    case PipelineKind::Meditation: return {7.0, 28.0};
  }
  return {3.0, 26.0};
}

/// Electrodes drawn in color for each pipeline; everything else is grayscale.
inline std::vector<std::size_t> highlightOf(PipelineKind k, const Montage& m) {
  switch (k) {
    case PipelineKind::Raw: {
      std::vector<std::size_t> all(m.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      return all;
    }
    case PipelineKind::Motor: return m.region(Region::MotorCenters);
    case PipelineKind::Vision: return m.region(Region::Vision);
    case PipelineKind::Meditation: return m.region(Region::MeditationPair);
  }
  return {};
}

inline constexpr double kVisionDelaySec = 0.5;
inline constexpr double kDefaultFrameRateHz = 10.0;
inline constexpr int kFilterOrder = 4;

struct PipelineConfig {
  PipelineKind kind = PipelineKind::Raw;
  dsp::BandpassSpec band;
  double displayDelaySec = 0.0;
  double frameRateHz = kDefaultFrameRateHz;
  double powerWindowSec = 1.0;
  double phaseWindowSec = 1.0;

  static PipelineConfig forKind(PipelineKind kind, double fs,
                                double frameRateHz = kDefaultFrameRateHz) {
    const Band b = bandOf(kind);
    PipelineConfig c;
    c.kind = kind;
    c.band = {b.lowHz, b.highHz, kFilterOrder, fs};
    c.displayDelaySec = kind == PipelineKind::Vision ? kVisionDelaySec : 0.0;
    c.frameRateHz = frameRateHz;
    return c;
  }

  void validate() const {
    band.validate();
    const Band b = bandOf(kind);
    if (band.lowHz != b.lowHz || band.highHz != b.highHz)
      throw ConfigError("pipeline " + std::string(toString(kind)) + " must use its fixed band");
    if ((kind == PipelineKind::Vision) != (displayDelaySec == kVisionDelaySec))
      throw ConfigError("display delay is 0.5 s for vision and 0 otherwise");
    if (!(frameRateHz > 0 && frameRateHz <= band.fs))
      throw ConfigError("frame rate must be in (0, fs]");
    if (!(powerWindowSec * band.fs >= 1)) throw ConfigError("power window shorter than one sample");
  }

  std::size_t delayFrames() const {
    return static_cast<std::size_t>(std::llround(displayDelaySec * frameRateHz));
  }
};

/// Wide-band filter used for grayscale (non-highlighted) electrodes.
inline dsp::BandpassSpec wideBand(double fs) {
  const Band b = bandOf(PipelineKind::Raw);
  return {b.lowHz, b.highHz, kFilterOrder, fs};
}

}  // namespace teegi::pipelines
