#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "teegi/dsp/butterworth.hpp"
#include "teegi/inverse/sloreta.hpp"
#include "teegi/montage.hpp"
#include "teegi/pipelines/baseline.hpp"
#include "teegi/pipelines/blink.hpp"
#include "teegi/pipelines/pipeline.hpp"
#include "teegi/session/protocol.hpp"
#include "teegi/topomap/topomap.hpp"

namespace teegi::session {

using nlohmann::json;
using pipelines::PipelineKind;

enum class CalibrationState { Idle, Calibrating, Ready };

inline constexpr const char* toString(CalibrationState s) {
  switch (s) {
    case CalibrationState::Idle: return "idle";
    case CalibrationState::Calibrating: return "calibrating";
    case CalibrationState::Ready: return "ready";
  }
  return "?";
}

struct CalibrationSpan {
  double start = 0;  ///< frames with start < t < end are baseline frames
  double end = 0;
};

struct SessionConfig {
  double frameRateHz = pipelines::kDefaultFrameRateHz;
  double traceRateHz = 20.0;
  std::size_t traceDecimation = 4;
  std::size_t gridSize = topomap::kDefaultGridSize;  ///< 0 disables grids in frames
  PipelineKind initialPipeline = PipelineKind::Raw;
  double gain = 1.0;
  bool traces = true;
  bool sources = false;
  std::optional<CalibrationSpan> autoCalibration{};

  void validate() const {
    if (!(frameRateHz > 0)) throw ConfigError("frame rate must be positive");
    if (!(traceRateHz > 0)) throw ConfigError("trace rate must be positive");
    if (traceDecimation == 0) throw ConfigError("trace decimation must be >= 1");
    if (gridSize != 0 && gridSize < topomap::kMinGridSize) throw ConfigError("grid size must be 0 or >= 32");
    if (!(gain > 0 && gain <= protocol::kMaxGain)) throw ConfigError("gain must be in (0, 8]");
    if (autoCalibration && !(autoCalibration->end > autoCalibration->start))
      throw ConfigError("calibration span must have end > start");
  }
};

/// One display frame as published, before serialization.
struct Frame {
  std::size_t seq = 0;
  pipelines::PipelineOutput output;
  CalibrationState calibration = CalibrationState::Idle;
  double gain = 1.0;
  std::optional<topomap::ScalpField> grid;
  std::optional<std::vector<double>> sources;
};

inline json frameToJson(const Frame& f, const Montage& montage) {
  auto j = protocol::message("frame");
  j["seq"] = f.seq;
  j["t"] = f.output.t;
  j["pipeline"] = pipelines::toString(f.output.kind);
  j["electrodeValues"] = f.output.values;
  j["highlight"] = protocol::labelsOf(montage, f.output.highlight);
  j["blink"] = f.output.blink;
  j["eyes"] = topomap::toString(topomap::eyeState(f.output.blink));
  j["calibration"] = toString(f.calibration);
  j["calibrating"] = f.calibration == CalibrationState::Calibrating;
  j["ready"] = f.output.ready;
  j["gain"] = f.gain;
  if (f.grid)
    j["grid"] = {{"width", f.grid->width}, {"height", f.grid->height}, {"data", protocol::encodeFloat32(f.grid->values)}};
  if (f.sources) j["sources"] = *f.sources;
  return j;
}

/// Processing core of a session. Runs all four pipelines on every sample so
/// a pipeline switch takes effect on the next frame with warm state; the
/// active pipeline only decides what is published. Single-writer: apply()
/// and push() must be called from one task.
class Engine {
 public:
  Engine(const Montage& montage, double fs, SessionConfig config = {},
         std::optional<inverse::SLORETAKernel> kernel = std::nullopt, std::vector<Vec3> voxelPositions = {})
      : montage_(&montage),
        fs_(fs),
        config_(config),
        blink_(montage, fs),
        kernel_(std::move(kernel)),
        voxelPositions_(std::move(voxelPositions)),
        active_(config.initialPipeline),
        gain_(config.gain),
        traces_(config.traces),
        sources_(config.sources) {
    config_.validate();
    for (auto k : pipelines::kAllKinds)
      pipelines_.emplace_back(pipelines::PipelineConfig::forKind(k, fs, config_.frameRateHz), montage);
    if (config_.gridSize) grid_.emplace(montage, config_.gridSize, config_.gridSize);
    if (kernel_) {
      if (kernel_->electrodes() != montage.size())
        throw ConfigError("kernel was computed for " + std::to_string(kernel_->electrodes()) + " electrodes");
      if (!voxelPositions_.empty() && voxelPositions_.size() != kernel_->voxels())
        throw ConfigError("voxel positions do not match the kernel");
      sourceFilter_.emplace(pipelines::wideBand(fs), montage.size());
      sourceSum_.assign(kernel_->voxels(), 0.0);
    } else if (sources_) {
      throw ConfigError("sources requested without a lead field");
    }
    scratch_.resize(montage.size());
  }

  const Montage& montage() const noexcept { return *montage_; }
  double fs() const noexcept { return fs_; }
  const SessionConfig& config() const noexcept { return config_; }
  PipelineKind active() const noexcept { return active_; }
  double gain() const noexcept { return gain_; }
  CalibrationState calibration() const noexcept { return state_; }
  bool hasSources() const noexcept { return kernel_.has_value(); }
  std::size_t framesEmitted() const noexcept { return seq_; }
  std::size_t samplesConsumed() const noexcept { return consumed_; }
  const std::optional<topomap::TopoGrid>& grid() const noexcept { return grid_; }

  std::size_t samplesUntilNextFrame() const { return pipelines_[0].samplesUntilNextFrame(); }

  /// Immutable part of the hello message.
  json helloStatic() const {
    auto j = protocol::message("hello");
    j["fs"] = fs_;
    j["frameRateHz"] = config_.frameRateHz;
    j["traceRateHz"] = config_.traceRateHz;
    j["traceDecimation"] = config_.traceDecimation;
    json electrodes = json::array();
    for (const auto& e : montage_->electrodes()) electrodes.push_back({{"label", e.name}, {"u", e.uv[0]}, {"v", e.uv[1]}});
    j["montage"] = electrodes;
    json kinds = json::array();
    json highlight = json::object(), bands = json::object();
    for (auto k : pipelines::kAllKinds) {
      const auto name = std::string(pipelines::toString(k));
      kinds.push_back(name);
      highlight[name] = protocol::labelsOf(*montage_, pipelines::highlightOf(k, *montage_));
      bands[name] = {pipelines::bandOf(k).lowHz, pipelines::bandOf(k).highHz};
    }
    j["pipelines"] = kinds;
    j["highlight"] = highlight;
    j["bands"] = bands;
    j["gain"] = {{"min", 0.0}, {"max", protocol::kMaxGain}, {"minExclusive", true}};
    if (grid_)
      j["grid"] = {{"width", grid_->width()}, {"height", grid_->height()}, {"mask", protocol::encodeMask(grid_->mask())}};
    else
      j["grid"] = nullptr;
    json lead = {{"available", kernel_.has_value()}};
    if (kernel_) {
      lead["voxels"] = kernel_->voxels();
      lead["alpha"] = kernel_->alpha;
      json pos = json::array();
      for (const auto& p : voxelPositions_) pos.push_back({p.x, p.y, p.z});
      lead["positions"] = pos;
    }
    j["leadField"] = lead;
    return j;
  }

  json stateJson() const {
    return {{"pipeline", pipelines::toString(active_)},
            {"gain", gain_},
            {"calibration", toString(state_)},
            {"traces", traces_},
            {"sources", sources_}};
  }

  json hello() const {
    auto j = helloStatic();
    j["state"] = stateJson();
    return j;
  }

  /// Applies a control message; effective from the next frame. Returns any
  /// messages to publish (errors).
  std::vector<json> apply(const protocol::Control& c) {
    std::vector<json> out;
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, protocol::SelectPipeline>) {
            active_ = v.kind;
          } else if constexpr (std::is_same_v<T, protocol::SetGain>) {
            gain_ = v.gain;
          } else if constexpr (std::is_same_v<T, protocol::StartCalibration>) {
            startCalibration();
          } else if constexpr (std::is_same_v<T, protocol::EndCalibration>) {
            if (auto err = endCalibration()) out.push_back(protocol::errorMessage(*err));
          } else if constexpr (std::is_same_v<T, protocol::ToggleSources>) {
            if (v.on && !kernel_)
              out.push_back(protocol::errorMessage("toggle_sources: no lead field loaded"));
            else
              sources_ = v.on;
          } else {
            traces_ = v.on;
          }
        },
        c);
    return out;
  }

  /// Consumes samples and returns the frame and trace messages they complete.
  std::vector<json> push(const SampleBlock& block) {
    std::vector<json> out;
    for (const auto& f : pushFrames(block, &out)) out.push_back(toJson(f));
    return out;
  }

  /// Like push() but returns frames unserialized; trace and error messages
  /// go to `messages` when given. Frame messages keep their order relative
  /// to traces only through push().
  std::vector<Frame> pushFrames(const SampleBlock& block, std::vector<json>* messages = nullptr) {
    block.validate();
    if (block.channelCount() != montage_->size())
      throw ContractError("session: block has " + std::to_string(block.channelCount()) + " channels");
    if (block.fs != fs_) throw ContractError("session: sampling rate changed mid-stream");
    if (!started_) {
      origin_ = block.t0;
      traceStart_ = block.t0;
      started_ = true;
    }
    std::vector<Frame> frames;
    std::size_t i = 0;
    while (i < block.length()) {
      const std::size_t n = std::min({block.length() - i, std::max<std::size_t>(1, samplesUntilNextFrame()),
                                      std::max<std::size_t>(1, samplesUntilNextTrace())});
      const auto chunk = block.slice(i, i + n);
      i += n;
      processChunk(chunk, frames, messages);
    }
    return frames;
  }

  json toJson(const Frame& f) const { return frameToJson(f, *montage_); }

  json endMessage(std::string_view reason) const {
    auto j = protocol::message("end");
    j["reason"] = reason;
    j["frames"] = seq_;
    j["t"] = origin_ + static_cast<double>(consumed_) / fs_;
    return j;
  }

 private:
  std::size_t samplesUntilNextTrace() const {
    const double needed = std::ceil(static_cast<double>(nextTrace_) * fs_ / config_.traceRateHz);
    const auto n = static_cast<std::size_t>(needed);
    return n > consumed_ ? n - consumed_ : 0;
  }

  void startCalibration() {
    calibrators_.clear();
    for (auto k : pipelines::kAllKinds) calibrators_.emplace_back(k, config_.frameRateHz);
    sourceCal_.assign(kernel_ ? kernel_->voxels() : 0, Welford{});
    sourceCalCount_ = 0;
    previous_ = state_;
    state_ = CalibrationState::Calibrating;
  }

  /// Returns an error description if the span was too short; the previous
  /// baseline (if any) then stays in effect.
  std::optional<std::string> endCalibration() {
    if (state_ != CalibrationState::Calibrating) return "end_calibration: calibration was not started";
    try {
      std::vector<pipelines::Baseline> b;
      for (const auto& c : calibrators_) b.push_back(c.finish());
      baselines_ = std::move(b);
      if (kernel_) {
        sourceBaseline_.clear();
        for (const auto& w : sourceCal_) sourceBaseline_.push_back(w.stat(sourceCalCount_));
      }
      state_ = CalibrationState::Ready;
      return std::nullopt;
    } catch (const CalibrationIncomplete& e) {
      state_ = previous_;
      return std::string("end_calibration: ") + e.what();
    }
  }

  void processChunk(const SampleBlock& chunk, std::vector<Frame>& frames, std::vector<json>* messages) {
    if (blink_.process(chunk).blink) blinkSinceFrame_ = true;

    const auto activeIndex = static_cast<std::size_t>(active_);
    SampleBlock filtered;
    std::array<std::vector<pipelines::Quantities>, 4> qs;
    for (std::size_t k = 0; k < pipelines_.size(); ++k)
      qs[k] = pipelines_[k].process(chunk, traces_ && k == activeIndex ? &filtered : nullptr);

    if (kernel_) {
      for (std::size_t s = 0; s < chunk.length(); ++s) {
        for (std::size_t c = 0; c < scratch_.size(); ++c)
          scratch_[c] = sourceFilter_->processSample(c, chunk.channels[c][s]);
        const auto p = inverse::standardizedPower(*kernel_, scratch_);
        for (std::size_t v = 0; v < p.size(); ++v) sourceSum_[v] += p[v];
        ++sourceCount_;
      }
    }

    if (traces_) appendTrace(chunk, filtered);
    consumed_ += chunk.length();
    if (samplesUntilNextTrace() == 0) {
      if (traces_ && messages && !trace_.empty()) messages->push_back(traceMessage());
      trace_.clear();
      traceStart_ = origin_ + static_cast<double>(consumed_) / fs_;
      ++nextTrace_;
    }

    // All pipelines share the frame clock, so they emit together.
    for (std::size_t f = 0; f < qs[0].size(); ++f) {
      std::array<const pipelines::Quantities*, 4> now{};
      for (std::size_t k = 0; k < 4; ++k) now[k] = &qs[k].at(f);
      frames.push_back(makeFrame(now));
    }
    if (messages)
      for (auto& e : pendingErrors_) messages->push_back(std::move(e));
    pendingErrors_.clear();
  }

  void appendTrace(const SampleBlock& chunk, const SampleBlock& filtered) {
    const SampleBlock& src = active_ == PipelineKind::Raw || filtered.channels.empty() ? chunk : filtered;
    if (trace_.empty()) {
      trace_.assign(montage_->size(), {});
      tracePipeline_ = active_;
    }
    for (std::size_t s = 0; s < src.length(); ++s) {
      const std::size_t global = consumed_ + s;
      if (global % config_.traceDecimation != 0) continue;
      if (trace_[0].empty()) traceFirst_ = origin_ + static_cast<double>(global) / fs_;
      for (std::size_t c = 0; c < trace_.size(); ++c) trace_[c].push_back(src.channels[c][s]);
    }
  }

  json traceMessage() const {
    auto j = protocol::message("trace");
    j["t"] = traceFirst_;
    j["dt"] = static_cast<double>(config_.traceDecimation) / fs_;
    j["pipeline"] = pipelines::toString(tracePipeline_);
    j["filtered"] = tracePipeline_ != PipelineKind::Raw;
    j["channels"] = trace_;
    return j;
  }

  Frame makeFrame(const std::array<const pipelines::Quantities*, 4>& q) {
    const double t = q[0]->t;
    if (config_.autoCalibration) {
      const auto& span = *config_.autoCalibration;
      if (!autoStarted_ && t > span.start && state_ != CalibrationState::Calibrating) {
        autoStarted_ = true;
        startCalibration();
      }
      if (autoStarted_ && !autoEnded_ && t >= span.end && state_ == CalibrationState::Calibrating) {
        autoEnded_ = true;
        if (auto err = endCalibration()) pendingErrors_.push_back(protocol::errorMessage(*err));
      }
    }

    std::vector<double> sourceMean;
    if (kernel_) {
      sourceMean.resize(sourceSum_.size());
      for (std::size_t v = 0; v < sourceSum_.size(); ++v)
        sourceMean[v] = sourceCount_ ? sourceSum_[v] / static_cast<double>(sourceCount_) : 0.0;
      std::fill(sourceSum_.begin(), sourceSum_.end(), 0.0);
      sourceCount_ = 0;
    }

    if (state_ == CalibrationState::Calibrating) {
      // Frames describing data from before the power windows filled would
      // bias the baseline low, so they do not count.
      for (std::size_t k = 0; k < 4; ++k)
        if (q[k]->sourceT - origin_ >= pipelines_[k].config().powerWindowSec - 1e-9) calibrators_[k].add(*q[k]);
      if (kernel_) {
        ++sourceCalCount_;
        for (std::size_t v = 0; v < sourceMean.size(); ++v) sourceCal_[v].add(sourceMean[v], sourceCalCount_);
      }
    }

    const auto k = static_cast<std::size_t>(active_);
    Frame f;
    f.seq = ++seq_;
    f.calibration = state_;
    f.gain = gain_;
    const bool showing = state_ == CalibrationState::Ready && !baselines_.empty();
    if (showing) {
      f.output = pipelines_[k].display(*q[k], baselines_[k]);
    } else {
      f.output.t = t;
      f.output.kind = active_;
      f.output.values.assign(montage_->size(), 0.0);
      f.output.highlight = pipelines_[k].highlight();
      f.output.ready = false;
    }
    f.output.blink = blinkSinceFrame_ || blink_.active();
    blinkSinceFrame_ = false;
    if (grid_) f.grid = grid_->interpolate(f.output.values);
    if (kernel_ && sources_) {
      std::vector<double> shown(sourceMean.size(), 0.0);
      if (showing && sourceBaseline_.size() == shown.size())
        for (std::size_t v = 0; v < shown.size(); ++v)
          shown[v] = pipelines::displayValue(sourceMean[v], sourceBaseline_[v]);
      f.sources = std::move(shown);
    }
    return f;
  }

  struct Welford {
    double mean = 0, m2 = 0;
    void add(double x, std::size_t n) {
      const double d = x - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (x - mean);
    }
    pipelines::Stat stat(std::size_t n) const {
      const double sd = n > 1 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1))) : 0.0;
      return {mean, std::max(sd, 1e-9 * std::max(mean, 1.0))};
    }
  };

  const Montage* montage_;
  double fs_;
  SessionConfig config_;
  std::vector<pipelines::Pipeline> pipelines_;
  pipelines::BlinkDetector blink_;
  std::optional<topomap::TopoGrid> grid_;
  std::optional<inverse::SLORETAKernel> kernel_;
  std::vector<Vec3> voxelPositions_;
  std::optional<dsp::StreamingFilter> sourceFilter_;
  std::vector<double> scratch_, sourceSum_;
  std::size_t sourceCount_ = 0;

  PipelineKind active_;
  double gain_;
  bool traces_, sources_;
  CalibrationState state_ = CalibrationState::Idle, previous_ = CalibrationState::Idle;
  std::vector<pipelines::Calibrator> calibrators_;
  std::vector<pipelines::Baseline> baselines_;
  std::vector<Welford> sourceCal_;
  std::size_t sourceCalCount_ = 0;
  inverse::SourceBaseline sourceBaseline_;
  bool autoStarted_ = false, autoEnded_ = false;
  std::vector<json> pendingErrors_;

  bool started_ = false, blinkSinceFrame_ = false;
  double origin_ = 0, traceStart_ = 0, traceFirst_ = 0;
  std::size_t consumed_ = 0, seq_ = 0, nextTrace_ = 1;
  std::vector<std::vector<double>> trace_;
  PipelineKind tracePipeline_ = PipelineKind::Raw;
};

}  // namespace teegi::session
