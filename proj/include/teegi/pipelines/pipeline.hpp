#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <vector>

#include "teegi/dsp/butterworth.hpp"
#include "teegi/dsp/envelope.hpp"
#include "teegi/dsp/phase.hpp"
#include "teegi/montage.hpp"
#include "teegi/pipelines/baseline.hpp"
#include "teegi/pipelines/config.hpp"
#include "teegi/sample_block.hpp"

namespace teegi::pipelines {

/// One display frame. Values are in [-1, 1] (baseline-relative), except the
/// highlighted Meditation electrodes which carry the raw PLV in [0, 1].
struct PipelineOutput {
  double t = 0;
  PipelineKind kind = PipelineKind::Raw;
  std::vector<double> values;
  std::vector<std::size_t> highlight;
  bool blink = false;
  bool ready = false;
};

/// Streaming realization of one of the four display pipelines.
///
/// Every block is band-passed per channel, reduced to power envelopes (or
/// phase windows for Meditation), and sampled on the frame clock: frame k is
/// produced once k * fs / frameRate samples have been consumed. Vision frames
/// are held back by the display delay. State is single-writer.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, const Montage& montage)
      : config_(config),
        montage_(&montage),
        fs_(config.band.fs),
        highlight_(highlightOf(config.kind, montage)),
        wideFilter_(wideBand(fs_), montage.size()) {
    config_.validate();
    const auto window = dsp::envelopeWindowSamples(config_.powerWindowSec, fs_);
    wideEnv_.assign(montage.size(), dsp::PowerEnvelope(window));
    switch (config_.kind) {
      case PipelineKind::Raw: break;
      case PipelineKind::Motor:
        for (auto c : montage.region(Region::MotorCenters)) {
          motorCenters_.push_back(c);
          focusEnv_.emplace_back(window);
        }
        break;
      case PipelineKind::Vision:
        for (std::size_t i = 0; i < montage.region(Region::Vision).size(); ++i)
          focusEnv_.emplace_back(window);
        break;
      case PipelineKind::Meditation: {
        const auto len = dsp::phaseWindowLength(config_.phaseWindowSec, fs_);
        phase_.assign(2, dsp::PhaseWindow(len));
        break;
      }
    }
    if (config_.kind != PipelineKind::Raw) bandFilter_.emplace(config_.band, montage.size());
    scratchBand_.resize(montage.size());
  }

  const PipelineConfig& config() const noexcept { return config_; }
  PipelineKind kind() const noexcept { return config_.kind; }
  const std::vector<std::size_t>& highlight() const noexcept { return highlight_; }
  std::size_t samplesConsumed() const noexcept { return consumed_; }

  /// Samples still to be consumed before the next frame is produced.
  std::size_t samplesUntilNextFrame() const {
    const double needed = std::ceil(static_cast<double>(nextFrame_) * fs_ / config_.frameRateHz);
    const auto n = static_cast<std::size_t>(needed);
    return n > consumed_ ? n - consumed_ : 0;
  }

  /// Consumes a block and returns the frames whose time falls inside it. When
  /// `filtered` is given it receives the block in this pipeline's band (Raw:
  /// the unfiltered input), for trace display.
  std::vector<Quantities> process(const SampleBlock& block, SampleBlock* filtered = nullptr) {
    block.validate();
    if (block.channelCount() != montage_->size())
      throw ContractError("pipeline: block has " + std::to_string(block.channelCount()) +
                          " channels, montage has " + std::to_string(montage_->size()));
    if (block.fs != fs_) throw ContractError("pipeline: sampling rate changed mid-stream");
    if (!started_) {
      origin_ = block.t0;
      started_ = true;
    }
    if (filtered) *filtered = block;

    std::vector<Quantities> frames;
    const std::size_t m = montage_->size();
    for (std::size_t i = 0; i < block.length(); ++i) {
      for (std::size_t c = 0; c < m; ++c)
        wideEnv_[c].push(wideFilter_.processSample(c, block.channels[c][i]));
      if (bandFilter_) {
        for (std::size_t c = 0; c < m; ++c)
          scratchBand_[c] = bandFilter_->processSample(c, block.channels[c][i]);
        if (filtered)
          for (std::size_t c = 0; c < m; ++c) filtered->channels[c][i] = scratchBand_[c];
        feedFocus();
      }
      ++consumed_;
      while (static_cast<double>(consumed_) * config_.frameRateHz >=
             static_cast<double>(nextFrame_) * fs_) {
        emit(frames);
        ++nextFrame_;
      }
    }
    return frames;
  }

  /// Baseline-normalized display frame for a set of quantities.
  PipelineOutput display(const Quantities& q, const Baseline& baseline) const {
    if (!baseline.valid()) throw NotCalibrated();
    if (baseline.kind != config_.kind || baseline.wide.size() != montage_->size())
      throw ContractError("baseline was recorded for a different pipeline");
    PipelineOutput out;
    out.t = q.t;
    out.kind = config_.kind;
    out.highlight = highlight_;
    out.ready = q.ready;
    out.values.assign(montage_->size(), 0.0);
    if (!q.ready) return out;
    for (std::size_t c = 0; c < out.values.size(); ++c)
      out.values[c] = displayValue(q.wide[c], baseline.wide[c]);
    switch (config_.kind) {
      case PipelineKind::Raw: break;
      case PipelineKind::Motor:
      case PipelineKind::Vision:
        for (std::size_t k = 0; k < highlight_.size(); ++k)
          out.values[highlight_[k]] = displayValue(q.focus[k], baseline.focus[k]);
        break;
      case PipelineKind::Meditation:
        for (auto c : highlight_) out.values[c] = std::clamp(q.focus[0], 0.0, 1.0);
        break;
    }
    return out;
  }

  /// process() followed by display() for every produced frame.
  std::vector<PipelineOutput> step(const SampleBlock& block, const Baseline& baseline) {
    if (!baseline.valid()) throw NotCalibrated();
    std::vector<PipelineOutput> out;
    for (const auto& q : process(block)) out.push_back(display(q, baseline));
    return out;
  }

 private:
  void feedFocus() {
    switch (config_.kind) {
      case PipelineKind::Raw: break;
      case PipelineKind::Motor:
        for (std::size_t k = 0; k < motorCenters_.size(); ++k) {
          const auto center = motorCenters_[k];
          const auto& nbrs = montage_->laplacianNeighbors(center);
          double mean = 0.0;
          for (auto n : nbrs) mean += scratchBand_[n];
          focusEnv_[k].push(scratchBand_[center] - mean / static_cast<double>(nbrs.size()));
        }
        break;
      case PipelineKind::Vision: {
        const auto& region = montage_->region(Region::Vision);
        for (std::size_t k = 0; k < region.size(); ++k) focusEnv_[k].push(scratchBand_[region[k]]);
        break;
      }
      case PipelineKind::Meditation: {
        const auto& pair = montage_->region(Region::MeditationPair);
        phase_[0].push(scratchBand_[pair[0]]);
        phase_[1].push(scratchBand_[pair[1]]);
        break;
      }
    }
  }

  void emit(std::vector<Quantities>& frames) {
    Quantities q;
    q.t = origin_ + static_cast<double>(consumed_) / fs_;
    q.sourceT = q.t;
    q.ready = true;
    q.wide.reserve(wideEnv_.size());
    for (const auto& e : wideEnv_) q.wide.push_back(e.value());
    for (const auto& e : focusEnv_) q.focus.push_back(e.value());
    if (config_.kind == PipelineKind::Meditation) {
      const auto a = phase_[0].centralPhases();
      const auto b = phase_[1].centralPhases();
      if (a && b) {
        q.focus.push_back(dsp::plv(*a, *b));
      } else {
        q.ready = false;
        q.focus.push_back(0.0);
      }
    }

    const std::size_t delay = config_.delayFrames();
    if (delay == 0) {
      frames.push_back(std::move(q));
      return;
    }
    const double now = q.t;
    delayLine_.push_back(std::move(q));
    if (delayLine_.size() > delay) {
      Quantities held = std::move(delayLine_.front());
      delayLine_.pop_front();
      held.t = now;
      frames.push_back(std::move(held));
    } else {
      Quantities neutral;
      neutral.t = now;
      neutral.sourceT = now - config_.displayDelaySec;
      neutral.ready = false;
      neutral.wide.assign(montage_->size(), 0.0);
      neutral.focus.assign(focusEnv_.size(), 0.0);
      frames.push_back(std::move(neutral));
    }
  }

  PipelineConfig config_;
  const Montage* montage_;
  double fs_;
  std::vector<std::size_t> highlight_;
  dsp::StreamingFilter wideFilter_;
  std::optional<dsp::StreamingFilter> bandFilter_;
  std::vector<dsp::PowerEnvelope> wideEnv_;
  std::vector<dsp::PowerEnvelope> focusEnv_;
  std::vector<std::size_t> motorCenters_;
  std::vector<dsp::PhaseWindow> phase_;
  std::vector<double> scratchBand_;
  std::deque<Quantities> delayLine_;
  bool started_ = false;
  double origin_ = 0.0;
  std::size_t consumed_ = 0;
  std::size_t nextFrame_ = 1;
};

}  // namespace teegi::pipelines
