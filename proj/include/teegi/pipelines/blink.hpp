#pragma once

#include <cmath>
#include <vector>

#include "teegi/dsp/butterworth.hpp"
#include "teegi/montage.hpp"
#include "teegi/sample_block.hpp"

namespace teegi::pipelines {

struct BlinkConfig {
  double lowHz = 1.0;
  double highHz = 10.0;
  int order = 2;
  double thresholdSd = 4.0;
  double noiseWindowSec = 10.0;  ///< rolling window for the noise standard deviation
  double refractorySec = 0.2;    ///< minimum spacing between onsets
  double releaseSec = 0.1;       ///< blink ends after this long below threshold
  double holdSec = 0.05;         ///< must stay above threshold this long to count
  double warmupSec = 1.0;        ///< noise samples needed before detecting
};

struct BlinkResult {
  bool blink = false;           ///< a blink was in progress at some sample of the block
  std::vector<double> onsets;   ///< onset times (s)
};

/// Threshold detector on the band-passed mean of the frontopolar channels.
/// The rolling noise estimate only takes samples outside detected blinks, so
/// the blinks themselves do not inflate the threshold.
class BlinkDetector {
 public:
  BlinkDetector(const Montage& montage, double fs, BlinkConfig cfg = {})
      : cfg_(cfg),
        fs_(fs),
        channels_(montage.region(Region::Blink)),
        filter_(dsp::BandpassSpec{cfg.lowHz, cfg.highHz, cfg.order, fs}, 1),
        ring_(static_cast<std::size_t>(std::llround(cfg.noiseWindowSec * fs)), 0.0),
        warmup_(static_cast<std::size_t>(std::llround(cfg.warmupSec * fs))),
        release_(static_cast<std::size_t>(std::llround(cfg.releaseSec * fs))),
        hold_(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.holdSec * fs)))) {
    if (ring_.empty()) throw ConfigError("blink noise window too short");
  }

  const BlinkConfig& config() const noexcept { return cfg_; }
  bool active() const noexcept { return active_; }

  /// Current detection threshold (uV), or +inf while warming up.
  double threshold() const {
    if (count_ < warmup_) return INFINITY;
    const double n = static_cast<double>(count_);
    const double mean = sum_ / n;
    return cfg_.thresholdSd * std::sqrt(std::max(0.0, sumSq_ / n - mean * mean));
  }

  BlinkResult process(const SampleBlock& block) {
    BlinkResult r;
    if (!started_) {
      origin_ = block.t0;
      started_ = true;
    }
    for (std::size_t i = 0; i < block.length(); ++i) {
      double x = 0.0;
      for (auto c : channels_) x += block.channels.at(c)[i];
      x = filter_.processSample(0, x / static_cast<double>(channels_.size()));
      const double t = origin_ + static_cast<double>(samples_) / fs_;
      ++samples_;

      const double thr = threshold();
      const bool above = std::abs(x) > thr;
      if (active_) {
        below_ = above ? 0 : below_ + 1;
        if (below_ >= release_) active_ = false;
      } else if (above) {
        if (run_++ == 0) runStart_ = t;
        if (run_ >= hold_ && runStart_ - lastOnset_ >= cfg_.refractorySec) {
          active_ = true;
          below_ = 0;
          lastOnset_ = runStart_;
          r.onsets.push_back(runStart_);
        }
      } else {
        run_ = 0;
      }
      if (active_) {
        r.blink = true;
      } else if (!above) {
        pushNoise(x);
      }
    }
    return r;
  }

 private:
  void pushNoise(double x) {
    const double old = ring_[head_];
    ring_[head_] = x;
    sum_ += x - old;
    sumSq_ += x * x - old * old;
    if (++head_ == ring_.size()) {
      head_ = 0;
      sum_ = sumSq_ = 0.0;
      for (double v : ring_) {
        sum_ += v;
        sumSq_ += v * v;
      }
    }
    if (count_ < ring_.size()) ++count_;
  }

  BlinkConfig cfg_;
  double fs_;
  std::vector<std::size_t> channels_;
  dsp::StreamingFilter filter_;
  std::vector<double> ring_;
  std::size_t head_ = 0, count_ = 0;
  double sum_ = 0, sumSq_ = 0;
  std::size_t warmup_, release_, hold_;
  std::size_t run_ = 0;
  double runStart_ = 0;
  std::size_t below_ = 0;
  std::size_t samples_ = 0;
  bool active_ = false;
  bool started_ = false;
  double origin_ = 0;
  double lastOnset_ = -INFINITY;
};

}  // namespace teegi::pipelines
