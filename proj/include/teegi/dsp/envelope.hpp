#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "teegi/errors.hpp"

namespace teegi::dsp {

/// Causal sliding mean of squared samples. Until the window has filled, the
/// mean runs over the samples seen so far.
class PowerEnvelope {
 public:
  explicit PowerEnvelope(std::size_t windowSamples) : ring_(windowSamples, 0.0) {
    if (windowSamples == 0) throw ConfigError("power envelope window must hold at least one sample");
  }

  std::size_t windowSamples() const noexcept { return ring_.size(); }

  double push(double x) {
    const double sq = x * x;
    sum_ += sq - ring_[head_];
    ring_[head_] = sq;
    if (++head_ == ring_.size()) {
      head_ = 0;
      // Re-sum once per lap so the running sum cannot drift.
      sum_ = 0.0;
      for (double v : ring_) sum_ += v;
    }
    if (count_ < ring_.size()) ++count_;
    return value();
  }

  double value() const noexcept {
    return count_ == 0 ? 0.0 : std::max(0.0, sum_ / static_cast<double>(count_));
  }

  void reset() {
    std::fill(ring_.begin(), ring_.end(), 0.0);
    sum_ = 0.0;
    head_ = count_ = 0;
  }

 private:
  std::vector<double> ring_;
  double sum_ = 0.0;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

inline std::size_t envelopeWindowSamples(double windowSec, double fs) {
  const double n = std::round(windowSec * fs);
  if (!(n >= 1)) throw ConfigError("power envelope: windowSec * fs must be >= 1");
  return static_cast<std::size_t>(n);
}

/// Power series of one filtered channel (same length as the input).
inline std::vector<double> powerEnvelope(std::span<const double> samples, double windowSec,
                                         double fs) {
  PowerEnvelope env(envelopeWindowSamples(windowSec, fs));
  std::vector<double> out;
  out.reserve(samples.size());
  for (double x : samples) out.push_back(env.push(x));
  return out;
}

}  // namespace teegi::dsp
