#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "teegi/errors.hpp"
#include "teegi/pipelines/config.hpp"

namespace teegi::pipelines {

/// Physical quantities a pipeline computes at one frame, before display
/// normalization. `wide` holds 3-26 Hz power per electrode (uV^2); `focus` the
/// kind-specific values: Laplacian beta power at C3/Cz/C4 (Motor), alpha power
/// over the vision region (Vision), or the AFz/Pz phase-locking value (Meditation).
struct Quantities {
  double t = 0;        ///< emission time (s)
  double sourceT = 0;  ///< time of the data described (t minus any display delay)
  bool ready = false;  ///< false while delay or phase buffers are still filling
  std::vector<double> wide;
  std::vector<double> focus;
};

struct Stat {
  double mean = 0;
  double sd = 0;
};

struct Baseline {
  PipelineKind kind = PipelineKind::Raw;
  std::vector<Stat> wide;
  std::vector<Stat> focus;
  std::size_t sampleCount = 0;
  double frameRateHz = kDefaultFrameRateHz;

  /// At least three seconds of frames.
  bool valid() const { return sampleCount > 0 && sampleCount >= frameRateHz * 3.0; }
};

/// z-score against the baseline, clamped to +-3 sd and rescaled to [-1, 1].
inline double displayValue(double q, const Stat& s) {
  return std::clamp((q - s.mean) / s.sd, -3.0, 3.0) / 3.0;
}

/// Accumulates ready frames during a calibration span.
class Calibrator {
 public:
  Calibrator(PipelineKind kind, double frameRateHz) : kind_(kind), frameRateHz_(frameRateHz) {}

  void add(const Quantities& q) {
    if (!q.ready) return;
    if (count_ == 0) {
      wide_.assign(q.wide.size(), {});
      focus_.assign(q.focus.size(), {});
    }
    if (q.wide.size() != wide_.size() || q.focus.size() != focus_.size())
      throw ContractError("calibration frames changed shape");
    ++count_;
    for (std::size_t i = 0; i < q.wide.size(); ++i) wide_[i].add(q.wide[i], count_);
    for (std::size_t i = 0; i < q.focus.size(); ++i) focus_[i].add(q.focus[i], count_);
  }

  std::size_t count() const noexcept { return count_; }
  PipelineKind kind() const noexcept { return kind_; }

  Baseline finish() const {
    const double needed = frameRateHz_ * 3.0;
    if (count_ == 0 || static_cast<double>(count_) < needed)
      throw CalibrationIncomplete("calibration needs at least 3 s of frames (" +
                                  std::to_string(static_cast<std::size_t>(std::ceil(needed))) +
                                  "), got " + std::to_string(count_));
    Baseline b;
    b.kind = kind_;
    b.sampleCount = count_;
    b.frameRateHz = frameRateHz_;
    for (const auto& w : wide_) b.wide.push_back(w.stat(count_));
    for (const auto& f : focus_) b.focus.push_back(f.stat(count_));
    return b;
  }

 private:
  // Welford running mean/variance.
  struct Running {
    double mean = 0, m2 = 0;
    void add(double x, std::size_t n) {
      const double d = x - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (x - mean);
    }
    Stat stat(std::size_t n) const {
      const double sd = n > 1 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1))) : 0.0;
      const double floor = 1e-9 * std::max(mean, 1.0);
      return {mean, std::max(sd, floor)};
    }
  };

  PipelineKind kind_;
  double frameRateHz_;
  std::size_t count_ = 0;
  std::vector<Running> wide_, focus_;
};

/// Baseline from the frames recorded during an instructed calibration span.
inline Baseline calibrate(std::span<const Quantities> frames, PipelineKind kind,
                          double frameRateHz = kDefaultFrameRateHz) {
  Calibrator c(kind, frameRateHz);
  for (const auto& q : frames) c.add(q);
  return c.finish();
}

}  // namespace teegi::pipelines
