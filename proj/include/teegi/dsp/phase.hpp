#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "teegi/errors.hpp"

namespace teegi::dsp {

inline bool isPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Window length for the analytic signal: seconds*fs rounded up to a power of two, at least 64.
inline std::size_t phaseWindowLength(double seconds, double fs) {
  const auto want = static_cast<std::size_t>(std::ceil(seconds * fs));
  std::size_t n = 64;
  while (n < want) n <<= 1;
  return n;
}

/// FFT-based analytic signal x + i*H{x} of a power-of-two-length window.
inline std::vector<std::complex<double>> analyticSignal(std::span<const double> x) {
  const std::size_t n = x.size();
  if (!isPowerOfTwo(n) || n < 2)
    throw ContractError("analytic signal needs a power-of-two window, got " + std::to_string(n));
  std::vector<std::complex<double>> time(x.begin(), x.end()), freq;
  Eigen::FFT<double> fft;
  fft.fwd(freq, time);
  // Keep DC and Nyquist, double positive frequencies, drop negative ones.
  for (std::size_t k = 1; k < n / 2; ++k) freq[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) freq[k] = 0.0;
  fft.inv(time, freq);
  return time;
}

/// Wrap to (-pi, pi].
inline double wrapPhase(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::remainder(a, 2.0 * pi);
  return a <= -pi ? a + 2.0 * pi : a;
}

inline std::vector<double> instantaneousPhase(std::span<const double> window) {
  const auto z = analyticSignal(window);
  std::vector<double> out;
  out.reserve(z.size());
  for (const auto& c : z) out.push_back(wrapPhase(std::arg(c)));
  return out;
}

/// Sliding window of one channel feeding the analytic-signal phase estimate.
/// Phases are read from the central half, away from the window edges.
class PhaseWindow {
 public:
  explicit PhaseWindow(std::size_t lengthSamples) : ring_(lengthSamples, 0.0) {
    if (lengthSamples < 64 || !isPowerOfTwo(lengthSamples))
      throw ConfigError("phase window length must be a power of two >= 64, got " +
                        std::to_string(lengthSamples));
  }

  std::size_t length() const noexcept { return ring_.size(); }
  bool full() const noexcept { return count_ >= ring_.size(); }

  void push(double x) {
    ring_[head_] = x;
    head_ = (head_ + 1) % ring_.size();
    if (count_ < ring_.size()) ++count_;
  }

  /// Oldest to newest.
  std::vector<double> samples() const {
    std::vector<double> out;
    out.reserve(ring_.size());
    for (std::size_t i = 0; i < ring_.size(); ++i) out.push_back(ring_[(head_ + i) % ring_.size()]);
    return out;
  }

  /// Phases over the central half, or nullopt while the window is still filling.
  std::optional<std::vector<double>> centralPhases() const {
    if (!full()) return std::nullopt;
    const auto all = instantaneousPhase(samples());
    const std::size_t q = ring_.size() / 4;
    return std::vector<double>(all.begin() + static_cast<std::ptrdiff_t>(q),
                               all.end() - static_cast<std::ptrdiff_t>(q));
  }

  void reset() {
    std::fill(ring_.begin(), ring_.end(), 0.0);
    head_ = count_ = 0;
  }

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

/// Phase-locking value |mean(exp(i(a - b)))| in [0, 1].
inline double plv(std::span<const double> phaseA, std::span<const double> phaseB) {
  if (phaseA.empty()) throw ContractError("plv: empty phase series");
  if (phaseA.size() != phaseB.size()) throw ContractError("plv: phase series lengths differ");
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < phaseA.size(); ++i) {
    const double d = phaseA[i] - phaseB[i];
    re += std::cos(d);
    im += std::sin(d);
  }
  const double n = static_cast<double>(phaseA.size());
  return std::min(1.0, std::hypot(re, im) / n);
}

}  // namespace teegi::dsp
