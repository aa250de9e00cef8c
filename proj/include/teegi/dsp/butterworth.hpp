#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "teegi/errors.hpp"
#include "teegi/sample_block.hpp"

namespace teegi::dsp {

/// Band edges and order of a Butterworth band-pass. `order` is the order of the
/// low-pass prototype, so the realized filter has 2*order poles and `order`
/// second-order sections.
struct BandpassSpec {
  double lowHz = 0;
  double highHz = 0;
  int order = 4;
  double fs = 0;

  void validate() const {
    if (!(fs > 0)) throw ConfigError("band-pass: sampling rate must be positive");
    if (!(lowHz > 0 && lowHz < highHz && highHz < fs / 2))
      throw ConfigError("band-pass: need 0 < low < high < fs/2, got " + std::to_string(lowHz) +
                        "-" + std::to_string(highHz) + " Hz at fs=" + std::to_string(fs));
    if (order < 2 || order % 2 != 0)
      throw ConfigError("band-pass: order must be even and >= 2, got " + std::to_string(order));
  }

  friend bool operator==(const BandpassSpec&, const BandpassSpec&) = default;
};

/// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  std::complex<double> response(std::complex<double> zInv) const {
    const auto z2 = zInv * zInv;
    return (b0 + b1 * zInv + b2 * z2) / (1.0 + a1 * zInv + a2 * z2);
  }
};

/// Cascade of second-order sections.
struct SosCascade {
  std::vector<Biquad> sections;

  std::complex<double> response(double hz, double fs) const {
    const auto zInv = std::polar(1.0, -2.0 * std::numbers::pi * hz / fs);
    std::complex<double> h{1.0, 0.0};
    for (const auto& s : sections) h *= s.response(zInv);
    return h;
  }

  double magnitude(double hz, double fs) const { return std::abs(response(hz, fs)); }
};

/// Digital frequency (Hz) at which the bilinear-transformed band-pass peaks:
/// the image of the analog geometric centre of the prewarped edges.
inline double bandCenterHz(const BandpassSpec& spec) {
  const double w1 = std::tan(std::numbers::pi * spec.lowHz / spec.fs);
  const double w2 = std::tan(std::numbers::pi * spec.highHz / spec.fs);
  return spec.fs / std::numbers::pi * std::atan(std::sqrt(w1 * w2));
}

/// Butterworth band-pass by analog prototype, low-pass to band-pass transform and
/// bilinear transform with prewarped edges. Unity gain at bandCenterHz.
inline SosCascade designButterworthBandpass(const BandpassSpec& spec) {
  spec.validate();
  using cd = std::complex<double>;
  const double pi = std::numbers::pi;
  const double k = 2.0 * spec.fs;
  const double w1 = k * std::tan(pi * spec.lowHz / spec.fs);
  const double w2 = k * std::tan(pi * spec.highHz / spec.fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  const int n = spec.order;

  std::vector<cd> poles;
  for (int i = 1; i <= n; ++i) {
    const cd p = std::polar(1.0, pi * (2.0 * i + n - 1) / (2.0 * n));
    const cd half = p * bw / 2.0;
    const cd root = std::sqrt(half * half - w0sq);
    for (const cd s : {half + root, half - root}) poles.push_back((k + s) / (k - s));
  }

  // Conjugate pairs become one section each; leftover real poles pair up.
  std::vector<cd> upper;
  std::vector<double> real;
  for (const cd& p : poles) {
    if (std::abs(p.imag()) <= 1e-12 * std::abs(p))
      real.push_back(p.real());
    else if (p.imag() > 0)
      upper.push_back(p);
  }
  std::sort(upper.begin(), upper.end(), [](cd a, cd b) { return std::abs(a) < std::abs(b); });
  std::sort(real.begin(), real.end());

  SosCascade out;
  for (const cd& p : upper) out.sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i + 1 < real.size(); i += 2)
    out.sections.push_back({1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  if (out.sections.size() != static_cast<std::size_t>(n))
    throw ConfigError("band-pass: pole pairing failed");

  const double g = out.magnitude(bandCenterHz(spec), spec.fs);
  const double perSection = std::pow(g, -1.0 / n);
  for (auto& s : out.sections) {
    s.b0 *= perSection;
    s.b1 *= perSection;
    s.b2 *= perSection;
  }
  return out;
}

/// Causal band-pass with one independent recursion state per channel
/// (transposed direct form II). Single writer.
class StreamingFilter {
 public:
  StreamingFilter(const BandpassSpec& spec, std::size_t channelCount)
      : spec_(spec), sos_(designButterworthBandpass(spec)), channels_(channelCount) {
    reset();
  }

  const BandpassSpec& spec() const noexcept { return spec_; }
  const SosCascade& cascade() const noexcept { return sos_; }
  std::size_t channelCount() const noexcept { return channels_; }

  void reset() { state_.assign(channels_ * sos_.sections.size() * 2, 0.0); }

  double processSample(std::size_t channel, double x) {
    double* st = &state_[channel * sos_.sections.size() * 2];
    for (const auto& s : sos_.sections) {
      const double y = s.b0 * x + st[0];
      st[0] = s.b1 * x - s.a1 * y + st[1];
      st[1] = s.b2 * x - s.a2 * y;
      x = y;
      st += 2;
    }
    return x;
  }

  void processInPlace(std::size_t channel, std::span<double> xs) {
    if (channel >= channels_) throw ContractError("StreamingFilter: channel index out of range");
    for (double& x : xs) x = processSample(channel, x);
  }

  SampleBlock processBlock(const SampleBlock& block) {
    if (block.channelCount() != channels_)
      throw ContractError("StreamingFilter: block has " + std::to_string(block.channelCount()) +
                          " channels, filter has " + std::to_string(channels_));
    SampleBlock out = block;
    for (std::size_t c = 0; c < channels_; ++c) processInPlace(c, out.channels[c]);
    return out;
  }

 private:
  BandpassSpec spec_;
  SosCascade sos_;
  std::size_t channels_;
  std::vector<double> state_;
};

inline StreamingFilter designBandpass(const BandpassSpec& spec, std::size_t channelCount = 1) {
  return StreamingFilter(spec, channelCount);
}

}  // namespace teegi::dsp
