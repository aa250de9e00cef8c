#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "teegi/montage.hpp"
#include "teegi/sample_block.hpp"
#include "teegi/synth/scenario.hpp"

namespace teegi::synth {

namespace detail {

inline std::mt19937_64 streamRng(std::uint64_t seed, std::uint32_t family, std::uint32_t id,
                                 std::uint32_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    family, id, sub};
  return std::mt19937_64(seq);
}

/// Paul Kellet's pinking filter driven by unit white noise, scaled to unit variance.
class PinkNoise {
 public:
  explicit PinkNoise(std::mt19937_64 rng) : rng_(std::move(rng)) {
    for (int i = 0; i < 8192; ++i) raw(white());  // settle the slow poles
  }

  double next() { return raw(white()) * unitScale(); }

 private:
  double white() { return normal_(rng_); }

  double raw(double w) {
    s_[0] = 0.99886 * s_[0] + w * 0.0555179;
    s_[1] = 0.99332 * s_[1] + w * 0.0750759;
    s_[2] = 0.96900 * s_[2] + w * 0.1538520;
    s_[3] = 0.86650 * s_[3] + w * 0.3104856;
    s_[4] = 0.55000 * s_[4] + w * 0.5329522;
    s_[5] = -0.7616 * s_[5] - w * 0.0168980;
    const double out = s_[0] + s_[1] + s_[2] + s_[3] + s_[4] + s_[5] + s_[6] + w * 0.5362;
    s_[6] = w * 0.115926;
    return out;
  }

  // 1 / sqrt(sum of squared impulse response).
  static double unitScale() {
    static const double scale = [] {
      std::array<double, 7> s{};
      double energy = 0.0;
      for (int n = 0; n < (1 << 17); ++n) {
        const double w = n == 0 ? 1.0 : 0.0;
        s[0] = 0.99886 * s[0] + w * 0.0555179;
        s[1] = 0.99332 * s[1] + w * 0.0750759;
        s[2] = 0.96900 * s[2] + w * 0.1538520;
        s[3] = 0.86650 * s[3] + w * 0.3104856;
        s[4] = 0.55000 * s[4] + w * 0.5329522;
        s[5] = -0.7616 * s[5] - w * 0.0168980;
        const double y = s[0] + s[1] + s[2] + s[3] + s[4] + s[5] + s[6] + w * 0.5362;
        s[6] = w * 0.115926;
        energy += y * y;
      }
      return 1.0 / std::sqrt(energy);
    }();
    return scale;
  }

  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::array<double, 7> s_{};
};

/// Unit-amplitude sinusoid whose phase diffuses (rad^2/s), giving a narrow spectral line.
inline std::vector<double> narrowbandOscillator(double hz, double diffusion, double fs,
                                                std::size_t n, std::mt19937_64 rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> start(-std::numbers::pi, std::numbers::pi);
  const double step = 2.0 * std::numbers::pi * hz / fs;
  const double jitter = std::sqrt(diffusion / fs);
  double phase = start(rng);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::sin(phase);
    phase = std::remainder(phase + step + jitter * normal(rng), 2.0 * std::numbers::pi);
  }
  return out;
}

/// 0 outside [a, b], 1 inside with linear ramps of length `ramp` at both ends.
inline double trapezoid(double t, double a, double b, double ramp) {
  if (t < a || t >= b) return 0.0;
  ramp = std::min(ramp, 0.5 * (b - a));
  if (ramp <= 0) return 1.0;
  return std::min({1.0, (t - a) / ramp, (b - t) / ramp});
}

inline double lerp(double a, double b, double f) { return a + (b - a) * std::clamp(f, 0.0, 1.0); }

}  // namespace detail

/// Generator conventions not exposed in the scenario document.
struct GeneratorConstants {
  static constexpr double kBetaHz = 20.0;
  static constexpr double kAlphaHz = 10.0;
  static constexpr double kUnlockLowHz = 8.0;
  static constexpr double kUnlockHighHz = 12.0;
  static constexpr double kPhaseDiffusion = 2.0;     ///< rad^2/s
  static constexpr double kBetaSpread = 0.35;        ///< rad, gaussian width of beta foci
  static constexpr double kBetaCutoff = 0.7;         ///< rad, beta foci are zero beyond this
  static constexpr double kOccipitalSpread = 0.8;    ///< rad, alpha falloff from Oz
  static constexpr double kModulationRamp = 0.1;     ///< s, ERD/ERS transitions
  static constexpr double kEventRamp = 0.2;          ///< s, onset/offset of alpha and meditation
};

struct Generated {
  SampleBlock samples;
  GroundTruth truth;
};

/// Movement kind driving the beta rhythm at a given motor focus.
inline EventKind movementFor(std::string_view focus) {
  if (focus == "C3") return EventKind::MoveRightHand;
  if (focus == "C4") return EventKind::MoveLeftHand;
  return EventKind::MoveFeet;
}

/// Beta amplitude factor at time t for one focus: ERD during matching
/// movements, ERS for ersDurationSec afterwards.
inline double betaModulation(const Scenario& s, EventKind movement, double t) {
  constexpr double r = GeneratorConstants::kModulationRamp;
  for (const auto& e : s.events) {
    if (e.kind != movement) continue;
    const double a = e.tStart, b = e.tEnd, c = e.tEnd + s.ersDurationSec;
    if (t < a || t >= c + r) continue;
    if (t < a + r) return detail::lerp(1.0, s.erdFactor, (t - a) / r);
    if (t < b) return s.erdFactor;
    if (t < b + r) return detail::lerp(s.erdFactor, s.ersFactor, (t - b) / r);
    if (t < c) return s.ersFactor;
    return detail::lerp(s.ersFactor, 1.0, (t - c) / r);
  }
  return 1.0;
}

/// Deterministic synthetic EEG for a scenario. Background noise streams are
/// per-channel and independent of the event list, so events only change the
/// channels they touch.
inline Generated generate(const Scenario& scenario, const Montage& montage) {
  scenario.validate();
  using C = GeneratorConstants;
  const std::size_t n = scenario.sampleCount();
  const double fs = scenario.fs;
  const std::size_t m = montage.size();

  Generated out{SampleBlock(0.0, fs, m, n), groundTruthOf(scenario)};
  auto& ch = out.samples.channels;

  for (std::size_t c = 0; c < m; ++c) {
    detail::PinkNoise pink(detail::streamRng(scenario.seed, 1, static_cast<std::uint32_t>(c)));
    for (std::size_t i = 0; i < n; ++i) ch[c][i] = scenario.noiseRmsUv * pink.next();
  }

  // Ongoing sensorimotor beta rhythms, modulated by movements.
  const std::array<const char*, 3> foci{"C3", "Cz", "C4"};
  for (std::uint32_t f = 0; f < foci.size(); ++f) {
    const auto center = montage.index(foci[f]);
    const auto osc = detail::narrowbandOscillator(C::kBetaHz, C::kPhaseDiffusion, fs, n,
                                                  detail::streamRng(scenario.seed, 2, f));
    const EventKind movement = movementFor(foci[f]);
    std::vector<double> gain(n);
    for (std::size_t i = 0; i < n; ++i)
      gain[i] = scenario.betaAmplitudeUv * betaModulation(scenario, movement, i / fs);
    for (std::size_t c = 0; c < m; ++c) {
      const double d = montage.distance(center, c);
      if (d >= C::kBetaCutoff) continue;
      const double w = std::exp(-(d / C::kBetaSpread) * (d / C::kBetaSpread));
      for (std::size_t i = 0; i < n; ++i) ch[c][i] += w * gain[i] * osc[i];
    }
  }

  const auto oz = montage.index("Oz");
  const auto afz = montage.index("AFz");
  const auto pz = montage.index("Pz");
  for (std::uint32_t k = 0; k < scenario.events.size(); ++k) {
    const auto& e = scenario.events[k];
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::floor(e.tStart * fs)));
    const auto i1 = std::min(n, static_cast<std::size_t>(std::ceil(e.tEnd * fs)));
    const std::size_t len = i1 - i0;
    auto envelope = [&](std::size_t i) {
      return detail::trapezoid(i / fs, e.tStart, e.tEnd, C::kEventRamp);
    };
    switch (e.kind) {
      case EventKind::EyesClosed: {
        const auto osc = detail::narrowbandOscillator(C::kAlphaHz, C::kPhaseDiffusion, fs, len,
                                                      detail::streamRng(scenario.seed, 3, k));
        for (auto c : montage.region(Region::Vision)) {
          const double d = montage.distance(oz, c);
          const double w = e.amplitude() * std::exp(-(d / C::kOccipitalSpread) * (d / C::kOccipitalSpread));
          for (std::size_t i = i0; i < i1; ++i) ch[c][i] += w * envelope(i) * osc[i - i0];
        }
        break;
      }
      case EventKind::Blink: {
        const double dur = e.tEnd - e.tStart;
        for (auto c : montage.region(Region::Blink))
          for (std::size_t i = i0; i < i1; ++i) {
            const double t = i / fs - e.tStart;
            if (t >= 0 && t < dur)
              ch[c][i] += e.amplitude() * std::sin(2.0 * std::numbers::pi * t / dur);
          }
        break;
      }
      case EventKind::MeditationLock: {
        const auto osc = detail::narrowbandOscillator(C::kAlphaHz, C::kPhaseDiffusion, fs, len,
                                                      detail::streamRng(scenario.seed, 3, k));
        for (auto c : {afz, pz})
          for (std::size_t i = i0; i < i1; ++i) ch[c][i] += e.amplitude() * envelope(i) * osc[i - i0];
        break;
      }
      case EventKind::MeditationUnlock: {
        const auto a = detail::narrowbandOscillator(C::kUnlockLowHz, C::kPhaseDiffusion, fs, len,
                                                    detail::streamRng(scenario.seed, 3, k, 0));
        const auto b = detail::narrowbandOscillator(C::kUnlockHighHz, C::kPhaseDiffusion, fs, len,
                                                    detail::streamRng(scenario.seed, 3, k, 1));
        for (std::size_t i = i0; i < i1; ++i) {
          ch[afz][i] += e.amplitude() * envelope(i) * a[i - i0];
          ch[pz][i] += e.amplitude() * envelope(i) * b[i - i0];
        }
        break;
      }
      case EventKind::MoveLeftHand:
      case EventKind::MoveRightHand:
      case EventKind::MoveFeet:
        break;  // handled by the beta modulation above
    }
  }
  return out;
}

}  // namespace teegi::synth
