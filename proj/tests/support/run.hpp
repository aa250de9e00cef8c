#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "teegi/pipelines/pipeline.hpp"
#include "teegi/synth/generator.hpp"

namespace teegi::test {

/// Feeds `samples` through `p` in blocks of `block` samples.
inline std::vector<pipelines::Quantities> runPipeline(pipelines::Pipeline& p, const SampleBlock& samples,
                                                      std::size_t block = 26) {
  std::vector<pipelines::Quantities> out;
  for (std::size_t i = 0; i < samples.length(); i += block)
    for (auto& q : p.process(samples.slice(i, std::min(i + block, samples.length())))) out.push_back(std::move(q));
  return out;
}

/// Feeds `samples` through `p` in random block lengths in [1, maxBlock].
inline std::vector<pipelines::Quantities> runPartitioned(pipelines::Pipeline& p, const SampleBlock& samples,
                                                         std::mt19937_64& rng, std::size_t maxBlock = 300) {
  std::uniform_int_distribution<std::size_t> len(1, maxBlock);
  std::vector<pipelines::Quantities> out;
  for (std::size_t i = 0; i < samples.length();) {
    const std::size_t end = std::min(samples.length(), i + len(rng));
    for (auto& q : p.process(samples.slice(i, end))) out.push_back(std::move(q));
    i = end;
  }
  return out;
}

inline std::vector<pipelines::Quantities> framesIn(const std::vector<pipelines::Quantities>& qs, double t0,
                                                  double t1) {
  std::vector<pipelines::Quantities> out;
  for (const auto& q : qs)
    if (q.t >= t0 && q.t < t1) out.push_back(q);
  return out;
}

inline synth::Scenario scenarioOf(double duration, std::vector<synth::ScenarioEvent> events,
                                  std::uint64_t seed = 11) {
  synth::Scenario s;
  s.durationSec = duration;
  s.seed = seed;
  s.events = std::move(events);
  return s;
}

}  // namespace teegi::test
