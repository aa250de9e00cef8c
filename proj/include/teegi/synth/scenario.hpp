#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "teegi/errors.hpp"

namespace teegi::synth {

enum class EventKind {
  EyesClosed,
  MoveLeftHand,
  MoveRightHand,
  MoveFeet,
  Blink,
  MeditationLock,
  MeditationUnlock
};

inline constexpr std::string_view toString(EventKind k) {
  switch (k) {
    case EventKind::EyesClosed: return "EyesClosed";
    case EventKind::MoveLeftHand: return "MoveLeftHand";
    case EventKind::MoveRightHand: return "MoveRightHand";
    case EventKind::MoveFeet: return "MoveFeet";
    case EventKind::Blink: return "Blink";
    case EventKind::MeditationLock: return "MeditationLock";
    case EventKind::MeditationUnlock: return "MeditationUnlock";
  }
  return "?";
}

inline EventKind eventKindFromString(std::string_view s) {
  for (auto k : {EventKind::EyesClosed, EventKind::MoveLeftHand, EventKind::MoveRightHand,
                 EventKind::MoveFeet, EventKind::Blink, EventKind::MeditationLock,
                 EventKind::MeditationUnlock})
    if (toString(k) == s) return k;
  throw ConfigError("unknown event kind '" + std::string(s) + "'");
}

/// Default event amplitudes (microvolts).
inline double defaultAmplitudeUv(EventKind k) {
  switch (k) {
    case EventKind::EyesClosed: return 15.0;
    case EventKind::Blink: return 80.0;
    case EventKind::MeditationLock:
    case EventKind::MeditationUnlock: return 20.0;
    default: return 0.0;  // movement events modulate the ongoing beta rhythm
  }
}

struct ScenarioEvent {
  double tStart = 0;
  double tEnd = 0;
  EventKind kind = EventKind::EyesClosed;
  std::optional<double> amplitudeUv;

  double amplitude() const { return amplitudeUv.value_or(defaultAmplitudeUv(kind)); }
};

struct Scenario {
  double durationSec = 60;
  double fs = 256;
  std::uint64_t seed = 1;
  double noiseRmsUv = 10.0;        ///< pink background, per channel
  double betaAmplitudeUv = 10.0;   ///< ongoing 20 Hz sensorimotor rhythm at C3/Cz/C4
  double erdFactor = 0.5;          ///< beta amplitude factor during movement
  double ersFactor = 1.3;          ///< beta amplitude factor after movement
  double ersDurationSec = 1.0;
  std::vector<ScenarioEvent> events;

  void validate() const {
    if (!(fs >= 128)) throw ConfigError("scenario: fs must be >= 128 Hz");
    if (!(durationSec > 0)) throw ConfigError("scenario: duration must be positive");
    if (!(noiseRmsUv >= 0) || !(betaAmplitudeUv >= 0))
      throw ConfigError("scenario: amplitudes must be non-negative");
    if (!(erdFactor >= 0) || !(ersFactor >= 0) || !(ersDurationSec >= 0))
      throw ConfigError("scenario: ERD/ERS parameters must be non-negative");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (!(e.tStart >= 0 && e.tEnd <= durationSec && e.tStart < e.tEnd))
        throw ConfigError("scenario: event " + std::to_string(i) + " (" +
                          std::string(toString(e.kind)) + ") must satisfy 0 <= tStart < tEnd <= duration");
      if (e.amplitudeUv && !(*e.amplitudeUv >= 0))
        throw ConfigError("scenario: event " + std::to_string(i) + " has a negative amplitude");
    }
  }

  std::size_t sampleCount() const { return static_cast<std::size_t>(std::llround(durationSec * fs)); }
};

/// Scenario event with its exact sample span [startSample, endSample).
struct MarkedEvent {
  ScenarioEvent event;
  std::size_t startSample = 0;
  std::size_t endSample = 0;
};

struct GroundTruth {
  double fs = 0;
  std::vector<MarkedEvent> events;

  std::vector<MarkedEvent> ofKind(EventKind k) const {
    std::vector<MarkedEvent> out;
    for (const auto& e : events)
      if (e.event.kind == k) out.push_back(e);
    return out;
  }
};

inline GroundTruth groundTruthOf(const Scenario& s) {
  GroundTruth g{s.fs, {}};
  for (const auto& e : s.events)
    g.events.push_back({e, static_cast<std::size_t>(std::llround(e.tStart * s.fs)),
                        static_cast<std::size_t>(std::llround(e.tEnd * s.fs))});
  return g;
}

// JSON: { "durationSec", "fs", "seed", "noiseRmsUv"?, "betaAmplitudeUv"?, "erdFactor"?,
//         "ersFactor"?, "ersDurationSec"?, "events": [{"kind","tStart","tEnd","amplitudeUv"?}] }

inline nlohmann::json eventToJson(const ScenarioEvent& e) {
  nlohmann::json j{{"kind", toString(e.kind)}, {"tStart", e.tStart}, {"tEnd", e.tEnd}};
  if (e.amplitudeUv) j["amplitudeUv"] = *e.amplitudeUv;
  return j;
}

inline nlohmann::json toJson(const Scenario& s) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : s.events) events.push_back(eventToJson(e));
  return {{"durationSec", s.durationSec},         {"fs", s.fs},
          {"seed", s.seed},                       {"noiseRmsUv", s.noiseRmsUv},
          {"betaAmplitudeUv", s.betaAmplitudeUv}, {"erdFactor", s.erdFactor},
          {"ersFactor", s.ersFactor},             {"ersDurationSec", s.ersDurationSec},
          {"events", events}};
}

inline Scenario scenarioFromJson(const nlohmann::json& j) {
  try {
    Scenario s;
    s.durationSec = j.at("durationSec").get<double>();
    s.fs = j.at("fs").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.noiseRmsUv = j.value("noiseRmsUv", s.noiseRmsUv);
    s.betaAmplitudeUv = j.value("betaAmplitudeUv", s.betaAmplitudeUv);
    s.erdFactor = j.value("erdFactor", s.erdFactor);
    s.ersFactor = j.value("ersFactor", s.ersFactor);
    s.ersDurationSec = j.value("ersDurationSec", s.ersDurationSec);
    for (const auto& ej : j.value("events", nlohmann::json::array())) {
      ScenarioEvent e;
      e.kind = eventKindFromString(ej.at("kind").get<std::string>());
      e.tStart = ej.at("tStart").get<double>();
      e.tEnd = ej.at("tEnd").get<double>();
      if (ej.contains("amplitudeUv")) e.amplitudeUv = ej.at("amplitudeUv").get<double>();
      s.events.push_back(e);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario document: ") + e.what());
  }
}

inline Scenario parseScenario(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenarioFromJson(j);
}

}  // namespace teegi::synth
