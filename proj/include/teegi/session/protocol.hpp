#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "teegi/errors.hpp"
#include "teegi/io/binary.hpp"
#include "teegi/montage.hpp"
#include "teegi/pipelines/config.hpp"
#include "teegi/session/base64.hpp"
#include "teegi/topomap/topomap.hpp"

// Wire messages; docs/protocol.md is the reference. Every message is one JSON
// object with "type" and "version".

namespace teegi::protocol {

using nlohmann::json;

inline constexpr int kVersion = 1;
inline constexpr double kMaxGain = 8.0;

inline json message(std::string_view type) { return json{{"type", type}, {"version", kVersion}}; }

/// Row-major float32 little-endian values, base64.
inline std::string encodeFloat32(std::span<const double> values) {
  std::string bytes;
  bytes.reserve(values.size() * 4);
  for (double v : values) io::appendF32(bytes, static_cast<float>(v));
  return base64::encode(bytes);
}

inline std::vector<float> decodeFloat32(std::string_view b64) {
  const auto bytes = base64::decode(b64);
  if (bytes.size() % 4 != 0) throw ParseError("float32 payload length is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = io::readF32(bytes, 4 * i);
  return out;
}

/// Row-major bitset, bit i in byte i/8 at position i%8 (LSB first), base64.
inline std::string encodeMask(std::span<const std::uint8_t> mask) {
  std::string bytes((mask.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1 << (i % 8)));
  return base64::encode(bytes);
}

inline std::vector<std::uint8_t> decodeMask(std::string_view b64, std::size_t count) {
  const auto bytes = base64::decode(b64);
  if (bytes.size() != (count + 7) / 8) throw ParseError("mask payload has the wrong length");
  std::vector<std::uint8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (std::uint8_t(bytes[i / 8]) >> (i % 8)) & 1;
  return out;
}

inline json labelsOf(const Montage& m, std::span<const std::size_t> idx) {
  json out = json::array();
  for (auto i : idx) out.push_back(m[i].name);
  return out;
}

// --- control messages (client -> server) -----------------------------------

struct SelectPipeline {
  pipelines::PipelineKind kind;
};
struct SetGain {
  double gain;
};
struct StartCalibration {};
struct EndCalibration {};
struct ToggleSources {
  bool on;
};
struct ToggleTraces {
  bool on;
};

using Control = std::variant<SelectPipeline, SetGain, StartCalibration, EndCalibration, ToggleSources, ToggleTraces>;

/// Parses one control message. Throws ParseError naming the problem for
/// malformed JSON, unknown types, missing arguments, and out-of-range gain.
inline Control parseControl(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("control: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ParseError("control: message must be an object with a string 'type'");
  if (j.contains("version") && j["version"] != kVersion)
    throw ParseError("control: unsupported protocol version " + j["version"].dump());
  const auto type = j["type"].get<std::string>();
  auto boolArg = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_boolean()) throw ParseError("control: " + type + " needs boolean '" + key + "'");
    return j[key].get<bool>();
  };
  if (type == "select_pipeline") {
    if (!j.contains("pipeline") || !j["pipeline"].is_string())
      throw ParseError("control: select_pipeline needs string 'pipeline'");
    try {
      return SelectPipeline{pipelines::pipelineKindFromString(j["pipeline"].get<std::string>())};
    } catch (const ContractError& e) {
      throw ParseError(std::string("control: ") + e.what());
    }
  }
  if (type == "set_gain") {
    if (!j.contains("gain") || !j["gain"].is_number()) throw ParseError("control: set_gain needs numeric 'gain'");
    const double g = j["gain"].get<double>();
    if (!(g > 0.0 && g <= kMaxGain)) throw ParseError("control: gain must be in (0, 8], got " + j["gain"].dump());
    return SetGain{g};
  }
  if (type == "start_calibration") return StartCalibration{};
  if (type == "end_calibration") return EndCalibration{};
  if (type == "toggle_sources") return ToggleSources{boolArg("on")};
  if (type == "toggle_traces") return ToggleTraces{boolArg("on")};
  throw ParseError("control: unknown message type '" + type + "'");
}

inline json toJson(const Control& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SelectPipeline>) {
          auto j = message("select_pipeline");
          j["pipeline"] = pipelines::toString(v.kind);
          return j;
        } else if constexpr (std::is_same_v<T, SetGain>) {
          auto j = message("set_gain");
          j["gain"] = v.gain;
          return j;
        } else if constexpr (std::is_same_v<T, StartCalibration>) {
          return message("start_calibration");
        } else if constexpr (std::is_same_v<T, EndCalibration>) {
          return message("end_calibration");
        } else if constexpr (std::is_same_v<T, ToggleSources>) {
          auto j = message("toggle_sources");
          j["on"] = v.on;
          return j;
        } else {
          auto j = message("toggle_traces");
          j["on"] = v.on;
          return j;
        }
      },
      c);
}

inline json errorMessage(std::string_view what) {
  auto j = message("error");
  j["message"] = what;
  return j;
}

}  // namespace teegi::protocol
