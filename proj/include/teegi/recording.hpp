#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "teegi/errors.hpp"
#include "teegi/io/file.hpp"
#include "teegi/montage.hpp"
#include "teegi/sample_block.hpp"
#include "teegi/synth/scenario.hpp"

// Recording CSV:   header `time,<label>,...`; one row per sample; time in
//                  seconds, values in microvolts. Values are written as the
//                  shortest decimal that round-trips a 32-bit float.
// Marker sidecar:  `<stem>.markers.json` next to the CSV (see docs/formats.md).

namespace teegi {

struct Recording {
  SampleBlock samples;
  std::optional<synth::GroundTruth> markers;
};

inline std::filesystem::path markersPathFor(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".markers.json");
  return p;
}

namespace detail {

inline void appendShortest(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline void appendShortest(std::string& out, float v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline std::vector<std::string_view> splitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline std::string formatRecordingCsv(const SampleBlock& samples, const Montage& montage) {
  samples.validate();
  if (samples.channelCount() != montage.size())
    throw ContractError("recording has " + std::to_string(samples.channelCount()) +
                        " channels, montage has " + std::to_string(montage.size()));
  std::string out = "time";
  for (const auto& e : montage.electrodes()) out += "," + e.name;
  out += '\n';
  out.reserve(out.size() + samples.length() * samples.channelCount() * 10);
  for (std::size_t i = 0; i < samples.length(); ++i) {
    detail::appendShortest(out, samples.timeOf(i));
    for (std::size_t c = 0; c < samples.channelCount(); ++c) {
      out += ',';
      detail::appendShortest(out, static_cast<float>(samples.channels[c][i]));
    }
    out += '\n';
  }
  return out;
}

/// Parses a recording, reordering columns into montage order and inferring fs
/// from the median sample interval.
inline SampleBlock parseRecordingCsv(std::string_view text, const Montage& montage) {
  std::size_t lineNo = 0, pos = 0;
  auto nextLine = [&](std::string_view& line) {
    while (pos < text.size()) {
      const auto end = text.find('\n', pos);
      line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      pos = end == std::string_view::npos ? text.size() : end + 1;
      ++lineNo;
      if (!detail::trim(line).empty()) return true;
    }
    return false;
  };

  std::string_view header;
  if (!nextLine(header)) throw ParseError("recording is empty");
  const auto cols = detail::splitCommas(header);
  if (cols.empty() || detail::trim(cols[0]) != "time")
    throw ParseError("header must start with 'time'", lineNo);
  std::vector<std::size_t> target(cols.size(), 0);
  std::vector<bool> seen(montage.size(), false);
  for (std::size_t k = 1; k < cols.size(); ++k) {
    const auto label = detail::trim(cols[k]);
    const auto idx = montage.find(label);
    if (!idx) throw ParseError("unknown channel label '" + std::string(label) + "'", lineNo);
    if (seen[*idx]) throw ParseError("duplicate channel label '" + std::string(label) + "'", lineNo);
    seen[*idx] = true;
    target[k] = *idx;
  }
  for (std::size_t c = 0; c < montage.size(); ++c)
    if (!seen[c]) throw ParseError("missing channel '" + montage[c].name + "'", 1);

  std::vector<double> times;
  std::vector<std::size_t> timeLines;
  std::vector<std::vector<double>> channels(montage.size());
  std::string_view line;
  while (nextLine(line)) {
    const auto fields = detail::splitCommas(line);
    if (fields.size() != cols.size())
      throw ParseError("expected " + std::to_string(cols.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       lineNo);
    auto number = [&](std::string_view f) {
      f = detail::trim(f);
      double v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v))
        throw ParseError("not a finite number: '" + std::string(f) + "'", lineNo);
      return v;
    };
    const double t = number(fields[0]);
    if (!times.empty() && !(t > times.back()))
      throw ParseError("time is not strictly increasing", lineNo);
    times.push_back(t);
    timeLines.push_back(lineNo);
    for (std::size_t k = 1; k < fields.size(); ++k) channels[target[k]].push_back(number(fields[k]));
  }
  if (times.size() < 2) throw ParseError("recording needs at least two samples");

  std::vector<double> dt(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) dt[i - 1] = times[i] - times[i - 1];
  auto sorted = dt;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (std::size_t i = 0; i < dt.size(); ++i)
    if (std::abs(dt[i] - median) > 1e-6)
      throw ParseError("sample interval deviates from the median by more than 1e-6 s",
                       timeLines[i + 1]);

  double fs = 1.0 / median;
  if (std::abs(fs - std::round(fs)) < 1e-6) fs = std::round(fs);
  SampleBlock out;
  out.t0 = times.front();
  out.fs = fs;
  out.channels = std::move(channels);
  return out;
}

inline nlohmann::json markersToJson(const synth::GroundTruth& g) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& m : g.events) {
    auto j = synth::eventToJson(m.event);
    j["startSample"] = m.startSample;
    j["endSample"] = m.endSample;
    events.push_back(std::move(j));
  }
  return {{"version", 1}, {"fs", g.fs}, {"events", events}};
}

inline synth::GroundTruth markersFromJson(const nlohmann::json& j) {
  try {
    synth::GroundTruth g;
    g.fs = j.at("fs").get<double>();
    for (const auto& ej : j.at("events")) {
      synth::MarkedEvent m;
      m.event.kind = synth::eventKindFromString(ej.at("kind").get<std::string>());
      m.event.tStart = ej.at("tStart").get<double>();
      m.event.tEnd = ej.at("tEnd").get<double>();
      if (ej.contains("amplitudeUv")) m.event.amplitudeUv = ej.at("amplitudeUv").get<double>();
      m.startSample = ej.at("startSample").get<std::size_t>();
      m.endSample = ej.at("endSample").get<std::size_t>();
      g.events.push_back(m);
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("marker document: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("marker document: ") + e.what());
  }
}

/// Writes `<csv>` and its marker sidecar.
inline void writeRecording(const SampleBlock& samples, const synth::GroundTruth& truth,
                           const Montage& montage, const std::filesystem::path& csvPath) {
  if (csvPath.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(csvPath.parent_path(), ec);
    if (ec) throw IoError("cannot create directory", csvPath.parent_path().string());
  }
  writeFile(csvPath, formatRecordingCsv(samples, montage));
  writeFile(markersPathFor(csvPath), markersToJson(truth).dump(2) + "\n");
}

/// Loads a recording and, when present, its marker sidecar.
inline Recording loadRecording(const std::filesystem::path& csvPath, const Montage& montage) {
  Recording r;
  r.samples = parseRecordingCsv(readFile(csvPath), montage);
  const auto mp = markersPathFor(csvPath);
  if (std::filesystem::exists(mp)) {
    try {
      r.markers = markersFromJson(nlohmann::json::parse(readFile(mp)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(mp.string() + ": " + e.what());
    }
  }
  return r;
}

}  // namespace teegi
