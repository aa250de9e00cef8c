#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "teegi/errors.hpp"
#include "teegi/io/binary.hpp"
#include "teegi/io/file.hpp"
#include "teegi/montage.hpp"

// Lead-field file (see docs/formats.md):
//   line 1 (ASCII): "teegi-leadfield 1 M=<M> V=<V> orientation=fixed\n"
//   M*V float32 LE, row-major (row = electrode in montage order)
//   V*3 float32 LE voxel positions (x, y, z), head-centered, unit head radius
// Nothing may follow the positions.

namespace teegi::inverse {

struct LeadField {
  Eigen::MatrixXd gain;             ///< M x V, uV per unit source amplitude
  std::vector<Vec3> voxelPositions;  ///< V

  std::size_t electrodes() const { return static_cast<std::size_t>(gain.rows()); }
  std::size_t voxels() const { return static_cast<std::size_t>(gain.cols()); }

  void validate() const {
    if (gain.rows() == 0 || gain.cols() == 0) throw ModelError("lead field is empty");
    if (voxelPositions.size() != voxels())
      throw ModelError("lead field has " + std::to_string(voxels()) + " voxels but " +
                       std::to_string(voxelPositions.size()) + " positions");
    for (Eigen::Index v = 0; v < gain.cols(); ++v) {
      for (Eigen::Index r = 0; r < gain.rows(); ++r)
        if (!std::isfinite(gain(r, v)))
          throw ModelError("lead field entry (row " + std::to_string(r) + ", voxel " + std::to_string(v) +
                           ") is not finite");
      if (gain.col(v).cwiseAbs().maxCoeff() == 0.0)
        throw ModelError("lead field column for voxel " + std::to_string(v) + " is all zero");
    }
  }
};

inline constexpr std::string_view kLeadFieldMagic = "teegi-leadfield";

inline std::string formatLeadField(const LeadField& lf) {
  std::string out = std::string(kLeadFieldMagic) + " 1 M=" + std::to_string(lf.electrodes()) +
                    " V=" + std::to_string(lf.voxels()) + " orientation=fixed\n";
  out.reserve(out.size() + 4 * (lf.electrodes() * lf.voxels() + 3 * lf.voxels()));
  for (Eigen::Index r = 0; r < lf.gain.rows(); ++r)
    for (Eigen::Index c = 0; c < lf.gain.cols(); ++c) io::appendF32(out, static_cast<float>(lf.gain(r, c)));
  for (const auto& p : lf.voxelPositions) {
    io::appendF32(out, static_cast<float>(p.x));
    io::appendF32(out, static_cast<float>(p.y));
    io::appendF32(out, static_cast<float>(p.z));
  }
  return out;
}

/// Parses and validates a lead-field document. `expectedElectrodes` = 0 skips
/// the montage-size check.
inline LeadField parseLeadField(std::string_view data, std::size_t expectedElectrodes = kMontageSize) {
  const auto nl = data.find('\n');
  if (nl == std::string_view::npos) throw ParseError("lead field: missing header line", 1);
  const std::string_view header = data.substr(0, nl);
  std::map<std::string, std::string, std::less<>> fields;
  std::vector<std::string_view> words;
  for (std::size_t pos = 0; pos <= header.size();) {
    auto end = header.find(' ', pos);
    if (end == std::string_view::npos) end = header.size();
    if (end > pos) words.push_back(header.substr(pos, end - pos));
    pos = end + 1;
  }
  if (words.size() < 2 || words[0] != kLeadFieldMagic || words[1] != "1")
    throw ParseError("lead field: header must start with 'teegi-leadfield 1'", 1);
  for (std::size_t i = 2; i < words.size(); ++i) {
    const auto eq = words[i].find('=');
    if (eq == std::string_view::npos) throw ParseError("lead field: bad header field '" + std::string(words[i]) + "'", 1);
    fields[std::string(words[i].substr(0, eq))] = std::string(words[i].substr(eq + 1));
  }
  auto count = [&](const char* key) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ParseError(std::string("lead field: header lacks ") + key, 1);
    std::size_t v = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0)
      throw ParseError(std::string("lead field: ") + key + " must be a positive integer", 1);
    return v;
  };
  const std::size_t m = count("M"), v = count("V");
  if (fields.count("orientation") == 0 || fields.at("orientation") != "fixed")
    throw ParseError("lead field: only orientation=fixed is supported", 1);
  if (expectedElectrodes != 0 && m != expectedElectrodes)
    throw ParseError("lead field: M=" + std::to_string(m) + " but the montage has " +
                         std::to_string(expectedElectrodes) + " electrodes",
                     1);

  const std::string_view body = data.substr(nl + 1);
  const std::size_t matrixBytes = 4 * m * v, expected = matrixBytes + 12 * v;
  if (body.size() < expected) {
    const std::size_t values = body.size() / 4;
    if (values < m * v)
      throw ParseError("lead field: truncated in the matrix at row " + std::to_string(values / v) +
                       ", column " + std::to_string(values % v) + " (" + std::to_string(body.size()) +
                       " of " + std::to_string(expected) + " bytes)");
    throw ParseError("lead field: truncated in the voxel positions at voxel " +
                     std::to_string((values - m * v) / 3) + " (" + std::to_string(body.size()) + " of " +
                     std::to_string(expected) + " bytes)");
  }
  if (body.size() > expected)
    throw ParseError("lead field: " + std::to_string(body.size() - expected) +
                     " unexpected bytes after the voxel positions");

  LeadField lf;
  lf.gain.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(v));
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < v; ++c) {
      const float x = io::readF32(body, 4 * (r * v + c));
      if (!std::isfinite(x))
        throw ParseError("lead field: non-finite value at row " + std::to_string(r) + ", column " +
                         std::to_string(c));
      lf.gain(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x;
    }
  lf.voxelPositions.resize(v);
  for (std::size_t c = 0; c < v; ++c) {
    const std::size_t o = matrixBytes + 12 * c;
    lf.voxelPositions[c] = {io::readF32(body, o), io::readF32(body, o + 4), io::readF32(body, o + 8)};
  }
  lf.validate();
  return lf;
}

inline LeadField loadLeadField(const std::filesystem::path& path, std::size_t expectedElectrodes = kMontageSize) {
  try {
    return parseLeadField(readFile(path), expectedElectrodes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void saveLeadField(const LeadField& lf, const std::filesystem::path& path) {
  lf.validate();
  writeFile(path, formatLeadField(lf));
}

}  // namespace teegi::inverse
