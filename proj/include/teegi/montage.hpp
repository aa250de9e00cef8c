#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "teegi/errors.hpp"

namespace teegi {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Great-circle distance (radians) between two unit vectors. Same value as
/// acos(clamp(a.b)) but without its loss of precision near 0 and pi.
inline double geodesicDistance(Vec3 a, Vec3 b) {
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

/// Head-centered unit vector: x to the right ear, y to the nose, z to the vertex.
/// `polarDeg` is measured from the vertex (Cz), `azimuthDeg` from +x toward +y.
inline Vec3 fromSpherical(double polarDeg, double azimuthDeg) {
  const double t = polarDeg * std::numbers::pi / 180.0;
  const double a = azimuthDeg * std::numbers::pi / 180.0;
  return {std::sin(t) * std::cos(a), std::sin(t) * std::sin(a), std::cos(t)};
}

using Uv = std::array<double, 2>;

// The scalp chart is an azimuthal-equidistant projection about Cz. Polar angle
// kChartPolarExtent maps to the rim of the disc of radius 0.5 centred in the
// unit square; the nose points to v = 0.
inline constexpr double kChartPolarExtent = 2.0 * std::numbers::pi / 3.0;

inline Uv headUv(Vec3 p) {
  const double polar = std::acos(std::clamp(p.z, -1.0, 1.0));
  const double r = 0.5 * polar / kChartPolarExtent;
  const double az = std::atan2(p.y, p.x);
  return {0.5 + r * std::cos(az), 0.5 - r * std::sin(az)};
}

/// Inverse of headUv. Returns nullopt outside the chart disc.
inline std::optional<Vec3> positionFromUv(double u, double v) {
  const double du = u - 0.5, dv = 0.5 - v;
  const double r = std::hypot(du, dv);
  if (r > 0.5) return std::nullopt;
  const double polar = kChartPolarExtent * r / 0.5;
  const double az = std::atan2(dv, du);
  return Vec3{std::sin(polar) * std::cos(az), std::sin(polar) * std::sin(az), std::cos(polar)};
}

struct Electrode {
  std::string name;
  Vec3 pos;
  Uv uv{};
};

enum class Region { Vision, MeditationPair, Blink, MotorCenters };

namespace detail {

struct SphericalEntry {
  const char* name;
  double polarDeg;
  double azimuthDeg;
};

// Idealised 10-10 positions. Midline and equator points sit on 22.5 and 18
// degree steps; intermediate rows (F, FC, CP, P, PO) are evenly spaced along
// the circle through the row's equator and midline points.
inline constexpr std::array<SphericalEntry, 32> kStandard32{{
    {"Fp1", 90.0000000000, 108.0000000000},
    {"Fp2", 90.0000000000, 72.0000000000},
    {"AFz", 67.5000000000, 90.0000000000},
    {"F7", 90.0000000000, 144.0000000000},
    {"F3", 59.6763364175, 128.7715996475},
    {"Fz", 45.0000000000, 90.0000000000},
    {"F4", 59.6763364175, 51.2284003525},
    {"F8", 90.0000000000, 36.0000000000},
    {"FC5", 69.1859004155, 158.8443179497},
    {"FC1", 31.3490181112, 133.5421142300},
    {"FC2", 31.3490181112, 46.4578857700},
    {"FC6", 69.1859004155, 21.1556820503},
    {"T7", 90.0000000000, 180.0000000000},
    {"C3", 45.0000000000, 180.0000000000},
    {"Cz", 0.0000000000, 0.0000000000},
    {"C4", 45.0000000000, 0.0000000000},
    {"T8", 90.0000000000, 0.0000000000},
    {"CP5", 69.1859004155, -158.8443179497},
    {"CP1", 31.3490181112, -133.5421142300},
    {"CP2", 31.3490181112, -46.4578857700},
    {"CP6", 69.1859004155, -21.1556820503},
    {"P7", 90.0000000000, -144.0000000000},
    {"P3", 59.6763364175, -128.7715996475},
    {"Pz", 45.0000000000, -90.0000000000},
    {"P4", 59.6763364175, -51.2284003525},
    {"P8", 90.0000000000, -36.0000000000},
    {"PO3", 73.8618318931, -111.7119685646},
    {"PO4", 73.8618318931, -68.2880314354},
    {"O1", 90.0000000000, -108.0000000000},
    {"Oz", 90.0000000000, -90.0000000000},
    {"O2", 90.0000000000, -72.0000000000},
    {"POz", 67.5000000000, -90.0000000000},
}};

inline const std::map<std::string, std::vector<std::string>>& standardNeighbors() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"C3", {"FC5", "FC1", "CP5", "CP1"}},
      {"C4", {"FC2", "FC6", "CP2", "CP6"}},
      {"Cz", {"FC1", "FC2", "CP1", "CP2"}},
  };
  return m;
}

inline const std::vector<std::string>& regionLabels(Region r) {
  static const std::vector<std::string> vision{"P3", "Pz", "P4", "PO3", "PO4", "O1", "Oz", "O2"};
  static const std::vector<std::string> meditation{"AFz", "Pz"};
  static const std::vector<std::string> blink{"Fp1", "Fp2"};
  static const std::vector<std::string> motor{"C3", "Cz", "C4"};
  switch (r) {
    case Region::Vision: return vision;
    case Region::MeditationPair: return meditation;
    case Region::Blink: return blink;
    case Region::MotorCenters: return motor;
  }
  return vision;
}

inline double parseDouble(std::string_view s, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("not a number: '" + std::string(s) + "'", line);
  return v;
}

}  // namespace detail

inline constexpr std::size_t kMontageSize = 32;

/// Electrode layout shared by every processing stage. Immutable once built.
class Montage {
 public:
  explicit Montage(std::vector<Electrode> electrodes) : electrodes_(std::move(electrodes)) {
    if (electrodes_.size() != kMontageSize)
      throw ConfigError("montage must have exactly 32 electrodes, got " +
                        std::to_string(electrodes_.size()));
    for (std::size_t i = 0; i < electrodes_.size(); ++i) {
      const auto& e = electrodes_[i];
      if (!byName_.emplace(e.name, i).second) throw ConfigError("duplicate electrode " + e.name);
      if (std::abs(norm(e.pos) - 1.0) > 1e-9)
        throw ConfigError("electrode " + e.name + " is not on the unit sphere");
      for (double c : e.uv)
        if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("electrode " + e.name + " uv outside [0,1]");
    }
    for (const char* required : {"C3", "Cz", "C4", "P3", "Pz", "P4", "PO3", "PO4", "O1", "Oz", "O2",
                                 "AFz", "Fp1", "Fp2"})
      if (!byName_.contains(required))
        throw ConfigError(std::string("montage lacks required electrode ") + required);

    for (const auto& [center, nbrs] : detail::standardNeighbors()) {
      std::vector<std::size_t> idx;
      for (const auto& n : nbrs) {
        auto it = byName_.find(n);
        if (it == byName_.end())
          throw ConfigError("Laplacian neighbor " + n + " of " + center + " missing from montage");
        idx.push_back(it->second);
      }
      neighbors_.emplace(byName_.at(center), std::move(idx));
    }
    for (Region r : {Region::Vision, Region::MeditationPair, Region::Blink, Region::MotorCenters}) {
      std::vector<std::size_t> idx;
      for (const auto& l : detail::regionLabels(r)) idx.push_back(byName_.at(l));
      regions_.emplace(r, std::move(idx));
    }
  }

  std::size_t size() const noexcept { return electrodes_.size(); }
  const std::vector<Electrode>& electrodes() const noexcept { return electrodes_; }
  const Electrode& operator[](std::size_t i) const { return electrodes_.at(i); }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = byName_.find(std::string(label));
    if (it == byName_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index(std::string_view label) const {
    if (auto i = find(label)) return *i;
    throw ContractError("unknown electrode label " + std::string(label));
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& e : electrodes_) out.push_back(e.name);
    return out;
  }

  bool hasNeighbors(std::size_t center) const { return neighbors_.contains(center); }

  const std::vector<std::size_t>& laplacianNeighbors(std::size_t center) const {
    auto it = neighbors_.find(center);
    if (it == neighbors_.end())
      throw ContractError("no Laplacian neighborhood for electrode " + electrodes_.at(center).name);
    return it->second;
  }

  const std::vector<std::size_t>& laplacianNeighbors(std::string_view center) const {
    return laplacianNeighbors(index(center));
  }

  std::vector<std::string> laplacianNeighborLabels(std::string_view center) const {
    std::vector<std::string> out;
    for (auto i : laplacianNeighbors(center)) out.push_back(electrodes_[i].name);
    return out;
  }

  const std::vector<std::size_t>& region(Region r) const { return regions_.at(r); }

  std::vector<std::string> regionLabels(Region r) const {
    std::vector<std::string> out;
    for (auto i : region(r)) out.push_back(electrodes_[i].name);
    return out;
  }

  double distance(std::size_t a, std::size_t b) const {
    return geodesicDistance(electrodes_.at(a).pos, electrodes_.at(b).pos);
  }

  /// One electrode per line: `label x y z u v`. Lines starting with '#' are comments.
  std::string toText() const {
    std::ostringstream os;
    os.precision(17);
    os << "# label x y z u v\n";
    for (const auto& e : electrodes_)
      os << e.name << ' ' << e.pos.x << ' ' << e.pos.y << ' ' << e.pos.z << ' ' << e.uv[0] << ' '
         << e.uv[1] << '\n';
    return os.str();
  }

  static Montage fromText(std::string_view text) {
    std::vector<Electrode> out;
    std::size_t lineNo = 0;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
      ++lineNo;
      if (line.empty() || line.front() == '#') continue;
      std::istringstream ls(line);
      std::vector<std::string> fields;
      for (std::string f; ls >> f;) fields.push_back(f);
      if (fields.empty()) continue;
      if (fields.size() != 6)
        throw ParseError("expected 6 fields (label x y z u v), got " + std::to_string(fields.size()),
                         lineNo);
      Electrode e;
      e.name = fields[0];
      e.pos = {detail::parseDouble(fields[1], lineNo), detail::parseDouble(fields[2], lineNo),
               detail::parseDouble(fields[3], lineNo)};
      const double n = norm(e.pos);
      if (std::abs(n - 1.0) > 1e-6) throw ParseError("position is not unit-norm", lineNo);
      e.pos = (1.0 / n) * e.pos;
      e.uv = {detail::parseDouble(fields[4], lineNo), detail::parseDouble(fields[5], lineNo)};
      out.push_back(std::move(e));
    }
    try {
      return Montage(std::move(out));
    } catch (const ConfigError& err) {
      throw ParseError(err.what());
    }
  }

 private:
  std::vector<Electrode> electrodes_;
  std::map<std::string, std::size_t> byName_;
  std::map<std::size_t, std::vector<std::size_t>> neighbors_;
  std::map<Region, std::vector<std::size_t>> regions_;
};

/// The canonical 32-channel cap.
inline const Montage& standardMontage() {
  static const Montage m = [] {
    std::vector<Electrode> es;
    for (const auto& s : detail::kStandard32) {
      Electrode e{s.name, fromSpherical(s.polarDeg, s.azimuthDeg), {}};
      e.uv = headUv(e.pos);
      es.push_back(std::move(e));
    }
    return Montage(std::move(es));
  }();
  return m;
}

}  // namespace teegi
