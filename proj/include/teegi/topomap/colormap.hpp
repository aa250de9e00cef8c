#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace teegi::topomap {

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ColorStop {
  double at;  ///< position in [0, 1]
  Rgb color;
};

// Stops are linearly interpolated in RGB and rounded to the nearest byte.

/// Signed values: -1 cold, 0 neutral, +1 warm.
inline constexpr std::array<ColorStop, 7> kDivergingStops{{
    {0.0, {59, 76, 192}},
    {1.0 / 6.0, {98, 130, 234}},
    {2.0 / 6.0, {141, 176, 254}},
    {0.5, {221, 221, 221}},
    {4.0 / 6.0, {245, 171, 137}},
    {5.0 / 6.0, {226, 105, 82}},
    {1.0, {180, 4, 38}},
}};

/// Values in [0, 1] (phase locking).
inline constexpr std::array<ColorStop, 5> kSequentialStops{{
    {0.0, {68, 1, 84}},
    {0.25, {59, 82, 139}},
    {0.5, {33, 145, 140}},
    {0.75, {94, 201, 98}},
    {1.0, {253, 231, 37}},
}};

/// Non-highlighted electrodes, signed values.
inline constexpr std::array<ColorStop, 2> kGrayStops{{
    {0.0, {24, 24, 24}},
    {1.0, {232, 232, 232}},
}};

inline Rgb lookup(std::span<const ColorStop> stops, double t) {
  if (!(t >= 0.0)) t = 0.0;  // also maps NaN to the first stop
  if (t > 1.0) t = 1.0;
  std::size_t k = 1;
  while (k + 1 < stops.size() && t > stops[k].at) ++k;
  const auto& a = stops[k - 1];
  const auto& b = stops[k];
  const double f = (t - a.at) / (b.at - a.at);
  auto mix = [f](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(std::lround(x + (static_cast<double>(y) - x) * f));
  };
  return {mix(a.color.r, b.color.r), mix(a.color.g, b.color.g), mix(a.color.b, b.color.b)};
}

enum class Colormap { Diverging, Sequential, Gray };

/// Color of a display value. Diverging and Gray take values in [-1, 1],
/// Sequential in [0, 1]; values outside are clamped.
inline Rgb colorOf(Colormap map, double value) {
  switch (map) {
    case Colormap::Diverging: return lookup(kDivergingStops, (value + 1.0) / 2.0);
    case Colormap::Sequential: return lookup(kSequentialStops, value);
    case Colormap::Gray: return lookup(kGrayStops, (value + 1.0) / 2.0);
  }
  return {0, 0, 0};
}

}  // namespace teegi::topomap
