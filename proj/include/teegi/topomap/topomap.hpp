#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teegi/errors.hpp"
#include "teegi/montage.hpp"
#include "teegi/topomap/colormap.hpp"

namespace teegi::topomap {

inline constexpr std::size_t kDefaultGridSize = 128;
inline constexpr std::size_t kMinGridSize = 32;
inline constexpr double kShepardEpsilon = 1e-12;
inline constexpr double kSnapDistance = 1e-9;

/// Scalar field over the head chart. Row 0 is the nose side (v = 0).
struct ScalpField {
  std::size_t width = 0, height = 0;
  std::vector<double> values;     ///< row-major; 0 outside the mask
  std::vector<std::uint8_t> mask;  ///< row-major; 1 on the head disc

  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  bool inside(std::size_t x, std::size_t y) const { return mask[y * width + x] != 0; }
};

/// Modified Shepard interpolation on the sphere: weights 1 / (d^2 + eps) on
/// great-circle distance, exact at the nodes.
inline double shepardAt(const Montage& m, const Vec3& p, std::span<const double> values) {
  if (values.size() != m.size())
    throw ContractError("interpolate: expected " + std::to_string(m.size()) + " values, got " +
                        std::to_string(values.size()));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = geodesicDistance(p, m[i].pos);
    if (d < kSnapDistance) return values[i];
    const double w = 1.0 / (d * d + kShepardEpsilon);
    num += w * values[i];
    den += w;
  }
  return num / den;
}

/// Pixel of a chart coordinate.
inline std::size_t pixelOf(double coord, std::size_t size) {
  const auto i = static_cast<std::ptrdiff_t>(std::floor(coord * static_cast<double>(size)));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(size) - 1));
}

/// Precomputed interpolation weights and electrode distances for one grid
/// size. Immutable after construction; safe to share between threads.
class TopoGrid {
 public:
  TopoGrid(const Montage& montage, std::size_t width = kDefaultGridSize,
           std::size_t height = kDefaultGridSize)
      : montage_(&montage), width_(width), height_(height) {
    if (width < kMinGridSize || height < kMinGridSize)
      throw ConfigError("topomap grid must be at least " + std::to_string(kMinGridSize) + "x" +
                        std::to_string(kMinGridSize) + ", got " + std::to_string(width) + "x" +
                        std::to_string(height));
    const std::size_t m = montage.size();
    const std::size_t n = width * height;
    mask_.assign(n, 0);
    pixelIndex_.assign(n, kOutside);

    // Electrode pixels sample the electrode itself.
    std::vector<std::optional<Vec3>> pos(n);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        pos[y * width + x] = positionFromUv((x + 0.5) / static_cast<double>(width),
                                            (y + 0.5) / static_cast<double>(height));
    electrodePixel_.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      const auto px = pixelOf(montage[e].uv[0], width);
      const auto py = pixelOf(montage[e].uv[1], height);
      electrodePixel_[e] = py * width + px;
    }
    for (std::size_t e = m; e-- > 0;) pos[electrodePixel_[e]] = montage[e].pos;

    for (std::size_t p = 0; p < n; ++p) {
      if (!pos[p]) continue;
      mask_[p] = 1;
      pixelIndex_[p] = pixels_.size();
      pixels_.push_back(p);
      std::size_t snapped = kOutside;
      for (std::size_t e = 0; e < m; ++e) {
        const double d = geodesicDistance(*pos[p], montage[e].pos);
        distance_.push_back(d);
        if (d < kSnapDistance && snapped == kOutside) snapped = e;
      }
      const double* d = &distance_[distance_.size() - m];
      double den = 0.0;
      for (std::size_t e = 0; e < m; ++e) {
        const double w = snapped == kOutside ? 1.0 / (d[e] * d[e] + kShepardEpsilon)
                                             : static_cast<double>(e == snapped);
        weights_.push_back(w);
        den += w;
      }
      for (std::size_t e = 0; e < m; ++e) weights_[weights_.size() - m + e] /= den;
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const Montage& montage() const noexcept { return *montage_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  std::size_t maskedCount() const noexcept { return pixels_.size(); }

  /// Row-major pixel index holding electrode e.
  std::size_t electrodePixel(std::size_t e) const { return electrodePixel_.at(e); }

  ScalpField interpolate(std::span<const double> values) const {
    const std::size_t m = montage_->size();
    if (values.size() != m)
      throw ContractError("interpolate: expected " + std::to_string(m) + " values, got " +
                          std::to_string(values.size()));
    ScalpField f{width_, height_, std::vector<double>(width_ * height_, 0.0), mask_};
    for (std::size_t k = 0; k < pixels_.size(); ++k) {
      const double* w = &weights_[k * m];
      double acc = 0.0;
      for (std::size_t e = 0; e < m; ++e) acc += w[e] * values[e];
      f.values[pixels_[k]] = acc;
    }
    return f;
  }

  /// Masked pixels strictly nearer to a highlighted electrode than to every
  /// non-highlighted one.
  std::vector<std::uint8_t> highlightPartition(std::span<const std::size_t> highlight) const {
    const std::size_t m = montage_->size();
    std::vector<bool> isHi(m, false);
    for (auto e : highlight) isHi.at(e) = true;
    std::vector<std::uint8_t> out(width_ * height_, 0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pixels_.size(); ++k) {
      const double* d = &distance_[k * m];
      double hi = inf, lo = inf;
      for (std::size_t e = 0; e < m; ++e) {
        if (isHi[e])
          hi = std::min(hi, d[e]);
        else
          lo = std::min(lo, d[e]);
      }
      out[pixels_[k]] = hi < lo;
    }
    return out;
  }

 private:
  static constexpr std::size_t kOutside = std::numeric_limits<std::size_t>::max();

  const Montage* montage_;
  std::size_t width_, height_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> pixels_;      // masked pixel -> row-major index
  std::vector<std::size_t> pixelIndex_;  // row-major index -> masked pixel
  std::vector<std::size_t> electrodePixel_;
  std::vector<double> weights_;   // masked pixel x electrode, rows sum to 1
  std::vector<double> distance_;  // masked pixel x electrode, radians
};

inline ScalpField interpolate(std::span<const double> values, const Montage& montage,
                              std::size_t width = kDefaultGridSize,
                              std::size_t height = kDefaultGridSize) {
  return TopoGrid(montage, width, height).interpolate(values);
}

struct ColorPolicy {
  double gain = 1.0;
  Colormap highlightMap = Colormap::Diverging;
  Colormap grayMap = Colormap::Gray;
};

/// RGBA image, row-major, 4 bytes per pixel; alpha 0 outside the mask.
struct RgbaImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;

  Rgb rgb(std::size_t x, std::size_t y) const {
    const auto* p = &pixels[(y * width + x) * 4];
    return {p[0], p[1], p[2]};
  }
  std::uint8_t alpha(std::size_t x, std::size_t y) const { return pixels[(y * width + x) * 4 + 3]; }
};

inline RgbaImage colorize(const ScalpField& field, std::span<const std::size_t> highlight,
                          const TopoGrid& grid, const ColorPolicy& policy = {}) {
  if (field.width != grid.width() || field.height != grid.height())
    throw ContractError("colorize: field and grid sizes differ");
  const auto partition = grid.highlightPartition(highlight);
  RgbaImage img{field.width, field.height, std::vector<std::uint8_t>(field.values.size() * 4, 0)};
  for (std::size_t p = 0; p < field.values.size(); ++p) {
    if (!field.mask[p]) continue;
    const double v = policy.gain * field.values[p];
    const Rgb c = colorOf(partition[p] ? policy.highlightMap : policy.grayMap, v);
    img.pixels[p * 4 + 0] = c.r;
    img.pixels[p * 4 + 1] = c.g;
    img.pixels[p * 4 + 2] = c.b;
    img.pixels[p * 4 + 3] = 255;
  }
  return img;
}

enum class EyeState { Open, Closed };

inline constexpr EyeState eyeState(bool blink) { return blink ? EyeState::Closed : EyeState::Open; }

inline constexpr const char* toString(EyeState s) { return s == EyeState::Closed ? "closed" : "open"; }

}  // namespace teegi::topomap
