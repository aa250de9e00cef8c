#pragma once

#include <cmath>
#include <numbers>

#include "teegi/inverse/leadfield.hpp"
#include "teegi/montage.hpp"

// Analytic toy lead field for tests and the bundled sample file: radial unit
// dipoles on a Fibonacci sphere inside an unbounded homogeneous conductor,
// observed at the electrode positions. Not a head model.

namespace teegi::inverse {

inline constexpr double kSourceRadius = 0.75;
inline constexpr double kSourceMinPolar = 0.0;
inline constexpr double kSourceMaxPolar = 2.0 * std::numbers::pi / 3.0;

/// n points spread evenly over the spherical cap polar <= kSourceMaxPolar at
/// radius kSourceRadius.
inline std::vector<Vec3> fibonacciCap(std::size_t n) {
  std::vector<Vec3> out;
  out.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double zMin = std::cos(kSourceMaxPolar);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (1.0 - zMin) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    out.push_back(kSourceRadius * Vec3{r * std::cos(phi), r * std::sin(phi), z});
  }
  return out;
}

inline LeadField sphericalLeadField(const Montage& montage, std::size_t voxels) {
  LeadField lf;
  lf.voxelPositions = fibonacciCap(voxels);
  lf.gain.resize(static_cast<Eigen::Index>(montage.size()), static_cast<Eigen::Index>(voxels));
  for (std::size_t v = 0; v < voxels; ++v) {
    const Vec3 src = lf.voxelPositions[v];
    const Vec3 moment = (1.0 / norm(src)) * src;
    for (std::size_t e = 0; e < montage.size(); ++e) {
      const Vec3 d = montage[e].pos - src;
      const double r = norm(d);
      // potential of a unit current dipole, scaled to tens of uV
      lf.gain(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(v)) = 10.0 * dot(moment, d) / (r * r * r);
    }
  }
  return lf;
}

}  // namespace teegi::inverse
