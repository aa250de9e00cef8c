#pragma once

#include <span>
#include <string_view>

#include "teegi/montage.hpp"

namespace teegi::dsp {

/// Center value minus the mean of its montage neighbors.
inline double laplacian(std::span<const double> values, std::size_t center, const Montage& montage) {
  if (values.size() != montage.size())
    throw ContractError("laplacian: expected one value per electrode");
  const auto& nbrs = montage.laplacianNeighbors(center);
  double mean = 0.0;
  for (auto i : nbrs) mean += values[i];
  mean /= static_cast<double>(nbrs.size());
  return values[center] - mean;
}

inline double laplacian(std::span<const double> values, std::string_view center,
                        const Montage& montage) {
  return laplacian(values, montage.index(center), montage);
}

}  // namespace teegi::dsp
