#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "teegi/errors.hpp"

namespace teegi {

/// A run of multichannel EEG samples in microvolts, channels in montage order.
///
/// Storage is channel-major: `channels[c][n]` is sample n of channel c. All
/// channels have the same length.
struct SampleBlock {
  double t0 = 0.0;  ///< time of the first sample (s)
  double fs = 0.0;  ///< sampling rate (Hz)
  std::vector<std::vector<double>> channels;

  SampleBlock() = default;
  SampleBlock(double t0_, double fs_, std::size_t channelCount, std::size_t length)
      : t0(t0_), fs(fs_), channels(channelCount, std::vector<double>(length, 0.0)) {}

  std::size_t channelCount() const noexcept { return channels.size(); }
  std::size_t length() const noexcept { return channels.empty() ? 0 : channels.front().size(); }
  double duration() const noexcept { return fs > 0 ? static_cast<double>(length()) / fs : 0.0; }
  double timeOf(std::size_t n) const noexcept { return t0 + static_cast<double>(n) / fs; }

  std::span<const double> channel(std::size_t c) const { return channels.at(c); }
  std::span<double> channel(std::size_t c) { return channels.at(c); }

  void validate() const {
    if (!(fs > 0)) throw ContractError("SampleBlock: sampling rate must be positive");
    for (const auto& ch : channels)
      if (ch.size() != length()) throw ContractError("SampleBlock: ragged channel lengths");
  }

  /// Samples [begin, end) of every channel; t0 shifts accordingly.
  SampleBlock slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > length()) throw ContractError("SampleBlock::slice out of range");
    SampleBlock out;
    out.t0 = timeOf(begin);
    out.fs = fs;
    out.channels.reserve(channels.size());
    for (const auto& ch : channels)
      out.channels.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(begin),
                                ch.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
  }
};

}  // namespace teegi
