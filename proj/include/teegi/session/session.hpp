#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "teegi/recording.hpp"
#include "teegi/session/engine.hpp"

namespace teegi::session {

/// Pull-based sample stream. read() returns at most `maxSamples` samples, or
/// nullopt at end of stream.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual double fs() const = 0;
  virtual std::optional<SampleBlock> read(std::size_t maxSamples) = 0;
};

/// Serves an in-memory block (a loaded recording or generated scenario).
class BlockSource final : public SampleSource {
 public:
  explicit BlockSource(SampleBlock block) : block_(std::move(block)) { block_.validate(); }

  double fs() const override { return block_.fs; }

  std::optional<SampleBlock> read(std::size_t maxSamples) override {
    if (pos_ >= block_.length() || maxSamples == 0) return std::nullopt;
    const std::size_t end = std::min(block_.length(), pos_ + maxSamples);
    auto out = block_.slice(pos_, end);
    pos_ = end;
    return out;
  }

 private:
  SampleBlock block_;
  std::size_t pos_ = 0;
};

/// Controls received from clients, applied by the processing task between
/// chunks in arrival order.
class ControlQueue {
 public:
  void push(protocol::Control c) {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(c));
  }

  std::vector<protocol::Control> drain() {
    std::lock_guard lock(mu_);
    std::vector<protocol::Control> out;
    out.swap(items_);
    return out;
  }

 private:
  std::mutex mu_;
  std::vector<protocol::Control> items_;
};

class MessageSink {
 public:
  virtual ~MessageSink() = default;
  virtual void publish(const json& message) = 0;
  /// Latest session state, for hello messages sent to late joiners.
  virtual void updateState(const json& /*state*/) {}
};

struct SessionStats {
  std::size_t frames = 0;
  std::size_t traces = 0;
  std::size_t errors = 0;
};

/// Feeds the source through the engine one frame interval at a time and
/// publishes everything it produces, ending with an "end" message. `speed` is
/// the pacing factor relative to real time; 0 runs as fast as possible.
inline SessionStats runSession(SampleSource& source, Engine& engine, MessageSink& sink, ControlQueue& controls,
                               double speed = 1.0, const std::atomic<bool>* stop = nullptr) {
  if (speed < 0) throw ConfigError("speed must be >= 0");
  SessionStats stats;
  auto count = [&](const json& m) {
    const auto& type = m.at("type").get_ref<const std::string&>();
    if (type == "frame") ++stats.frames;
    else if (type == "trace") ++stats.traces;
    else if (type == "error") ++stats.errors;
    sink.publish(m);
  };

  const auto start = std::chrono::steady_clock::now();
  std::size_t sent = 0;
  const char* reason = "end_of_stream";
  sink.updateState(engine.stateJson());
  while (true) {
    if (stop && stop->load()) {
      reason = "stopped";
      break;
    }
    bool changed = false;
    for (const auto& c : controls.drain()) {
      for (const auto& m : engine.apply(c)) count(m);
      changed = true;
    }
    if (changed) sink.updateState(engine.stateJson());

    const std::size_t want = std::max<std::size_t>(1, engine.samplesUntilNextFrame());
    auto block = source.read(want);
    if (!block) break;
    if (speed > 0) {
      const double due = static_cast<double>(sent + block->length()) / source.fs() / speed;
      std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                std::chrono::duration<double>(due)));
    }
    sent += block->length();
    const auto before = engine.calibration();
    for (const auto& m : engine.push(*block)) count(m);
    if (engine.calibration() != before) sink.updateState(engine.stateJson());
  }
  sink.publish(engine.endMessage(reason));
  return stats;
}

}  // namespace teegi::session
