#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numbers>

#include "support/spectral.hpp"
#include "teegi/recording.hpp"
#include "teegi/synth/generator.hpp"

using namespace teegi;
using namespace teegi::synth;

namespace {

Scenario withEvents(double duration, std::vector<ScenarioEvent> events, std::uint64_t seed = 7) {
  Scenario s;
  s.durationSec = duration;
  s.seed = seed;
  s.events = std::move(events);
  return s;
}

std::span<const double> segment(const SampleBlock& b, std::size_t c, double t0, double t1) {
  const auto i0 = static_cast<std::size_t>(t0 * b.fs), i1 = static_cast<std::size_t>(t1 * b.fs);
  return std::span<const double>(b.channels[c]).subspan(i0, i1 - i0);
}

double meanWindowPlv(const SampleBlock& b, std::size_t c1, std::size_t c2, double t0, double t1) {
  // 1 s windows, phases from the central half, averaged over hops of 0.5 s.
  const std::size_t win = static_cast<std::size_t>(b.fs);
  double sum = 0;
  int n = 0;
  for (double t = t0; t + 1.0 <= t1 + 1e-9; t += 0.5, ++n) {
    const auto pa = test::bandPhases(segment(b, c1, t, t + 1.0), b.fs, 7, 28);
    const auto pb = test::bandPhases(segment(b, c2, t, t + 1.0), b.fs, 7, 28);
    sum += test::plvOf(std::span(pa).subspan(win / 4, win / 2), std::span(pb).subspan(win / 4, win / 2));
  }
  return sum / n;
}

}  // namespace

TEST(Scenario, ValidationRejectsBadEvents) {
  EXPECT_THROW(withEvents(10, {{5, 4, EventKind::Blink, {}}}).validate(), ConfigError);
  EXPECT_THROW(withEvents(10, {{-1, 1, EventKind::Blink, {}}}).validate(), ConfigError);
  EXPECT_THROW(withEvents(10, {{9, 11, EventKind::Blink, {}}}).validate(), ConfigError);
  Scenario s;
  s.fs = 100;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(generate(withEvents(10, {{2, 1, EventKind::EyesClosed, {}}}), standardMontage()),
               ConfigError);
}

TEST(Scenario, JsonRoundTrip) {
  auto s = withEvents(30, {{1, 2, EventKind::EyesClosed, 12.5}, {3, 3.3, EventKind::Blink, {}}}, 99);
  const auto back = parseScenario(toJson(s).dump());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.durationSec, 30);
  ASSERT_EQ(back.events.size(), 2u);
  EXPECT_EQ(back.events[0].kind, EventKind::EyesClosed);
  EXPECT_EQ(back.events[0].amplitude(), 12.5);
  EXPECT_EQ(back.events[1].amplitude(), 80.0);
  EXPECT_THROW(parseScenario("{"), ParseError);
  EXPECT_THROW(parseScenario(R"({"durationSec":10,"fs":256,"seed":1,"events":[{"kind":"Sneeze","tStart":0,"tEnd":1}]})"),
               ConfigError);
}

TEST(Scenario, GroundTruthSampleIndices) {
  const auto g = groundTruthOf(withEvents(10, {{1.5, 2.25, EventKind::MoveFeet, {}}}));
  ASSERT_EQ(g.events.size(), 1u);
  EXPECT_EQ(g.events[0].startSample, 384u);
  EXPECT_EQ(g.events[0].endSample, 576u);
}

TEST(Generator, SameSeedIsBitIdentical) {
  const auto s = withEvents(10, {{2, 5, EventKind::EyesClosed, {}}, {6, 6.3, EventKind::Blink, {}}});
  const auto a = generate(s, standardMontage());
  const auto b = generate(s, standardMontage());
  EXPECT_EQ(a.samples.channels, b.samples.channels);
  auto s2 = s;
  s2.seed = 8;
  EXPECT_NE(generate(s2, standardMontage()).samples.channels, a.samples.channels);
}

TEST(Generator, BackgroundRmsNearTenMicrovolts) {
  const auto g = generate(withEvents(20, {}), standardMontage());
  const auto& m = standardMontage();
  for (const auto& name : {"Fp1", "T7", "Oz", "F8"}) {
    const auto& x = g.samples.channels[m.index(name)];
    double ss = 0;
    for (double v : x) ss += v * v;
    EXPECT_NEAR(std::sqrt(ss / x.size()), 10.0, 2.0) << name;
  }
}

TEST(Generator, RestSpectrumIsPink) {
  const auto g = generate(withEvents(10, {}, 3), standardMontage());
  const auto& m = standardMontage();
  for (const auto& name : {"Fp1", "T7", "Oz", "P8"}) {
    const double slope = test::logLogSlope(g.samples.channels[m.index(name)], 256, 2, 60);
    EXPECT_GE(-slope, 0.8) << name;
    EXPECT_LE(-slope, 1.2) << name;
  }
}

TEST(Generator, EyesClosedDoublesAlphaAtOz) {
  const auto& m = standardMontage();
  const auto g = generate(withEvents(30, {{10, 20, EventKind::EyesClosed, {}}}), m);
  const auto oz = m.index("Oz");
  const double rest = test::bandPower(segment(g.samples, oz, 0.5, 9.5), 256, 8, 12);
  const double closed = test::bandPower(segment(g.samples, oz, 10.5, 19.5), 256, 8, 12);
  EXPECT_GE(closed, 2.0 * rest);
}

TEST(Generator, LockAndUnlockPlvDifferByHalf) {
  const auto& m = standardMontage();
  const auto g = generate(withEvents(30, {{2, 12, EventKind::MeditationLock, {}},
                                          {16, 26, EventKind::MeditationUnlock, {}}}),
                          m);
  const auto afz = m.index("AFz"), pz = m.index("Pz");
  const double lock = meanWindowPlv(g.samples, afz, pz, 3, 11);
  const double unlock = meanWindowPlv(g.samples, afz, pz, 17, 25);
  EXPECT_GE(lock - unlock, 0.5) << lock << " vs " << unlock;
}

TEST(Generator, MovementModulatesBetaAtFocus) {
  const auto& m = standardMontage();
  const auto g = generate(withEvents(30, {{10, 15, EventKind::MoveRightHand, {}}}), m);
  const auto c3 = m.index("C3"), c4 = m.index("C4");
  const double rest = test::bandPower(segment(g.samples, c3, 1, 9), 256, 16, 24);
  const double during = test::bandPower(segment(g.samples, c3, 11, 15), 256, 16, 24);
  EXPECT_LT(during, 0.7 * rest);
  const double restC4 = test::bandPower(segment(g.samples, c4, 1, 9), 256, 16, 24);
  const double duringC4 = test::bandPower(segment(g.samples, c4, 11, 15), 256, 16, 24);
  EXPECT_GT(duringC4, 0.7 * restC4);
}

TEST(Generator, BlinkTemplateOnFrontopolarChannels) {
  const auto& m = standardMontage();
  const auto base = generate(withEvents(5, {}), m);
  const auto g = generate(withEvents(5, {{2.0, 2.3, EventKind::Blink, {}}}), m);
  for (const auto& name : {"Fp1", "Fp2"}) {
    const auto c = m.index(name);
    double peak = 0;
    for (std::size_t i = 0; i < g.samples.length(); ++i)
      peak = std::max(peak, std::abs(g.samples.channels[c][i] - base.samples.channels[c][i]));
    EXPECT_NEAR(peak, 80.0, 0.5) << name;
  }
}

TEST(Generator, EventEffectsAreLocal) {
  // Background streams do not depend on the event list, so the difference
  // against an event-free run isolates each event's footprint.
  const auto& m = standardMontage();
  const auto base = generate(withEvents(20, {}), m);
  struct Case {
    EventKind kind;
    std::vector<const char*> foci;
    double lo, hi;
  };
  for (const auto& c : {Case{EventKind::EyesClosed, {"Oz"}, 8, 12},
                        Case{EventKind::Blink, {"Fp1", "Fp2"}, 1, 10},
                        Case{EventKind::MoveRightHand, {"C3"}, 16, 24},
                        Case{EventKind::MeditationLock, {"AFz", "Pz"}, 7, 28}}) {
    const auto g = generate(withEvents(20, {{5, 15, c.kind, {}}}), m);
    for (std::size_t ch = 0; ch < m.size(); ++ch) {
      double nearest = std::numbers::pi;
      for (const auto* f : c.foci) nearest = std::min(nearest, m.distance(m.index(f), ch));
      if (nearest <= std::numbers::pi / 2) continue;
      const double p0 = test::bandPower(segment(base.samples, ch, 5, 15), 256, c.lo, c.hi);
      const double p1 = test::bandPower(segment(g.samples, ch, 5, 15), 256, c.lo, c.hi);
      EXPECT_LT(std::abs(p1 - p0), 0.1 * p0) << toString(c.kind) << " at " << m[ch].name;
    }
  }
}

TEST(Recording, WriteLoadRoundTripAtFloatPrecision) {
  const auto& m = standardMontage();
  const auto g = generate(withEvents(4, {{1, 1.3, EventKind::Blink, {}}, {2, 3, EventKind::EyesClosed, {}}}), m);
  const auto dir = std::filesystem::temp_directory_path() / "teegi_test_recording";
  std::filesystem::remove_all(dir);
  const auto csv = dir / "rec.csv";
  writeRecording(g.samples, g.truth, m, csv);
  const auto r = loadRecording(csv, m);
  EXPECT_EQ(r.samples.fs, 256.0);
  EXPECT_EQ(r.samples.t0, 0.0);
  ASSERT_EQ(r.samples.length(), g.samples.length());
  for (std::size_t c = 0; c < m.size(); ++c)
    for (std::size_t i = 0; i < r.samples.length(); ++i)
      ASSERT_EQ(static_cast<float>(r.samples.channels[c][i]), static_cast<float>(g.samples.channels[c][i]));
  ASSERT_TRUE(r.markers);
  ASSERT_EQ(r.markers->events.size(), 2u);
  EXPECT_EQ(r.markers->events[0].startSample, 256u);
  EXPECT_EQ(r.markers->events[1].event.kind, EventKind::EyesClosed);

  const auto text = readFile(csv);
  std::string header = "time";
  for (const auto& e : m.electrodes()) header += "," + e.name;
  EXPECT_EQ(text.substr(0, text.find('\n')), header);
  std::filesystem::remove_all(dir);
}

TEST(Recording, ShuffledColumnsAreRemapped) {
  const auto& m = standardMontage();
  std::string csv = "Oz,time";
  for (const auto& e : m.electrodes())
    if (e.name != "Oz") csv += "," + e.name;
  csv += "\n";
  for (int i = 0; i < 4; ++i) {
    csv += std::to_string(100 + i) + "," + std::to_string(i * 0.125);
    for (std::size_t c = 1; c < m.size(); ++c) csv += "," + std::to_string(i);
    csv += "\n";
  }
  // time must be first
  EXPECT_THROW(parseRecordingCsv(csv, m), ParseError);

  std::string ok = "time,Oz";
  for (const auto& e : m.electrodes())
    if (e.name != "Oz") ok += "," + e.name;
  ok += "\n";
  for (int i = 0; i < 4; ++i) {
    ok += std::to_string(i * 0.125) + "," + std::to_string(100 + i);
    for (std::size_t c = 1; c < m.size(); ++c) ok += "," + std::to_string(i);
    ok += "\n";
  }
  const auto b = parseRecordingCsv(ok, m);
  EXPECT_EQ(b.fs, 8.0);
  EXPECT_EQ(b.channels[m.index("Oz")], (std::vector<double>{100, 101, 102, 103}));
  EXPECT_EQ(b.channels[m.index("Fp1")], (std::vector<double>{0, 1, 2, 3}));
}

namespace {

std::string tinyCsv(const Montage& m, std::vector<double> times, const std::string& drop = "") {
  std::string s = "time";
  for (const auto& e : m.electrodes())
    if (e.name != drop) s += "," + e.name;
  s += "\n";
  for (double t : times) {
    s += std::to_string(t);
    for (const auto& e : m.electrodes())
      if (e.name != drop) s += ",1";
    s += "\n";
  }
  return s;
}

std::size_t errorLine(const std::string& csv) {
  try {
    parseRecordingCsv(csv, standardMontage());
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Recording, ParseErrorsCarryDiagnostics) {
  const auto& m = standardMontage();
  try {
    parseRecordingCsv(tinyCsv(m, {0, 0.5, 1.0}, "Pz"), m);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("Pz"), std::string::npos);
  }
  EXPECT_EQ(errorLine(tinyCsv(m, {0, 0.5, 0.25, 0.75})), 4u);  // non-monotonic
  EXPECT_EQ(errorLine(tinyCsv(m, {0, 0.5, 1.0, 1.6, 2.1})), 5u);  // jitter
  auto unknown = tinyCsv(m, {0, 1});
  unknown.replace(unknown.find("Fp1"), 3, "Xx9");
  EXPECT_EQ(errorLine(unknown), 1u);
  EXPECT_THROW(parseRecordingCsv("", m), ParseError);
  EXPECT_THROW(loadRecording("/nonexistent/teegi.csv", m), IoError);
}
