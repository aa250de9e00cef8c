#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "teegi/pipelines/config.hpp"
#include "teegi/topomap/topomap.hpp"

using namespace teegi;
using namespace teegi::topomap;

namespace {

const Montage& M() { return standardMontage(); }

const TopoGrid& grid128() {
  static const TopoGrid g(M(), 128, 128);
  return g;
}

std::vector<double> randomValues(std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(M().size());
  for (auto& x : v) x = u(rng);
  return v;
}

// Independent oracle: plain acos of the dot product, nearest-electrode scan.
double oracleDistance(const Vec3& a, const Vec3& b) {
  const double c = a.x * b.x + a.y * b.y + a.z * b.z;
  return std::acos(std::max(-1.0, std::min(1.0, c)));
}

Vec3 rotateToward(const Vec3& from, const Vec3& dir, double angle) {
  return std::cos(angle) * from + std::sin(angle) * dir;
}

std::size_t nearestElectrode(const Vec3& p) {
  std::size_t best = 0;
  for (std::size_t e = 1; e < M().size(); ++e)
    if (oracleDistance(p, M()[e].pos) < oracleDistance(p, M()[best].pos)) best = e;
  return best;
}

}  // namespace

TEST(Interpolate, GridTooSmallIsAConfigError) {
  EXPECT_THROW(TopoGrid(M(), 31, 128), ConfigError);
  EXPECT_THROW(TopoGrid(M(), 128, 16), ConfigError);
  EXPECT_NO_THROW(TopoGrid(M(), 32, 32));
}

TEST(Interpolate, ExactAtElectrodePixels) {
  std::mt19937_64 rng(1);
  for (std::size_t size : {64u, 128u, 256u}) {
    const TopoGrid g(M(), size, size);
    for (int trial = 0; trial < 20; ++trial) {
      const auto v = randomValues(rng, -50, 50);
      const auto f = g.interpolate(v);
      for (std::size_t e = 0; e < M().size(); ++e) {
        const auto p = g.electrodePixel(e);
        EXPECT_EQ(f.mask[p], 1);
        EXPECT_NEAR(f.values[p], v[e], 1e-6) << M()[e].name << " at " << size;
      }
    }
  }
}

TEST(Interpolate, ConstantInputGivesConstantField) {
  const std::vector<double> v(32, 0.4);
  const auto f = grid128().interpolate(v);
  std::size_t masked = 0;
  for (std::size_t p = 0; p < f.values.size(); ++p) {
    if (f.mask[p]) {
      ++masked;
      EXPECT_NEAR(f.values[p], 0.4, 1e-9);
    } else {
      EXPECT_EQ(f.values[p], 0.0);
    }
  }
  // the head disc covers pi/4 of the square
  EXPECT_NEAR(double(masked) / f.values.size(), std::numbers::pi / 4, 0.01);
}

TEST(Interpolate, LinearInInputs) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = randomValues(rng), w = randomValues(rng);
    const double a = u(rng), b = u(rng);
    std::vector<double> mix(32);
    for (std::size_t i = 0; i < 32; ++i) mix[i] = a * v[i] + b * w[i];
    const auto fv = grid128().interpolate(v), fw = grid128().interpolate(w), fm = grid128().interpolate(mix);
    for (std::size_t p = 0; p < fm.values.size(); ++p)
      ASSERT_NEAR(fm.values[p], a * fv.values[p] + b * fw.values[p], 1e-9);
  }
}

TEST(Interpolate, BoundedByInputRange) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = randomValues(rng);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const auto f = grid128().interpolate(v);
    for (std::size_t p = 0; p < f.values.size(); ++p) {
      if (!f.mask[p]) continue;
      ASSERT_GE(f.values[p], *lo - 1e-12);
      ASSERT_LE(f.values[p], *hi + 1e-12);
    }
  }
}

TEST(Interpolate, MatchesDirectShepardOracle) {
  std::mt19937_64 rng(4);
  const auto v = randomValues(rng);
  const TopoGrid g(M(), 64, 64);
  const auto f = g.interpolate(v);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      const std::size_t p = y * 64 + x;
      bool electrode = false;
      for (std::size_t e = 0; e < 32; ++e) electrode |= g.electrodePixel(e) == p;
      const auto pos = positionFromUv((x + 0.5) / 64, (y + 0.5) / 64);
      ASSERT_EQ(bool(pos), f.mask[p] == 1 || electrode);
      if (!pos || electrode) continue;
      double num = 0, den = 0;
      for (std::size_t e = 0; e < 32; ++e) {
        const double d = oracleDistance(*pos, M()[e].pos);
        num += v[e] / (d * d + 1e-12);
        den += 1 / (d * d + 1e-12);
      }
      ASSERT_NEAR(f.values[p], num / den, 1e-12);
    }
}

TEST(Interpolate, SingleElectrodeDecaysAlongRaysInItsCell) {
  // Field of a unit impulse at electrode e, sampled along great circles from
  // e. Inside e's nearest-electrode cell the value must not increase; past the
  // cell boundary the neighbor's node pulls the field to zero and it may rise
  // again, so the ray stops there.
  for (std::size_t e = 0; e < M().size(); ++e) {
    std::vector<double> v(32, 0.0);
    v[e] = 1.0;
    const Vec3 c = M()[e].pos;
    // tangent basis at c
    const Vec3 ref = std::abs(c.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    Vec3 t1 = ref - dot(ref, c) * c;
    t1 = (1.0 / norm(t1)) * t1;
    const Vec3 t2{c.y * t1.z - c.z * t1.y, c.z * t1.x - c.x * t1.z, c.x * t1.y - c.y * t1.x};
    for (int k = 0; k < 24; ++k) {
      const double a = 2 * std::numbers::pi * k / 24;
      const Vec3 dir = std::cos(a) * t1 + std::sin(a) * t2;
      double prev = shepardAt(M(), c, v);
      EXPECT_EQ(prev, 1.0);
      for (double s = 0.002; s < std::numbers::pi; s += 0.002) {
        const Vec3 p = rotateToward(c, dir, s);
        if (nearestElectrode(p) != e || std::acos(std::clamp(p.z, -1.0, 1.0)) > kChartPolarExtent) break;
        const double val = shepardAt(M(), p, v);
        ASSERT_LE(val, prev + 1e-12) << M()[e].name << " ray " << k << " s=" << s;
        prev = val;
      }
    }
  }
}

TEST(Colorize, VoronoiPartitionMatchesBruteForce) {
  const auto& g = grid128();
  std::mt19937_64 rng(5);
  std::vector<std::vector<std::size_t>> sets;
  for (auto k : pipelines::kAllKinds) sets.push_back(pipelines::highlightOf(k, M()));
  for (int t = 0; t < 6; ++t) {
    std::vector<std::size_t> s;
    for (std::size_t e = 0; e < 32; ++e)
      if (rng() % 3 == 0) s.push_back(e);
    sets.push_back(s);
  }
  sets.push_back({});
  for (const auto& hi : sets) {
    const auto part = g.highlightPartition(hi);
    for (std::size_t y = 0; y < 128; ++y)
      for (std::size_t x = 0; x < 128; ++x) {
        const std::size_t p = y * 128 + x;
        std::optional<Vec3> pos;
        for (std::size_t e = 0; e < 32 && !pos; ++e)
          if (g.electrodePixel(e) == p) pos = M()[e].pos;
        if (!pos) pos = positionFromUv((x + 0.5) / 128, (y + 0.5) / 128);
        if (!pos) {
          ASSERT_EQ(part[p], 0);
          continue;
        }
        const auto near = nearestElectrode(*pos);
        const bool expected = std::find(hi.begin(), hi.end(), near) != hi.end();
        ASSERT_EQ(part[p] == 1, expected) << x << "," << y;
      }
  }
}

TEST(Colorize, HighlightAllLeavesNoGray) {
  const auto& g = grid128();
  std::mt19937_64 rng(6);
  const auto v = randomValues(rng);
  const auto f = g.interpolate(v);
  const auto all = pipelines::highlightOf(pipelines::PipelineKind::Raw, M());
  const auto img = colorize(f, all, g);
  for (std::size_t y = 0; y < 128; ++y)
    for (std::size_t x = 0; x < 128; ++x) {
      if (!f.inside(x, y)) {
        EXPECT_EQ(img.alpha(x, y), 0);
        continue;
      }
      EXPECT_EQ(img.alpha(x, y), 255);
      EXPECT_EQ(img.rgb(x, y), colorOf(Colormap::Diverging, f.at(x, y)));
    }
}

TEST(Colorize, GainIsAPreLookupMultiplier) {
  const auto& g = grid128();
  const auto f02 = g.interpolate(std::vector<double>(32, 0.2));
  const auto f04 = g.interpolate(std::vector<double>(32, 0.4));
  const auto hi = pipelines::highlightOf(pipelines::PipelineKind::Vision, M());
  ColorPolicy doubled;
  doubled.gain = 2.0;
  EXPECT_EQ(colorize(f02, hi, g, doubled).pixels, colorize(f04, hi, g).pixels);
}

TEST(Colorize, VisionHighlightsOccipitalAndGraysFrontal) {
  const auto& g = grid128();
  const auto f = g.interpolate(std::vector<double>(32, 0.5));
  const auto hi = pipelines::highlightOf(pipelines::PipelineKind::Vision, M());
  const auto img = colorize(f, hi, g);
  auto colorAt = [&](const char* name) {
    const auto p = g.electrodePixel(M().index(name));
    return img.rgb(p % 128, p / 128);
  };
  for (const char* name : {"O1", "Oz", "O2"}) EXPECT_EQ(colorAt(name), colorOf(Colormap::Diverging, 0.5)) << name;
  EXPECT_EQ(colorAt("Fp1"), colorOf(Colormap::Gray, 0.5));
  EXPECT_NE(colorOf(Colormap::Gray, 0.5), colorOf(Colormap::Diverging, 0.5));
}

TEST(Colorize, Deterministic) {
  std::mt19937_64 rng(7);
  const auto f = grid128().interpolate(randomValues(rng));
  const auto hi = pipelines::highlightOf(pipelines::PipelineKind::Motor, M());
  const auto a = colorize(f, hi, grid128());
  const TopoGrid other(M(), 128, 128);
  EXPECT_EQ(a.pixels, colorize(f, hi, grid128()).pixels);
  EXPECT_EQ(a.pixels, colorize(f, hi, other).pixels);
}

TEST(Colormap, StopsAndClamping) {
  EXPECT_EQ(colorOf(Colormap::Diverging, -1), (Rgb{59, 76, 192}));
  EXPECT_EQ(colorOf(Colormap::Diverging, 0), (Rgb{221, 221, 221}));
  EXPECT_EQ(colorOf(Colormap::Diverging, 1), (Rgb{180, 4, 38}));
  EXPECT_EQ(colorOf(Colormap::Diverging, 7), colorOf(Colormap::Diverging, 1));
  EXPECT_EQ(colorOf(Colormap::Sequential, -0.5), colorOf(Colormap::Sequential, 0));
  EXPECT_EQ(colorOf(Colormap::Sequential, 1), (Rgb{253, 231, 37}));
  EXPECT_EQ(colorOf(Colormap::Gray, std::nan("")), colorOf(Colormap::Gray, -1));
  int last = -1;
  for (double v = -1; v <= 1.0; v += 0.01) {
    const auto c = colorOf(Colormap::Gray, v);
    EXPECT_EQ(c.r, c.g);
    EXPECT_EQ(c.g, c.b);
    EXPECT_GE(c.r, last);
    last = c.r;
  }
}

TEST(EyeState, FollowsBlinkFlag) {
  EXPECT_EQ(eyeState(true), EyeState::Closed);
  EXPECT_EQ(eyeState(false), EyeState::Open);
  const std::vector<bool> pulses{false, true, true, false, true, false, false};
  for (std::size_t i = 0; i < pulses.size(); ++i)
    EXPECT_EQ(eyeState(pulses[i]) == EyeState::Closed, bool(pulses[i]));
}
