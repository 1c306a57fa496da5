#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fa/boundary.hpp"
#include "fa/synthkit.hpp"
#include "support.hpp"

using namespace fa;
using fa::test::error_kind;
using fa::test::tiny_artifact;

namespace {

std::vector<StripClassification> strips_from(const std::vector<double>& probs, int width = 100,
                                             double threshold = 0.8) {
  std::vector<StripClassification> out;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int x0 = static_cast<int>(i) * width;
    out.push_back({static_cast<int>(i), x0, x0 + width, probs[i], apply_threshold(probs[i], threshold)});
  }
  return out;
}

}  // namespace

TEST(Tile, FrameWidthExample) {
  const auto iv = tile_intervals(1440, 100);
  ASSERT_EQ(iv.size(), 15u);
  for (int i = 0; i < 14; ++i) EXPECT_EQ(iv[i].x1 - iv[i].x0, 100);
  EXPECT_EQ(iv.back().x0, 1400);
  EXPECT_EQ(iv.back().x1, 1440);
  EXPECT_EQ(tile_intervals(300, 100).size(), 3u);
  EXPECT_EQ(tile_intervals(300, 100).back().x1, 300);
}

TEST(Tile, Errors) {
  EXPECT_EQ(error_kind([] { tile_intervals(90, 100); }), ErrorKind::ImageTooNarrow);
  EXPECT_EQ(error_kind([] { tile_intervals(90, 0); }), ErrorKind::InvalidParams);
  EXPECT_EQ(error_kind([] { tile(cv::Mat(50, 90, CV_8UC3), 100); }), ErrorKind::ImageTooNarrow);
}

TEST(Tile, PartitionProperty) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const int w = 1 + static_cast<int>(rng() % 400);
    const int extent = w + static_cast<int>(rng() % 5000);
    const auto iv = tile_intervals(extent, w);
    EXPECT_EQ(iv.size(), static_cast<std::size_t>((extent + w - 1) / w));
    int at = 0;
    for (std::size_t k = 0; k < iv.size(); ++k) {
      EXPECT_EQ(iv[k].index, static_cast<int>(k));
      EXPECT_EQ(iv[k].x0, at);
      EXPECT_LT(iv[k].x0, iv[k].x1);
      if (k + 1 < iv.size()) {
        EXPECT_EQ(iv[k].x1 - iv[k].x0, w);
      }
      at = iv[k].x1;
    }
    EXPECT_EQ(at, extent);
    EXPECT_EQ(iv.back().x1 - iv.back().x0, extent % w == 0 ? w : extent % w);
  }
}

TEST(Tile, ViewsFollowTheAxis) {
  cv::Mat img(250, 320, CV_8UC3);
  cv::randu(img, 0, 256);
  const auto h = tile(img, 100, Axis::horizontal);
  ASSERT_EQ(h.size(), 4u);
  EXPECT_EQ(h[3].image.size(), cv::Size(20, 250));
  EXPECT_EQ(cv::norm(h[1].image, img(cv::Rect(100, 0, 100, 250)), cv::NORM_INF), 0.0);
  const auto v = tile(img, 100, Axis::vertical);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[2].image.size(), cv::Size(320, 50));
}

TEST(Estimate, ContiguousExample) {
  const auto e = estimate_boundary(strips_from({0.99, 0.95, 0.90, 0.85, 0.40, 0.20}), DistalDirection::increasing_x);
  EXPECT_EQ(e.boundary_x, 400);
  EXPECT_TRUE(e.contiguous);
  EXPECT_FALSE(e.saturated);
  EXPECT_EQ(e.strips.size(), 6u);
  EXPECT_DOUBLE_EQ(e.threshold, 0.8);
}

TEST(Estimate, GapUsesMostDistalStrip) {
  const auto e = estimate_boundary(strips_from({0.9, 0.2, 0.9, 0.1}), DistalDirection::increasing_x);
  EXPECT_EQ(e.boundary_x, 300);
  EXPECT_FALSE(e.contiguous);
}

TEST(Estimate, NothingFluorescent) {
  try {
    estimate_boundary(strips_from({0.1, 0.2, 0.3}), DistalDirection::increasing_x);
    FAIL() << "expected NoFluorescentRegion";
  } catch (const NoFluorescentRegion& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoFluorescentRegion);
    EXPECT_FALSE(e.estimate().boundary_x.has_value());
    EXPECT_EQ(e.estimate().strips.size(), 3u);
  }
}

TEST(Estimate, SaturatedAndDecreasing) {
  const auto sat = estimate_boundary(strips_from({0.9, 0.95, 0.99}, 100), DistalDirection::increasing_x);
  EXPECT_TRUE(sat.saturated);
  EXPECT_EQ(sat.boundary_x, 300);

  // Distal toward x = 0: fluorescent on the right, boundary at the left edge of the leftmost lit strip.
  const auto dec = estimate_boundary(strips_from({0.1, 0.2, 0.9, 0.95, 0.99}), DistalDirection::decreasing_x);
  EXPECT_EQ(dec.boundary_x, 200);
  EXPECT_TRUE(dec.contiguous);
  EXPECT_EQ(dec.strips.front().x0, 400);  // proximal first
  EXPECT_EQ(dec.strips.front().index, 0);
  const auto dsat = estimate_boundary(strips_from({0.9, 0.9}), DistalDirection::decreasing_x);
  EXPECT_EQ(dsat.boundary_x, 0);
  EXPECT_TRUE(dsat.saturated);
}

TEST(Estimate, InputErrors) {
  EXPECT_EQ(error_kind([] { estimate_boundary({}, DistalDirection::increasing_x); }), ErrorKind::EmptyInput);
  auto overlap = strips_from({0.9, 0.9});
  overlap[1].x0 = 50;
  EXPECT_EQ(error_kind([&] { estimate_boundary(overlap, DistalDirection::increasing_x); }), ErrorKind::InvalidParams);
  auto empty = strips_from({0.9});
  empty[0].x1 = empty[0].x0;
  EXPECT_EQ(error_kind([&] { estimate_boundary(empty, DistalDirection::increasing_x); }), ErrorKind::InvalidParams);
}

TEST(Estimate, OrderOfInputDoesNotMatter) {
  auto s = strips_from({0.9, 0.9, 0.1, 0.9, 0.1});
  std::reverse(s.begin(), s.end());
  EXPECT_EQ(estimate_boundary(s, DistalDirection::increasing_x).boundary_x, 400);
}

TEST(Estimate, MirrorSymmetry) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 15);
    const int w = 1 + static_cast<int>(rng() % 120);
    const int extent = std::max(w, (n - 1) * w + 1 + static_cast<int>(rng() % w));
    const auto iv = tile_intervals(extent, w);
    std::vector<StripClassification> s, m;
    for (const auto& i : iv) {
      const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      s.push_back({i.index, i.x0, i.x1, p, apply_threshold(p, 0.8)});
      m.push_back({i.index, extent - i.x1, extent - i.x0, p, apply_threshold(p, 0.8)});
    }
    std::optional<int> a, b;
    bool a_none = false, b_none = false;
    try {
      a = estimate_boundary(s, DistalDirection::increasing_x).boundary_x;
    } catch (const NoFluorescentRegion&) {
      a_none = true;
    }
    try {
      b = estimate_boundary(m, DistalDirection::decreasing_x).boundary_x;
    } catch (const NoFluorescentRegion&) {
      b_none = true;
    }
    ASSERT_EQ(a_none, b_none) << trial;
    if (!a_none) {
      EXPECT_EQ(*b, extent - *a) << trial;
    }
  }
}

TEST(Estimate, BracketingProperty) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(2 + rng() % 12);
    for (auto& v : p) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    try {
      const auto e = estimate_boundary(strips_from(p), DistalDirection::increasing_x);
      if (!e.contiguous || e.saturated) continue;
      const auto k = static_cast<std::size_t>(*e.boundary_x / 100);
      EXPECT_EQ(e.strips[k - 1].label, Label::fluorescent);
      EXPECT_EQ(e.strips[k].label, Label::not_fluorescent);
    } catch (const NoFluorescentRegion&) {
    }
  }
}

TEST(Estimate, RelabelKeepsProbabilities) {
  const auto s = relabel(strips_from({0.85, 0.5}), 0.4);
  EXPECT_EQ(s[1].label, Label::fluorescent);
  EXPECT_DOUBLE_EQ(s[1].probability, 0.5);
  EXPECT_EQ(relabel(strips_from({0.85}), 0.9)[0].label, Label::not_fluorescent);
}

TEST(Classify, MatchesWholeImagePredict) {
  const auto art = tiny_artifact();
  auto p = test::small_params(150);
  const auto img = synth::generate_frame(p).image;
  const auto strips = tile(img, 100);
  const auto cls = classify_strips(*art, strips, 0.8);
  ASSERT_EQ(cls.size(), 4u);
  for (std::size_t i = 0; i < cls.size(); ++i) {
    EXPECT_EQ(cls[i].probability, predict(*art, strips[i].image.clone()).probability);
    EXPECT_EQ(cls[i].x0, strips[i].interval.x0);
  }
  EXPECT_TRUE(classify_strips(*art, {}, 0.8).empty());
}

TEST(Analyze, ThresholdOneMeansNoRegion) {
  const auto art = tiny_artifact();
  const auto img = synth::generate_frame(test::small_params(150)).image;
  BoundaryOptions o;
  o.threshold = 1.0;
  try {
    analyze_boundary(*art, img, o);
    FAIL();
  } catch (const NoFluorescentRegion& e) {
    EXPECT_EQ(e.estimate().strips.size(), 4u);
    EXPECT_DOUBLE_EQ(e.estimate().threshold, 1.0);
  }
  o.threshold = 0.0;
  o.axis = Axis::vertical;
  const auto est = analyze_boundary(*art, img, o);
  EXPECT_EQ(est.axis, Axis::vertical);
  EXPECT_TRUE(est.saturated);
  EXPECT_EQ(est.boundary_x, 240);
}

TEST(Overlay, DrawsStripsAndBoundary) {
  const cv::Mat img(120, 400, CV_8UC3, cv::Scalar(50, 50, 50));
  const auto e = estimate_boundary(strips_from({0.9, 0.9, 0.1, 0.1}), DistalDirection::increasing_x);
  const auto out = render_boundary_overlay(img, e);
  ASSERT_EQ(out.size(), img.size());
  EXPECT_EQ(out.at<cv::Vec3b>(60, 200), cv::Vec3b(0, 255, 255));  // yellow line
  const auto lit = out.at<cv::Vec3b>(60, 50), dark = out.at<cv::Vec3b>(60, 350);
  EXPECT_GT(lit[1], lit[2]);  // green tint
  EXPECT_EQ(dark[0], dark[1]);  // grey tint
}

TEST(Export, WritesJpegPerStrip) {
  test::TempDir dir("strips");
  cv::Mat img(60, 250, CV_8UC3, cv::Scalar(10, 20, 30));
  const auto files = export_strips(tile(img, 100), dir / "out");
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "strip_000.jpg");
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f));
}
