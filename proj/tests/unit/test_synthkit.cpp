#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fa/image_io.hpp"
#include "fa/synthkit.hpp"
#include "support.hpp"

using namespace fa;
using namespace fa::synth;
using fa::test::error_kind;
using fa::test::small_params;

namespace {

// Column where a monotone profile crosses `level`, by bisection on the model.
double crossing(const SynthParams& p, double level) {
  double lo = 0.0, hi = p.width;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool above = emission_at(p, mid) > level;
    const bool rising_left = p.distal_direction == DistalDirection::increasing_x;
    ((above == rising_left) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Synthkit, EmissionIsHalfAtTheBoundary) {
  auto p = small_params(150);
  p.fluorescence_gain = 0.8;
  EXPECT_NEAR(emission_at(p, 150.0), 0.5 * 0.8 * kEmissionSaturation, 1e-9);
}

TEST(Synthkit, FalloffWidthSpansNinetyToTenPercent) {
  for (double falloff : {5.0, 20.0, 50.0}) {
    for (auto dir : {DistalDirection::increasing_x, DistalDirection::decreasing_x}) {
      auto p = small_params(160);
      p.falloff_width = falloff;
      p.distal_direction = dir;
      const double x90 = crossing(p, 0.9 * kEmissionSaturation);
      const double x10 = crossing(p, 0.1 * kEmissionSaturation);
      EXPECT_NEAR(std::abs(x10 - x90), falloff, 1e-6) << falloff;
    }
  }
}

TEST(Synthkit, DirectionMirrorsTheProfile) {
  auto inc = small_params(120);
  auto dec = inc;
  dec.distal_direction = DistalDirection::decreasing_x;
  for (double d = -100; d <= 100; d += 7.5) {
    EXPECT_NEAR(emission_at(inc, 120 + d), emission_at(dec, 120 - d), 1e-9);
  }
  // Proximal side is perfused in both orientations.
  EXPECT_GT(emission_at(inc, 10), emission_at(inc, 300));
  EXPECT_LT(emission_at(dec, 10), emission_at(dec, 300));
}

TEST(Synthkit, NoBoundaryMeansFullyPerfused) {
  auto p = small_params(std::nullopt);
  for (double v : emission_profile(p)) EXPECT_DOUBLE_EQ(v, kEmissionSaturation);
}

TEST(Synthkit, TruthLabelMatchesWindowAverage) {
  // Oracle: brute-force mean of the analytic logistic over every 100-px window.
  auto oracle = [](const SynthParams& p) {
    const double s = p.falloff_width / (2.0 * std::log(9.0));
    double best = 0.0;
    for (int x0 = 0; x0 + 100 <= p.width; ++x0) {
      double sum = 0.0;
      for (int x = x0; x < x0 + 100; ++x) {
        double f = 1.0;
        if (p.boundary_x) {
          const double d = p.distal_direction == DistalDirection::increasing_x ? x + 0.5 - *p.boundary_x
                                                                                 : *p.boundary_x - (x + 0.5);
          f = 1.0 / (1.0 + std::exp(d / s));
        }
        sum += p.fluorescence_gain * 170.0 * f;
      }
      best = std::max(best, sum / 100.0);
    }
    return best > 17.0 ? Label::fluorescent : Label::not_fluorescent;
  };
  std::mt19937_64 rng(5);
  for (int i = 0; i < 60; ++i) {
    auto p = small_params(std::nullopt);
    if (rng() % 4) p.boundary_x = static_cast<int>(rng() % 320);
    p.fluorescence_gain = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    p.distal_direction = (rng() & 1) ? DistalDirection::decreasing_x : DistalDirection::increasing_x;
    EXPECT_EQ(truth_label_for(p), oracle(p)) << i;
  }
}

TEST(Synthkit, TruthLabelEdgeCases) {
  auto p = small_params(std::nullopt);
  p.fluorescence_gain = 0.0;
  EXPECT_EQ(truth_label_for(p), Label::not_fluorescent);
  p.fluorescence_gain = 1.0;
  EXPECT_EQ(truth_label_for(p), Label::fluorescent);
  // Front right at the proximal edge: almost nothing is perfused.
  p.boundary_x = 0;
  EXPECT_EQ(truth_label_for(p), Label::not_fluorescent);
}

TEST(Synthkit, FrameIsDeterministicAndSized) {
  const auto p = small_params(200, 42);
  const auto a = generate_frame(p);
  const auto b = generate_frame(p);
  EXPECT_EQ(a.image.type(), CV_8UC3);
  EXPECT_EQ(a.image.cols, 320);
  EXPECT_EQ(a.image.rows, 240);
  EXPECT_EQ(cv::norm(a.image, b.image, cv::NORM_INF), 0.0);
  EXPECT_EQ(a.truth_boundary_x, 200);
  auto q = p;
  q.seed = 43;
  EXPECT_GT(cv::norm(a.image, generate_frame(q).image, cv::NORM_INF), 0.0);
}

TEST(Synthkit, EmissionLandsOnGreenInsideTheBand) {
  auto lit = small_params(std::nullopt);
  lit.noise_sigma = 0.0;
  auto dark = lit;
  dark.fluorescence_gain = 0.0;
  const auto a = generate_frame(lit).image;
  const auto b = generate_frame(dark).image;
  // Centre row of the band, any column: only green differs, by the saturation.
  const auto pa = a.at<cv::Vec3b>(120, 50), pb = b.at<cv::Vec3b>(120, 50);
  EXPECT_EQ(pa[0], pb[0]);
  EXPECT_EQ(pa[2], pb[2]);
  EXPECT_NEAR(pa[1] - pb[1], kEmissionSaturation, 1.0);
  // Background rows are unaffected.
  EXPECT_EQ(cv::norm(a.rowRange(0, 80), b.rowRange(0, 80), cv::NORM_INF), 0.0);
}

TEST(Synthkit, ValidateRejectsBadParams) {
  auto p = small_params(100);
  p.falloff_width = 0.0;
  EXPECT_EQ(error_kind([&] { validate(p); }), ErrorKind::InvalidParams);
  p = small_params(400);
  EXPECT_EQ(error_kind([&] { generate_frame(p); }), ErrorKind::InvalidParams);
  p = small_params(100);
  p.colon_band = {200, 300};
  EXPECT_EQ(error_kind([&] { validate(p); }), ErrorKind::InvalidParams);
  p = small_params(100);
  p.fluorescence_gain = 1.5;
  EXPECT_EQ(error_kind([&] { validate(p); }), ErrorKind::InvalidParams);
}

TEST(Synthkit, DatasetShapeAndLabels) {
  test::TempDir dir("synth");
  DatasetOptions o;
  o.n_patients = 4;
  o.frames_per_patient = 10;
  o.positive_fraction = 0.2;
  o.holdout_patients = 1;
  o.width = 320;
  o.height = 240;
  o.seed = 9;
  const auto m = generate_dataset(o, dir.path());
  ASSERT_EQ(m.records().size(), 40u);
  std::size_t positives = 0;
  std::set<std::string> holdout_patients;
  for (const auto& r : m.records()) {
    ASSERT_TRUE(r.label.has_value());
    positives += *r.label == Label::fluorescent;
    if (r.split == Split::holdout) holdout_patients.insert(r.patient_id);
    EXPECT_TRUE(std::filesystem::exists(r.path)) << r.path;
    EXPECT_EQ(r.camera_id, Camera::synthetic);
    if (r.truth_boundary_x) {
      EXPECT_EQ(*r.label, Label::fluorescent);
    }
  }
  EXPECT_EQ(positives, 8u);  // round(0.2 * 40)
  EXPECT_EQ(holdout_patients, std::set<std::string>{"P04"});
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.jsonl"));

  // Stored labels are the generator's truth: recompute for a few frames.
  for (std::size_t i = 0; i < m.records().size(); i += 7) {
    const auto img = read_image(m.records()[i].path);
    EXPECT_EQ(img.cols, 320);
  }
}

TEST(Synthkit, PositiveFramesAreTruthPositive) {
  DatasetOptions o;
  o.width = 640;
  o.height = 480;
  for (int pi = 0; pi < 5; ++pi) {
    const auto prof = patient_profile(o, pi);
    for (std::uint64_t s = 0; s < 20; ++s) {
      EXPECT_EQ(truth_label_for(frame_params(prof, o, true, s)), Label::fluorescent);
      EXPECT_EQ(truth_label_for(frame_params(prof, o, false, s)), Label::not_fluorescent);
    }
  }
}
