#include <gtest/gtest.h>

#include <cmath>

#include "fa/json_io.hpp"

using namespace fa;
using nlohmann::json;

TEST(Json, FrameRecordRoundTrip) {
  FrameRecord r{"P01_f000003", "P01", Camera::stryker1688, "P01/f3.png", Label::fluorescent, Split::holdout, 640, 480, 212};
  const json j = r;
  EXPECT_EQ(j["camera_id"], "stryker1688");
  EXPECT_EQ(j["label"], "fluorescent");
  EXPECT_EQ(j["split"], "holdout");
  const auto back = j.get<FrameRecord>();
  EXPECT_EQ(back.frame_id, r.frame_id);
  EXPECT_EQ(back.path, r.path);
  EXPECT_EQ(back.label, r.label);
  EXPECT_EQ(back.truth_boundary_x, 212);

  r.label.reset();
  r.truth_boundary_x.reset();
  const json k = r;
  EXPECT_TRUE(k["label"].is_null());
  EXPECT_TRUE(k["truth_boundary_x"].is_null());
  EXPECT_FALSE(k.get<FrameRecord>().label.has_value());
}

TEST(Json, TrainConfigRoundTrip) {
  TrainConfig c;
  c.epochs = 7;
  c.crop = {128, 99};
  c.learning_rate = 3e-4;
  c.class_weighting = false;
  c.base_width = 16;
  EXPECT_EQ(json(c).get<TrainConfig>(), c);
  EXPECT_EQ(json(Preprocessing{}).get<Preprocessing>(), Preprocessing{});
}

TEST(Json, TrainingReportNanIsNull) {
  TrainingReport r;
  r.epochs.push_back({1, 0.7, 0.6, std::nan(""), 2.5});
  r.train_frames = 10;
  r.class_weights = {0.75, 1.5};
  const json j = r;
  EXPECT_TRUE(j["epochs"][0]["internal_val_accuracy"].is_null());
  const auto back = j.get<TrainingReport>();
  EXPECT_TRUE(std::isnan(back.epochs[0].internal_val_accuracy));
  EXPECT_EQ(back.class_weights[1], 1.5);
}

TEST(Json, ClassificationProbabilityHasSixDecimals) {
  const ClassificationResult r{0.123456789, Label::not_fluorescent, 0.8, "abc"};
  const json j = r;
  EXPECT_DOUBLE_EQ(j["probability"].get<double>(), 0.123457);
  EXPECT_EQ(j["label"], "not_fluorescent");
  EXPECT_EQ(j.get<ClassificationResult>().model_version, "abc");
  EXPECT_DOUBLE_EQ(round6(0.0000004), 0.0);
  EXPECT_DOUBLE_EQ(round6(0.9999996), 1.0);
}

TEST(Json, BoundaryEstimateRoundTrip) {
  BoundaryEstimate b;
  b.boundary_x = 400;
  b.distal_direction = DistalDirection::decreasing_x;
  b.axis = Axis::vertical;
  b.strips = {{0, 0, 100, 0.9, Label::fluorescent}, {1, 100, 150, 0.1, Label::not_fluorescent}};
  b.contiguous = false;
  const json j = b;
  EXPECT_EQ(j["distal_direction"], "decreasing_x");
  EXPECT_EQ(j["axis"], "vertical");
  const auto back = j.get<BoundaryEstimate>();
  EXPECT_EQ(back.boundary_x, 400);
  EXPECT_EQ(back.strips.size(), 2u);
  EXPECT_EQ(back.strips[1].x1, 150);
  EXPECT_FALSE(back.contiguous);

  b.boundary_x.reset();
  EXPECT_TRUE(json(b)["boundary_x"].is_null());
}

TEST(Json, MetricsUndefinedIsNull) {
  const auto m = metrics({0, 0, 0, 4, Stratum::internal});
  const json j = m;
  EXPECT_TRUE(j["recall"].is_null());
  EXPECT_TRUE(j["precision"].is_null());
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), 1.0);
  EXPECT_EQ(j["counts"]["stratum"], "internal");
  EXPECT_EQ(j["counts"].get<ConfusionCounts>(), m.counts);
}
