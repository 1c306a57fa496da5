#include "fa/json_io.hpp"

#include <cmath>
#include <limits>

namespace fa {

using nlohmann::json;

namespace {

template <typename T>
json optional_value(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

double round6(double v) { return std::round(v * 1e6) / 1e6; }

void to_json(json& j, const FrameRecord& r) {
  j = json{{"frame_id", r.frame_id},
           {"patient_id", r.patient_id},
           {"camera_id", to_string(r.camera_id)},
           {"path", r.path.generic_string()},
           {"label", r.label ? json(to_string(*r.label)) : json(nullptr)},
           {"split", to_string(r.split)},
           {"width", r.width},
           {"height", r.height},
           {"truth_boundary_x", optional_value(r.truth_boundary_x)}};
}

void from_json(const json& j, FrameRecord& r) {
  r.frame_id = j.at("frame_id").get<std::string>();
  r.patient_id = j.at("patient_id").get<std::string>();
  r.camera_id = parse_camera(j.at("camera_id").get<std::string>());
  r.path = j.at("path").get<std::string>();
  const auto label = read_optional<std::string>(j, "label");
  r.label = label ? std::optional(parse_label(*label)) : std::nullopt;
  r.split = parse_split(j.at("split").get<std::string>());
  r.width = j.value("width", 0);
  r.height = j.value("height", 0);
  r.truth_boundary_x = read_optional<int>(j, "truth_boundary_x");
}

void to_json(json& j, const CropSpec& c) { j = json{{"crop_size", c.crop_size}, {"seed", c.seed}}; }

void from_json(const json& j, CropSpec& c) {
  c.crop_size = j.at("crop_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(json& j, const Preprocessing& p) {
  auto wire = [](const std::array<float, 3>& v) {
    return std::array<double, 3>{round6(v[0]), round6(v[1]), round6(v[2])};
  };
  j = json{{"mean", wire(p.mean)}, {"std", wire(p.std)}, {"resize_policy", p.resize_policy}};
}

void from_json(const json& j, Preprocessing& p) {
  p.mean = j.at("mean").get<std::array<float, 3>>();
  p.std = j.at("std").get<std::array<float, 3>>();
  p.resize_policy = j.at("resize_policy").get<std::string>();
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"internal_val_fraction", c.internal_val_fraction},
           {"crop", c.crop},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"weight_decay", c.weight_decay},
           {"seed", c.seed},
           {"class_weighting", c.class_weighting},
           {"input_size", c.input_size},
           {"base_width", c.base_width},
           {"optimizer", c.optimizer}};
}

void from_json(const json& j, TrainConfig& c) {
  c.epochs = j.at("epochs").get<int>();
  c.internal_val_fraction = j.at("internal_val_fraction").get<double>();
  c.crop = j.at("crop").get<CropSpec>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.value("weight_decay", 0.01);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.class_weighting = j.value("class_weighting", true);
  c.input_size = j.value("input_size", 224);
  c.base_width = j.value("base_width", 64);
  c.optimizer = j.value("optimizer", std::string("adamw-onecycle"));
}

void to_json(json& j, const EpochStats& e) {
  j = json{{"epoch", e.epoch},
           {"train_loss", e.train_loss},
           {"internal_val_loss", e.internal_val_loss},
           {"internal_val_accuracy", std::isnan(e.internal_val_accuracy) ? json(nullptr) : json(e.internal_val_accuracy)},
           {"seconds", e.seconds}};
}

void from_json(const json& j, EpochStats& e) {
  e.epoch = j.at("epoch").get<int>();
  e.train_loss = j.at("train_loss").get<double>();
  e.internal_val_loss = j.at("internal_val_loss").get<double>();
  e.internal_val_accuracy =
      read_optional<double>(j, "internal_val_accuracy").value_or(std::numeric_limits<double>::quiet_NaN());
  e.seconds = j.at("seconds").get<double>();
}

void to_json(json& j, const TrainingReport& r) {
  j = json{{"epochs", r.epochs},
           {"train_frames", r.train_frames},
           {"internal_val_frames", r.internal_val_frames},
           {"class_weights", r.class_weights},
           {"wall_clock_seconds", r.wall_clock_seconds},
           {"converged", r.converged}};
}

void from_json(const json& j, TrainingReport& r) {
  r.epochs = j.at("epochs").get<std::vector<EpochStats>>();
  r.train_frames = j.at("train_frames").get<std::size_t>();
  r.internal_val_frames = j.at("internal_val_frames").get<std::size_t>();
  r.class_weights = j.at("class_weights").get<std::array<double, 2>>();
  r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  r.converged = j.at("converged").get<bool>();
}

void to_json(json& j, const ClassificationResult& r) {
  j = json{{"probability", round6(r.probability)},
           {"label", to_string(r.label)},
           {"threshold", r.threshold},
           {"model_version", r.model_version}};
}

void from_json(const json& j, ClassificationResult& r) {
  r.probability = j.at("probability").get<double>();
  r.label = parse_label(j.at("label").get<std::string>());
  r.threshold = j.at("threshold").get<double>();
  r.model_version = j.at("model_version").get<std::string>();
}

void to_json(json& j, const StripClassification& s) {
  j = json{{"index", s.index},
           {"x0", s.x0},
           {"x1", s.x1},
           {"probability", round6(s.probability)},
           {"label", to_string(s.label)}};
}

void from_json(const json& j, StripClassification& s) {
  s.index = j.at("index").get<int>();
  s.x0 = j.at("x0").get<int>();
  s.x1 = j.at("x1").get<int>();
  s.probability = j.at("probability").get<double>();
  s.label = parse_label(j.at("label").get<std::string>());
}

void to_json(json& j, const BoundaryEstimate& b) {
  j = json{{"boundary_x", optional_value(b.boundary_x)},
           {"distal_direction", to_string(b.distal_direction)},
           {"axis", to_string(b.axis)},
           {"strips", b.strips},
           {"contiguous", b.contiguous},
           {"saturated", b.saturated},
           {"threshold", b.threshold}};
}

void from_json(const json& j, BoundaryEstimate& b) {
  b.boundary_x = read_optional<int>(j, "boundary_x");
  b.distal_direction = parse_distal(j.at("distal_direction").get<std::string>());
  b.axis = parse_axis(j.value("axis", std::string("horizontal")));
  b.strips = j.at("strips").get<std::vector<StripClassification>>();
  b.contiguous = j.at("contiguous").get<bool>();
  b.saturated = j.at("saturated").get<bool>();
  b.threshold = j.at("threshold").get<double>();
}

void to_json(json& j, const ConfusionCounts& c) {
  j = json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"stratum", to_string(c.stratum)}};
}

void from_json(const json& j, ConfusionCounts& c) {
  c.tp = j.at("tp").get<std::int64_t>();
  c.fp = j.at("fp").get<std::int64_t>();
  c.fn = j.at("fn").get<std::int64_t>();
  c.tn = j.at("tn").get<std::int64_t>();
  c.stratum = parse_stratum(j.value("stratum", std::string("custom")));
}

void to_json(json& j, const MetricsReport& m) {
  j = json{{"counts", m.counts},
           {"recall", optional_value(m.recall)},
           {"precision", optional_value(m.precision)},
           {"accuracy", optional_value(m.accuracy)},
           {"f1", optional_value(m.f1)}};
}

}  // namespace fa
