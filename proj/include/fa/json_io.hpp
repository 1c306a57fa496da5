#pragma once

#include <nlohmann/json.hpp>

#include "fa/boundary.hpp"
#include "fa/classifier.hpp"
#include "fa/dataset.hpp"
#include "fa/evaluation.hpp"

namespace fa {

// JSON field names follow the C++ member names; enums are lowercase strings;
// undefined metrics and absent coordinates are null.

void to_json(nlohmann::json& j, const FrameRecord& r);
void from_json(const nlohmann::json& j, FrameRecord& r);

void to_json(nlohmann::json& j, const CropSpec& c);
void from_json(const nlohmann::json& j, CropSpec& c);

void to_json(nlohmann::json& j, const Preprocessing& p);
void from_json(const nlohmann::json& j, Preprocessing& p);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const EpochStats& e);
void from_json(const nlohmann::json& j, EpochStats& e);

void to_json(nlohmann::json& j, const TrainingReport& r);
void from_json(const nlohmann::json& j, TrainingReport& r);

/// Probability written with 6 decimal digits.
void to_json(nlohmann::json& j, const ClassificationResult& r);
void from_json(const nlohmann::json& j, ClassificationResult& r);

void to_json(nlohmann::json& j, const StripClassification& s);
void from_json(const nlohmann::json& j, StripClassification& s);

void to_json(nlohmann::json& j, const BoundaryEstimate& b);
void from_json(const nlohmann::json& j, BoundaryEstimate& b);

void to_json(nlohmann::json& j, const ConfusionCounts& c);
void from_json(const nlohmann::json& j, ConfusionCounts& c);

void to_json(nlohmann::json& j, const MetricsReport& m);

/// Rounds to 6 decimal digits for the wire.
double round6(double v);

}  // namespace fa
