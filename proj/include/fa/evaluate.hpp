#pragma once

#include <string>
#include <vector>

#include "fa/classifier.hpp"
#include "fa/dataset.hpp"
#include "fa/evaluation.hpp"

namespace fa {

struct FramePrediction {
  std::string frame_id;
  Label truth = Label::not_fluorescent;
  ClassificationResult result;
  Stratum stratum = Stratum::overall;
};

struct EvaluationRun {
  std::vector<FramePrediction> predictions;
  /// Overall first, then one report per camera stratum when requested.
  std::vector<MetricsReport> reports;
};

/// Internal when the frame's camera also appears in the train split,
/// external otherwise.
Stratum camera_stratum(const DatasetManifest& manifest, Camera camera);

/// Classifies every frame of one split and scores it against the manifest labels.
EvaluationRun evaluate(const ModelArtifact& artifact, const DatasetManifest& manifest, Split split,
                       bool by_camera);

}  // namespace fa
