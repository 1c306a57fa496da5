#include "fa/evaluate.hpp"

#include <algorithm>

#include "fa/errors.hpp"

namespace fa {

Stratum camera_stratum(const DatasetManifest& manifest, Camera camera) {
  const auto& recs = manifest.records();
  const bool seen = std::any_of(recs.begin(), recs.end(), [&](const FrameRecord& r) {
    return r.split == Split::train && r.camera_id == camera;
  });
  return seen ? Stratum::internal : Stratum::external;
}

EvaluationRun evaluate(const ModelArtifact& artifact, const DatasetManifest& manifest, Split split,
                       bool by_camera) {
  const auto records = manifest.split(split);
  if (records.empty()) fail(ErrorKind::EmptyInput, std::string("split ") + std::string(to_string(split)) + " is empty");

  std::vector<std::filesystem::path> files;
  for (const auto& r : records) files.push_back(r.path);
  const auto items = predict_batch(artifact, files);

  EvaluationRun run;
  std::vector<Label> preds, truths;
  std::vector<Stratum> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!items[i].ok()) fail(ErrorKind::DecodeError, records[i].frame_id + ": " + items[i].error);
    FramePrediction p;
    p.frame_id = records[i].frame_id;
    p.truth = *records[i].label;
    p.result = *items[i].result;
    p.stratum = by_camera ? camera_stratum(manifest, records[i].camera_id) : Stratum::overall;
    preds.push_back(p.result.label);
    truths.push_back(p.truth);
    strata.push_back(p.stratum);
    run.predictions.push_back(std::move(p));
  }
  for (const auto& c : confusion(preds, truths, strata)) run.reports.push_back(metrics(c));
  return run;
}

}  // namespace fa
