#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <opencv2/core.hpp>

#include "fa/dataset.hpp"
#include "fa/types.hpp"

namespace fa::synth {

/// Rows [top, bottom) covered by the simulated colon.
struct Band {
  int top = 340;
  int bottom = 740;
};

struct SynthParams {
  int width = 1440;
  int height = 1080;
  Band colon_band;
  std::optional<int> boundary_x;
  double falloff_width = 40.0;
  double fluorescence_gain = 1.0;
  double noise_sigma = 4.0;
  int background_brightness = 232;
  DistalDirection distal_direction = DistalDirection::increasing_x;
  std::uint64_t seed = 0;
};

struct SynthFrame {
  cv::Mat image;  // CV_8UC3, BGR
  Label truth_label = Label::not_fluorescent;
  std::optional<int> truth_boundary_x;
  SynthParams params;
};

// Tissue is rendered pinkish; fluorescence adds to the green channel only.
inline constexpr int kTissueBlue = 125;
inline constexpr int kTissueGreen = 78;
inline constexpr int kTissueRed = 196;
/// Green-channel increase of fully perfused tissue at gain 1.
inline constexpr double kEmissionSaturation = 170.0;
/// Mean emission a strip must exceed to count as fluorescent.
inline constexpr double kEmissionFloor = 0.1 * kEmissionSaturation;
/// Width of the window used when deciding the truth label.
inline constexpr int kTruthStripWidth = 100;

/// Throws InvalidParams when an invariant of SynthParams is violated.
void validate(const SynthParams& params);

/// Noise-free emission (green-channel increase) of colon tissue at column x.
/// The perfusion front is a logistic centred on boundary_x whose 90%-to-10%
/// transition spans falloff_width pixels.
double emission_at(const SynthParams& params, double x);

/// Per-column noise-free emission profile, size == params.width.
std::vector<double> emission_profile(const SynthParams& params);

/// Truth label implied by the emission profile alone.
Label truth_label_for(const SynthParams& params);

SynthFrame generate_frame(const SynthParams& params);

struct DatasetOptions {
  int n_patients = 7;
  int frames_per_patient = 256;
  double positive_fraction = 0.196;
  std::uint64_t seed = 1;
  /// The last `holdout_patients` patients go to the holdout split.
  int holdout_patients = 0;
  int width = 1440;
  int height = 1080;
  /// PNG compression level of the written frames (0-9).
  int png_compression = 0;
};

/// Per-patient scene parameters; frames of one patient share band geometry,
/// tissue gain range, noise level and distal direction.
struct PatientProfile {
  std::string patient_id;
  Band colon_band;
  double noise_sigma = 4.0;
  int background_brightness = 232;
  double falloff_width = 40.0;
  double gain_low = 0.6;
  double gain_high = 1.0;
  DistalDirection distal_direction = DistalDirection::increasing_x;
};

PatientProfile patient_profile(const DatasetOptions& options, int patient_index);

/// Parameters of one positive or negative frame for a patient. Positive frames
/// keep at least a third of the frame perfused; negative frames emit below the
/// floor everywhere.
SynthParams frame_params(const PatientProfile& patient, const DatasetOptions& options,
                         bool positive, std::uint64_t frame_seed);

/// Writes PNG frames under out_dir/<patient>/ and manifest.jsonl in out_dir.
DatasetManifest generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

}  // namespace fa::synth
