#include "fa/synthkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <opencv2/core.hpp>

#include "fa/detail/hash.hpp"
#include "fa/errors.hpp"
#include "fa/image_io.hpp"

namespace fa::synth {

namespace {

// ln(81): a logistic with scale s rises from 10% to 90% over 2*ln(9)*s pixels.
const double kLogisticSpan = 2.0 * std::log(9.0);

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

void validate(const SynthParams& p) {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidParams, what); };
  if (p.width <= 0 || p.height <= 0) bad("frame dimensions must be positive");
  if (!(p.falloff_width > 0.0 && p.falloff_width < p.width)) bad("falloff_width must lie in (0, width)");
  if (p.boundary_x && (*p.boundary_x < 0 || *p.boundary_x >= p.width)) bad("boundary_x must lie in [0, width)");
  if (p.colon_band.top < 0 || p.colon_band.bottom > p.height || p.colon_band.top >= p.colon_band.bottom) {
    bad("colon_band must be a non-empty interval inside [0, height)");
  }
  if (!(p.fluorescence_gain >= 0.0 && p.fluorescence_gain <= 1.0)) bad("fluorescence_gain must lie in [0, 1]");
  if (!(p.noise_sigma >= 0.0)) bad("noise_sigma must be non-negative");
  if (p.background_brightness < 0 || p.background_brightness > 255) bad("background_brightness must be 8-bit");
}

double emission_at(const SynthParams& p, double x) {
  double perfused = 1.0;
  if (p.boundary_x) {
    const double scale = p.falloff_width / kLogisticSpan;
    // Positive distance means "further distal than the front".
    const double distal_distance = p.distal_direction == DistalDirection::increasing_x
                                       ? x - *p.boundary_x
                                       : *p.boundary_x - x;
    perfused = 1.0 / (1.0 + std::exp(distal_distance / scale));
  }
  return p.fluorescence_gain * kEmissionSaturation * perfused;
}

std::vector<double> emission_profile(const SynthParams& p) {
  std::vector<double> out(static_cast<std::size_t>(p.width));
  for (int x = 0; x < p.width; ++x) out[x] = emission_at(p, x + 0.5);
  return out;
}

Label truth_label_for(const SynthParams& p) {
  const auto profile = emission_profile(p);
  const int window = std::min(kTruthStripWidth, p.width);
  std::vector<double> prefix(profile.size() + 1, 0.0);
  std::partial_sum(profile.begin(), profile.end(), prefix.begin() + 1);
  for (int x0 = 0; x0 + window <= p.width; ++x0) {
    if ((prefix[x0 + window] - prefix[x0]) / window > kEmissionFloor) return Label::fluorescent;
  }
  return Label::not_fluorescent;
}

SynthFrame generate_frame(const SynthParams& params) {
  validate(params);
  const int w = params.width;
  const int h = params.height;

  cv::Mat clean(h, w, CV_32FC3);
  const auto profile = emission_profile(params);
  const double band_center = 0.5 * (params.colon_band.top + params.colon_band.bottom);
  const double band_half = 0.5 * (params.colon_band.bottom - params.colon_band.top);
  const float bg = static_cast<float>(params.background_brightness);
  std::vector<float> weave_x(w);
  for (int x = 0; x < w; ++x) weave_x[x] = static_cast<float>(3.0 * std::sin(2.0 * CV_PI * x / 7.0));

  for (int y = 0; y < h; ++y) {
    auto* row = clean.ptr<cv::Vec3f>(y);
    const bool in_band = y >= params.colon_band.top && y < params.colon_band.bottom;
    if (in_band) {
      // Cylinder-like shading across the band; depends on y only so per-column
      // statistics stay a pure function of the emission profile.
      const double t = (y + 0.5 - band_center) / band_half;
      const double shade = 0.82 + 0.18 * std::sqrt(std::max(0.0, 1.0 - t * t));
      for (int x = 0; x < w; ++x) {
        row[x] = cv::Vec3f(static_cast<float>(kTissueBlue * shade),
                           static_cast<float>(kTissueGreen * shade + profile[x]),
                           static_cast<float>(kTissueRed * shade));
      }
    } else {
      // Swab weave.
      const float wy = static_cast<float>(std::sin(2.0 * CV_PI * y / 7.0));
      for (int x = 0; x < w; ++x) {
        const float v = bg + wy * weave_x[x];
        row[x] = cv::Vec3f(v + 2.0f, v, v - 2.0f);
      }
    }
  }

  if (params.noise_sigma > 0.0) {
    cv::RNG rng(detail::splitmix64(params.seed));
    cv::Mat noise(h, w, CV_32FC3);
    rng.fill(noise, cv::RNG::NORMAL, cv::Scalar::all(0.0), cv::Scalar::all(params.noise_sigma));
    clean += noise;
  }

  SynthFrame frame;
  clean.convertTo(frame.image, CV_8UC3);
  frame.truth_label = truth_label_for(params);
  frame.truth_boundary_x = params.boundary_x;
  frame.params = params;
  return frame;
}

PatientProfile patient_profile(const DatasetOptions& options, int patient_index) {
  std::mt19937_64 rng(detail::mix_seed(options.seed, 0x5A7E0000ULL + patient_index));
  const double h = options.height;

  PatientProfile p;
  char id[16];
  std::snprintf(id, sizeof id, "P%02d", patient_index + 1);
  p.patient_id = id;

  // Band straddles the middle rows.
  const double center = uniform(rng, 0.44, 0.56) * h;
  const double half = uniform(rng, 0.17, 0.26) * h;
  p.colon_band.top = std::max(0, static_cast<int>(std::lround(center - half)));
  p.colon_band.bottom = std::min(options.height, static_cast<int>(std::lround(center + half)));
  p.noise_sigma = uniform(rng, 2.0, 7.0);
  p.background_brightness = static_cast<int>(std::lround(uniform(rng, 215.0, 245.0)));
  p.falloff_width = std::min(uniform(rng, 20.0, 50.0), options.width - 1.0);
  p.gain_low = uniform(rng, 0.6, 0.75);
  p.gain_high = std::min(1.0, p.gain_low + uniform(rng, 0.15, 0.35));
  p.distal_direction = (rng() & 1U) ? DistalDirection::decreasing_x : DistalDirection::increasing_x;
  return p;
}

SynthParams frame_params(const PatientProfile& patient, const DatasetOptions& options, bool positive,
                         std::uint64_t frame_seed) {
  std::mt19937_64 rng(detail::splitmix64(frame_seed));
  SynthParams p;
  p.width = options.width;
  p.height = options.height;
  p.colon_band = patient.colon_band;
  p.falloff_width = patient.falloff_width;
  p.noise_sigma = patient.noise_sigma;
  p.background_brightness = patient.background_brightness;
  p.distal_direction = patient.distal_direction;
  p.seed = frame_seed;

  if (positive) {
    p.fluorescence_gain = uniform(rng, patient.gain_low, patient.gain_high);
    if (uniform(rng, 0.0, 1.0) < 0.75) {
      const double w = options.width;
      const double pos = patient.distal_direction == DistalDirection::increasing_x
                             ? uniform(rng, 0.35, 0.92)
                             : uniform(rng, 0.08, 0.65);
      p.boundary_x = std::clamp(static_cast<int>(pos * w), 0, options.width - 1);
    }
  } else {
    p.fluorescence_gain = uniform(rng, 0.0, 0.04);
  }
  return p;
}

DatasetManifest generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir) {
  require(options.n_patients >= 2, ErrorKind::InvalidParams, "need at least 2 patients");
  require(options.frames_per_patient >= 1, ErrorKind::InvalidParams, "need at least 1 frame per patient");
  require(options.positive_fraction >= 0.0 && options.positive_fraction <= 1.0, ErrorKind::InvalidParams,
          "positive_fraction must lie in [0, 1]");
  require(options.holdout_patients >= 0 && options.holdout_patients < options.n_patients,
          ErrorKind::InvalidParams, "holdout_patients must leave at least one training patient");

  const int total = options.n_patients * options.frames_per_patient;
  const auto n_positive = static_cast<int>(std::llround(options.positive_fraction * total));

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(detail::splitmix64(options.seed));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> positive(total, false);
  for (int i = 0; i < n_positive; ++i) positive[order[i]] = true;

  std::filesystem::create_directories(out_dir);
  std::vector<FrameRecord> records;
  records.reserve(total);

  for (int pi = 0; pi < options.n_patients; ++pi) {
    const auto patient = patient_profile(options, pi);
    const auto patient_dir = out_dir / patient.patient_id;
    std::filesystem::create_directories(patient_dir);
    const bool holdout = pi >= options.n_patients - options.holdout_patients;

    for (int fi = 0; fi < options.frames_per_patient; ++fi) {
      const int global = pi * options.frames_per_patient + fi;
      const auto frame_seed = detail::mix_seed(options.seed, 0xF7A3E000ULL + global);
      const auto params = frame_params(patient, options, positive[global], frame_seed);
      const auto frame = generate_frame(params);

      char name[64];
      std::snprintf(name, sizeof name, "%s_%04d", patient.patient_id.c_str(), fi);
      const auto path = patient_dir / (std::string(name) + ".png");
      write_png(path, frame.image, options.png_compression);

      FrameRecord rec;
      rec.frame_id = name;
      rec.patient_id = patient.patient_id;
      rec.camera_id = Camera::synthetic;
      rec.path = path;
      rec.label = frame.truth_label;
      rec.split = holdout ? Split::holdout : Split::train;
      rec.width = params.width;
      rec.height = params.height;
      rec.truth_boundary_x = frame.truth_boundary_x;
      records.push_back(std::move(rec));
    }
  }

  DatasetManifest manifest(std::move(records));
  manifest.save(out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace fa::synth
