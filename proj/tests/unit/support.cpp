#include "support.hpp"

#include <atomic>
#include <random>

namespace fa::test {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("fa_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

TrainConfig tiny_config(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 1;
  c.input_size = 64;
  c.crop.crop_size = 64;
  c.crop.seed = seed;
  c.base_width = 4;
  c.batch_size = 4;
  c.seed = seed;
  return c;
}

std::shared_ptr<const ModelArtifact> tiny_artifact(std::uint64_t seed) {
  const auto config = tiny_config(seed);
  return std::make_shared<const ModelArtifact>(initial_network(config, std::nullopt), config);
}

synth::SynthParams small_params(std::optional<int> boundary_x, std::uint64_t seed) {
  synth::SynthParams p;
  p.width = 320;
  p.height = 240;
  p.colon_band = {80, 160};
  p.boundary_x = boundary_x;
  p.falloff_width = 20.0;
  p.seed = seed;
  return p;
}

}  // namespace fa::test
