#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <opencv2/core.hpp>

#include "fa/classifier.hpp"
#include "fa/errors.hpp"
#include "fa/synthkit.hpp"

namespace fa::test {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// Small, untrained but deterministic artifact (input 64 px, width 4).
std::shared_ptr<const ModelArtifact> tiny_artifact(std::uint64_t seed = 7);

TrainConfig tiny_config(std::uint64_t seed = 7);

/// 320x240 synthetic scene with the colon band across the middle rows.
synth::SynthParams small_params(std::optional<int> boundary_x, std::uint64_t seed = 1);

/// Kind of the fa::Error thrown by f, nullopt when nothing is thrown.
template <typename F>
std::optional<ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace fa::test
