#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "fa/classifier.hpp"

namespace fa {

inline constexpr std::size_t kDefaultMaxUpload = 20u << 20;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  /// Falls back to $FA_MODEL_DIR when unset.
  std::optional<std::filesystem::path> model_dir;
  std::size_t max_upload_bytes = kDefaultMaxUpload;
  int request_timeout_seconds = 30;
};

/// Throws InvalidConfig.
void validate(const ServiceConfig& config);

/// model_dir, else $FA_MODEL_DIR, else nullopt.
std::optional<std::filesystem::path> resolve_model_dir(const ServiceConfig& config);

/// HTTP front end over one immutable ModelArtifact. Requests take a snapshot
/// of the current artifact; reload() swaps it between requests.
class Service {
public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Loads the model directory on a background thread. Model endpoints and
  /// /healthz answer 503 until it finishes.
  void load_async();
  /// Synchronous (re)load from the model directory. On failure the previous
  /// artifact stays in place and false is returned.
  bool reload();
  void set_artifact(std::shared_ptr<const ModelArtifact> artifact);
  std::shared_ptr<const ModelArtifact> artifact() const;
  bool loading() const noexcept;
  /// Last load error, empty when the last load succeeded.
  std::string last_error() const;

  /// Binds the socket and returns the port.
  int bind();
  /// Serves until stop(); bind() must have succeeded.
  void run();
  void stop();

  const ServiceConfig& config() const noexcept;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fa
