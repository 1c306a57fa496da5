#include "fa/service.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fa/boundary.hpp"
#include "fa/errors.hpp"
#include "fa/image_io.hpp"
#include "fa/json_io.hpp"
#include "fa/saliency.hpp"

namespace fa {

using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string message;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

bool is_png(const std::string& b) { return b.size() >= 8 && b.compare(0, 4, "\x89PNG") == 0; }
bool is_jpeg(const std::string& b) { return b.size() >= 3 && b.compare(0, 3, "\xFF\xD8\xFF") == 0; }

const std::string& upload_bytes(const httplib::Request& req, std::string& scratch) {
  if (req.is_multipart_form_data()) {
    if (!req.has_file("image")) throw HttpError{400, "multipart field \"image\" is missing"};
    scratch = req.get_file_value("image").content;
    return scratch;
  }
  return req.body;
}

cv::Mat request_image(const httplib::Request& req) {
  std::string scratch;
  const auto& bytes = upload_bytes(req, scratch);
  if (bytes.empty()) throw HttpError{400, "empty image"};
  if (!is_png(bytes) && !is_jpeg(bytes)) throw HttpError{400, "image must be PNG or JPEG"};
  try {
    return decode_image({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  } catch (const Error& e) {
    throw HttpError{400, e.what()};
  }
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (req.has_param(key)) return req.get_param_value(key);
  if (req.is_multipart_form_data() && req.has_file(key)) return req.get_file_value(key).content;
  return std::nullopt;
}

template <typename T>
T parse_number(const std::string& text, const char* key) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw HttpError{400, std::string("bad value for ") + key + ": " + text};
  return v;
}

template <typename Fn>
auto parse_enum(const std::string& text, Fn fn) {
  try {
    return fn(text);
  } catch (const Error& e) {
    throw HttpError{400, e.what()};
  }
}

}  // namespace

void validate(const ServiceConfig& config) {
  require(config.max_upload_bytes > 0, ErrorKind::InvalidConfig, "max upload must be > 0");
  require(config.port >= 0 && config.port <= 65535, ErrorKind::InvalidConfig, "port out of range");
  require(config.request_timeout_seconds > 0, ErrorKind::InvalidConfig, "request timeout must be > 0");
}

std::optional<std::filesystem::path> resolve_model_dir(const ServiceConfig& config) {
  if (config.model_dir) return config.model_dir;
  if (const char* env = std::getenv("FA_MODEL_DIR"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

struct Service::Impl {
  ServiceConfig config;
  httplib::Server server;
  mutable std::mutex mu;
  std::shared_ptr<const ModelArtifact> artifact;
  std::string last_error;
  std::atomic<bool> loading{false};
  std::thread loader;

  explicit Impl(ServiceConfig c) : config(std::move(c)) {
    validate(config);
    server.set_payload_max_length(config.max_upload_bytes);
    server.set_read_timeout(config.request_timeout_seconds, 0);
    server.set_write_timeout(config.request_timeout_seconds, 0);
    routes();
  }

  std::shared_ptr<const ModelArtifact> snapshot() const {
    std::lock_guard lock(mu);
    return artifact;
  }

  std::shared_ptr<const ModelArtifact> require_model() const {
    auto a = snapshot();
    if (!a) throw HttpError{503, loading ? "model is loading" : "model not loaded"};
    return a;
  }

  bool load() {
    const auto dir = resolve_model_dir(config);
    try {
      if (!dir) fail(ErrorKind::InvalidConfig, "no model directory configured");
      auto fresh = std::make_shared<const ModelArtifact>(ModelArtifact::load(*dir));
      std::lock_guard lock(mu);
      artifact = std::move(fresh);
      last_error.clear();
      return true;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      last_error = e.what();
      return false;
    }
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.message);
      } catch (const Error& e) {
        send_error(res, e.kind() == ErrorKind::IoError ? 500 : 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  }

  void routes() {
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      if (loading || !snapshot()) {
        res.status = 503;
        res.set_content(loading ? "loading" : "model not loaded", "text/plain");
      } else {
        res.set_content("ok", "text/plain");
      }
    });

    server.Get("/api/v1/model", guarded([this](const httplib::Request&, httplib::Response& res) {
      const auto a = require_model();
      json body{{"architecture_id", a->architecture_id()},
                {"input_size", a->input_size()},
                {"threshold", a->threshold()},
                {"version", a->version()},
                {"preprocessing", a->preprocessing()},
                {"training_config", a->training_config()},
                {"training_report", a->training_report() ? json(*a->training_report()) : json(nullptr)}};
      send_json(res, 200, body);
    }));

    server.Post("/api/v1/classify", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto a = require_model();
      send_json(res, 200, predict(*a, request_image(req)));
    }));

    server.Post("/api/v1/boundary", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto a = require_model();
      BoundaryOptions opt;
      if (auto v = param(req, "strip_width")) opt.strip_width = parse_number<int>(*v, "strip_width");
      if (auto v = param(req, "axis")) opt.axis = parse_enum(*v, parse_axis);
      if (auto v = param(req, "distal")) opt.distal = parse_enum(*v, parse_distal);
      if (auto v = param(req, "threshold")) {
        opt.threshold = parse_number<double>(*v, "threshold");
        if (!(*opt.threshold >= 0.0 && *opt.threshold <= 1.0)) throw HttpError{400, "threshold must be in [0, 1]"};
      }
      if (opt.strip_width < 1) throw HttpError{400, "strip_width must be >= 1"};
      const auto image = request_image(req);
      try {
        send_json(res, 200, analyze_boundary(*a, image, opt));
      } catch (const NoFluorescentRegion& e) {
        json body = e.estimate();
        body["reason"] = "no_fluorescent_region";
        send_json(res, 200, body);
      }
    }));

    server.Post("/api/v1/saliency", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto a = require_model();
      double opacity = 0.5;
      if (auto v = param(req, "opacity")) opacity = parse_number<double>(*v, "opacity");
      if (!(opacity >= 0.0 && opacity <= 1.0)) throw HttpError{400, "opacity must be in [0, 1]"};
      const auto image = request_image(req);
      const auto map = compute_saliency(*a, image);
      const auto png = encode_png(render_overlay(image, map, opacity));
      res.status = 200;
      res.set_content(std::string(png.begin(), png.end()), "image/png");
      res.set_header("X-Model-Version", a->version());
      res.set_header("X-Explained-Class", std::string(to_string(map.explained_class)));
    }));
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() {
  stop();
  if (impl_->loader.joinable()) impl_->loader.join();
}

void Service::load_async() {
  if (impl_->loader.joinable()) impl_->loader.join();
  impl_->loading = true;
  impl_->loader = std::thread([this] {
    impl_->load();
    impl_->loading = false;
  });
}

bool Service::reload() { return impl_->load(); }

void Service::set_artifact(std::shared_ptr<const ModelArtifact> artifact) {
  std::lock_guard lock(impl_->mu);
  impl_->artifact = std::move(artifact);
}

std::shared_ptr<const ModelArtifact> Service::artifact() const { return impl_->snapshot(); }

bool Service::loading() const noexcept { return impl_->loading; }

std::string Service::last_error() const {
  std::lock_guard lock(impl_->mu);
  return impl_->last_error;
}

int Service::bind() {
  const auto& c = impl_->config;
  const int port = c.port == 0 ? impl_->server.bind_to_any_port(c.host)
                               : (impl_->server.bind_to_port(c.host, c.port) ? c.port : -1);
  if (port < 0) fail(ErrorKind::IoError, "cannot bind " + c.host + ":" + std::to_string(c.port));
  return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

const ServiceConfig& Service::config() const noexcept { return impl_->config; }

}  // namespace fa
