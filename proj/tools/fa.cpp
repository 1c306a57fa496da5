#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <fstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fa/boundary.hpp"
#include "fa/classifier.hpp"
#include "fa/dataset.hpp"
#include "fa/errors.hpp"
#include "fa/evaluate.hpp"
#include "fa/image_io.hpp"
#include "fa/json_io.hpp"
#include "fa/saliency.hpp"
#include "fa/service.hpp"
#include "fa/synthkit.hpp"

using nlohmann::json;

namespace {

enum class Format { automatic, json, table };

Format g_format = Format::automatic;

// Subcommands whose natural output is a table default to it; everything else
// defaults to JSON.
bool want_table(bool table_is_default) {
  return g_format == Format::table || (g_format == Format::automatic && table_is_default);
}

void emit(const json& doc, const std::function<void()>& table = {}, bool table_is_default = false) {
  if (table && want_table(table_is_default)) {
    table();
  } else {
    std::cout << doc.dump(2) << '\n';
  }
}

void print_kv(const json& doc) {
  for (const auto& [k, v] : doc.items()) {
    std::cout << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  }
}

std::shared_ptr<const fa::ModelArtifact> load_model(const std::string& dir) {
  return std::make_shared<const fa::ModelArtifact>(fa::ModelArtifact::load(dir));
}

// ---- synth

struct SynthArgs {
  int patients = 7;
  int frames = 256;
  double positive_frac = 0.196;
  std::uint64_t seed = 1;
  int holdout = 0;
  int width = 1440;
  int height = 1080;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  fa::synth::DatasetOptions o;
  o.n_patients = a.patients;
  o.frames_per_patient = a.frames;
  o.positive_fraction = a.positive_frac;
  o.seed = a.seed;
  o.holdout_patients = a.holdout;
  o.width = a.width;
  o.height = a.height;
  const auto m = fa::synth::generate_dataset(o, a.out);
  json doc;
  doc["manifest"] = (std::filesystem::path(a.out) / "manifest.jsonl").string();
  for (auto s : {fa::Split::train, fa::Split::holdout}) {
    const auto sum = m.summary(s);
    doc[std::string(fa::to_string(s))] = {{"patients", sum.patients},
                                          {"frames", sum.frames},
                                          {"positives", sum.positives},
                                          {"positive_fraction", sum.positive_fraction()}};
  }
  emit(doc, [&] { print_kv(doc); });
}

// ---- ingest

struct IngestArgs {
  std::string video, patient, camera = "other", out;
  int stride = 1;
};

void run_ingest(const IngestArgs& a) {
  const auto records = fa::ingest_video(a.video, a.patient, fa::parse_camera(a.camera), a.stride, a.out);
  // Unlabeled records, one JSON object per line.
  const auto list = std::filesystem::path(a.out) / "frames.jsonl";
  std::ofstream f(list);
  for (const auto& r : records) f << json(r).dump() << '\n';
  if (!f) fa::fail(fa::ErrorKind::IoError, "cannot write " + list.string());
  json doc{{"frames", records.size()}, {"records", list.string()}};
  emit(doc, [&] { print_kv(doc); });
}

// ---- train

struct TrainArgs {
  std::string manifest, out, base_weights;
  fa::TrainConfig config;
};

void run_train(const TrainArgs& a) {
  const auto manifest = fa::DatasetManifest::load(a.manifest);
  fa::TrainOptions opt;
  if (!a.base_weights.empty()) opt.base_weights = a.base_weights;
  const int total = a.config.epochs;
  opt.on_epoch = [total](const fa::EpochStats& e) {
    std::fprintf(stderr, "epoch %d/%d  loss %.4f  val_loss %.4f  val_acc %.3f  %.1fs\n", e.epoch, total,
                 e.train_loss, e.internal_val_loss, e.internal_val_accuracy, e.seconds);
  };
  const auto result = fa::train(manifest, a.config, opt);
  result.artifact->save(a.out);
  json doc{{"model_dir", a.out}, {"version", result.artifact->version()}, {"training_report", result.report}};
  emit(doc, [&] {
    std::cout << "model_dir: " << a.out << "\nversion: " << result.artifact->version() << '\n';
  });
}

// ---- eval

struct EvalArgs {
  std::string model, manifest, split = "holdout", predictions;
  bool by_camera = false;
};

void run_eval(const EvalArgs& a) {
  const auto model = load_model(a.model);
  const auto manifest = fa::DatasetManifest::load(a.manifest);
  const auto split = fa::parse_split(a.split);
  const auto run = fa::evaluate(*model, manifest, split, a.by_camera);
  if (!a.predictions.empty()) {
    std::ofstream f(a.predictions);
    for (const auto& p : run.predictions) {
      f << json{{"frame_id", p.frame_id}, {"truth", fa::to_string(p.truth)}, {"result", p.result},
                {"stratum", fa::to_string(p.stratum)}}
               .dump()
        << '\n';
    }
  }
  emit(json(run.reports), [&] {
    std::cout << fa::format_metrics_table(run.reports, split == fa::Split::train ? "Training" : "Validation");
  }, true);
}

// ---- classify

struct ClassifyArgs {
  std::string model;
  std::vector<std::string> images;
  std::optional<double> threshold;
};

void run_classify(const ClassifyArgs& a) {
  const auto model = load_model(a.model);
  if (a.images.size() == 1) {
    const auto img = fa::read_image(a.images[0]);
    const auto r = a.threshold ? fa::predict(*model, img, *a.threshold) : fa::predict(*model, img);
    const json doc = r;
    emit(doc, [&] { print_kv(doc); });
    return;
  }
  std::vector<std::filesystem::path> files(a.images.begin(), a.images.end());
  const auto items = fa::predict_batch(*model, files);
  json doc = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    json entry{{"image", a.images[i]}};
    if (items[i].ok()) {
      auto r = *items[i].result;
      if (a.threshold) {
        r.threshold = *a.threshold;
        r.label = fa::apply_threshold(r.probability, r.threshold);
      }
      entry["result"] = r;
    } else {
      entry["error"] = items[i].error;
    }
    doc.push_back(entry);
  }
  emit(doc, [&] {
    for (const auto& e : doc) {
      std::cout << e["image"].get<std::string>() << "  "
                << (e.contains("result") ? e["result"]["label"].get<std::string>() + " " +
                                               e["result"]["probability"].dump()
                                         : "error: " + e["error"].get<std::string>())
                << '\n';
    }
  });
}

// ---- boundary

struct BoundaryArgs {
  std::string model, image, axis = "horizontal", distal = "increasing_x", export_strips, overlay;
  int strip_width = fa::kDefaultStripWidth;
  std::optional<double> threshold;
};

void run_boundary(const BoundaryArgs& a) {
  const auto model = load_model(a.model);
  const auto img = fa::read_image(a.image);
  fa::BoundaryOptions opt;
  opt.strip_width = a.strip_width;
  opt.axis = fa::parse_axis(a.axis);
  opt.distal = fa::parse_distal(a.distal);
  opt.threshold = a.threshold;
  if (!a.export_strips.empty()) fa::export_strips(fa::tile(img, opt.strip_width, opt.axis), a.export_strips);

  json doc;
  fa::BoundaryEstimate est;
  try {
    est = fa::analyze_boundary(*model, img, opt);
    doc = est;
  } catch (const fa::NoFluorescentRegion& e) {
    est = e.estimate();
    doc = est;
    doc["reason"] = "no_fluorescent_region";
  }
  if (!a.overlay.empty()) fa::write_png(a.overlay, fa::render_boundary_overlay(img, est));
  emit(doc, [&] {
    std::cout << "boundary_x: " << (est.boundary_x ? std::to_string(*est.boundary_x) : "none") << '\n';
    for (const auto& s : est.strips) {
      std::printf("%3d  [%5d, %5d)  %.6f  %s\n", s.index, s.x0, s.x1, s.probability,
                  std::string(fa::to_string(s.label)).c_str());
    }
  });
}

// ---- saliency

struct SaliencyArgs {
  std::string model, image, out, map;
  double opacity = 0.5;
};

void run_saliency(const SaliencyArgs& a) {
  const auto model = load_model(a.model);
  const auto img = fa::read_image(a.image);
  const auto map = fa::compute_saliency(*model, img, std::filesystem::path(a.image).stem().string());
  fa::write_png(a.out, fa::render_overlay(img, map, a.opacity));
  if (!a.map.empty()) {
    cv::Mat grey;
    map.values.convertTo(grey, CV_8U, 255.0);
    fa::write_png(a.map, grey);
  }
  json doc{{"overlay", a.out},
           {"frame_id", map.frame_id},
           {"model_version", map.model_version},
           {"method_id", map.method_id},
           {"explained_class", fa::to_string(map.explained_class)}};
  emit(doc, [&] { print_kv(doc); });
}

// ---- serve

struct ServeArgs {
  std::string model_dir, bind = "127.0.0.1:8080";
  std::size_t max_upload = fa::kDefaultMaxUpload;
  int timeout = 30;
};

std::atomic<int> g_signal{0};

void run_serve(const ServeArgs& a) {
  fa::ServiceConfig cfg;
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) fa::fail(fa::ErrorKind::InvalidConfig, "--bind expects HOST:PORT");
  cfg.host = a.bind.substr(0, colon);
  try {
    cfg.port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    fa::fail(fa::ErrorKind::InvalidConfig, "bad port in --bind");
  }
  if (!a.model_dir.empty()) cfg.model_dir = a.model_dir;
  cfg.max_upload_bytes = a.max_upload;
  cfg.request_timeout_seconds = a.timeout;

  fa::Service service(cfg);
  const int port = service.bind();
  service.load_async();
  std::fprintf(stderr, "listening on %s:%d\n", cfg.host.c_str(), port);

  // SIGHUP reloads the model directory; SIGINT/SIGTERM stop the server.
  std::signal(SIGHUP, [](int s) { g_signal = s; });
  std::signal(SIGINT, [](int s) { g_signal = s; });
  std::signal(SIGTERM, [](int s) { g_signal = s; });
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      const int s = g_signal.exchange(0);
      if (s == SIGHUP) {
        if (service.reload()) {
          std::fprintf(stderr, "reloaded %s\n", service.artifact()->version().c_str());
        } else {
          std::fprintf(stderr, "reload failed: %s\n", service.last_error().c_str());
        }
      } else if (s != 0) {
        service.stop();
        return;
      }
    }
  });
  service.run();
  done = true;
  watcher.join();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluorescence angiography toolkit"};
  app.set_version_flag("--version", std::string("fa ") + FA_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  bool as_json = false, as_table = false;
  auto* jflag = app.add_flag("--json", as_json, "JSON output");
  app.add_flag("--table", as_table, "Plain-text output")->excludes(jflag);

  std::function<void()> action;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  s->add_option("--patients", synth.patients)->check(CLI::PositiveNumber);
  s->add_option("--frames", synth.frames, "Frames per patient")->check(CLI::PositiveNumber);
  s->add_option("--positive-frac", synth.positive_frac)->check(CLI::Range(0.0, 1.0));
  s->add_option("--seed", synth.seed);
  s->add_option("--holdout-patients", synth.holdout)->check(CLI::NonNegativeNumber);
  s->add_option("--width", synth.width)->check(CLI::PositiveNumber);
  s->add_option("--height", synth.height)->check(CLI::PositiveNumber);
  s->add_option("--out", synth.out)->required();
  s->callback([&] { action = [&] { run_synth(synth); }; });

  IngestArgs ingest;
  auto* in = app.add_subcommand("ingest", "Extract frames from a video");
  in->add_option("--video", ingest.video)->required()->check(CLI::ExistingFile);
  in->add_option("--patient", ingest.patient)->required();
  in->add_option("--camera", ingest.camera)
      ->check(CLI::IsMember({"pinpoint", "stryker1688", "arthrex", "synthetic", "other"}));
  in->add_option("--stride", ingest.stride)->check(CLI::PositiveNumber);
  in->add_option("--out", ingest.out)->required();
  in->callback([&] { action = [&] { run_ingest(ingest); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fine-tune the classifier on a manifest");
  t->add_option("--manifest", tr.manifest)->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Artifact directory")->required();
  t->add_option("--epochs", tr.config.epochs)->check(CLI::PositiveNumber);
  t->add_option("--crop", tr.config.crop.crop_size, "Random crop size")->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.config.seed);
  t->add_option("--batch-size", tr.config.batch_size)->check(CLI::PositiveNumber);
  t->add_option("--lr", tr.config.learning_rate, "Peak learning rate");
  t->add_option("--weight-decay", tr.config.weight_decay);
  t->add_option("--val-fraction", tr.config.internal_val_fraction)->check(CLI::Range(0.0, 1.0));
  t->add_option("--input-size", tr.config.input_size)->check(CLI::PositiveNumber);
  t->add_option("--width", tr.config.base_width, "Base channel width of the network")->check(CLI::PositiveNumber);
  t->add_option("--base-weights", tr.base_weights, "Artifact dir or weights file for the trunk");
  bool no_weighting = false;
  t->add_flag("--no-class-weighting", no_weighting);
  t->callback([&] {
    tr.config.class_weighting = !no_weighting;
    tr.config.crop.seed = tr.config.seed;
    action = [&] { run_train(tr); };
  });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a model on a manifest split");
  e->add_option("--model", ev.model)->required();
  e->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
  e->add_option("--split", ev.split)->check(CLI::IsMember({"train", "holdout"}));
  e->add_flag("--by-camera", ev.by_camera, "Add internal/external camera strata");
  e->add_option("--predictions", ev.predictions, "Write per-frame predictions (JSONL)");
  e->callback([&] { action = [&] { run_eval(ev); }; });

  ClassifyArgs cl;
  auto* c = app.add_subcommand("classify", "Classify one or more frames");
  c->add_option("--model", cl.model)->required();
  c->add_option("--image", cl.images)->required();
  c->add_option("--threshold", cl.threshold)->check(CLI::Range(0.0, 1.0));
  c->callback([&] { action = [&] { run_classify(cl); }; });

  BoundaryArgs bd;
  auto* b = app.add_subcommand("boundary", "Estimate the perfusion boundary of a frame");
  b->add_option("--model", bd.model)->required();
  b->add_option("--image", bd.image)->required();
  b->add_option("--strip-width", bd.strip_width)->check(CLI::PositiveNumber);
  b->add_option("--axis", bd.axis)->check(CLI::IsMember({"horizontal", "vertical"}));
  b->add_option("--distal", bd.distal)->check(CLI::IsMember({"increasing_x", "decreasing_x"}));
  b->add_option("--threshold", bd.threshold)->check(CLI::Range(0.0, 1.0));
  b->add_option("--export-strips", bd.export_strips, "Directory for strip JPEGs");
  b->add_option("--overlay", bd.overlay, "Annotated PNG output");
  b->callback([&] { action = [&] { run_boundary(bd); }; });

  SaliencyArgs sa;
  auto* sl = app.add_subcommand("saliency", "Render a saliency overlay");
  sl->add_option("--model", sa.model)->required();
  sl->add_option("--image", sa.image)->required();
  sl->add_option("--out", sa.out, "Overlay PNG")->required();
  sl->add_option("--map", sa.map, "Raw map as 8-bit PNG");
  sl->add_option("--opacity", sa.opacity)->check(CLI::Range(0.0, 1.0));
  sl->callback([&] { action = [&] { run_saliency(sa); }; });

  ServeArgs sv;
  auto* se = app.add_subcommand("serve", "Run the HTTP service");
  se->add_option("--model-dir", sv.model_dir, "Defaults to $FA_MODEL_DIR");
  se->add_option("--bind", sv.bind, "HOST:PORT");
  se->add_option("--max-upload", sv.max_upload, "Bytes")->check(CLI::PositiveNumber);
  se->add_option("--timeout", sv.timeout, "Request timeout in seconds")->check(CLI::PositiveNumber);
  se->callback([&] { action = [&] { run_serve(sv); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }
  g_format = as_json ? Format::json : as_table ? Format::table : Format::automatic;

  try {
    action();
  } catch (const fa::Error& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
