#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "zenesis/adapt.hpp"
#include "zenesis/backend.hpp"
#include "zenesis/baselines.hpp"
#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"
#include "zenesis/metrics.hpp"
#include "zenesis/protocol.hpp"
#include "zenesis/service.hpp"
#include "zenesis/session.hpp"

namespace fs = std::filesystem;
using namespace zenesis;

namespace {

void env_override(const char* name, std::string& value) {
  if (const char* v = std::getenv(name); v && *v) value = v;
}

BackendDescriptor descriptor_for(const std::string& kind, const std::string& remote_url) {
  BackendDescriptor d;
  if (kind == "remote") {
    d.kind = BackendDescriptor::Kind::Remote;
    d.remote_url = remote_url;
  }
  d.validate();
  return d;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw Error(Errc::UnreadableFile, path.string() + ": write failed");
}

std::function<void()> g_stop;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zenesis: prompt-driven segmentation of scientific image volumes"};
  app.require_subcommand(1);

  std::string backend_kind = "synthetic";
  std::string remote_url;
  Thresholds th;

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string data_dir = "zenesis-data";
  std::string web_root;
  std::uint64_t max_upload = 2ull << 30;
  std::size_t workers = 0;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--backend", backend_kind)->check(CLI::IsMember({"synthetic", "remote"}));
  serve->add_option("--remote-url", remote_url);
  serve->add_option("--web-root", web_root, "Static files served at /");
  serve->add_option("--max-upload", max_upload, "Upload size cap in bytes");
  serve->add_option("--workers", workers, "Batch worker threads (0: all cores)");

  // batch
  auto* batch = app.add_subcommand("batch", "Mode B over a whole volume");
  std::string input, prompt, out_dir, gt_path;
  RefineConfig refine;
  for (auto* cmd : {batch}) {
    cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);
    cmd->add_option("--prompt", prompt)->required();
    cmd->add_option("--out", out_dir)->required();
    cmd->add_option("--backend", backend_kind)->check(CLI::IsMember({"synthetic", "remote"}));
    cmd->add_option("--remote-url", remote_url);
    cmd->add_option("--box-threshold", th.box_threshold);
    cmd->add_option("--text-threshold", th.text_threshold);
  }
  batch->add_option("--refine-window", refine.window);
  batch->add_option("--refine-factor", refine.size_factor);
  batch->add_option("--refine-min-history", refine.min_history);
  batch->add_option("--gt", gt_path, "Ground-truth masks to evaluate against");

  // eval
  auto* eval = app.add_subcommand("eval", "Mode C: compare prediction and ground-truth mask sets");
  std::string pred_path, report_path, csv_path;
  bool empty_zero = false;
  eval->add_option("--pred", pred_path)->required();
  eval->add_option("--gt", gt_path)->required();
  eval->add_option("--report", report_path);
  eval->add_option("--csv", csv_path);
  eval->add_flag("--empty-zero", empty_zero, "Score empty-vs-empty slices as 0 instead of 1");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Otsu or ungrounded segmentation of every slice");
  std::string method = "otsu";
  baseline->add_option("--method", method)->check(CLI::IsMember({"otsu", "ungrounded"}));
  baseline->add_option("--input", input)->required()->check(CLI::ExistingFile);
  baseline->add_option("--out", out_dir, "Output directory")->required();

  // stub-server
  auto* stub = app.add_subcommand("stub-server", "Inference server with synthetic semantics");
  stub->add_option("--host", host);
  stub->add_option("--port", port);

  CLI11_PARSE(app, argc, argv);

  env_override("ZENESIS_DATA_DIR", data_dir);
  env_override("ZENESIS_REMOTE_URL", remote_url);
  if (std::getenv("ZENESIS_REMOTE_URL") && *std::getenv("ZENESIS_REMOTE_URL") && backend_kind == "synthetic" &&
      app.got_subcommand(serve) && serve->count("--backend") == 0) {
    backend_kind = "remote";
  }

  try {
    if (app.got_subcommand(serve)) {
      ServiceOptions opts;
      opts.data_dir = data_dir;
      opts.backend = descriptor_for(backend_kind, remote_url);
      opts.max_upload_bytes = max_upload;
      opts.workers = workers;
      if (!web_root.empty()) opts.web_root = web_root;
      Service service(opts, make_backend(opts.backend));
      g_stop = [&service] { service.stop(); };
      std::signal(SIGINT, [](int) { if (g_stop) g_stop(); });
      std::signal(SIGTERM, [](int) { if (g_stop) g_stop(); });
      service.listen(host, port);
      return 0;
    }

    if (app.got_subcommand(stub)) {
      ModelStubServer server(std::make_shared<SyntheticBackend>());
      g_stop = [&server] { server.stop(); };
      std::signal(SIGINT, [](int) { if (g_stop) g_stop(); });
      std::signal(SIGTERM, [](int) { if (g_stop) g_stop(); });
      spdlog::info("stub server on {}:{}", host, port);
      server.listen(host, port);
      return 0;
    }

    if (app.got_subcommand(batch)) {
      th.validate();
      refine.validate();
      const auto descriptor = descriptor_for(backend_kind, remote_url);
      SessionStore store(fs::path(out_dir) / "data", descriptor, make_backend(descriptor));
      const auto staged = store.staging_path();
      fs::copy_file(input, staged);
      auto session = store.create_from_file(staged, fs::path(input).filename().string());
      BatchControl control;
      control.workers = std::max(1u, std::thread::hardware_concurrency());
      const auto outcome = session->run_batch({prompt, th, refine}, control);
      if (!gt_path.empty()) {
        const auto report = session->evaluate(gt_path);
        std::cout << "mean IoU " << report.iou.mean << ", mean Dice " << report.dice.mean << '\n';
      }
      const auto m = session->export_results(out_dir);
      std::cout << outcome.slices.size() << " slices, " << outcome.replaced_count() << " box(es) replaced\n"
                << "masks:    " << m.masks.string() << '\n'
                << "manifest: " << m.manifest.string() << '\n';
      if (m.metrics_csv) std::cout << "metrics:  " << m.metrics_csv->string() << '\n';
      return 0;
    }

    if (app.got_subcommand(eval)) {
      MetricOptions opts;
      opts.empty_as_one = !empty_zero;
      const auto report = evaluate_pair_set(pred_path, gt_path, opts);
      if (!report_path.empty()) write_text(report_path, nlohmann::json(report).dump(2) + "\n");
      if (!csv_path.empty()) write_text(csv_path, to_csv(report));
      std::printf("slices %zu\naccuracy %.6f +/- %.6f\niou      %.6f +/- %.6f\ndice     %.6f +/- %.6f\n",
                  report.sample_count, report.accuracy.mean, report.accuracy.std, report.iou.mean, report.iou.std,
                  report.dice.mean, report.dice.std);
      return 0;
    }

    if (app.got_subcommand(baseline)) {
      const auto volume = load_volume(input);
      const AdaptConfig adapt;
      const auto bounds = clip_bounds_for(volume, 0, adapt);
      SyntheticBackend backend;
      std::vector<Mask> masks;
      for (int z = 0; z < volume.depth(); ++z) {
        const auto image = adapt_slice(slice_at(volume, z), bounds, {volume.source_path(), z, adapt});
        masks.push_back(method == "otsu" ? otsu_segment(image) : ungrounded_segment(backend, image).mask);
      }
      fs::create_directories(out_dir);
      const auto path = fs::path(out_dir) / (method + "_masks.tif");
      save_mask_stack(masks, path);
      std::cout << masks.size() << " mask(s) written to " << path.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
