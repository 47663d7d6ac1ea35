#include "zenesis/service.hpp"

#include <charconv>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"
#include "zenesis/rle.hpp"

namespace zenesis {

namespace fs = std::filesystem;
using nlohmann::json;

int http_status(Errc code) {
  switch (code) {
    case Errc::NotFound:
    case Errc::UnknownRecord:
      return 404;
    case Errc::CountMismatch:
    case Errc::DimensionMismatch:
      return 422;
    case Errc::Cancelled:
      return 409;
    case Errc::Protocol:
      return 502;
    case Errc::BackendUnavailable:
      return 503;
    default:
      return 400;
  }
}

struct Service::Impl {
  ServiceOptions options;
  std::shared_ptr<SegBackend> backend;
  std::unique_ptr<SessionStore> store;
  std::unique_ptr<JobManager> jobs;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void routes();
};

namespace {

const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, std::string_view message) {
  reply(res, status, json{{"error", message}});
}

template <typename Handler>
void guarded(const httplib::Request& req, httplib::Response& res, Handler&& handler) {
  try {
    handler();
  } catch (const json::exception& e) {
    reply_error(res, 400, std::string("malformed request: ") + e.what());
  } catch (const Error& e) {
    reply_error(res, http_status(e.code()), e.what());
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", req.method, req.path, e.what());
    reply_error(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto body = json::parse(req.body);
  if (!body.is_object()) {
    throw Error(Errc::InvalidArgument, "request body must be a JSON object");
  }
  return body;
}

std::uint64_t parse_u64(const std::string& s, std::string_view what) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw Error(Errc::InvalidArgument, std::string(what) + " must be a non-negative integer");
  }
  return v;
}

Thresholds thresholds_from(const json& body) {
  Thresholds th;
  if (body.contains("thresholds")) {
    th = body.at("thresholds").get<Thresholds>();
  } else {
    th.box_threshold = body.value("box_threshold", th.box_threshold);
    th.text_threshold = body.value("text_threshold", th.text_threshold);
  }
  th.validate();
  return th;
}

json session_summary(const Session& s) {
  auto current = json::array();
  const auto records = s.current_records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    current.push_back({{"slice", i},
                       {"record_id", r ? json(r->record_id) : json(nullptr)},
                       {"provenance", r ? json(to_string(r->provenance)) : json(nullptr)}});
  }
  return json{{"session_id", s.id()},
              {"meta", s.meta()},
              {"adapt", s.adapt_config()},
              {"backend", s.backend_descriptor()},
              {"created_at", s.created_at()},
              {"updated_at", s.updated_at()},
              {"record_count", s.records().size()},
              {"current", std::move(current)}};
}

json candidates_json(const CandidateReply& reply) {
  auto segments = json::array();
  for (const auto& seg : reply.segments) {
    const auto box = seg.mask.bounding_box();
    segments.push_back({{"id", seg.id},
                        {"area", seg.mask.area()},
                        {"box", box ? json(*box) : json(nullptr)},
                        {"mask_rle", rle_encode(seg.mask)}});
  }
  return json{{"seed", reply.candidates.seed},
              {"count", reply.candidates.count},
              {"boxes", reply.candidates.boxes},
              {"segments", std::move(segments)},
              {"nearest", reply.nearest}};
}

}  // namespace

Service::Service(ServiceOptions options, std::shared_ptr<SegBackend> backend) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->backend = std::move(backend);
  impl_->store = std::make_unique<SessionStore>(impl_->options.data_dir, impl_->options.backend, impl_->backend,
                                                impl_->options.adapt);
  const auto loaded = impl_->store->load_existing();
  if (loaded > 0) spdlog::info("restored {} session(s) from {}", loaded, impl_->options.data_dir.string());
  const std::size_t workers =
      impl_->options.workers ? impl_->options.workers : std::max(1u, std::thread::hardware_concurrency());
  impl_->jobs = std::make_unique<JobManager>(workers);
  impl_->server.set_payload_max_length(impl_->options.max_upload_bytes);
  impl_->routes();
}

Service::~Service() { stop(); }

void Service::Impl::routes() {
  auto* self = this;
  const std::string api = "/api/v1";

  server.Post(api + "/sessions", [self](const httplib::Request& req, httplib::Response& res,
                                        const httplib::ContentReader& reader) {
    const fs::path staging = self->store->staging_path();
    std::ofstream out(staging, std::ios::binary);
    std::uint64_t received = 0;
    bool too_large = false;
    const bool ok = reader([&](const char* data, std::size_t len) {
      received += len;
      if (received > self->options.max_upload_bytes) {
        too_large = true;
        return false;
      }
      out.write(data, static_cast<std::streamsize>(len));
      return static_cast<bool>(out);
    });
    out.close();
    if (!ok || !out) {
      std::error_code ec;
      fs::remove(staging, ec);
      if (too_large || res.status == 413) {
        reply_error(res, 413, "upload exceeds the size limit");
      } else {
        reply_error(res, 400, "upload failed");
      }
      return;
    }
    guarded(req, res, [&] {
      if (received == 0) {
        std::error_code ec;
        fs::remove(staging, ec);
        throw Error(Errc::EmptyInput, "empty upload");
      }
      const std::string filename = req.has_param("filename") ? req.get_param_value("filename") : "upload.tif";
      auto session = self->store->create_from_file(staging, filename);
      spdlog::info("session {} created from {} ({} bytes)", session->id(), filename, received);
      reply(res, 201, json{{"session_id", session->id()}, {"meta", session->meta()}});
    });
    std::error_code ec;
    fs::remove(staging, ec);
  });

  auto session_of = [self](const httplib::Request& req) {
    auto s = self->store->get(req.matches[1].str());
    if (!s) throw Error(Errc::NotFound, "no session " + req.matches[1].str());
    return s;
  };

  server.Get(api + R"(/sessions/([0-9a-f]+))", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] { reply(res, 200, session_summary(*session_of(req))); });
  });

  server.Get(api + R"(/sessions/([0-9a-f]+)/preview)", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const int slice = req.has_param("slice")
                            ? static_cast<int>(parse_u64(req.get_param_value("slice"), "slice"))
                            : 0;
      double scale = 1.0;
      if (req.has_param("scale")) {
        try {
          scale = std::stod(req.get_param_value("scale"));
        } catch (const std::exception&) {
          throw Error(Errc::InvalidArgument, "scale must be a number");
        }
      }
      const auto png = s->preview_png(slice, scale);
      res.status = 200;
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });

  server.Post(api + R"(/sessions/([0-9a-f]+)/segment)", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const auto body = parse_body(req);
      const int slice = body.value("slice", 0);
      const auto record = s->segment_slice(slice, body.at("prompt").get<std::string>(), thresholds_from(body));
      reply(res, 200, record);
    });
  });

  server.Post(api + R"(/sessions/([0-9a-f]+)/batch)", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const auto body = parse_body(req);
      BatchRequest request;
      request.prompt = body.at("prompt").get<std::string>();
      request.thresholds = thresholds_from(body);
      if (body.contains("refine")) request.refine = body.at("refine").get<RefineConfig>();
      request.refine.validate();
      if (request.prompt.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(Errc::EmptyPrompt, "prompt is empty");
      }
      const auto job_id = self->jobs->submit(s, request);
      spdlog::info("session {}: batch job {} queued", s->id(), job_id);
      reply(res, 202, json{{"job_id", job_id}});
    });
  });

  server.Get(api + R"(/jobs/([0-9a-f]+))", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto job = self->jobs->get(req.matches[1].str());
      if (!job) throw Error(Errc::NotFound, "no job " + req.matches[1].str());
      reply(res, 200, *job);
    });
  });

  server.Post(api + R"(/jobs/([0-9a-f]+)/cancel)", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto id = req.matches[1].str();
      if (!self->jobs->get(id)) throw Error(Errc::NotFound, "no job " + id);
      self->jobs->cancel(id);
      reply(res, 200, *self->jobs->get(id));
    });
  });

  const std::string record_path = api + R"(/sessions/([0-9a-f]+)/records/([0-9]+))";
  auto record_id_of = [](const httplib::Request& req) { return parse_u64(req.matches[2].str(), "record id"); };

  server.Get(record_path, [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const auto rid = record_id_of(req);
      const auto r = s->record(rid);
      if (!r) throw Error(Errc::UnknownRecord, "no record " + std::to_string(rid));
      reply(res, 200, *r);
    });
  });

  server.Post(record_path + "/rectify", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const auto body = parse_body(req);
      reply(res, 200, s->rectify(record_id_of(req), body.at("box").get<BBox>()));
    });
  });

  server.Post(record_path + "/candidates", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const auto body = parse_body(req);
      const int count = body.value("count", 8);
      const std::uint64_t seed = body.contains("seed") ? body.at("seed").get<std::uint64_t>()
                                                       : std::random_device{}();
      reply(res, 200, candidates_json(s->propose_candidates(record_id_of(req), count, seed)));
    });
  });

  server.Post(record_path + "/further", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const auto body = parse_body(req);
      reply(res, 200, s->further_segment(record_id_of(req), body.at("prompt").get<std::string>(), thresholds_from(body)));
    });
  });

  server.Post(api + "/evaluate", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto body = parse_body(req);
      MetricOptions opts;
      opts.empty_as_one = !body.value("empty_zero", false);
      const fs::path gt = body.at("gt_path").get<std::string>();
      if (!fs::exists(gt)) throw Error(Errc::NotFound, "ground truth not found: " + gt.string());
      MetricsReport report;
      if (body.contains("session_id")) {
        const auto id = body.at("session_id").get<std::string>();
        const auto s = self->store->get(id);
        if (!s) throw Error(Errc::NotFound, "no session " + id);
        report = s->evaluate(gt, opts);
      } else {
        report = evaluate_pair_set(body.at("pred_path").get<std::string>(), gt, opts);
      }
      reply(res, 200, report);
    });
  });

  server.Get(api + R"(/sessions/([0-9a-f]+)/export)", [=](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&] {
      const auto s = session_of(req);
      const auto m = s->export_results(s->directory() / "export");
      reply(res, 200, m.document);
    });
  });

  server.Get(api + R"(/sessions/([0-9a-f]+)/export/(masks\.tif|manifest\.json|metrics\.csv))",
             [=](const httplib::Request& req, httplib::Response& res) {
               guarded(req, res, [&] {
                 const auto s = session_of(req);
                 const fs::path file = s->directory() / "export" / req.matches[2].str();
                 if (!fs::exists(file)) throw Error(Errc::NotFound, "not exported yet: " + file.filename().string());
                 const auto bytes = read_file_bytes(file);
                 const auto ext = file.extension().string();
                 const char* type = ext == ".tif" ? "image/tiff" : ext == ".csv" ? "text/csv" : kJson;
                 res.status = 200;
                 res.set_content(std::string(bytes.begin(), bytes.end()), type);
               });
             });

  if (options.web_root) {
    if (!server.set_mount_point("/", options.web_root->string())) {
      throw Error(Errc::NotFound, "web root not found: " + options.web_root->string());
    }
  }

  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
}

int Service::start(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) {
    throw Error(Errc::InvalidArgument, "cannot bind to " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void Service::listen(const std::string& host, int port) {
  impl_->port = port;
  spdlog::info("listening on {}:{}", host, port);
  if (!impl_->server.listen(host, port)) {
    throw Error(Errc::InvalidArgument, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int Service::port() const { return impl_->port; }
SessionStore& Service::store() { return *impl_->store; }
JobManager& Service::jobs() { return *impl_->jobs; }

}  // namespace zenesis
