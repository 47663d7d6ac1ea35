#include "zenesis/protocol.hpp"

#include <httplib.h>

#include <thread>

#include "zenesis/base64.hpp"
#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"
#include "zenesis/rle.hpp"

namespace zenesis {
namespace protocol {
namespace {

template <typename T>
T field(const nlohmann::json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) {
    throw Error(Errc::Protocol, std::string("missing field '") + key + "'");
  }
  try {
    return body.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::Protocol, std::string("field '") + key + "' has the wrong type");
  }
}

Image8 decode_image(const nlohmann::json& body) {
  const auto bytes = base64_decode(field<std::string>(body, "image_png_b64"));
  return decode_png_rgb8(bytes);
}

}  // namespace

nlohmann::json encode_detect_request(const Image8& image, std::string_view prompt, const Thresholds& th) {
  return nlohmann::json{{"image_png_b64", base64_encode(encode_png(image))},
                        {"prompt", std::string(prompt)},
                        {"box_threshold", th.box_threshold},
                        {"text_threshold", th.text_threshold}};
}

DetectRequest decode_detect_request(const nlohmann::json& body) {
  DetectRequest req;
  req.prompt = field<std::string>(body, "prompt");
  req.thresholds.box_threshold = field<double>(body, "box_threshold");
  req.thresholds.text_threshold = field<double>(body, "text_threshold");
  req.image = decode_image(body);
  return req;
}

nlohmann::json encode_detect_response(const std::vector<Detection>& detections) {
  auto list = nlohmann::json::array();
  for (const auto& d : detections) {
    list.push_back({{"x0", d.box.x0},
                    {"y0", d.box.y0},
                    {"x1", d.box.x1},
                    {"y1", d.box.y1},
                    {"score", d.score},
                    {"phrase", d.phrase}});
  }
  return nlohmann::json{{"detections", std::move(list)}};
}

std::vector<Detection> decode_detect_response(const nlohmann::json& body) {
  const auto list = field<nlohmann::json>(body, "detections");
  if (!list.is_array()) {
    throw Error(Errc::Protocol, "'detections' must be an array");
  }
  std::vector<Detection> out;
  out.reserve(list.size());
  for (const auto& item : list) {
    Detection d;
    d.box = {field<int>(item, "x0"), field<int>(item, "y0"), field<int>(item, "x1"), field<int>(item, "y1")};
    d.score = field<double>(item, "score");
    d.phrase = field<std::string>(item, "phrase");
    out.push_back(std::move(d));
  }
  return out;
}

nlohmann::json encode_segment_request(const Image8& image, const BBox& box) {
  return nlohmann::json{{"image_png_b64", base64_encode(encode_png(image))}, {"box", box}};
}

SegmentRequest decode_segment_request(const nlohmann::json& body) {
  SegmentRequest req;
  req.box = field<BBox>(body, "box");
  req.image = decode_image(body);
  return req;
}

nlohmann::json encode_segment_response(const Mask& mask) {
  return nlohmann::json{{"mask_rle", rle_encode(mask)}};
}

Mask decode_segment_response(const nlohmann::json& body) {
  return rle_decode(field<RleMask>(body, "mask_rle"));
}

}  // namespace protocol

struct ModelStubServer::Impl {
  std::shared_ptr<SegBackend> backend;
  httplib::Server server;
  std::thread thread;
  std::string host = "127.0.0.1";
  int port = 0;
};

namespace {

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
}

template <typename Handler>
void guarded(const httplib::Request& req, httplib::Response& res, Handler&& handler) {
  try {
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(handler(body).dump(), "application/json");
  } catch (const nlohmann::json::exception& e) {
    reply_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::Protocol:
      case Errc::EmptyPrompt:
      case Errc::DegenerateBox:
      case Errc::InvalidArgument:
        reply_error(res, 400, e.what());
        break;
      default:
        reply_error(res, 500, e.what());
    }
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

ModelStubServer::ModelStubServer(std::shared_ptr<SegBackend> backend) : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  auto* self = impl_.get();
  self->server.Post(protocol::kDetectPath, [self](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const nlohmann::json& body) {
      const auto r = protocol::decode_detect_request(body);
      return protocol::encode_detect_response(self->backend->detect(r.image, r.prompt, r.thresholds));
    });
  });
  self->server.Post(protocol::kSegmentPath, [self](const httplib::Request& req, httplib::Response& res) {
    guarded(req, res, [&](const nlohmann::json& body) {
      const auto r = protocol::decode_segment_request(body);
      if (!r.box.inside(r.image.width(), r.image.height())) {
        throw Error(Errc::DegenerateBox, "box must have positive area inside the image");
      }
      return protocol::encode_segment_response(self->backend->segment(r.image, r.box));
    });
  });
}

ModelStubServer::~ModelStubServer() { stop(); }

int ModelStubServer::start(const std::string& host, int port) {
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) {
    throw Error(Errc::BackendUnavailable, "cannot bind stub server to " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void ModelStubServer::listen(const std::string& host, int port) {
  impl_->host = host;
  impl_->port = port;
  if (!impl_->server.listen(host, port)) {
    throw Error(Errc::BackendUnavailable, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void ModelStubServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string ModelStubServer::url() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

}  // namespace zenesis
