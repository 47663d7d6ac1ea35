#include "zenesis/remote.hpp"

#include <httplib.h>

#include <algorithm>

#include "zenesis/error.hpp"
#include "zenesis/protocol.hpp"

namespace zenesis {
namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

}  // namespace

RemoteBackend::RemoteBackend(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.empty()) {
    throw Error(Errc::InvalidArgument, "remote backend URL is empty");
  }
  const auto slots = static_cast<std::ptrdiff_t>(std::max<std::size_t>(options_.max_in_flight, 1));
  in_flight_ = std::make_unique<std::counting_semaphore<>>(slots);
}

RemoteBackend::~RemoteBackend() = default;

nlohmann::json RemoteBackend::post(const char* path, const nlohmann::json& body) {
  SlotGuard slot(*in_flight_);
  httplib::Client client(base_url_);
  const auto timeout = options_.timeout;
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(Errc::BackendUnavailable,
                base_url_ + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw Error(Errc::BackendUnavailable, base_url_ + path + ": HTTP " + std::to_string(res->status));
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::BackendUnavailable, base_url_ + path + ": non-JSON reply");
  }
  if (res->status >= 400) {
    const std::string message = reply.is_object() ? reply.value("error", std::string("request rejected")) : "request rejected";
    throw Error(Errc::Protocol, base_url_ + path + ": HTTP " + std::to_string(res->status) + ": " + message);
  }
  if (res->status != 200) {
    throw Error(Errc::BackendUnavailable, base_url_ + path + ": unexpected HTTP " + std::to_string(res->status));
  }
  return reply;
}

std::vector<Detection> RemoteBackend::detect(const Image8& image, std::string_view prompt, const Thresholds& th) {
  if (std::all_of(prompt.begin(), prompt.end(), [](unsigned char c) { return std::isspace(c); })) {
    throw Error(Errc::EmptyPrompt, "prompt must not be empty");
  }
  th.validate();
  auto raw = protocol::decode_detect_response(post(protocol::kDetectPath, protocol::encode_detect_request(image, prompt, th)));
  std::vector<Detection> out;
  for (auto& d : raw) {
    const auto clipped = clip_to_frame(d.box, image.width(), image.height());
    if (!clipped || !(d.score >= th.box_threshold) || d.score > 1.0) continue;
    d.box = *clipped;
    out.push_back(std::move(d));
  }
  sort_detections(out);
  return out;
}

Mask RemoteBackend::segment(const Image8& image, const BBox& box) {
  if (!box.inside(image.width(), image.height())) {
    throw Error(Errc::DegenerateBox, "box has no area inside the image");
  }
  return protocol::decode_segment_response(post(protocol::kSegmentPath, protocol::encode_segment_request(image, box)));
}

}  // namespace zenesis
