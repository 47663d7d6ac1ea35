#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "zenesis/adapt.hpp"
#include "zenesis/backend.hpp"

namespace zenesis {

// Inference wire protocol (JSON over HTTP POST):
//   /v1/detect  {"image_png_b64", "prompt", "box_threshold", "text_threshold"}
//               -> {"detections": [{"x0","y0","x1","y1","score","phrase"}, ...]}
//   /v1/segment {"image_png_b64", "box": {"x0","y0","x1","y1"}}
//               -> {"mask_rle": {"size": [h, w], "counts": [...]}}
//   errors      4xx {"error": text}
namespace protocol {

inline constexpr const char* kDetectPath = "/v1/detect";
inline constexpr const char* kSegmentPath = "/v1/segment";

struct DetectRequest {
  Image8 image;
  std::string prompt;
  Thresholds thresholds;
};

struct SegmentRequest {
  Image8 image;
  BBox box;
};

nlohmann::json encode_detect_request(const Image8& image, std::string_view prompt, const Thresholds& th);
DetectRequest decode_detect_request(const nlohmann::json& body);

nlohmann::json encode_detect_response(const std::vector<Detection>& detections);
std::vector<Detection> decode_detect_response(const nlohmann::json& body);

nlohmann::json encode_segment_request(const Image8& image, const BBox& box);
SegmentRequest decode_segment_request(const nlohmann::json& body);

nlohmann::json encode_segment_response(const Mask& mask);
Mask decode_segment_response(const nlohmann::json& body);

}  // namespace protocol

/// HTTP server speaking the wire protocol on top of any in-process backend.
/// With a SyntheticBackend it is the reference stub used to test RemoteBackend.
class ModelStubServer {
 public:
  explicit ModelStubServer(std::shared_ptr<SegBackend> backend);
  ~ModelStubServer();

  ModelStubServer(const ModelStubServer&) = delete;
  ModelStubServer& operator=(const ModelStubServer&) = delete;

  /// Binds (port 0 picks a free port), starts serving on a background thread,
  /// and returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);

  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);

  void stop();

  std::string url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace zenesis
