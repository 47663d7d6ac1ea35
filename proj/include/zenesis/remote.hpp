#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "zenesis/backend.hpp"

namespace zenesis {

/// Client for a model server speaking the inference wire protocol.
///
/// Network failures and 5xx replies raise BackendUnavailable; 4xx replies
/// raise Protocol with the server's error text. Detections are re-validated
/// locally: clipped to the frame, filtered by box_threshold and re-sorted, so
/// the result honours the same contract as SyntheticBackend.
class RemoteBackend final : public SegBackend {
 public:
  explicit RemoteBackend(std::string base_url, RemoteOptions options = {});
  ~RemoteBackend() override;

  std::vector<Detection> detect(const Image8& image, std::string_view prompt, const Thresholds& th) override;
  Mask segment(const Image8& image, const BBox& box) override;

  const std::string& base_url() const noexcept { return base_url_; }

 private:
  nlohmann::json post(const char* path, const nlohmann::json& body);

  std::string base_url_;
  RemoteOptions options_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace zenesis
