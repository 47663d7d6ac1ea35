#include "zenesis/backend.hpp"

#include <algorithm>
#include <cctype>

#include "zenesis/baselines.hpp"
#include "zenesis/error.hpp"
#include "zenesis/remote.hpp"

namespace zenesis {

void Thresholds::validate() const {
  if (!(box_threshold >= 0.0 && box_threshold <= 1.0 && text_threshold >= 0.0 && text_threshold <= 1.0)) {
    throw Error(Errc::InvalidArgument, "thresholds must lie in [0, 1]");
  }
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

void sort_detections(std::vector<Detection>& detections) {
  std::stable_sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.y0 != b.box.y0) return a.box.y0 < b.box.y0;
    return a.box.x0 < b.box.x0;
  });
}

SyntheticBackend::SyntheticBackend(std::optional<int> threshold) : threshold_(threshold) {
  if (threshold_ && (*threshold_ < 0 || *threshold_ > 255)) {
    throw Error(Errc::InvalidArgument, "synthetic threshold must lie in [0, 255]");
  }
}

int SyntheticBackend::foreground_level(const Image8& image) const {
  if (threshold_) return *threshold_;
  if (image.width() == 0 || image.height() == 0) return 256;
  return otsu_foreground_level(gray_histogram(image));
}

std::vector<Detection> SyntheticBackend::detect(const Image8& image, std::string_view prompt,
                                                const Thresholds& th) {
  if (blank(prompt)) {
    throw Error(Errc::EmptyPrompt, "prompt must not be empty");
  }
  th.validate();
  const int level = foreground_level(image);
  const auto gray = image.grayscale();
  std::vector<std::uint8_t> bits(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) bits[i] = gray[i] >= level ? 1 : 0;
  const Mask fg(image.width(), image.height(), std::move(bits));

  std::vector<Detection> out;
  for (const auto& comp : connected_components(fg)) {
    if (comp.pixels.size() < kMinComponentPixels) continue;
    std::uint64_t sum = 0;
    for (const auto i : comp.pixels) sum += gray[i];
    const double score = static_cast<double>(sum) / (255.0 * static_cast<double>(comp.pixels.size()));
    if (score < th.box_threshold) continue;
    out.push_back(Detection{comp.box, score, std::string(prompt)});
  }
  sort_detections(out);
  return out;
}

Mask SyntheticBackend::segment(const Image8& image, const BBox& box) {
  const auto clipped = clip_to_frame(box, image.width(), image.height());
  if (!clipped) {
    throw Error(Errc::DegenerateBox, "box has no area inside the image");
  }
  const int level = foreground_level(image);
  Mask mask(image.width(), image.height());
  for (int y = clipped->y0; y < clipped->y1; ++y) {
    for (int x = clipped->x0; x < clipped->x1; ++x) {
      mask.set(x, y, image.gray(x, y) >= level);
    }
  }
  return mask;
}

void BackendDescriptor::validate() const {
  if (kind == Kind::Remote && (!remote_url || remote_url->empty())) {
    throw Error(Errc::InvalidArgument, "remote backend requires a URL");
  }
  if (synthetic_threshold && (*synthetic_threshold < 0 || *synthetic_threshold > 255)) {
    throw Error(Errc::InvalidArgument, "synthetic threshold must lie in [0, 255]");
  }
}

void to_json(nlohmann::json& j, const BackendDescriptor& d) {
  j = nlohmann::json{{"kind", d.kind == BackendDescriptor::Kind::Remote ? "remote" : "synthetic"},
                     {"remote_url", d.remote_url ? nlohmann::json(*d.remote_url) : nlohmann::json(nullptr)},
                     {"synthetic_threshold",
                      d.synthetic_threshold ? nlohmann::json(*d.synthetic_threshold) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, BackendDescriptor& d) {
  const auto kind = j.value("kind", std::string("synthetic"));
  if (kind == "synthetic") {
    d.kind = BackendDescriptor::Kind::Synthetic;
  } else if (kind == "remote") {
    d.kind = BackendDescriptor::Kind::Remote;
  } else {
    throw Error(Errc::InvalidArgument, "unknown backend kind '" + kind + "'");
  }
  d.remote_url.reset();
  d.synthetic_threshold.reset();
  if (j.contains("remote_url") && !j.at("remote_url").is_null()) d.remote_url = j.at("remote_url").get<std::string>();
  if (j.contains("synthetic_threshold") && !j.at("synthetic_threshold").is_null()) {
    d.synthetic_threshold = j.at("synthetic_threshold").get<int>();
  }
}

void to_json(nlohmann::json& j, const Thresholds& th) {
  j = nlohmann::json{{"box_threshold", th.box_threshold}, {"text_threshold", th.text_threshold}};
}

void from_json(const nlohmann::json& j, Thresholds& th) {
  th = Thresholds{};
  th.box_threshold = j.value("box_threshold", th.box_threshold);
  th.text_threshold = j.value("text_threshold", th.text_threshold);
}

std::shared_ptr<SegBackend> make_backend(const BackendDescriptor& descriptor, const RemoteOptions& options) {
  descriptor.validate();
  if (descriptor.kind == BackendDescriptor::Kind::Remote) {
    return std::make_shared<RemoteBackend>(*descriptor.remote_url, options);
  }
  return std::make_shared<SyntheticBackend>(descriptor.synthetic_threshold);
}

Mask segment_in_box(SegBackend& backend, const Image8& image, const BBox& box) {
  const auto clipped = clip_to_frame(box, image.width(), image.height());
  if (!clipped) {
    throw Error(Errc::DegenerateBox, "box has no area inside the image");
  }
  Mask mask = backend.segment(image, *clipped);
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw Error(Errc::Protocol, "segmenter returned a mask of the wrong size");
  }
  mask.clip_to(*clipped);
  return mask;
}

SegmentationRecord detect_and_segment(SegBackend& backend, const Image8& image, std::string_view prompt,
                                      const Thresholds& th) {
  const auto detections = backend.detect(image, prompt, th);
  SegmentationRecord record;
  record.slice_index = image.provenance().slice_index;
  record.prompt = std::string(prompt);
  if (detections.empty()) {
    record.mask = Mask(image.width(), image.height());
    record.provenance = Provenance::AutoEmpty;
    return record;
  }
  const Detection& top = detections.front();
  record.box = top.box;
  record.score = top.score;
  record.mask = segment_in_box(backend, image, top.box);
  record.provenance = Provenance::Auto;
  return record;
}

}  // namespace zenesis
