#include "zenesis/record.hpp"

#include "zenesis/error.hpp"
#include "zenesis/rle.hpp"

namespace zenesis {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Auto: return "auto";
    case Provenance::AutoEmpty: return "auto-empty";
    case Provenance::Refined: return "refined";
    case Provenance::Rectified: return "rectified";
    case Provenance::Further: return "further";
  }
  return "auto";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "auto") return Provenance::Auto;
  if (s == "auto-empty") return Provenance::AutoEmpty;
  if (s == "refined") return Provenance::Refined;
  if (s == "rectified") return Provenance::Rectified;
  if (s == "further") return Provenance::Further;
  throw Error(Errc::Protocol, "unknown provenance '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const BBox& box) {
  j = nlohmann::json{{"x0", box.x0}, {"y0", box.y0}, {"x1", box.x1}, {"y1", box.y1}};
}

void from_json(const nlohmann::json& j, BBox& box) {
  try {
    box.x0 = j.at("x0").get<int>();
    box.y0 = j.at("y0").get<int>();
    box.x1 = j.at("x1").get<int>();
    box.y1 = j.at("y1").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Protocol, std::string("malformed box: ") + e.what());
  }
}

namespace {

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const SegmentationRecord& r) {
  j = nlohmann::json{
      {"record_id", r.record_id},
      {"slice_index", r.slice_index},
      {"prompt", r.prompt},
      {"box", optional_json(r.box)},
      {"score", optional_json(r.score)},
      {"mask", rle_encode(r.mask)},
      {"provenance", to_string(r.provenance)},
      {"parent_id", optional_json(r.parent_id)},
      {"crop_origin", r.crop_origin ? nlohmann::json{r.crop_origin->x, r.crop_origin->y} : nlohmann::json(nullptr)},
      {"supersedes", optional_json(r.supersedes)},
  };
}

void from_json(const nlohmann::json& j, SegmentationRecord& r) {
  try {
    r.record_id = j.at("record_id").get<std::uint64_t>();
    r.slice_index = j.at("slice_index").get<int>();
    r.prompt = j.at("prompt").get<std::string>();
    r.box = optional_from<BBox>(j, "box");
    r.score = optional_from<double>(j, "score");
    r.mask = rle_decode(j.at("mask").get<RleMask>());
    r.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    r.parent_id = optional_from<std::uint64_t>(j, "parent_id");
    r.supersedes = optional_from<std::uint64_t>(j, "supersedes");
    r.crop_origin.reset();
    if (j.contains("crop_origin") && !j.at("crop_origin").is_null()) {
      const auto& o = j.at("crop_origin");
      r.crop_origin = CropOrigin{o.at(0).get<int>(), o.at(1).get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Protocol, std::string("malformed record: ") + e.what());
  }
}

}  // namespace zenesis
