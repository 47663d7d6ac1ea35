#include <catch_amalgamated.hpp>

#include <fstream>
#include <thread>

#include <httplib.h>

#include "zenesis/base64.hpp"
#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"
#include "zenesis/protocol.hpp"
#include "zenesis/remote.hpp"
#include "zenesis/rle.hpp"

using namespace zenesis;
using nlohmann::json;

namespace {

json fixture(const std::string& name) {
  std::ifstream in(std::filesystem::path(ZENESIS_FIXTURE_DIR) / "protocol" / name);
  REQUIRE(in);
  return json::parse(in);
}

// The image the fixtures were generated from.
Image8 fixture_image() {
  std::vector<std::uint8_t> rgb(16 * 12 * 3, 0);
  auto fill = [&](int x0, int y0, int x1, int y1, std::uint8_t v) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        for (int c = 0; c < 3; ++c) rgb[(y * 16 + x) * 3 + c] = v;
      }
    }
  };
  fill(4, 3, 10, 8, 255);
  fill(12, 9, 15, 11, 90);
  return Image8(16, 12, std::move(rgb));
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected zenesis::Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("golden detect request decodes and re-encodes") {
  const auto body = fixture("detect_request.json");
  const auto req = protocol::decode_detect_request(body);
  CHECK(req.image == fixture_image());
  CHECK(req.prompt == "particle");
  CHECK(req.thresholds == Thresholds{0.35, 0.25});

  auto ours = protocol::encode_detect_request(fixture_image(), "particle", {0.35, 0.25});
  // PNG encoders may differ byte-wise; pixels must not.
  CHECK(decode_png_rgb8(base64_decode(ours["image_png_b64"].get<std::string>())) == fixture_image());
  ours.erase("image_png_b64");
  auto theirs = body;
  theirs.erase("image_png_b64");
  CHECK(ours == theirs);
}

TEST_CASE("golden detect response both directions") {
  const auto body = fixture("detect_response.json");
  const auto dets = protocol::decode_detect_response(body);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0] == Detection{{4, 3, 10, 8}, 1.0, "particle"});
  CHECK(protocol::encode_detect_response(dets) == body);
  CHECK(protocol::encode_detect_response(SyntheticBackend().detect(fixture_image(), "particle", {})) == body);
}

TEST_CASE("golden segment request and response both directions") {
  const auto req = protocol::decode_segment_request(fixture("segment_request.json"));
  CHECK(req.box == BBox{2, 2, 12, 10});
  CHECK(req.image == fixture_image());

  const auto resp = fixture("segment_response.json");
  const auto mask = protocol::decode_segment_response(resp);
  CHECK(mask.area() == 30);
  CHECK(mask.bounding_box() == BBox{4, 3, 10, 8});
  CHECK(protocol::encode_segment_response(mask) == resp);
  CHECK(protocol::encode_segment_response(SyntheticBackend().segment(req.image, req.box)) == resp);
  CHECK(json(protocol::encode_segment_request(fixture_image(), req.box))["box"] == json{{"x0", 2}, {"y0", 2}, {"x1", 12}, {"y1", 10}});
}

TEST_CASE("malformed protocol bodies are rejected") {
  CHECK(code_of([] { protocol::decode_detect_request(json{{"prompt", "x"}}); }) == Errc::Protocol);
  CHECK(code_of([] { protocol::decode_detect_response(json{{"detections", 3}}); }) == Errc::Protocol);
  CHECK(code_of([] {
          protocol::decode_segment_response(json{{"mask_rle", {{"size", {2, 2}}, {"counts", {1, 1}}}}});
        }) == Errc::Protocol);
  auto bad = fixture("detect_request.json");
  bad["image_png_b64"] = "not base64!";
  CHECK(code_of([&] { protocol::decode_detect_request(bad); }) == Errc::Protocol);
}

TEST_CASE("stub server answers the golden requests with the golden responses") {
  ModelStubServer stub(std::make_shared<SyntheticBackend>());
  const int port = stub.start();
  httplib::Client client("127.0.0.1", port);

  auto res = client.Post(protocol::kDetectPath, fixture("detect_request.json").dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body) == fixture("detect_response.json"));

  res = client.Post(protocol::kSegmentPath, fixture("segment_request.json").dump(), "application/json");
  REQUIRE(res);
  CHECK(json::parse(res->body) == fixture("segment_response.json"));

  res = client.Post(protocol::kDetectPath, "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(json::parse(res->body).contains("error"));

  auto empty_prompt = fixture("detect_request.json");
  empty_prompt["prompt"] = "";
  res = client.Post(protocol::kDetectPath, empty_prompt.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
}

TEST_CASE("remote backend matches the in-process backend through the stub") {
  ModelStubServer stub(std::make_shared<SyntheticBackend>());
  stub.start();
  RemoteBackend remote(stub.url());
  SyntheticBackend local;
  const auto img = fixture_image();
  CHECK(remote.detect(img, "particle", {}) == local.detect(img, "particle", {}));
  CHECK(remote.segment(img, {2, 2, 12, 10}) == local.segment(img, {2, 2, 12, 10}));
  CHECK(detect_and_segment(remote, img, "p", {}) == detect_and_segment(local, img, "p", {}));
  CHECK(code_of([&] { remote.detect(img, "", {}); }) == Errc::EmptyPrompt);
}

TEST_CASE("remote backend error mapping") {
  const auto img = fixture_image();
  {
    RemoteBackend nowhere("http://127.0.0.1:1");
    CHECK(code_of([&] { nowhere.detect(img, "x", {}); }) == Errc::BackendUnavailable);
  }

  httplib::Server fake;
  fake.Post(protocol::kDetectPath, [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content(R"({"error":"model not loaded"})", "application/json");
  });
  fake.Post(protocol::kSegmentPath, [](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    if (body["box"]["x0"] == 0) {
      res.status = 422;
      res.set_content(R"({"error":"bad box"})", "application/json");
      return;
    }
    // Wrong mask size.
    res.set_content(json{{"mask_rle", {{"size", {1, 1}}, {"counts", {1}}}}}.dump(), "application/json");
  });
  const int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();
  RemoteBackend remote("http://127.0.0.1:" + std::to_string(port));
  CHECK(code_of([&] { remote.detect(img, "x", {}); }) == Errc::BackendUnavailable);
  CHECK(code_of([&] { remote.segment(img, {0, 0, 4, 4}); }) == Errc::Protocol);
  CHECK(code_of([&] { segment_in_box(remote, img, {1, 1, 4, 4}); }) == Errc::Protocol);
  fake.stop();
  t.join();
}

namespace {

// Returns boxes out of order, out of frame, and below threshold.
class SloppyBackend final : public SegBackend {
 public:
  std::vector<Detection> detect(const Image8&, std::string_view, const Thresholds&) override {
    return {{{-3, -3, 5, 5}, 0.5, "a"}, {{2, 2, 6, 6}, 0.9, "b"}, {{0, 0, 3, 3}, 0.1, "c"}, {{20, 20, 30, 30}, 0.95, "d"}};
  }
  Mask segment(const Image8& image, const BBox&) override { return Mask(image.width(), image.height()); }
};

}  // namespace

TEST_CASE("remote client re-validates detections") {
  ModelStubServer stub(std::make_shared<SloppyBackend>());
  stub.start();
  RemoteBackend remote(stub.url());
  const auto dets = remote.detect(fixture_image(), "x", {});
  REQUIRE(dets.size() == 2);
  CHECK(dets[0] == Detection{{2, 2, 6, 6}, 0.9, "b"});
  CHECK(dets[1] == Detection{{0, 0, 5, 5}, 0.5, "a"});
}
