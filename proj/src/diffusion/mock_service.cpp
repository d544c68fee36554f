#include "ocsynth/diffusion/mock_service.hpp"

#include <chrono>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ocsynth/imaging/cutout.hpp"
#include "ocsynth/imaging/io.hpp"
#include "ocsynth/util/encoding.hpp"

namespace ocs {

using nlohmann::json;

struct MockDiffusionService::Server {
  httplib::Server http;
};

MockDiffusionService::MockDiffusionService() : MockDiffusionService(Behavior{}) {}

MockDiffusionService::MockDiffusionService(Behavior behavior)
    : server_(std::make_unique<Server>()), behavior_(std::move(behavior)) {
  server_->http.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
    const int n = ++requests_;
    Behavior b;
    {
      std::lock_guard lock(mutex_);
      b = behavior_;
    }
    if (b.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(b.delay_ms));
    if (b.status_override) {
      res.status = b.status_override;
      res.set_content(R"({"error":"forced status"})", "application/json");
      return;
    }
    if (n <= b.fail_first) {
      res.status = 503;
      res.set_content(R"({"error":"warming up"})", "application/json");
      return;
    }
    json j;
    Image reference;
    int width = 0, height = 0;
    try {
      j = json::parse(req.body);
      width = j.at("width").get<int>();
      height = j.at("height").get<int>();
      const Mask edges = io::decode_mask(base64_decode(j.at("edge_map").get<std::string>()));
      reference = to_rgb(io::decode_image(base64_decode(j.at("ip_image").get<std::string>())));
      for (const char* key : {"prompt", "negative_prompt"})
        if (!j.at(key).is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
      if (j.at("steps").get<int>() < 1) throw std::invalid_argument("steps must be >= 1");
      (void)j.at("cfg").get<double>();
      (void)j.at("seed").get<std::uint64_t>();
      if (edges.width() != width || edges.height() != height) throw std::invalid_argument("edge_map size mismatch");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    if (b.malformed) {
      res.set_content("this is not json", "text/plain");
      return;
    }
    const Image out = b.fixed_image ? *b.fixed_image
                                    : resize_bilinear(reference, width + (b.wrong_resolution ? 1 : 0), height);
    const auto png = io::encode_png(out);
    res.set_content(json{{"image", base64_encode(png)}, {"seed", j.at("seed")}}.dump(), "application/json");
  });
}

MockDiffusionService::~MockDiffusionService() { stop(); }

void MockDiffusionService::start(int port) {
  if (port == 0) {
    port_ = server_->http.bind_to_any_port("127.0.0.1");
  } else if (server_->http.bind_to_port("127.0.0.1", port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ <= 0) fail(ErrorCode::kIoFailure, "mock service cannot bind port " + std::to_string(port));
  thread_ = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
}

void MockDiffusionService::run(int port) {
  port_ = port;
  if (!server_->http.listen("127.0.0.1", port)) fail(ErrorCode::kIoFailure, "mock service cannot listen");
}

void MockDiffusionService::stop() {
  server_->http.stop();
  if (thread_.joinable()) thread_.join();
}

void MockDiffusionService::set_behavior(Behavior behavior) {
  std::lock_guard lock(mutex_);
  behavior_ = std::move(behavior);
}

}  // namespace ocs
