#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "ocsynth/image.hpp"

namespace ocs {

// In-process stand-in for the generation service, speaking the same wire
// contract on 127.0.0.1. By default it answers with the reference image
// resized to the requested resolution.
class MockDiffusionService {
 public:
  struct Behavior {
    std::optional<Image> fixed_image{};  // returned verbatim when set
    int fail_first = 0;                // answer 503 to this many requests first
    int status_override = 0;           // e.g. 400; applied to every request
    int delay_ms = 0;                  // sleep before answering
    bool wrong_resolution = false;     // reply one pixel too wide
    bool malformed = false;            // reply 200 with a non-JSON body
  };

  MockDiffusionService();
  explicit MockDiffusionService(Behavior behavior);
  ~MockDiffusionService();
  MockDiffusionService(const MockDiffusionService&) = delete;
  MockDiffusionService& operator=(const MockDiffusionService&) = delete;

  // Binds `port` (0 picks a free one) and serves on a background thread.
  void start(int port = 0);
  void stop();
  // Serves on the calling thread until stop() from elsewhere.
  void run(int port);

  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }
  void set_behavior(Behavior behavior);

 private:
  struct Server;
  std::unique_ptr<Server> server_;
  std::thread thread_;
  std::mutex mutex_;
  Behavior behavior_;
  std::atomic<int> requests_{0};
  int port_ = 0;
};

}  // namespace ocs
