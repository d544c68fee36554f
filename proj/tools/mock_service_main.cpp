#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ocsynth/diffusion/mock_service.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stand-in generation service echoing the reference background"};
  int port = 0, fail_first = 0, status = 0, delay_ms = 0;
  app.add_option("--port", port, "Port on 127.0.0.1; 0 picks a free one");
  app.add_option("--fail-first", fail_first, "Answer 503 to this many requests first");
  app.add_option("--status", status, "Answer every request with this HTTP status");
  app.add_option("--delay-ms", delay_ms, "Sleep before answering");
  CLI11_PARSE(app, argc, argv);

  ocs::MockDiffusionService::Behavior b;
  b.fail_first = fail_first;
  b.status_override = status;
  b.delay_ms = delay_ms;
  ocs::MockDiffusionService service(b);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.start(port);
  std::cout << service.endpoint() << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  service.stop();
  return 0;
}
