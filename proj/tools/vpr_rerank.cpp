#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <stop_token>
#include <thread>

#include "vpr/cli.hpp"

namespace {
volatile std::sig_atomic_t g_interrupted = 0;
}

int main(int argc, char** argv) {
  std::signal(SIGINT, [](int) { g_interrupted = 1; });
  std::signal(SIGTERM, [](int) { g_interrupted = 1; });

  // Signal handlers may not touch a stop_source, so a watcher forwards the flag.
  std::stop_source interrupt;
  std::jthread watcher([&interrupt](std::stop_token done) {
    while (!done.stop_requested()) {
      if (g_interrupted) {
        interrupt.request_stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });

  const std::vector<std::string> args(argv + 1, argv + argc);
  return vpr::run_cli(args, std::cout, std::cerr, interrupt.get_token());
}
