#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "cli.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_sigint(int) { g_interrupted = 1; }

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::stop_source source;
    std::signal(SIGINT, on_sigint);
    // Request a cooperative stop once Ctrl-C is seen; the solver checks between batch rounds.
    std::jthread watcher([&source](std::stop_token own) {
        while (!own.stop_requested()) {
            if (g_interrupted) {
                source.request_stop();
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    });
    const int code = sparsebnb::cli::run(args, std::cout, std::cerr, source.get_token());
    watcher.request_stop();
    return code;
}
