// Standalone mock teacher endpoint for offline pipeline runs. Serves the
// chat-completion wire format on localhost and answers with gate-passing
// language-mixed completions unless a failure schedule says otherwise.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "langmix/mock_teacher.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mock chat-completion endpoint"};
  int port = 0;
  langmix::MockTeacherOptions options;
  app.add_option("--port", port, "port (0: pick a free one)");
  app.add_option("--degenerate-every", options.degenerate_every,
                 "every Nth completion repeats a phrase");
  app.add_option("--multi-think-every", options.multi_think_every,
                 "every Nth completion has two think blocks");
  app.add_option("--english-answer-every", options.english_answer_every,
                 "every Nth completion answers in English");
  app.add_option("--missing-think-every", options.missing_think_every,
                 "every Nth completion omits the think block");
  app.add_option("--fail-first", options.fail_first, "first N calls return 500");
  app.add_option("--throttle-first", options.throttle_first,
                 "first N calls return 429");
  app.add_option("--delay-ms", options.delay_ms, "per-request delay");
  CLI11_PARSE(app, argc, argv);

  langmix::MockTeacher teacher(options);
  int bound = teacher.start(port);
  if (bound <= 0) {
    std::cerr << "failed to bind port " << port << "\n";
    return 1;
  }
  std::cout << "mock teacher listening on " << teacher.base_url() << std::endl;

  // Run until interrupted.
  static volatile std::sig_atomic_t stop_requested = 0;
  std::signal(SIGINT, [](int) { stop_requested = 1; });
  std::signal(SIGTERM, [](int) { stop_requested = 1; });
  while (!stop_requested) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  teacher.stop();
  return 0;
}
