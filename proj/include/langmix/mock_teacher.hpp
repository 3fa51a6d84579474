#pragma once

#include <atomic>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "langmix/hash.hpp"
#include "langmix/text_metrics.hpp"

namespace langmix {

// Local stand-in for a teacher endpoint so generation runs offline. By
// default every completion passes the trace gates; the knobs below inject
// specific gate failures or transport conditions on a schedule, which is how
// the retry paths get exercised.
struct MockTeacherOptions {
  int degenerate_first = 0;      // first N calls: phrase-repeating answer
  int degenerate_every = 0;      // every Nth call: phrase-repeating answer
  int multi_think_every = 0;     // every Nth call: two think blocks
  int english_answer_every = 0;  // every Nth call: non-Korean answer
  int missing_think_every = 0;   // every Nth call: no think block at all
  int fail_first = 0;            // first N calls: HTTP 500
  int throttle_first = 0;        // first N calls: HTTP 429
  int delay_ms = 0;
};

namespace mock_detail {

inline std::string first_hangul_word(std::string_view prompt) {
  for (std::string_view tok : whitespace_tokens(prompt)) {
    bool hangul = false;
    for_each_code_point(tok, [&](char32_t cp) { hangul = hangul || is_hangul(cp); });
    if (hangul) return std::string(tok);
  }
  return "문제";
}

inline std::string good_completion(std::string_view prompt) {
  std::string anchor = first_hangul_word(prompt);
  std::string think =
      "We analyze the question carefully and verify every condition before "
      "giving the final answer in Korean. The key phrase is " + anchor +
      " and we keep it in the original language. Reference case " +
      to_hex(murmur3_128(prompt)).substr(0, 8) + ".";
  while (hangul_ratio(think) < 0.08) {
    think += " 핵심 용어 확인.";
  }
  std::string answer =
      "정답은 다음과 같습니다. \\boxed{42} 가 최종 답입니다.";
  return "<think>" + think + "</think>\n" + answer;
}

inline std::string degenerate_completion(std::string_view prompt) {
  std::string out = "<think>Working on case " +
                    to_hex(murmur3_128(prompt)).substr(0, 8) +
                    "</think>\n정답은 ";
  for (int i = 0; i < 40; i++) out += "the answer is ";
  return out;
}

inline std::string multi_think_completion() {
  return "<think>first pass 확인</think><think>second pass</think> 답은 3 입니다.";
}

inline std::string english_answer_completion() {
  std::string think = "Short reasoning with 한국어 용어 단어 구절 kept intact.";
  return "<think>" + think + "</think>\nThe answer is definitely forty two.";
}

inline std::string missing_think_completion() {
  return "정답은 42 입니다. 추가 설명은 생략합니다.";
}

}  // namespace mock_detail

class MockTeacher {
 public:
  explicit MockTeacher(MockTeacherOptions options = {})
      : options_(options) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
  }

  ~MockTeacher() { stop(); }

  // Binds 127.0.0.1 (a free port when 0) and serves on a background thread.
  int start(int port = 0) {
    if (port == 0) {
      port_ = server_.bind_to_any_port("127.0.0.1");
    } else {
      if (!server_.bind_to_port("127.0.0.1", port)) return -1;
      port_ = port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }
  int calls() const { return calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    int call = ++calls_;
    int in_flight = ++in_flight_;
    int seen = max_in_flight_.load();
    while (in_flight > seen &&
           !max_in_flight_.compare_exchange_weak(seen, in_flight)) {
    }
    if (options_.delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.delay_ms));
    }

    if (call <= options_.throttle_first) {
      res.status = 429;
      res.set_content("{\"error\":\"rate limited\"}", "application/json");
      --in_flight_;
      return;
    }
    if (call <= options_.fail_first) {
      res.status = 500;
      res.set_content("{\"error\":\"internal\"}", "application/json");
      --in_flight_;
      return;
    }

    std::string prompt;
    try {
      auto doc = nlohmann::json::parse(req.body);
      for (const auto& msg : doc.at("messages")) {
        if (msg.at("role") == "user") {
          prompt = msg.at("content").get<std::string>();
        }
      }
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content("{\"error\":\"bad request\"}", "application/json");
      --in_flight_;
      return;
    }

    auto scheduled = [&](int every) { return every > 0 && call % every == 0; };
    std::string content;
    if (call <= options_.degenerate_first) {
      content = mock_detail::degenerate_completion(prompt);
    } else if (scheduled(options_.degenerate_every)) {
      content = mock_detail::degenerate_completion(prompt);
    } else if (scheduled(options_.multi_think_every)) {
      content = mock_detail::multi_think_completion();
    } else if (scheduled(options_.english_answer_every)) {
      content = mock_detail::english_answer_completion();
    } else if (scheduled(options_.missing_think_every)) {
      content = mock_detail::missing_think_completion();
    } else {
      content = mock_detail::good_completion(prompt);
    }

    nlohmann::json reply{
        {"id", "mock-" + std::to_string(call)},
        {"object", "chat.completion"},
        {"choices",
         nlohmann::json::array(
             {nlohmann::json{{"index", 0},
                             {"message", nlohmann::json{{"role", "assistant"},
                                                        {"content", content}}},
                             {"finish_reason", "stop"}}})}};
    res.set_content(reply.dump(), "application/json");
    --in_flight_;
  }

  MockTeacherOptions options_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace langmix
