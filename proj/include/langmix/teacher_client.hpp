#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "langmix/config.hpp"
#include "langmix/errors.hpp"
#include "langmix/gates.hpp"
#include "langmix/jsonl.hpp"
#include "langmix/manifest.hpp"
#include "langmix/record.hpp"

namespace langmix {

// Chat-completion client that regenerates until the trace gates pass.
// Quality retries (gate failures, fresh samples) and transport retries
// (network, separate budget) never mix; HTTP 429 pauses get their own budget.

inline constexpr std::string_view kDefaultTeacherSystemPrompt =
    "Think carefully, do not translate the question while solving. Preserve "
    "the question in Korean so that you keep all details without adding "
    "noise. After you finish thinking, state your answer in fluent and "
    "coherent Korean.";

// Standard chat-completion payload; the prompt text is never templated.
inline nlohmann::json build_request(const PromptRecord& prompt,
                                    const GenerationConfig& cfg) {
  std::string system = cfg.system_prompt
                           ? *cfg.system_prompt
                           : std::string(kDefaultTeacherSystemPrompt);
  return nlohmann::json{
      {"model", cfg.model},
      {"messages",
       nlohmann::json::array({
           nlohmann::json{{"role", "system"}, {"content", system}},
           nlohmann::json{{"role", "user"}, {"content", prompt.text}},
       })},
      {"temperature", cfg.temperature},
      {"top_p", cfg.top_p},
      {"max_tokens", cfg.max_tokens}};
}

enum class JobStatus { pending, accepted, exhausted, failed };

inline const char* to_string(JobStatus s) {
  switch (s) {
    case JobStatus::pending: return "pending";
    case JobStatus::accepted: return "accepted";
    case JobStatus::exhausted: return "exhausted";
    case JobStatus::failed: return "failed";
  }
  return "?";
}

struct GenerationJob {
  std::string prompt_id;
  int attempts = 0;
  JobStatus status = JobStatus::pending;
  std::optional<TraceRecord> accepted_trace;
  std::vector<std::string> attempt_failures;  // failed gates per attempt, for audit
  std::string error;
};

class TeacherSession {
 public:
  TeacherSession(const GenerationConfig& cfg, const GateConfig& gates)
      : cfg_(cfg),
        gates_(gates),
        tokenizer_(Tokenizer::resolve(gates.tokenizer)),
        client_(cfg.endpoint) {
    client_.set_connection_timeout(10, 0);
    client_.set_read_timeout(300, 0);
    if (const char* token = std::getenv(cfg.auth_env.c_str())) {
      headers_.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  GenerationJob generate_with_gate(const PromptRecord& prompt) {
    GenerationJob job;
    job.prompt_id = prompt.id;
    GateConfig gates = gates_;
    gates.require_think = cfg_.require_think && gates_.require_think;

    for (int attempt = 0; attempt < cfg_.max_attempts; attempt++) {
      job.attempts = attempt + 1;
      std::string completion;
      std::string error;
      if (!call_endpoint(prompt, completion, error)) {
        job.status = JobStatus::failed;
        job.error = error;
        return job;
      }
      auto [trace, verdict] = make_trace_record(prompt.id, completion, gates,
                                                tokenizer_);
      if (verdict.keep) {
        job.status = JobStatus::accepted;
        job.accepted_trace = std::move(trace);
        return job;
      }
      std::string failed;
      for (const auto& gate : verdict.failed()) {
        if (!failed.empty()) failed += ",";
        failed += gate;
      }
      job.attempt_failures.push_back(failed);
    }
    job.status = JobStatus::exhausted;
    return job;
  }

 private:
  bool call_endpoint(const PromptRecord& prompt, std::string& completion,
                     std::string& error) {
    std::string body = build_request(prompt, cfg_).dump();
    int transport_left = cfg_.transport_retries;
    int quota_left = cfg_.quota_retries;
    int backoff = cfg_.backoff_ms;

    while (true) {
      auto res = client_.Post(cfg_.path, headers_, body, "application/json");
      if (!res) {
        if (transport_left-- > 0) {
          sleep_ms(backoff);
          backoff *= 2;
          continue;
        }
        error = "transport failure: " + httplib::to_string(res.error());
        return false;
      }
      if (res->status == 429) {
        if (quota_left-- > 0) {
          sleep_ms(backoff);
          backoff *= 2;
          continue;
        }
        error = "quota exhausted (HTTP 429)";
        return false;
      }
      if (res->status != 200) {
        error = "endpoint error: HTTP " + std::to_string(res->status) + " " +
                res->body.substr(0, 200);
        return false;
      }
      try {
        auto doc = nlohmann::json::parse(res->body);
        completion = doc.at("choices").at(0).at("message").at("content")
                         .get<std::string>();
        return true;
      } catch (const nlohmann::json::exception& e) {
        error = std::string("malformed endpoint response: ") + e.what();
        return false;
      }
    }
  }

  static void sleep_ms(int ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }

  GenerationConfig cfg_;
  GateConfig gates_;
  Tokenizer tokenizer_;
  httplib::Client client_;
  httplib::Headers headers_;
};

struct BatchResult {
  size_t read = 0;
  size_t skipped = 0;   // already completed per manifest/output
  size_t accepted = 0;
  size_t exhausted = 0;
  size_t failed = 0;
};

// Generates traces for every prompt id not yet completed, with at most
// `parallelism` requests in flight. Accepted traces append to the output
// file; every decided id appends to the manifest. Resume unions the manifest
// ids with prompt ids already present in the output file, so a crash between
// the two writes can never emit a prompt twice.
inline BatchResult run_batch(const std::vector<PromptRecord>& prompts,
                             const GenerationConfig& gen_cfg,
                             const GateConfig& gate_cfg,
                             const std::string& output_path,
                             const std::string& manifest_file,
                             const std::string& input_digest,
                             const std::string& config_digest,
                             const std::vector<std::string>& overrides = {}) {
  std::unordered_set<std::string> completed;
  auto existing = load_manifest(manifest_file);
  bool resume = existing && existing->input_digest == input_digest &&
                existing->config_digest == config_digest;
  if (resume) {
    completed = existing->completed_ids;
    if (std::filesystem::exists(output_path)) {
      for_each_jsonl<RawTrace>(
          output_path,
          [&](RawTrace&& t, size_t) { completed.insert(t.prompt_id); },
          [](const LineError&) {});
    }
  } else if (std::filesystem::exists(output_path)) {
    std::filesystem::remove(output_path);
  }

  ManifestWriter manifest(manifest_file, "generate", input_digest,
                          config_digest, overrides, resume);
  JsonlWriter out(output_path, resume);

  std::vector<const PromptRecord*> todo;
  BatchResult result;
  for (const auto& p : prompts) {
    result.read++;
    if (completed.count(p.id)) {
      result.skipped++;
    } else {
      todo.push_back(&p);
    }
  }

  std::atomic<size_t> next{0};
  std::atomic<bool> aborted{false};
  std::mutex write_mutex;
  std::string worker_error;
  int workers = std::max(1, gen_cfg.parallelism);
  auto worker = [&]() {
    TeacherSession session(gen_cfg, gate_cfg);
    while (!aborted.load()) {
      size_t i = next.fetch_add(1);
      if (i >= todo.size()) break;
      const PromptRecord& prompt = *todo[i];
      GenerationJob job = session.generate_with_gate(prompt);
      std::lock_guard<std::mutex> lock(write_mutex);
      switch (job.status) {
        case JobStatus::accepted:
          out.write(*job.accepted_trace);
          out.flush();
          manifest.record_kept(prompt.id);
          result.accepted++;
          break;
        case JobStatus::exhausted: {
          std::string detail;
          for (const auto& f : job.attempt_failures) {
            if (!detail.empty()) detail += ";";
            detail += f;
          }
          manifest.record_dropped(prompt.id, "gate_exhausted", detail);
          result.exhausted++;
          break;
        }
        case JobStatus::failed:
          manifest.record_dropped(prompt.id, "endpoint_error", job.error);
          result.failed++;
          break;
        case JobStatus::pending:
          break;
      }
    }
  };

  auto guarded = [&]() {
    try {
      worker();
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(write_mutex);
      if (worker_error.empty()) worker_error = e.what();
      aborted.store(true);
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; w++) threads.emplace_back(guarded);
  for (auto& t : threads) t.join();
  if (!worker_error.empty()) {
    throw DataError("generation batch aborted: " + worker_error);
  }
  return result;
}

}  // namespace langmix
