#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "langmix/errors.hpp"
#include "langmix/eval.hpp"
#include "langmix/gates.hpp"
#include "langmix/hash.hpp"
#include "langmix/mixer.hpp"

namespace langmix {

// One flat config file with per-stage sections; a single digest of the
// effective config (after key=value overrides) stamps every manifest.

struct AugmentConfig {
  std::string templates_path;
  std::string lexicon_path;  // empty: built-in default cues
  double k1 = 1.5;
  double b = 0.75;
  size_t retrieval_depth = 5;
  size_t option_cap = 10;
  double jaccard_threshold = 0.9;
  bool style = true;
  bool option = true;
  bool include_originals = true;
};

struct DecontamConfig {
  size_t n = 13;
  std::vector<std::string> benchmarks;
  bool check_think = false;  // think segments are model-generated, exempt
};

struct GenerationConfig {
  std::string endpoint;      // base URL, e.g. http://127.0.0.1:8080
  std::string path = "/v1/chat/completions";
  std::string model = "teacher";
  std::optional<std::string> system_prompt;  // default: built-in directive
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 32768;
  int max_attempts = 3;       // gate-failure regenerations
  int transport_retries = 2;  // network budget, separate from quality retries
  int quota_retries = 5;      // HTTP 429 pauses
  int backoff_ms = 250;
  int parallelism = 4;
  std::string auth_env = "LANGMIX_API_TOKEN";
  bool require_think = true;  // false: short-form generation without a think block
};

struct EvalConfig {
  std::string benchmark = "benchmark";
  std::string system_prompt = std::string(kEvalSystemPrompt);
  std::string think_close = "</think>";
};

struct AuditConfig {
  size_t window = 50;
  double k = 4.0;
};

struct PipelineConfig {
  uint64_t seed = 0;
  int workers = 1;
  GateConfig gates;
  AugmentConfig augment;
  DecontamConfig decontam;
  GenerationConfig generation;
  MixSpec mix;
  EvalConfig eval;
  AuditConfig audit;
  nlohmann::json effective;  // post-override document, source of the digest

  // Execution-shape keys don't influence outputs, so they stay out of the
  // digest: raising --workers must not invalidate a resumable manifest.
  std::string digest() const {
    nlohmann::json d = effective;
    d.erase("workers");
    if (d.contains("generation") && d.at("generation").is_object()) {
      auto& gen = d.at("generation");
      gen.erase("parallelism");
      gen.erase("backoff_ms");
      if (gen.empty()) d.erase("generation");
    }
    return to_hex(murmur3_128(d.dump()));
  }
};

namespace config_detail {

inline TokenizerKind tokenizer_kind_from_string(const std::string& s) {
  if (s == "whitespace") return TokenizerKind::whitespace;
  if (s == "chars") return TokenizerKind::chars;
  if (s == "external_vocab") return TokenizerKind::external_vocab;
  throw ConfigError("unknown tokenizer kind: " + s);
}

inline void parse_gates(const nlohmann::json& j, GateConfig& g) {
  g.prompt_min_ratio = j.value("prompt_min_ratio", g.prompt_min_ratio);
  g.prompt_min_chars = j.value("prompt_min_chars", g.prompt_min_chars);
  g.prompt_max_chars = j.value("prompt_max_chars", g.prompt_max_chars);
  g.think_ratio_low = j.value("think_ratio_low", g.think_ratio_low);
  g.think_ratio_high = j.value("think_ratio_high", g.think_ratio_high);
  g.answer_min_ratio = j.value("answer_min_ratio", g.answer_min_ratio);
  g.token_cap = j.value("token_cap", g.token_cap);
  g.repetition_run_threshold =
      j.value("repetition_run_threshold", g.repetition_run_threshold);
  g.tail_repetition_threshold =
      j.value("tail_repetition_threshold", g.tail_repetition_threshold);
  g.min_phrase_tokens = j.value("min_phrase_tokens", g.min_phrase_tokens);
  g.think_open = j.value("think_open", g.think_open);
  g.think_close = j.value("think_close", g.think_close);
  g.require_think = j.value("require_think", g.require_think);
  if (j.contains("ratio_scope")) {
    std::string scope = j.at("ratio_scope").get<std::string>();
    if (scope == "think_only") {
      g.ratio_scope = RatioScope::think_only;
    } else if (scope == "full_completion") {
      g.ratio_scope = RatioScope::full_completion;
    } else {
      throw ConfigError("gates.ratio_scope must be think_only or full_completion");
    }
  }
  if (j.contains("tokenizer")) {
    const auto& t = j.at("tokenizer");
    g.tokenizer.name = t.value("name", g.tokenizer.name);
    if (t.contains("kind")) {
      g.tokenizer.kind = tokenizer_kind_from_string(t.at("kind").get<std::string>());
    }
    if (t.contains("vocab_ref")) {
      g.tokenizer.vocab_ref = t.at("vocab_ref").get<std::string>();
    }
  }
}

inline void parse_augment(const nlohmann::json& j, AugmentConfig& a) {
  a.templates_path = j.value("templates_path", a.templates_path);
  a.lexicon_path = j.value("lexicon_path", a.lexicon_path);
  a.k1 = j.value("k1", a.k1);
  a.b = j.value("b", a.b);
  a.retrieval_depth = j.value("retrieval_depth", a.retrieval_depth);
  a.option_cap = j.value("option_cap", a.option_cap);
  a.jaccard_threshold = j.value("jaccard_threshold", a.jaccard_threshold);
  a.style = j.value("style", a.style);
  a.option = j.value("option", a.option);
  a.include_originals = j.value("include_originals", a.include_originals);
}

inline void parse_decontam(const nlohmann::json& j, DecontamConfig& d) {
  d.n = j.value("n", d.n);
  if (j.contains("benchmarks")) {
    d.benchmarks = j.at("benchmarks").get<std::vector<std::string>>();
  }
  d.check_think = j.value("check_think", d.check_think);
}

inline void parse_generation(const nlohmann::json& j, GenerationConfig& g) {
  g.endpoint = j.value("endpoint", g.endpoint);
  g.path = j.value("path", g.path);
  g.model = j.value("model", g.model);
  if (j.contains("system_prompt") && !j.at("system_prompt").is_null()) {
    g.system_prompt = j.at("system_prompt").get<std::string>();
  }
  g.temperature = j.value("temperature", g.temperature);
  g.top_p = j.value("top_p", g.top_p);
  g.max_tokens = j.value("max_tokens", g.max_tokens);
  g.max_attempts = j.value("max_attempts", g.max_attempts);
  g.transport_retries = j.value("transport_retries", g.transport_retries);
  g.quota_retries = j.value("quota_retries", g.quota_retries);
  g.backoff_ms = j.value("backoff_ms", g.backoff_ms);
  g.parallelism = j.value("parallelism", g.parallelism);
  g.auth_env = j.value("auth_env", g.auth_env);
  g.require_think = j.value("require_think", g.require_think);
}

inline void parse_mix(const nlohmann::json& j, MixSpec& m, uint64_t global_seed) {
  m.seed = j.value("seed", global_seed);
  if (j.contains("total") && !j.at("total").is_null()) {
    m.total = j.at("total").get<size_t>();
  }
  if (j.contains("entries")) {
    m.entries = j.at("entries").get<std::vector<MixEntry>>();
  }
}

inline void parse_eval(const nlohmann::json& j, EvalConfig& e) {
  e.benchmark = j.value("benchmark", e.benchmark);
  e.system_prompt = j.value("system_prompt", e.system_prompt);
  e.think_close = j.value("think_close", e.think_close);
}

inline void parse_audit(const nlohmann::json& j, AuditConfig& a) {
  a.window = j.value("window", a.window);
  a.k = j.value("k", a.k);
}

// Applies "a.b.c=value" onto the document; values parse as JSON when they
// can, raw strings otherwise.
inline void apply_override(nlohmann::json& doc, const std::string& kv) {
  size_t eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value: " + kv);
  }
  std::string path = kv.substr(0, eq);
  std::string value = kv.substr(eq + 1);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    parsed = value;
  }
  nlohmann::json* node = &doc;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("bad override path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace config_detail

inline PipelineConfig parse_pipeline_config(
    nlohmann::json doc, const std::vector<std::string>& overrides = {}) {
  if (doc.is_null()) doc = nlohmann::json::object();
  for (const auto& kv : overrides) config_detail::apply_override(doc, kv);
  PipelineConfig cfg;
  try {
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.workers = doc.value("workers", cfg.workers);
    if (doc.contains("gates")) config_detail::parse_gates(doc.at("gates"), cfg.gates);
    if (doc.contains("augment")) {
      config_detail::parse_augment(doc.at("augment"), cfg.augment);
    }
    if (doc.contains("decontam")) {
      config_detail::parse_decontam(doc.at("decontam"), cfg.decontam);
    }
    if (doc.contains("generation")) {
      config_detail::parse_generation(doc.at("generation"), cfg.generation);
    }
    if (doc.contains("mix")) {
      config_detail::parse_mix(doc.at("mix"), cfg.mix, cfg.seed);
    } else {
      cfg.mix.seed = cfg.seed;
    }
    if (doc.contains("eval")) config_detail::parse_eval(doc.at("eval"), cfg.eval);
    if (doc.contains("audit")) config_detail::parse_audit(doc.at("audit"), cfg.audit);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  cfg.effective = std::move(doc);
  return cfg;
}

inline PipelineConfig load_pipeline_config(
    const std::string& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json doc = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + path + ": " + e.what());
    }
  }
  return parse_pipeline_config(std::move(doc), overrides);
}

// Structural checks only; no data touched. Subcommand-specific requirements
// (benchmark paths for decontam, endpoint for generate) gate on `subcommand`.
inline std::vector<std::string> validate_config(const PipelineConfig& cfg,
                                                const std::string& subcommand = "") {
  std::vector<std::string> errors = cfg.gates.validate();
  if (cfg.workers < 1) errors.push_back("workers must be >= 1");

  if (cfg.decontam.n < 2) errors.push_back("decontam.n must be >= 2");
  if (subcommand == "decontam" && cfg.decontam.benchmarks.empty()) {
    errors.push_back("decontam requires at least one benchmark path");
  }

  if (cfg.augment.option_cap < 2) {
    errors.push_back("augment.option_cap must be >= 2");
  }
  if (cfg.augment.jaccard_threshold < 0.0 || cfg.augment.jaccard_threshold > 1.0) {
    errors.push_back("augment.jaccard_threshold outside [0,1]");
  }
  if (subcommand == "augment" && cfg.augment.style &&
      cfg.augment.templates_path.empty()) {
    errors.push_back("augment.style requires augment.templates_path");
  }

  if (subcommand == "generate") {
    if (cfg.generation.endpoint.empty()) {
      errors.push_back("generate requires generation.endpoint");
    }
    if (cfg.generation.max_attempts < 1) {
      errors.push_back("generation.max_attempts must be >= 1");
    }
    if (cfg.generation.parallelism < 1) {
      errors.push_back("generation.parallelism must be >= 1");
    }
  }

  if (subcommand == "mix") {
    for (const auto& e : cfg.mix.validate()) errors.push_back(e);
  }

  if (cfg.audit.window < 2) errors.push_back("audit.window must be >= 2");
  if (cfg.audit.k <= 0.0) errors.push_back("audit.k must be positive");
  return errors;
}

}  // namespace langmix
