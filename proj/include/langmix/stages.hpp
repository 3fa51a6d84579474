#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "langmix/augment.hpp"
#include "langmix/config.hpp"
#include "langmix/decontam.hpp"
#include "langmix/errors.hpp"
#include "langmix/eval.hpp"
#include "langmix/gates.hpp"
#include "langmix/jsonl.hpp"
#include "langmix/manifest.hpp"
#include "langmix/mixer.hpp"
#include "langmix/record.hpp"
#include "langmix/spike_audit.hpp"

namespace langmix {

// Stage drivers behind the CLI subcommands. Each stage reads record files,
// writes its output plus a `<stage>.manifest`, and resumes from a prior
// manifest when the input and config digests both match.

struct StageResult {
  size_t read = 0;       // records decided this run (excludes resume skips)
  size_t kept = 0;
  size_t dropped = 0;
  size_t skipped = 0;    // already completed in a prior run
  std::map<std::string, size_t> derived;
  bool noop = false;     // resume found nothing left to do
};

namespace stage_detail {

struct StagePrep {
  bool resume = false;
  std::unordered_set<std::string> completed;
};

inline StagePrep prepare_stage(const std::string& manifest_file,
                               const std::string& input_digest,
                               const std::string& config_digest) {
  StagePrep prep;
  if (auto m = load_manifest(manifest_file)) {
    if (m->input_digest == input_digest && m->config_digest == config_digest) {
      prep.resume = true;
      prep.completed = std::move(m->completed_ids);
    }
  }
  return prep;
}

inline std::string line_id(size_t line_no) {
  return "line:" + std::to_string(line_no);
}

}  // namespace stage_detail

// ---------------------------------------------------------------------------
// ingest: raw prompts -> canonical records (NFC, metrics, ids, license triage)
// ---------------------------------------------------------------------------

inline StageResult run_ingest(const PipelineConfig& cfg, const std::string& input,
                              const std::string& output,
                              const std::string& manifest_file,
                              const std::vector<std::string>& overrides = {}) {
  std::string input_digest = file_digest(input);
  auto prep = stage_detail::prepare_stage(manifest_file, input_digest, cfg.digest());
  ManifestWriter manifest(manifest_file, "ingest", input_digest, cfg.digest(),
                          overrides, prep.resume);
  JsonlWriter out(output, prep.resume);

  StageResult result;
  std::unordered_set<std::string> seen;
  for_each_jsonl<RawPrompt>(
      input,
      [&](RawPrompt&& raw, size_t) {
        PromptRecord rec = make_prompt_record(std::move(raw.source_id),
                                              raw.category, raw.license,
                                              raw.text);
        if (prep.completed.count(rec.id)) {
          result.skipped++;
          return;
        }
        if (!seen.insert(rec.id).second) {
          manifest.record_dropped(rec.id, "duplicate");
          result.read++;
          result.dropped++;
          return;
        }
        result.read++;
        if (triage_license(rec) == Route::exclude) {
          manifest.record_dropped(rec.id, "license_excluded",
                                  to_string(rec.license));
          result.dropped++;
          return;
        }
        out.write(rec);
        manifest.record_kept(rec.id);
        result.kept++;
      },
      [&](const LineError& err) {
        std::string id = stage_detail::line_id(err.line);
        if (prep.completed.count(id)) {
          result.skipped++;
          return;
        }
        std::cerr << "ingest: " << input << ":" << err.line << ": "
                  << err.message << "\n";
        manifest.record_dropped(id, "parse_error", err.message);
        result.read++;
        result.dropped++;
      });
  out.flush();
  result.noop = prep.resume && result.read == 0;
  return result;
}

// ---------------------------------------------------------------------------
// filter: prompt ratio/length gates
// ---------------------------------------------------------------------------

inline StageResult run_filter(const PipelineConfig& cfg, const std::string& input,
                              const std::string& output,
                              const std::string& manifest_file,
                              const std::vector<std::string>& overrides = {}) {
  std::string input_digest = file_digest(input);
  auto prep = stage_detail::prepare_stage(manifest_file, input_digest, cfg.digest());
  ManifestWriter manifest(manifest_file, "filter", input_digest, cfg.digest(),
                          overrides, prep.resume);
  JsonlWriter out(output, prep.resume);

  StageResult result;
  std::unordered_set<std::string> seen;
  for_each_jsonl<PromptRecord>(
      input,
      [&](PromptRecord&& rec, size_t) {
        if (prep.completed.count(rec.id)) {
          result.skipped++;
          return;
        }
        if (!seen.insert(rec.id).second) {
          manifest.record_dropped(rec.id, "duplicate");
          result.read++;
          result.dropped++;
          return;
        }
        result.read++;
        PromptVerdict v = gate_prompt(rec, cfg.gates);
        if (v.keep) {
          out.write(rec);
          manifest.record_kept(rec.id);
          result.kept++;
        } else {
          manifest.record_dropped(rec.id, v.reason, v.detail);
          result.dropped++;
        }
      },
      [&](const LineError& err) {
        std::string id = stage_detail::line_id(err.line);
        if (prep.completed.count(id)) {
          result.skipped++;
          return;
        }
        std::cerr << "filter: " << input << ":" << err.line << ": "
                  << err.message << "\n";
        manifest.record_dropped(id, "parse_error", err.message);
        result.read++;
        result.dropped++;
      });
  out.flush();
  result.noop = prep.resume && result.read == 0;
  return result;
}

// ---------------------------------------------------------------------------
// validate: trace segmentation + trace gates
// ---------------------------------------------------------------------------

inline StageResult run_validate(const PipelineConfig& cfg,
                                const std::string& input,
                                const std::string& output,
                                const std::string& manifest_file,
                                const std::vector<std::string>& overrides = {}) {
  std::string input_digest = file_digest(input);
  auto prep = stage_detail::prepare_stage(manifest_file, input_digest, cfg.digest());
  ManifestWriter manifest(manifest_file, "validate", input_digest, cfg.digest(),
                          overrides, prep.resume);
  JsonlWriter out(output, prep.resume);
  Tokenizer tokenizer = Tokenizer::resolve(cfg.gates.tokenizer);

  StageResult result;
  std::unordered_set<std::string> seen;
  for_each_jsonl<RawTrace>(
      input,
      [&](RawTrace&& raw, size_t) {
        if (prep.completed.count(raw.prompt_id)) {
          result.skipped++;
          return;
        }
        if (!seen.insert(raw.prompt_id).second) {
          manifest.record_dropped(raw.prompt_id, "duplicate");
          result.read++;
          result.dropped++;
          return;
        }
        result.read++;
        auto [trace, verdict] = make_trace_record(
            std::move(raw.prompt_id), std::move(raw.raw), cfg.gates, tokenizer);
        if (verdict.keep) {
          out.write(trace);
          manifest.record_kept(trace.prompt_id);
          result.kept++;
        } else {
          auto failed = verdict.failed();
          std::string detail;
          for (size_t i = 1; i < failed.size(); i++) {
            if (i > 1) detail += ",";
            detail += failed[i];
          }
          manifest.record_dropped(trace.prompt_id, failed.front(), detail);
          result.dropped++;
        }
      },
      [&](const LineError& err) {
        std::string id = stage_detail::line_id(err.line);
        if (prep.completed.count(id)) {
          result.skipped++;
          return;
        }
        std::cerr << "validate: " << input << ":" << err.line << ": "
                  << err.message << "\n";
        manifest.record_dropped(id, "parse_error", err.message);
        result.read++;
        result.dropped++;
      });
  out.flush();
  result.noop = prep.resume && result.read == 0;
  return result;
}

// ---------------------------------------------------------------------------
// augment: style directives + BM25 option merging over an exam pool
// ---------------------------------------------------------------------------

inline StageResult run_augment(const PipelineConfig& cfg,
                               const std::string& input,
                               const std::string& output,
                               const std::string& manifest_file,
                               const std::vector<std::string>& overrides = {}) {
  std::string input_digest = file_digest(input);
  auto prep = stage_detail::prepare_stage(manifest_file, input_digest, cfg.digest());
  ManifestWriter manifest(manifest_file, "augment", input_digest, cfg.digest(),
                          overrides, prep.resume);
  JsonlWriter out(output, prep.resume);

  std::vector<StyleTemplate> templates;
  if (cfg.augment.style) {
    templates = load_style_templates(cfg.augment.templates_path);
  }
  std::vector<std::string> lexicon = cfg.augment.lexicon_path.empty()
                                         ? default_negation_cues()
                                         : load_negation_cues(cfg.augment.lexicon_path);

  // The retrieval pool is every valid input item, including completed ones.
  std::vector<ExamItem> items;
  std::vector<LineError> errors;
  for_each_jsonl<ExamItem>(
      input, [&](ExamItem&& item, size_t) { items.push_back(std::move(item)); },
      [&](const LineError& err) { errors.push_back(err); });
  ExamPool pool = ExamPool::build(items, cfg.augment.k1, cfg.augment.b);

  OptionMergeConfig merge_cfg;
  merge_cfg.cap = cfg.augment.option_cap;
  merge_cfg.retrieval_depth = cfg.augment.retrieval_depth;
  merge_cfg.jaccard_threshold = cfg.augment.jaccard_threshold;
  merge_cfg.seed = cfg.seed;

  StageResult result;
  std::unordered_set<std::string> seen;
  for (const auto& item : pool.items) {
    if (prep.completed.count(item.id)) {
      result.skipped++;
      continue;
    }
    if (!seen.insert(item.id).second) {
      manifest.record_dropped(item.id, "duplicate");
      result.read++;
      result.dropped++;
      continue;
    }
    result.read++;
    if (cfg.augment.include_originals) out.write(item);
    manifest.record_kept(item.id);
    result.kept++;

    if (cfg.augment.style) {
      ExamItem styled = style_augment(item, templates, cfg.seed);
      out.write(styled);
      manifest.record_derived(styled.id, "style_augmented");
      result.derived["style_augmented"]++;
    }
    if (cfg.augment.option) {
      if (has_negation_cue(item.question, lexicon)) {
        manifest.record_derived(item.id, "negation_skipped");
        result.derived["negation_skipped"]++;
      } else {
        OptionMergeResult merged = option_merge(item, pool, lexicon, merge_cfg);
        if (merged.augmented) {
          out.write(merged.item);
          manifest.record_derived(merged.item.id, "option_augmented");
          result.derived["option_augmented"]++;
        } else {
          manifest.record_derived(item.id, "no_usable_distractors");
          result.derived["no_usable_distractors"]++;
        }
      }
    }
  }
  for (const auto& err : errors) {
    std::string id = stage_detail::line_id(err.line);
    if (prep.completed.count(id)) {
      result.skipped++;
      continue;
    }
    std::cerr << "augment: " << input << ":" << err.line << ": " << err.message
              << "\n";
    manifest.record_dropped(id, "parse_error", err.message);
    result.read++;
    result.dropped++;
  }
  out.flush();
  result.noop = prep.resume && result.read == 0;
  return result;
}

// ---------------------------------------------------------------------------
// decontam: drop records sharing any n-gram with benchmark items
// ---------------------------------------------------------------------------

enum class RecordKind { prompt, trace, exam };

inline RecordKind record_kind_from_string(const std::string& s) {
  if (s == "prompt") return RecordKind::prompt;
  if (s == "trace") return RecordKind::trace;
  if (s == "exam") return RecordKind::exam;
  throw ConfigError("unknown record kind: " + s + " (prompt|trace|exam)");
}

inline StageResult run_decontam(const PipelineConfig& cfg,
                                const std::string& input,
                                const std::string& output,
                                const std::string& manifest_file,
                                RecordKind kind = RecordKind::prompt,
                                const std::string& prompts_path = "",
                                const std::vector<std::string>& overrides = {}) {
  if (cfg.decontam.benchmarks.empty()) {
    throw ConfigError("decontam requires at least one benchmark path");
  }
  std::vector<BenchmarkRecord> bench_items;
  for (const auto& path : cfg.decontam.benchmarks) {
    for (auto& item : read_jsonl<BenchmarkRecord>(path)) {
      bench_items.push_back(std::move(item));
    }
  }
  ShingleIndex index = build_benchmark_index(bench_items, cfg.decontam.n);

  // Optional prompt join so trace verdicts cover prompt text too.
  std::unordered_map<std::string, std::string> prompt_text;
  if (!prompts_path.empty()) {
    for (auto& p : read_jsonl<PromptRecord>(prompts_path)) {
      prompt_text.emplace(p.id, std::move(p.text));
    }
  }

  std::vector<std::string> digest_inputs = cfg.decontam.benchmarks;
  digest_inputs.push_back(input);
  if (!prompts_path.empty()) digest_inputs.push_back(prompts_path);
  std::string input_digest = combined_digest(digest_inputs);

  auto prep = stage_detail::prepare_stage(manifest_file, input_digest, cfg.digest());
  ManifestWriter manifest(manifest_file, "decontam", input_digest, cfg.digest(),
                          overrides, prep.resume);
  JsonlWriter out(output, prep.resume);

  StageResult result;
  std::unordered_set<std::string> seen;
  std::ifstream in(input, std::ios::binary);
  if (!in) throw DataError("cannot open record file: " + input);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::string id;
    std::vector<std::string> surfaces;
    try {
      auto j = nlohmann::json::parse(line);
      switch (kind) {
        case RecordKind::prompt: {
          id = j.at("id").get<std::string>();
          surfaces.push_back(j.at("text").get<std::string>());
          break;
        }
        case RecordKind::trace: {
          id = j.at("prompt_id").get<std::string>();
          if (j.contains("answer")) {
            surfaces.push_back(j.at("answer").get<std::string>());
          } else {
            surfaces.push_back(j.at("raw").get<std::string>());
          }
          if (cfg.decontam.check_think && j.contains("think")) {
            surfaces.push_back(j.at("think").get<std::string>());
          }
          if (auto it = prompt_text.find(id); it != prompt_text.end()) {
            surfaces.push_back(it->second);
          }
          break;
        }
        case RecordKind::exam: {
          id = j.at("id").get<std::string>();
          std::string text = j.at("question").get<std::string>();
          for (const auto& opt : j.at("options")) {
            text += " ";
            text += opt.get<std::string>();
          }
          surfaces.push_back(std::move(text));
          break;
        }
      }
    } catch (const std::exception& e) {
      std::string lid = stage_detail::line_id(line_no);
      if (prep.completed.count(lid)) {
        result.skipped++;
        continue;
      }
      std::cerr << "decontam: " << input << ":" << line_no << ": " << e.what()
                << "\n";
      manifest.record_dropped(lid, "parse_error", e.what());
      result.read++;
      result.dropped++;
      continue;
    }

    if (prep.completed.count(id)) {
      result.skipped++;
      continue;
    }
    if (!seen.insert(id).second) {
      manifest.record_dropped(id, "duplicate");
      result.read++;
      result.dropped++;
      continue;
    }
    result.read++;
    std::vector<std::string_view> views(surfaces.begin(), surfaces.end());
    DecontamVerdict v = decontaminate(views, index);
    if (v.keep) {
      out.write_line(line);  // pass the original line through untouched
      manifest.record_kept(id);
      result.kept++;
    } else {
      std::string detail;
      for (const auto& m : v.matched_item_ids) {
        if (!detail.empty()) detail += ",";
        detail += m;
      }
      manifest.record_dropped(id, "contaminated", detail);
      result.dropped++;
    }
  }
  out.flush();
  result.noop = prep.resume && result.read == 0;
  return result;
}

// ---------------------------------------------------------------------------
// mix: compose the training set from per-category pools
// ---------------------------------------------------------------------------

struct MixStageResult {
  StageResult stage;
  CompositionReport report;
};

// Pools come either from per-category files or one file with a category
// field. Raw lines are carried through so composition is byte-stable.
inline MixStageResult run_mix(const PipelineConfig& cfg,
                              const std::map<Category, std::string>& pool_files,
                              const std::string& single_input,
                              const std::string& output,
                              const std::string& manifest_file,
                              const std::vector<std::string>& overrides = {}) {
  std::map<Category, std::vector<std::string>> pools;
  std::vector<std::string> digest_inputs;

  if (!single_input.empty()) {
    digest_inputs.push_back(single_input);
    std::ifstream in(single_input, std::ios::binary);
    if (!in) throw DataError("cannot open record file: " + single_input);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      line_no++;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        Category cat = category_from_string(j.at("category").get<std::string>());
        pools[cat].push_back(line);
      } catch (const std::exception& e) {
        throw DataError(single_input + ":" + std::to_string(line_no) + ": " +
                        e.what());
      }
    }
  }
  for (const auto& [cat, path] : pool_files) {
    digest_inputs.push_back(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open pool file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) pools[cat].push_back(line);
    }
  }

  MixSpec spec = cfg.mix;
  auto mixed = mix(pools, spec);

  std::string input_digest = combined_digest(digest_inputs);
  ManifestWriter manifest(manifest_file, "mix", input_digest, cfg.digest(),
                          overrides, /*resume=*/false);
  JsonlWriter out(output, /*append=*/false);
  for (const auto& line : mixed.records) out.write_line(line);
  out.flush();

  nlohmann::json report_json = mixed.report;
  std::ofstream report_out(output + ".report.json", std::ios::binary);
  report_out << report_json.dump(2) << "\n";

  // Sampled lines are kept; the rest of each pool is recorded as unsampled
  // so the manifest still balances. Up-sampled duplicates count as derived.
  StageResult result;
  std::unordered_map<std::string, size_t> sampled;
  for (const auto& line : mixed.records) sampled[line]++;
  size_t upsampled_total = 0;
  for (const auto& e : mixed.report.entries) upsampled_total += e.upsampled;

  for (const auto& [cat, pool] : pools) {
    for (size_t i = 0; i < pool.size(); i++) {
      std::string id = std::string(to_string(cat)) + ":" + std::to_string(i + 1);
      result.read++;
      auto it = sampled.find(pool[i]);
      if (it != sampled.end() && it->second > 0) {
        it->second--;
        manifest.record_kept(id);
        result.kept++;
      } else {
        manifest.record_dropped(id, "not_sampled");
        result.dropped++;
      }
    }
  }
  if (upsampled_total > 0) {
    result.derived["upsampled"] = upsampled_total;
    for (size_t i = 0; i < upsampled_total; i++) {
      manifest.record_derived("upsample:" + std::to_string(i + 1), "upsampled");
    }
  }
  return {result, mixed.report};
}

// ---------------------------------------------------------------------------
// eval: grade completion runs and aggregate across trials
// ---------------------------------------------------------------------------

struct EvalStageResult {
  StageResult stage;
  RunAggregate aggregate;
  std::vector<size_t> per_run_items;
};

inline EvalStageResult run_eval(const PipelineConfig& cfg,
                                const std::vector<std::string>& run_files,
                                const std::string& output,
                                const std::string& manifest_file,
                                const std::vector<std::string>& overrides = {},
                                const Grader& grader = grade) {
  if (run_files.empty()) throw ConfigError("eval requires at least one run file");

  std::string input_digest = combined_digest(run_files);
  ManifestWriter manifest(manifest_file, "eval", input_digest, cfg.digest(),
                          overrides, /*resume=*/false);

  EvalStageResult result;
  std::vector<double> accuracies;
  for (size_t run = 0; run < run_files.size(); run++) {
    auto records = read_jsonl<CompletionRecord>(run_files[run]);
    auto outcomes = collate_run(records, grader, cfg.eval.think_close);
    double acc = score_run(outcomes);
    accuracies.push_back(acc);
    result.per_run_items.push_back(outcomes.size());

    size_t correct = 0;
    for (const auto& o : outcomes) {
      manifest.record_kept("run" + std::to_string(run + 1) + ":" + o.item_id);
      result.stage.read++;
      result.stage.kept++;
      if (o.correct) correct++;
    }
    nlohmann::json run_json{{"run", run + 1},
                            {"benchmark", cfg.eval.benchmark},
                            {"accuracy", acc},
                            {"n_items", outcomes.size()},
                            {"n_correct", correct}};
    std::ofstream run_out(output + ".run" + std::to_string(run + 1) + ".json",
                          std::ios::binary);
    run_out << run_json.dump(2) << "\n";
  }

  result.aggregate = aggregate(cfg.eval.benchmark, accuracies);
  nlohmann::json agg{{"benchmark", result.aggregate.benchmark},
                     {"n_runs", result.aggregate.n_runs},
                     {"per_run_accuracy", result.aggregate.per_run_accuracy},
                     {"mean", result.aggregate.mean}};
  if (result.aggregate.standard_error) {
    agg["standard_error"] = *result.aggregate.standard_error;
  } else {
    agg["standard_error"] = nullptr;
  }
  std::ofstream agg_out(output, std::ios::binary);
  agg_out << agg.dump(2) << "\n";
  return result;
}

// ---------------------------------------------------------------------------
// audit: loss spikes -> suspect records
// ---------------------------------------------------------------------------

struct AuditStageResult {
  StageResult stage;
  std::vector<SpikeFinding> findings;
};

inline AuditStageResult run_audit(const std::string& loss_log,
                                  const std::string& batch_map_path,
                                  const std::string& records_path,
                                  const std::string& output,
                                  const std::string& manifest_file,
                                  size_t window, double k,
                                  const std::string& config_digest,
                                  const std::vector<std::string>& overrides = {}) {
  LossSeries series = load_loss_log(loss_log);
  if (!batch_map_path.empty()) {
    series.batch_map = load_batch_map(batch_map_path);
  }
  auto findings = detect_spikes(series, window, k);
  for (auto& f : findings) {
    if (series.batch_map) f.suspect_ids = map_to_records(f, series.batch_map);
  }

  std::unordered_map<std::string, nlohmann::json> records;
  if (!records_path.empty()) {
    std::ifstream in(records_path, std::ios::binary);
    if (!in) throw DataError("cannot open records file: " + records_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        std::string id = j.contains("id") ? j.at("id").get<std::string>()
                                          : j.value("prompt_id", "");
        if (!id.empty()) records.emplace(std::move(id), std::move(j));
      } catch (const nlohmann::json::exception&) {
        // best-effort lookup table; unparsable rows just render as id-only
      }
    }
  }

  std::vector<std::string> digest_inputs{loss_log};
  if (!batch_map_path.empty()) digest_inputs.push_back(batch_map_path);
  ManifestWriter manifest(manifest_file, "audit", combined_digest(digest_inputs),
                          config_digest, overrides, /*resume=*/false);

  nlohmann::json findings_json = findings;
  std::ofstream json_out(output, std::ios::binary);
  json_out << findings_json.dump(2) << "\n";

  std::ofstream report(output + ".txt", std::ios::binary);
  report << "loss spike audit: " << findings.size() << " finding(s), window="
         << window << " k=" << k << "\n";
  for (const auto& f : findings) {
    report << "\nstep " << f.step << " (" << f.steps.size()
           << " merged): baseline " << f.baseline_loss << ", spike "
           << f.spike_loss << ", " << f.suspect_ids.size() << " suspect(s)\n";
    for (const auto& id : f.suspect_ids) {
      report << "  " << id;
      auto it = records.find(id);
      if (it != records.end()) {
        const auto& j = it->second;
        if (j.contains("hangul_ratio")) {
          report << " ratio=" << j.at("hangul_ratio").get<double>();
        }
        if (j.contains("token_count")) {
          report << " tokens=" << j.at("token_count").get<uint64_t>();
        }
        if (j.contains("gate_verdicts")) {
          report << " gates=";
          bool first = true;
          for (const auto& g : j.at("gate_verdicts")) {
            if (!first) report << ",";
            first = false;
            report << g.at("gate").get<std::string>()
                   << (g.at("pass").get<bool>() ? ":pass" : ":fail");
          }
        }
        std::string text = j.contains("text") ? j.at("text").get<std::string>()
                           : j.contains("raw") ? j.at("raw").get<std::string>()
                                               : "";
        if (!text.empty()) {
          report << "\n    " << text.substr(0, 200);
        }
      }
      report << "\n";
    }
    manifest.record_kept("step:" + std::to_string(f.step));
  }

  AuditStageResult result;
  result.stage.read = findings.size();
  result.stage.kept = findings.size();
  result.findings = std::move(findings);
  return result;
}

// ---------------------------------------------------------------------------
// stats: per-category counts and histograms
// ---------------------------------------------------------------------------

inline std::map<Category, CategoryStats> run_stats(
    const std::vector<std::string>& inputs, const std::string& manifest_file,
    const std::string& config_digest,
    const std::vector<std::string>& overrides = {}) {
  std::map<Category, std::vector<PromptRecord>> pools;
  ManifestWriter manifest(manifest_file, "stats", combined_digest(inputs),
                          config_digest, overrides, /*resume=*/false);
  for (const auto& path : inputs) {
    for (auto& rec : read_jsonl<PromptRecord>(path)) {
      manifest.record_kept(rec.id);
      pools[rec.category].push_back(std::move(rec));
    }
  }
  return category_stats(pools);
}

}  // namespace langmix
