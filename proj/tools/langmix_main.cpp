// langmix: curate language-mixed chain-of-thought corpora and grade
// boxed-answer benchmark completions.
//
// Subcommands flow records from stage to stage; every stage writes a
// `<stage>.manifest` next to its output, so interrupted runs resume and
// finished runs no-op.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "langmix/config.hpp"
#include "langmix/errors.hpp"
#include "langmix/stages.hpp"
#include "langmix/teacher_client.hpp"

namespace {

using namespace langmix;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitService = 3;

struct GlobalOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string input;
  std::vector<std::string> inputs;
  std::string output;
  std::string manifest_dir;
};

std::string manifest_file_for(const GlobalOpts& opts, const std::string& stage) {
  std::string dir = opts.manifest_dir;
  if (dir.empty()) {
    std::filesystem::path out(opts.output.empty() ? "." : opts.output);
    dir = out.has_parent_path() ? out.parent_path().string() : ".";
    if (dir.empty()) dir = ".";
  }
  return manifest_path(dir, stage);
}

PipelineConfig load_and_validate(const GlobalOpts& opts,
                                 const std::string& subcommand) {
  PipelineConfig cfg = load_pipeline_config(opts.config_path, opts.overrides);
  auto errors = validate_config(cfg, subcommand);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    throw ConfigError(std::to_string(errors.size()) + " config error(s)");
  }
  return cfg;
}

void print_stage_result(const std::string& stage, const StageResult& r) {
  if (r.noop) {
    std::cout << stage << ": no-op (" << r.skipped
              << " record(s) already complete)\n";
    return;
  }
  std::cout << stage << ": read " << r.read << ", kept " << r.kept
            << ", dropped " << r.dropped;
  if (r.skipped > 0) std::cout << ", resumed past " << r.skipped;
  for (const auto& [kind, n] : r.derived) std::cout << ", " << kind << " " << n;
  std::cout << "\n";
}

int cmd_generate(const GlobalOpts& opts) {
  PipelineConfig cfg = load_and_validate(opts, "generate");
  if (cfg.effective.contains("workers")) {
    cfg.generation.parallelism = cfg.workers;  // --workers drives generation
  }
  auto prompts = read_jsonl<PromptRecord>(opts.input);
  std::string mf = manifest_file_for(opts, "generate");
  BatchResult batch =
      run_batch(prompts, cfg.generation, cfg.gates, opts.output, mf,
                file_digest(opts.input), cfg.digest(), opts.overrides);
  std::cout << "generate: read " << batch.read << ", accepted " << batch.accepted
            << ", exhausted " << batch.exhausted << ", failed " << batch.failed;
  if (batch.skipped > 0) std::cout << ", resumed past " << batch.skipped;
  std::cout << "\n";
  if (batch.failed > 0) return kExitService;
  return kExitOk;
}

int cmd_eval(const GlobalOpts& opts) {
  PipelineConfig cfg = load_and_validate(opts, "eval");
  std::string mf = manifest_file_for(opts, "eval");
  EvalStageResult res = run_eval(cfg, opts.inputs, opts.output, mf, opts.overrides);

  const auto& agg = res.aggregate;
  std::cout << "benchmark          runs  mean      se\n";
  std::cout << std::left << std::setw(19) << agg.benchmark << std::setw(6)
            << agg.n_runs << std::fixed << std::setprecision(4) << std::setw(10)
            << agg.mean;
  if (agg.standard_error) {
    std::cout << std::setprecision(4) << *agg.standard_error;
  } else {
    std::cout << "-";
  }
  std::cout << "\n";
  for (size_t i = 0; i < agg.per_run_accuracy.size(); i++) {
    std::cout << "  run " << (i + 1) << ": " << std::setprecision(4)
              << agg.per_run_accuracy[i] << " (" << res.per_run_items[i]
              << " items)\n";
  }
  return kExitOk;
}

int cmd_audit(const GlobalOpts& opts, const std::string& loss_log,
              const std::string& batch_map, const std::string& records) {
  PipelineConfig cfg = load_and_validate(opts, "audit");
  std::string mf = manifest_file_for(opts, "audit");
  AuditStageResult res =
      run_audit(loss_log, batch_map, records, opts.output, mf, cfg.audit.window,
                cfg.audit.k, cfg.digest(), opts.overrides);
  std::cout << "audit: " << res.findings.size() << " finding(s)";
  for (const auto& f : res.findings) {
    std::cout << " step=" << f.step << "(" << f.suspect_ids.size() << " ids)";
  }
  std::cout << "\n";
  return kExitOk;
}

int cmd_stats(const GlobalOpts& opts) {
  PipelineConfig cfg = load_and_validate(opts, "stats");
  auto stats = run_stats(opts.inputs, manifest_file_for(opts, "stats"),
                         cfg.digest(), opts.overrides);
  size_t total = 0;
  std::cout << "category      count\n";
  for (const auto& [cat, s] : stats) {
    std::cout << std::left << std::setw(14) << to_string(cat) << s.count << "\n";
    total += s.count;
    std::cout << "  char_len:";
    for (const auto& [bound, n] : s.char_len_hist) {
      std::cout << " <=" << bound << ":" << n;
    }
    std::cout << "\n  tokens:  ";
    for (const auto& [bound, n] : s.token_hist) {
      std::cout << " <=" << bound << ":" << n;
    }
    std::cout << "\n";
  }
  std::cout << "total         " << total << "\n";
  if (!opts.output.empty()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [cat, s] : stats) {
      nlohmann::json cj{{"count", s.count}};
      for (const auto& [bound, n] : s.char_len_hist) {
        cj["char_len_hist"][std::to_string(bound)] = n;
      }
      for (const auto& [bound, n] : s.token_hist) {
        cj["token_hist"][std::to_string(bound)] = n;
      }
      j[to_string(cat)] = cj;
    }
    std::ofstream out(opts.output, std::ios::binary);
    out << j.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"language-mixed chain-of-thought corpus curation and evaluation"};
  app.require_subcommand(1);

  GlobalOpts opts;
  std::string decontam_kind = "prompt";
  std::string decontam_prompts;
  std::vector<std::string> mix_pools;
  std::string audit_loss_log;
  std::string audit_batch_map;
  std::string audit_records;

  auto add_common = [&](CLI::App* sub, bool needs_output = true) {
    sub->allow_extras();  // bare key.path=value tokens are config overrides
    sub->add_option("--config", opts.config_path, "pipeline config file (JSON)");
    sub->add_option("--seed", [&opts](const std::vector<std::string>& vals) {
      opts.overrides.push_back("seed=" + vals.front());
      return true;
    }, "override the global seed");
    sub->add_option("--workers", [&opts](const std::vector<std::string>& vals) {
      opts.overrides.push_back("workers=" + vals.front());
      return true;
    }, "worker parallelism");
    sub->add_option("--manifest-dir", opts.manifest_dir,
                    "manifest directory (default: output directory)");
    sub->add_option("--set", opts.overrides,
                    "config override, key.path=value (repeatable)");
    if (needs_output) {
      sub->add_option("--output", opts.output, "output file")->required();
    }
  };

  auto* ingest = app.add_subcommand("ingest", "canonicalize raw prompt records");
  add_common(ingest);
  ingest->add_option("--input", opts.input, "raw prompt JSONL")->required();

  auto* filter = app.add_subcommand("filter", "apply prompt ratio/length gates");
  add_common(filter);
  filter->add_option("--input", opts.input, "prompt record JSONL")->required();

  auto* generate =
      app.add_subcommand("generate", "generate gated traces from a teacher endpoint");
  add_common(generate);
  generate->add_option("--input", opts.input, "prompt record JSONL")->required();
  generate->add_option("--endpoint",
                       [&opts](const std::vector<std::string>& vals) {
                         opts.overrides.push_back("generation.endpoint=" +
                                                  vals.front());
                         return true;
                       },
                       "teacher endpoint base URL");

  auto* validate = app.add_subcommand("validate", "segment and gate raw traces");
  add_common(validate);
  validate->add_option("--input", opts.input, "trace JSONL")->required();

  auto* augment = app.add_subcommand("augment", "style/option augment exam items");
  add_common(augment);
  augment->add_option("--input", opts.input, "exam item JSONL")->required();

  auto* decontam =
      app.add_subcommand("decontam", "drop records overlapping benchmark n-grams");
  add_common(decontam);
  decontam->add_option("--input", opts.input, "record JSONL")->required();
  decontam->add_option("--kind", decontam_kind, "record kind: prompt|trace|exam");
  decontam->add_option("--prompts", decontam_prompts,
                       "prompt records to join by prompt_id (trace kind)");

  auto* mix = app.add_subcommand("mix", "compose the training set from pools");
  add_common(mix);
  mix->add_option("--input", opts.input, "single pool file with category field");
  mix->add_option("--pool", mix_pools, "Category=path pool file (repeatable)");

  auto* eval = app.add_subcommand("eval", "grade completion runs and aggregate");
  add_common(eval);
  eval->add_option("--input", opts.inputs, "completion run files (one per trial)")
      ->required();

  auto* audit = app.add_subcommand("audit", "detect loss spikes, map to records");
  add_common(audit);
  audit->add_option("--loss-log", audit_loss_log, "step<TAB>loss file")->required();
  audit->add_option("--batch-map", audit_batch_map, "step<TAB>ids file");
  audit->add_option("--records", audit_records, "record file for rendering");

  auto* stats = app.add_subcommand("stats", "per-category counts and histograms");
  add_common(stats, /*needs_output=*/false);
  stats->add_option("--input", opts.inputs, "prompt record files")->required();
  stats->add_option("--output", opts.output, "optional JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) {
      for (const auto& extra : sub->remaining()) {
        if (extra.find('=') == std::string::npos) {
          throw ConfigError("unexpected argument (overrides look like "
                            "key.path=value): " + extra);
        }
        opts.overrides.push_back(extra);
      }
    }
    if (app.got_subcommand(ingest)) {
      PipelineConfig cfg = load_and_validate(opts, "ingest");
      auto r = run_ingest(cfg, opts.input, opts.output,
                          manifest_file_for(opts, "ingest"), opts.overrides);
      print_stage_result("ingest", r);
      return kExitOk;
    }
    if (app.got_subcommand(filter)) {
      PipelineConfig cfg = load_and_validate(opts, "filter");
      auto r = run_filter(cfg, opts.input, opts.output,
                          manifest_file_for(opts, "filter"), opts.overrides);
      print_stage_result("filter", r);
      return kExitOk;
    }
    if (app.got_subcommand(generate)) return cmd_generate(opts);
    if (app.got_subcommand(validate)) {
      PipelineConfig cfg = load_and_validate(opts, "validate");
      auto r = run_validate(cfg, opts.input, opts.output,
                            manifest_file_for(opts, "validate"), opts.overrides);
      print_stage_result("validate", r);
      return kExitOk;
    }
    if (app.got_subcommand(augment)) {
      PipelineConfig cfg = load_and_validate(opts, "augment");
      auto r = run_augment(cfg, opts.input, opts.output,
                           manifest_file_for(opts, "augment"), opts.overrides);
      print_stage_result("augment", r);
      return kExitOk;
    }
    if (app.got_subcommand(decontam)) {
      PipelineConfig cfg = load_and_validate(opts, "decontam");
      auto r = run_decontam(cfg, opts.input, opts.output,
                            manifest_file_for(opts, "decontam"),
                            record_kind_from_string(decontam_kind),
                            decontam_prompts, opts.overrides);
      print_stage_result("decontam", r);
      return kExitOk;
    }
    if (app.got_subcommand(mix)) {
      PipelineConfig cfg = load_and_validate(opts, "mix");
      std::map<Category, std::string> pool_files;
      for (const auto& spec : mix_pools) {
        size_t eq = spec.find('=');
        if (eq == std::string::npos) {
          throw ConfigError("--pool must be Category=path: " + spec);
        }
        pool_files[category_from_string(spec.substr(0, eq))] =
            spec.substr(eq + 1);
      }
      if (pool_files.empty() && opts.input.empty()) {
        throw ConfigError("mix needs --input or at least one --pool");
      }
      auto r = run_mix(cfg, pool_files, opts.input, opts.output,
                       manifest_file_for(opts, "mix"), opts.overrides);
      print_stage_result("mix", r.stage);
      for (const auto& e : r.report.entries) {
        std::cout << "  " << to_string(e.category) << ": requested "
                  << e.requested << ", realized " << e.realized
                  << (e.shortfall ? " (shortfall)" : "")
                  << (e.upsampled ? " (upsampled " + std::to_string(e.upsampled) + ")"
                                  : "")
                  << "\n";
      }
      return kExitOk;
    }
    if (app.got_subcommand(eval)) return cmd_eval(opts);
    if (app.got_subcommand(audit)) {
      return cmd_audit(opts, audit_loss_log, audit_batch_map, audit_records);
    }
    if (app.got_subcommand(stats)) return cmd_stats(opts);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ServiceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitService;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
