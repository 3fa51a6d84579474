// Acceptance suite: one test case per criterion, each printing a single
// [PASS]/[FAIL] line. Run directly (./acceptance_tests) or via ctest.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "langmix/augment.hpp"
#include "langmix/bm25.hpp"
#include "langmix/config.hpp"
#include "langmix/decontam.hpp"
#include "langmix/eval.hpp"
#include "langmix/gates.hpp"
#include "langmix/hash.hpp"
#include "langmix/jsonl.hpp"
#include "langmix/manifest.hpp"
#include "langmix/mixer.hpp"
#include "langmix/mock_teacher.hpp"
#include "langmix/record.hpp"
#include "langmix/spike_audit.hpp"
#include "langmix/stages.hpp"
#include "test_util.hpp"

using namespace langmix;

namespace {

void report(const std::string& name, bool pass, const std::string& detail = "") {
  std::printf("[%s] %s%s%s\n", pass ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : ": ", detail.c_str());
  std::fflush(stdout);
}

int run_cli(const std::string& args, const std::string& log_path = "") {
  std::string cmd = std::string(LANGMIX_BIN) + " " + args;
  if (!log_path.empty()) {
    cmd += " >" + log_path + " 2>&1";
  } else {
    cmd += " >/dev/null 2>&1";
  }
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string scripted_text(size_t hangul, size_t latin, uint64_t salt = 0) {
  std::string out;
  for (size_t i = 0; i < hangul; i++) {
    append_utf8(out, char32_t(0xAC00 + (i + salt) % 2000));
  }
  for (size_t i = 0; i < latin; i++) {
    out.push_back(char('a' + (i + salt) % 26));
  }
  return out;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Criterion 1: prompt gate fidelity on 10,000 boundary-spanning prompts
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: gate fidelity") {
  testutil::TempDir tmp("acc_gate");

  // (hangul, latin) letter counts with exact rational ratios around 0.30.
  const std::vector<std::pair<size_t, size_t>> ratio_cases = {
      {3, 7},    // 0.30 exactly
      {29, 71},  // 0.29
      {30, 70},  // 0.30 exactly
      {31, 69},  // 0.31
      {0, 10},   // 0.0
      {10, 0},   // 1.0
      {1, 2},    // 1/3
      {2, 5},    // ~0.2857
      {15, 35},  // 0.30 exactly
      {14, 36},  // 0.28
  };
  const std::vector<size_t> length_cases = {49, 50, 51, 100, 137, 200, 300};
  const std::vector<size_t> big_lengths = {8191, 8192, 8193};

  struct Known {
    std::string id;
    size_t hangul, latin, len;
  };
  std::vector<Known> known;
  std::string input = tmp.file("prompts.jsonl");
  {
    JsonlWriter out(input);
    SplitMix64 rng(2024);
    for (size_t i = 0; i < 10000; i++) {
      auto [h, l] = ratio_cases[i % ratio_cases.size()];
      size_t len = (i % 50 == 17) ? big_lengths[i % big_lengths.size()]
                                  : length_cases[(i / 3) % length_cases.size()];
      if (len < h + l) len = h + l;
      std::string text = scripted_text(h, l, rng.next_below(500));
      text.append(len - h - l, ' ');
      PromptRecord rec = make_prompt_record("gen" + std::to_string(i),
                                            Category::Daily, License::A, text);
      known.push_back({rec.id, h, l, len});
      out.write(rec);
    }
  }

  std::string output = tmp.file("kept.jsonl");
  auto start = std::chrono::steady_clock::now();
  int rc = run_cli("filter --input " + input + " --output " + output +
                   " --manifest-dir " + tmp.path().string(),
                   tmp.file("filter.log"));
  double secs = elapsed_s(start);
  REQUIRE(rc == 0);

  std::set<std::string> kept_ids;
  for (const auto& rec : read_jsonl<PromptRecord>(output)) {
    kept_ids.insert(rec.id);
  }

  // Independent per-record reference in integer arithmetic: keep iff
  // ratio >= 0.30 and 50 <= len <= 8192.
  size_t disagreements = 0;
  size_t expected_kept = 0;
  for (const auto& k : known) {
    bool ratio_ok = (k.hangul + k.latin) > 0
                        ? 10 * k.hangul >= 3 * (k.hangul + k.latin)
                        : false;
    bool want_keep = ratio_ok && k.len >= 50 && k.len <= 8192;
    if (want_keep) expected_kept++;
    if (want_keep != (kept_ids.count(k.id) > 0)) disagreements++;
  }

  bool pass = disagreements == 0 && kept_ids.size() == expected_kept && secs < 5.0;
  report("gate fidelity (10k prompts, boundary sweep)", pass,
         std::to_string(disagreements) + " disagreements, kept " +
             std::to_string(kept_ids.size()) + "/" +
             std::to_string(expected_kept) + " expected, " +
             std::to_string(secs).substr(0, 4) + "s");
  CHECK(disagreements == 0);
  CHECK(kept_ids.size() == expected_kept);
  CHECK(secs < 5.0);
}

// ---------------------------------------------------------------------------
// Criterion 2: trace gates drop every trigger with the correct reason
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: trace gates") {
  GateConfig cfg;
  Tokenizer tokenizer = Tokenizer::resolve(cfg.tokenizer);

  auto korean_tokens = [](size_t n, uint64_t salt) {
    std::string out;
    for (size_t i = 0; i < n; i++) {
      if (i) out += " ";
      out += "단어" + std::to_string(salt) + "_" + std::to_string(i);
    }
    return out;
  };

  struct Case {
    std::string raw;
    std::string expected;
  };
  auto make_case = [&](size_t kind, uint64_t salt) -> Case {
    std::string good_think = scripted_text(12, 88, salt);
    std::string good_answer = "정답은 " + korean_tokens(10, salt);
    switch (kind) {
      case 0:
        return {"태그 없이 답만 있는 본문 " + std::to_string(salt),
                "missing_think"};
      case 1:
        return {"<think>a</think><think>b</think> " + good_answer,
                "multiple_think"};
      case 2:
        return {"<think>" + scripted_text(2, 98, salt) + "</think> " + good_answer,
                "think_ratio"};
      case 3:
        return {"<think>" + scripted_text(25, 75, salt) + "</think> " + good_answer,
                "think_ratio"};
      case 4:
        return {"<think>" + good_think + "</think> The answer is " +
                    std::to_string(salt),
                "answer_language"};
      default: {
        std::string rep;
        for (int i = 0; i < 12; i++) rep += " 반복 구절 다시 또";
        return {"<think>" + good_think + "</think> 정답은" + rep, "degeneration"};
      }
    }
  };

  size_t failures = 0;
  size_t made = 0;
  // 950 cheap triggers + 50 over-cap traces = 1,000 violating traces.
  for (size_t i = 0; i < 950; i++) {
    auto c = make_case(i % 6, i);
    auto [trace, verdict] = make_trace_record("t" + std::to_string(i), c.raw,
                                              cfg, tokenizer);
    made++;
    auto failed = verdict.failed();
    if (verdict.keep || failed != std::vector<std::string>{c.expected}) {
      failures++;
      if (failures <= 3) {
        UNSCOPED_INFO("case " << i << " expected " << c.expected << " got "
                              << (failed.empty() ? "keep" : failed.front()));
      }
    }
  }
  for (size_t i = 0; i < 50; i++) {
    std::string think = scripted_text(12, 88, i);
    std::string raw = "<think>" + think + "</think> 정답은";
    size_t base = tokenizer.count(raw);
    raw += " " + korean_tokens(16385 - base, 9000 + i);
    auto [trace, verdict] = make_trace_record("big" + std::to_string(i), raw,
                                              cfg, tokenizer);
    made++;
    if (verdict.keep || verdict.failed() != std::vector<std::string>{"token_cap"} ||
        trace.token_count != 16385) {
      failures++;
    }
  }

  size_t kept_compliant = 0;
  for (size_t i = 0; i < 100; i++) {
    std::string raw = "<think>" + scripted_text(12, 88, i) + "</think> 정답은 " +
                      korean_tokens(20, i);
    auto [trace, verdict] = make_trace_record("ok" + std::to_string(i), raw,
                                              cfg, tokenizer);
    if (verdict.keep) kept_compliant++;
  }

  bool pass = failures == 0 && kept_compliant == 100 && made == 1000;
  report("trace gates (1,000 violations + 100 compliant)", pass,
         std::to_string(failures) + " wrong verdicts, " +
             std::to_string(kept_compliant) + "/100 compliant kept");
  CHECK(failures == 0);
  CHECK(kept_compliant == 100);
}

// ---------------------------------------------------------------------------
// Criterion 3: decontamination matches brute force on planted overlaps
// ---------------------------------------------------------------------------

namespace {

bool brute_force_contaminated(const std::vector<std::string>& record_tokens,
                              const std::vector<std::vector<std::string>>& bench,
                              size_t n) {
  if (record_tokens.size() < n) return false;
  for (const auto& b : bench) {
    if (b.size() < n) continue;
    for (size_t i = 0; i + n <= record_tokens.size(); i++) {
      for (size_t j = 0; j + n <= b.size(); j++) {
        bool eq = true;
        for (size_t k = 0; k < n && eq; k++) eq = record_tokens[i + k] == b[j + k];
        if (eq) return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST_CASE("acceptance: decontamination oracle equivalence") {
  const size_t n = 13;
  SplitMix64 rng(777);

  // 50 benchmark items over per-item vocabularies (b<item>w<k>).
  std::vector<BenchmarkRecord> bench;
  std::vector<std::vector<std::string>> bench_tokens;
  for (size_t b = 0; b < 50; b++) {
    size_t len = 16 + rng.next_below(10);
    std::string text;
    std::vector<std::string> toks;
    for (size_t k = 0; k < len; k++) {
      std::string tok = "b" + std::to_string(b) + "w" + std::to_string(k);
      if (k) text += " ";
      text += tok;
      toks.push_back(tok);
    }
    bench.push_back({"q" + std::to_string(b), "bench", text});
    bench_tokens.push_back(toks);
  }
  auto index = build_benchmark_index(bench, n);

  auto filler = [&](const std::string& prefix, size_t count) {
    std::vector<std::string> out;
    for (size_t i = 0; i < count; i++) {
      out.push_back(prefix + std::to_string(rng.next_below(100000)));
    }
    return out;
  };

  size_t disagreements = 0;
  size_t planted_missed = 0;
  size_t near_miss_dropped = 0;
  for (size_t i = 0; i < 1000; i++) {
    std::vector<std::string> tokens = filler("f", rng.next_below(25));
    bool planted13 = false;
    bool planted12 = false;
    if (i % 5 < 2) {  // 400 records with a verbatim 13-token span
      planted13 = true;
      const auto& b = bench_tokens[rng.next_below(bench_tokens.size())];
      size_t off = rng.next_below(b.size() - n + 1);
      size_t pos = tokens.empty() ? 0 : rng.next_below(tokens.size() + 1);
      tokens.insert(tokens.begin() + long(pos), b.begin() + long(off),
                    b.begin() + long(off + n));
    } else if (i % 5 < 4) {  // 400 records with only a 12-token near miss
      planted12 = true;
      const auto& b = bench_tokens[rng.next_below(bench_tokens.size())];
      size_t off = rng.next_below(b.size() - (n - 1) + 1);
      size_t pos = tokens.empty() ? 0 : rng.next_below(tokens.size() + 1);
      tokens.insert(tokens.begin() + long(pos), b.begin() + long(off),
                    b.begin() + long(off + n - 1));
    }
    std::string text;
    for (size_t k = 0; k < tokens.size(); k++) {
      if (k) text += " ";
      text += tokens[k];
    }

    auto verdict = decontaminate({text}, index);
    bool brute = brute_force_contaminated(normalized_tokens(text), bench_tokens, n);
    if (verdict.keep != !brute) disagreements++;
    if (planted13 && verdict.keep) planted_missed++;
    if (planted12 && !planted13 && !verdict.keep) near_miss_dropped++;
  }

  bool pass = disagreements == 0 && planted_missed == 0 && near_miss_dropped == 0;
  report("decontamination oracle equivalence (1,000 records, 50 items)", pass,
         std::to_string(disagreements) + " disagreements, " +
             std::to_string(planted_missed) + " planted spans missed, " +
             std::to_string(near_miss_dropped) + " near-misses dropped");
  CHECK(disagreements == 0);
  CHECK(planted_missed == 0);
  CHECK(near_miss_dropped == 0);
}

// ---------------------------------------------------------------------------
// Criterion 4: BM25 against brute-force Okapi on a 100-document pool
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: BM25 correctness") {
  SplitMix64 rng(4242);
  std::vector<std::string> vocab;
  for (int i = 0; i < 40; i++) vocab.push_back("term" + std::to_string(i));

  std::vector<std::string> docs;
  for (size_t d = 0; d < 100; d++) {
    std::string doc;
    size_t len = 3 + rng.next_below(20);
    for (size_t i = 0; i < len; i++) {
      if (i) doc += " ";
      doc += vocab[rng.next_below(vocab.size())];
    }
    docs.push_back(doc);
  }
  Bm25Index index(1.5, 0.75);
  for (size_t d = 0; d < docs.size(); d++) {
    index.add_document("d" + std::to_string(d), docs[d]);
  }
  index.finalize();

  // Brute force straight off the formula.
  auto brute_scores = [&](const std::string& query) {
    std::vector<std::map<std::string, int>> tf(docs.size());
    std::vector<double> lens(docs.size());
    double total = 0;
    for (size_t d = 0; d < docs.size(); d++) {
      auto toks = normalized_tokens(docs[d]);
      lens[d] = double(toks.size());
      total += lens[d];
      for (const auto& t : toks) tf[d][t]++;
    }
    double avgdl = total / double(docs.size());
    std::vector<double> scores(docs.size(), 0.0);
    for (const auto& term : normalized_tokens(query)) {
      double df = 0;
      for (const auto& m : tf) df += m.count(term) ? 1 : 0;
      double idf = std::log((double(docs.size()) - df + 0.5) / (df + 0.5) + 1.0);
      for (size_t d = 0; d < docs.size(); d++) {
        auto it = tf[d].find(term);
        if (it == tf[d].end()) continue;
        double f = it->second;
        scores[d] +=
            idf * (f * 2.5) / (f + 1.5 * (1.0 - 0.75 + 0.75 * lens[d] / avgdl));
      }
    }
    return scores;
  };

  size_t score_mismatches = 0;
  size_t rank_mismatches = 0;
  for (int q = 0; q < 50; q++) {
    std::string query = vocab[rng.next_below(vocab.size())] + " " +
                        vocab[rng.next_below(vocab.size())] + " " +
                        vocab[rng.next_below(vocab.size())];
    auto got = index.score_all(query);
    auto want = brute_scores(query);
    for (size_t d = 0; d < docs.size(); d++) {
      if (std::fabs(got[d] - want[d]) > 1e-9) score_mismatches++;
    }
    // Reference top-5: score descending, build order on ties, positive only.
    std::vector<size_t> order;
    for (size_t d = 0; d < docs.size(); d++) {
      if (want[d] > 0.0) order.push_back(d);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return want[a] > want[b]; });
    if (order.size() > 5) order.resize(5);
    auto hits = index.top_k(query, 5);
    if (hits.size() != order.size()) {
      rank_mismatches++;
    } else {
      for (size_t i = 0; i < hits.size(); i++) {
        if (hits[i].doc != order[i]) rank_mismatches++;
      }
    }
  }

  bool pass = score_mismatches == 0 && rank_mismatches == 0;
  report("BM25 correctness (100-doc pool, 50 queries, 1e-9)", pass,
         std::to_string(score_mismatches) + " score mismatches, " +
             std::to_string(rank_mismatches) + " rank mismatches");
  CHECK(score_mismatches == 0);
  CHECK(rank_mismatches == 0);
}

// ---------------------------------------------------------------------------
// Criterion 5: option-merge invariants over 10,000 fuzzed merges
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: option-merge invariants") {
  SplitMix64 rng(555);
  const auto& lexicon = default_negation_cues();

  std::vector<std::string> qvocab;
  for (int i = 0; i < 25; i++) qvocab.push_back("질문어" + std::to_string(i));
  std::vector<std::string> ovocab;
  for (int i = 0; i < 120; i++) ovocab.push_back("선지" + std::to_string(i));
  ovocab.push_back("틀린 보기");       // cue-bearing distractor candidates
  ovocab.push_back("거짓 서술");
  ovocab.push_back("not an answer");

  std::vector<ExamItem> items;
  std::set<std::string> used_ids;
  for (size_t i = 0; items.size() < 300; i++) {
    ExamItem item;
    size_t qlen = 4 + rng.next_below(5);
    for (size_t k = 0; k < qlen; k++) {
      if (k) item.question += " ";
      item.question += qvocab[rng.next_below(qvocab.size())];
    }
    if (rng.next_below(5) == 0) item.question += " 아닌 것은";  // ~20% cue items
    size_t n_opts = 2 + rng.next_below(5);
    std::set<std::string> opts;
    while (opts.size() < n_opts) {
      opts.insert(ovocab[rng.next_below(ovocab.size())]);
    }
    item.options.assign(opts.begin(), opts.end());
    item.gold_index = rng.next_below(item.options.size());
    item.id = exam_item_id(item.question, item.options) + std::to_string(i);
    if (!used_ids.insert(item.id).second) continue;
    items.push_back(std::move(item));
  }

  ExamPool pool = ExamPool::build(items);
  std::vector<size_t> cue_free;
  for (size_t i = 0; i < pool.items.size(); i++) {
    if (!has_negation_cue(pool.items[i].question, lexicon)) cue_free.push_back(i);
  }
  REQUIRE(cue_free.size() > 100);

  size_t violations = 0;
  size_t augmented = 0;
  for (size_t iter = 0; iter < 10000; iter++) {
    const ExamItem& target = pool.items[cue_free[iter % cue_free.size()]];
    OptionMergeConfig cfg;
    cfg.seed = iter;
    cfg.retrieval_depth = 1 + iter % 7;
    auto res = option_merge(target, pool, lexicon, cfg);
    const ExamItem& out = res.item;
    if (res.augmented) augmented++;

    bool ok = out.options.size() <= 10;
    ok = ok && out.gold_index < out.options.size() &&
         out.options[out.gold_index] == target.gold();
    std::set<std::string> normalized;
    for (const auto& opt : out.options) {
      ok = ok && normalized.insert(collapse_normalize(opt)).second;
    }
    std::set<std::string> original(target.options.begin(), target.options.end());
    for (const auto& opt : out.options) {
      if (!original.count(opt)) {
        ok = ok && !has_negation_cue(opt, lexicon);
      }
    }
    if (!ok) violations++;
  }

  bool pass = violations == 0 && augmented > 5000;
  report("option-merge invariants (10,000 fuzzed merges)", pass,
         std::to_string(violations) + " violations, " + std::to_string(augmented) +
             " merges actually augmented");
  CHECK(violations == 0);
  CHECK(augmented > 5000);  // the fuzz actually exercised merging
}

// ---------------------------------------------------------------------------
// Criterion 6: boxed extraction matches brute-force tie-break reference
// ---------------------------------------------------------------------------

namespace {

std::optional<std::string> brute_force_extract(const std::string& text) {
  size_t region = 0;
  size_t close = text.rfind("</think>");
  if (close != std::string::npos) region = close + 8;
  const std::string needle = "\\boxed{";
  size_t first = std::string::npos;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    if (pos >= region) {
      first = pos;
      break;
    }
  }
  if (first == std::string::npos) return std::nullopt;
  int depth = 1;
  std::string out;
  for (size_t i = first + needle.size(); i < text.size(); i++) {
    if (text[i] == '{') depth++;
    if (text[i] == '}') {
      depth--;
      if (depth == 0) return out;
    }
    out.push_back(text[i]);
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("acceptance: extraction tie-breaks") {
  SplitMix64 rng(90210);
  const std::vector<std::string> pieces = {
      "정답 ",         "filler ",          "\\boxed{42} ",
      "\\boxed{1/2} ", "\\boxed{{a}+b} ",  "<think>",
      "</think>",      "\\boxed{broken ",  "} ",
      "{ ",            "\\boxed{\\frac{1}{2}} ",
      "</think></think>",
  };
  size_t mismatches = 0;
  for (size_t iter = 0; iter < 1000; iter++) {
    std::string text;
    size_t n = rng.next_below(14);
    for (size_t i = 0; i < n; i++) {
      text += pieces[rng.next_below(pieces.size())];
    }
    auto impl = extract_boxed(text);
    auto brute = brute_force_extract(text);
    if (impl != brute) {
      mismatches++;
      if (mismatches <= 3) UNSCOPED_INFO("text: " << text);
    }
  }
  bool pass = mismatches == 0;
  report("extraction tie-breaks (1,000 fuzzed completions)", pass,
         std::to_string(mismatches) + " mismatches vs brute force");
  CHECK(mismatches == 0);
}

// ---------------------------------------------------------------------------
// Criterion 7: aggregation arithmetic
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: aggregation arithmetic") {
  auto agg = aggregate("bench", {0.70, 0.72, 0.74});
  bool mean_ok = std::fabs(agg.mean - 0.7200) < 1e-9;
  bool se_ok = agg.standard_error &&
               std::fabs(*agg.standard_error - 0.011547005383792516) < 1e-9;
  report("aggregation arithmetic (mean 0.7200, SE 0.011547)", mean_ok && se_ok,
         "mean=" + std::to_string(agg.mean) +
             " se=" + std::to_string(agg.standard_error.value_or(-1)));
  CHECK(mean_ok);
  CHECK(se_ok);
}

// ---------------------------------------------------------------------------
// Criterion 8: mix determinism and counts
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: mix determinism and counts") {
  std::map<Category, std::vector<std::string>> pools;
  auto fill = [&](Category cat, size_t n) {
    auto& pool = pools[cat];
    pool.reserve(n);
    for (size_t i = 0; i < n; i++) {
      pool.push_back(std::string(to_string(cat)) + ":" + std::to_string(i));
    }
  };
  fill(Category::OpenThought, 65000);
  fill(Category::Code, 90000);
  fill(Category::Science, 30000);  // short of its quota
  fill(Category::Exams, 66000);

  MixSpec spec;
  spec.seed = 20240810;
  auto quota_entry = [](Category c, size_t q) {
    MixEntry e;
    e.category = c;
    e.quota = q;
    return e;
  };
  spec.entries = {quota_entry(Category::OpenThought, 62000),
                  quota_entry(Category::Code, 86000),
                  quota_entry(Category::Science, 37000),
                  quota_entry(Category::Exams, 66000)};

  auto a = mix(pools, spec);
  auto b = mix(pools, spec);

  bool counts_ok = true;
  bool shortfall_ok = true;
  for (const auto& e : a.report.entries) {
    size_t pool_size = pools.at(e.category).size();
    size_t want = std::min(e.requested, pool_size);
    counts_ok = counts_ok && e.realized == want;
    shortfall_ok = shortfall_ok && (e.shortfall == (pool_size < e.requested));
  }
  bool deterministic = a.records == b.records;
  bool total_ok = a.report.total_realized == 62000 + 86000 + 30000 + 66000;

  auto quotas = largest_remainder_quotas({2.0, 1.5, 1.5}, 50000);
  bool ratio_ok = quotas == std::vector<size_t>{20000, 15000, 15000};

  bool pass = counts_ok && shortfall_ok && deterministic && total_ok && ratio_ok;
  report("mix determinism and counts (quota + 2:1.5:1.5 ratio)", pass,
         std::string(deterministic ? "byte-identical" : "NONDETERMINISTIC") +
             ", total " + std::to_string(a.report.total_realized));
  CHECK(counts_ok);
  CHECK(shortfall_ok);
  CHECK(deterministic);
  CHECK(total_ok);
  CHECK(ratio_ok);
}

// ---------------------------------------------------------------------------
// Criterion 9: spike detection on a planted 500-step series
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: spike detection") {
  LossSeries series;
  for (int i = 0; i < 500; i++) {
    series.steps.push_back({i, 1.0 + double(i * 37 % 11) / 1000.0});
  }
  const std::vector<int64_t> real_spikes = {150, 250, 380};
  for (int64_t s : real_spikes) {
    series.steps[size_t(s)].second = 3.0;
    series.steps[size_t(s) + 1].second = 2.8;
  }
  series.steps[200].second = 3.2;  // transients recover next step
  series.steps[320].second = 2.9;

  auto findings = detect_spikes(series, 50, 4.0);
  std::vector<int64_t> found;
  for (const auto& f : findings) found.push_back(f.step);
  bool detect_ok = found == real_spikes;

  LossSeries scaled = series;
  for (auto& [step, loss] : scaled.steps) loss *= 10.0;
  auto scaled_findings = detect_spikes(scaled, 50, 4.0);
  std::vector<int64_t> scaled_found;
  for (const auto& f : scaled_findings) scaled_found.push_back(f.step);
  bool scale_ok = scaled_found == found;

  bool pass = detect_ok && scale_ok;
  std::string got;
  for (int64_t s : found) got += std::to_string(s) + " ";
  report("spike detection (3 planted spikes, 2 transients, x10 scaling)", pass,
         "found steps: " + got);
  CHECK(detect_ok);
  CHECK(scale_ok);
}

// ---------------------------------------------------------------------------
// Criterion 10: end-to-end dry run over the CLI against the mock endpoint
// ---------------------------------------------------------------------------

TEST_CASE("acceptance: end-to-end dry run") {
  testutil::TempDir tmp("acc_e2e");
  const std::string fx = LANGMIX_FIXTURES_DIR;
  auto start = std::chrono::steady_clock::now();

  MockTeacherOptions mock_opts;
  mock_opts.degenerate_first = 2;  // exercise the retry loop mid-pipeline
  MockTeacher teacher(mock_opts);
  teacher.start();

  nlohmann::json config{
      {"seed", 11},
      {"augment", {{"templates_path", fx + "/style_templates.txt"},
                   {"lexicon_path", fx + "/negation_cues.txt"}}},
      {"decontam", {{"benchmarks", {fx + "/benchmarks/bench_math.jsonl",
                                    fx + "/benchmarks/bench_knowledge.jsonl"}}}},
      {"generation", {{"parallelism", 4}, {"backoff_ms", 1}}},
      {"mix", {{"entries", {{{"category", "OpenThought"}, {"quota", 5}}}}}},
  };
  std::string config_path = tmp.file("config.json");
  testutil::write_file(config_path, config.dump(2));

  std::string dir = tmp.path().string();
  auto stage = [&](const std::string& name, const std::string& args) {
    int rc = run_cli(args + " --config " + config_path + " --manifest-dir " + dir,
                     tmp.file(name + ".log"));
    INFO(name << " log: " << testutil::read_file(tmp.file(name + ".log")));
    REQUIRE(rc == 0);
  };

  stage("ingest", "ingest --input " + fx + "/prompts_raw.jsonl --output " +
                      tmp.file("prompts.jsonl"));
  stage("filter", "filter --input " + tmp.file("prompts.jsonl") + " --output " +
                      tmp.file("filtered.jsonl"));
  stage("generate", "generate --input " + tmp.file("filtered.jsonl") +
                        " --output " + tmp.file("traces.jsonl") +
                        " --endpoint " + teacher.base_url());
  stage("validate", "validate --input " + tmp.file("traces.jsonl") +
                        " --output " + tmp.file("validated.jsonl"));
  stage("augment", "augment --input " + fx + "/exams.jsonl --output " +
                       tmp.file("augmented.jsonl"));
  stage("decontam", "decontam --input " + tmp.file("validated.jsonl") +
                        " --kind trace --prompts " + tmp.file("filtered.jsonl") +
                        " --output " + tmp.file("clean.jsonl"));
  stage("mix", "mix --pool OpenThought=" + tmp.file("clean.jsonl") +
                   " --output " + tmp.file("mixed.jsonl"));
  double secs = elapsed_s(start);

  // Every stage manifest balances read = kept + dropped.
  struct Expect {
    std::string stage;
    size_t read, kept;
  };
  std::vector<Expect> expectations = {
      {"ingest", 12, 10},  {"filter", 10, 8},  {"generate", 8, 8},
      {"validate", 8, 8},  {"augment", 8, 8},  {"decontam", 8, 8},
      {"mix", 8, 5},
  };
  size_t manifest_failures = 0;
  for (const auto& e : expectations) {
    auto m = load_manifest(manifest_path(dir, e.stage));
    bool ok = m && m->counts.balanced() && m->counts.read == e.read &&
              m->counts.kept == e.kept;
    if (!ok) {
      manifest_failures++;
      UNSCOPED_INFO(e.stage << ": "
                            << (m ? "read=" + std::to_string(m->counts.read) +
                                        " kept=" + std::to_string(m->counts.kept)
                                  : "missing manifest"));
    }
  }

  auto mixed = testutil::read_file(tmp.file("mixed.jsonl"));
  size_t mixed_lines = size_t(std::count(mixed.begin(), mixed.end(), '\n'));

  bool pass = manifest_failures == 0 && mixed_lines == 5 && secs < 60.0;
  report("end-to-end dry run (ingest→filter→generate→validate→augment→decontam→mix)",
         pass,
         std::to_string(secs).substr(0, 4) + "s, " +
             std::to_string(manifest_failures) + " manifest failures, " +
             std::to_string(mixed_lines) + " mixed records");
  CHECK(manifest_failures == 0);
  CHECK(mixed_lines == 5);
  CHECK(secs < 60.0);
}

// ---------------------------------------------------------------------------
// Shipped-fixture coverage for the remaining subcommands + CLI conventions
// ---------------------------------------------------------------------------

TEST_CASE("cli: eval, audit, and stats run on shipped fixtures") {
  testutil::TempDir tmp("cli_fixtures");
  const std::string fx = LANGMIX_FIXTURES_DIR;
  std::string dir = tmp.path().string();

  // Bare key=value tokens act as config overrides, same as --set.
  int rc = run_cli("eval --input " + fx + "/completions_run1.jsonl --input " +
                       fx + "/completions_run2.jsonl --input " + fx +
                       "/completions_run3.jsonl --output " + tmp.file("eval.json") +
                       " --manifest-dir " + dir + " eval.benchmark=fixture",
                   tmp.file("eval.log"));
  INFO(testutil::read_file(tmp.file("eval.log")));
  REQUIRE(rc == 0);
  auto agg = nlohmann::json::parse(testutil::read_file(tmp.file("eval.json")));
  CHECK(agg.at("n_runs") == 3);
  std::vector<double> accs = agg.at("per_run_accuracy").get<std::vector<double>>();
  REQUIRE(accs.size() == 3);
  CHECK_THAT(accs[0], Catch::Matchers::WithinAbs(0.7, 1e-12));
  CHECK_THAT(accs[1], Catch::Matchers::WithinAbs(0.8, 1e-12));
  CHECK_THAT(accs[2], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(agg.at("mean").get<double>(),
             Catch::Matchers::WithinAbs(2.5 / 3.0, 1e-12));

  rc = run_cli("audit --loss-log " + fx + "/loss.tsv --batch-map " + fx +
                   "/batches.tsv --output " + tmp.file("findings.json") +
                   " --manifest-dir " + dir,
               tmp.file("audit.log"));
  REQUIRE(rc == 0);
  auto findings = nlohmann::json::parse(testutil::read_file(tmp.file("findings.json")));
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].at("step") == 100);
  CHECK(findings[0].at("suspect_ids").size() == 8);  // steps 100+101 batches

  // stats needs canonical records: ingest the raw fixture first.
  rc = run_cli("ingest --input " + fx + "/prompts_raw.jsonl --output " +
                   tmp.file("prompts.jsonl") + " --manifest-dir " + dir,
               tmp.file("ingest.log"));
  REQUIRE(rc == 0);
  rc = run_cli("stats --input " + tmp.file("prompts.jsonl") + " --output " +
                   tmp.file("stats.json") + " --manifest-dir " + dir,
               tmp.file("stats.log"));
  REQUIRE(rc == 0);
  auto stats = nlohmann::json::parse(testutil::read_file(tmp.file("stats.json")));
  CHECK(stats.at("Daily").at("count") == 2);
  CHECK(stats.at("Code").at("count") == 3);

  // The audit run also renders a human-readable companion report.
  auto text_report = testutil::read_file(tmp.file("findings.json") + ".txt");
  CHECK(text_report.find("step 100") != std::string::npos);
  CHECK(text_report.find("rec-100-0") != std::string::npos);
}

TEST_CASE("cli: mix groups a single --input by category and is seed-stable") {
  testutil::TempDir tmp("cli_mix");
  const std::string fx = LANGMIX_FIXTURES_DIR;
  std::string dir = tmp.path().string();

  int rc = run_cli("ingest --input " + fx + "/prompts_raw.jsonl --output " +
                       tmp.file("prompts.jsonl") + " --manifest-dir " + dir,
                   tmp.file("ingest.log"));
  REQUIRE(rc == 0);

  std::string mix_args =
      "mix --input " + tmp.file("prompts.jsonl") +
      " --seed 7 --manifest-dir " + dir +
      " --set 'mix.entries=[{\"category\":\"Daily\",\"quota\":1},"
      "{\"category\":\"Code\",\"quota\":2}]'";
  rc = run_cli(mix_args + " --output " + tmp.file("mix_a.jsonl"),
               tmp.file("mix_a.log"));
  INFO(testutil::read_file(tmp.file("mix_a.log")));
  REQUIRE(rc == 0);
  rc = run_cli(mix_args + " --output " + tmp.file("mix_b.jsonl"),
               tmp.file("mix_b.log"));
  REQUIRE(rc == 0);

  auto a = testutil::read_file(tmp.file("mix_a.jsonl"));
  auto b = testutil::read_file(tmp.file("mix_b.jsonl"));
  CHECK(a == b);  // --seed 7 twice: byte-identical composition
  CHECK(std::count(a.begin(), a.end(), '\n') == 3);

  auto manifest = load_manifest(manifest_path(dir, "mix"));
  REQUIRE(manifest.has_value());
  CHECK(manifest->counts.balanced());
  CHECK(manifest->counts.kept == 3);

  auto report = nlohmann::json::parse(
      testutil::read_file(tmp.file("mix_b.jsonl") + ".report.json"));
  CHECK(report.at("total_realized") == 3);
}

TEST_CASE("cli: exit codes follow the contract") {
  testutil::TempDir tmp("cli_exit");
  // Unknown subcommand: usage text, nonzero exit.
  CHECK(run_cli("frobnicate", tmp.file("unknown.log")) != 0);
  // Config validation error: exit 1 with itemized messages.
  int rc = run_cli("filter --input x.jsonl --output y.jsonl --set "
                   "gates.think_ratio_low=0.9",
                   tmp.file("badcfg.log"));
  CHECK(rc == 1);
  // Missing input file: data error, exit 2.
  rc = run_cli("filter --input " + tmp.file("nope.jsonl") + " --output " +
                   tmp.file("out.jsonl") + " --manifest-dir " + tmp.path().string(),
               tmp.file("missing.log"));
  CHECK(rc == 2);
  // Unreachable endpoint: external service error, exit 3.
  std::string prompts = tmp.file("p.jsonl");
  {
    JsonlWriter out(prompts);
    out.write(make_prompt_record("s", Category::Daily, License::A,
                                 "긴 한국어 질문 텍스트 예시 입니다"));
  }
  rc = run_cli("generate --input " + prompts + " --output " + tmp.file("t.jsonl") +
                   " --endpoint http://127.0.0.1:9 --manifest-dir " +
                   tmp.path().string() + " --set generation.transport_retries=0" +
                   " --set generation.backoff_ms=1",
               tmp.file("endpoint.log"));
  CHECK(rc == 3);
}
