#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "langmix/jsonl.hpp"
#include "langmix/record.hpp"
#include "test_util.hpp"

using namespace langmix;

TEST_CASE("record ids are deterministic and content addressed") {
  auto a = make_prompt_record("site-1", Category::Code, License::A, "본문 텍스트");
  auto b = make_prompt_record("site-1", Category::Code, License::A, "본문 텍스트");
  CHECK(a.id == b.id);
  CHECK(a.id.size() == 32);

  auto c = make_prompt_record("site-2", Category::Code, License::A, "본문 텍스트");
  CHECK(a.id != c.id);
  auto d = make_prompt_record("site-1", Category::Code, License::A, "다른 텍스트");
  CHECK(a.id != d.id);

  // The id hashes the NFC form, so composed and decomposed inputs coincide.
  std::string decomposed = encode_utf8({0x1100, 0x1161});
  auto e = make_prompt_record("s", Category::Daily, License::B, decomposed);
  auto f = make_prompt_record("s", Category::Daily, License::B, "가");
  CHECK(e.id == f.id);
  CHECK(e.text == f.text);
}

TEST_CASE("id construction separates source and text") {
  CHECK(record_id("ab", "c") != record_id("a", "bc"));
}

TEST_CASE("ids are injective over a generated corpus") {
  std::set<std::string> ids;
  for (int s = 0; s < 50; s++) {
    for (int t = 0; t < 40; t++) {
      ids.insert(record_id("src" + std::to_string(s),
                           "text " + std::to_string(t)));
    }
  }
  CHECK(ids.size() == 50u * 40u);
}

TEST_CASE("make_prompt_record computes metrics over the normalized text") {
  auto rec = make_prompt_record("s", Category::Exams, License::B, "안녕 hello");
  CHECK(rec.char_len == 8);  // code points, space included
  CHECK_THAT(rec.hangul_ratio, Catch::Matchers::WithinAbs(2.0 / 7.0, 1e-12));
  CHECK_FALSE(rec.redistributable);
  auto reda = make_prompt_record("s", Category::Exams, License::A, "x");
  CHECK(reda.redistributable);
}

TEST_CASE("license triage routes the three classes") {
  auto rec = make_prompt_record("s", Category::Daily, License::A, "글");
  CHECK(triage_license(rec) == Route::train_and_redistribute);
  rec.license = License::B;
  CHECK(triage_license(rec) == Route::train_only);
  rec.license = License::C;
  CHECK(triage_license(rec) == Route::exclude);
}

TEST_CASE("prompt record round-trip is byte identical") {
  testutil::TempDir tmp("roundtrip");
  std::vector<PromptRecord> records = {
      make_prompt_record("site-1", Category::Code, License::A,
                         "코드를 작성하세요 print(1)"),
      make_prompt_record("site-2", Category::Science, License::B,
                         "섭씨 100도는 화씨 몇 도인가요?"),
  };
  std::string first = tmp.file("a.jsonl");
  {
    JsonlWriter out(first);
    for (const auto& r : records) out.write(r);
  }
  auto loaded = read_jsonl<PromptRecord>(first);
  std::string second = tmp.file("b.jsonl");
  {
    JsonlWriter out(second);
    for (const auto& r : loaded) out.write(r);
  }
  CHECK(testutil::read_file(first) == testutil::read_file(second));
}

TEST_CASE("jsonl ingestion surfaces line errors without skipping") {
  testutil::TempDir tmp("ingest");
  std::string path = tmp.file("records.jsonl");
  nlohmann::json good = make_prompt_record("s", Category::Daily, License::A, "텍스트");
  testutil::write_file(path, good.dump() + "\n" + good.dump().substr(0, 20) +
                                 "\n" + good.dump() + "\n");
  size_t ok = 0;
  std::vector<LineError> errors;
  size_t lines = for_each_jsonl<PromptRecord>(
      path, [&](PromptRecord&&, size_t) { ok++; },
      [&](const LineError& e) { errors.push_back(e); });
  CHECK(lines == 3);
  CHECK(ok == 2);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].line == 2);
}

TEST_CASE("empty record file yields an empty stream") {
  testutil::TempDir tmp("empty");
  std::string path = tmp.file("empty.jsonl");
  testutil::write_file(path, "");
  size_t ok = 0, bad = 0;
  size_t lines = for_each_jsonl<PromptRecord>(
      path, [&](PromptRecord&&, size_t) { ok++; },
      [&](const LineError&) { bad++; });
  CHECK(lines == 0);
  CHECK(ok == 0);
  CHECK(bad == 0);
}

TEST_CASE("unreadable file is an error") {
  CHECK_THROWS_AS(read_jsonl<PromptRecord>("no/such/file.jsonl"), DataError);
}

TEST_CASE("exam item validation enforces the option invariants") {
  ExamItem item;
  item.id = "e1";
  item.question = "질문?";
  item.options = {"하나", "둘", "셋"};
  item.gold_index = 1;
  CHECK_NOTHROW(item.validate());

  ExamItem few = item;
  few.options = {"하나"};
  CHECK_THROWS_AS(few.validate(), DataError);

  ExamItem oob = item;
  oob.gold_index = 3;
  CHECK_THROWS_AS(oob.validate(), DataError);

  ExamItem dup = item;
  dup.options = {"하나", "  하나 ", "셋"};  // same after normalization
  CHECK_THROWS_AS(dup.validate(), DataError);
}

TEST_CASE("trace record omits absent segments in its wire form") {
  TraceRecord t;
  t.prompt_id = "p1";
  t.raw = "no think block here";
  nlohmann::json j = t;
  CHECK_FALSE(j.contains("think"));
  CHECK_FALSE(j.contains("answer"));
  auto back = j.get<TraceRecord>();
  CHECK_FALSE(back.think.has_value());
  CHECK(back.raw == t.raw);
}
