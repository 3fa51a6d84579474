#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "langmix/errors.hpp"

namespace langmix {

struct LineError {
  size_t line = 0;
  std::string message;
};

// Streams newline-delimited records. Malformed lines go to on_error with
// their 1-based line number; valid records go to on_record in file order.
// Returns the number of lines read.
template <typename T>
size_t for_each_jsonl(const std::string& path,
                      const std::function<void(T&&, size_t)>& on_record,
                      const std::function<void(const LineError&)>& on_error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open record file: " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      on_error({line_no, "empty line"});
      continue;
    }
    try {
      T rec = nlohmann::json::parse(line).get<T>();
      on_record(std::move(rec), line_no);
    } catch (const std::exception& e) {
      on_error({line_no, e.what()});
    }
  }
  return line_no;
}

// Strict load: any malformed line aborts with its line number.
template <typename T>
std::vector<T> read_jsonl(const std::string& path) {
  std::vector<T> out;
  for_each_jsonl<T>(
      path, [&](T&& rec, size_t) { out.push_back(std::move(rec)); },
      [&](const LineError& err) {
        throw DataError(path + ":" + std::to_string(err.line) + ": " +
                        err.message);
      });
  return out;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path, bool append = false)
      : path_(path),
        out_(path, append ? std::ios::binary | std::ios::app
                          : std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open output file: " + path);
  }

  template <typename T>
  void write(const T& rec) {
    nlohmann::json j = rec;
    write_line(j.dump());
  }

  void write_line(const std::string& line) {
    out_ << line << '\n';
    if (!out_) throw DataError("write failed: " + path_);
    written_++;
  }

  void flush() { out_.flush(); }
  size_t written() const { return written_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  size_t written_ = 0;
};

}  // namespace langmix
