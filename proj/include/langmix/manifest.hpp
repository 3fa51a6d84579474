#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "langmix/errors.hpp"
#include "langmix/hash.hpp"

namespace langmix {

// Every pipeline stage writes `<stage>.manifest`: one JSON header line with
// the stage identity and digests, then one line per decided record id. A
// stage re-run with matching digests resumes by skipping completed ids; a
// digest change invalidates the manifest and forces a full reprocess.

struct ManifestCounts {
  size_t read = 0;
  size_t kept = 0;
  std::map<std::string, size_t> dropped_by_reason;

  size_t dropped_total() const {
    size_t n = 0;
    for (const auto& [_, c] : dropped_by_reason) n += c;
    return n;
  }
  bool balanced() const { return read == kept + dropped_total(); }
};

struct Manifest {
  std::string stage;
  std::string input_digest;
  std::string config_digest;
  std::vector<std::string> overrides;
  ManifestCounts counts;
  std::unordered_set<std::string> completed_ids;
  // Stage-specific extra outputs (e.g. augmentation variants emitted); these
  // sit outside the read = kept + dropped balance.
  std::map<std::string, size_t> derived;
};

inline std::string manifest_path(const std::string& dir,
                                 const std::string& stage) {
  return (std::filesystem::path(dir) / (stage + ".manifest")).string();
}

inline std::optional<Manifest> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  Manifest m;
  try {
    auto header = nlohmann::json::parse(line);
    header.at("stage").get_to(m.stage);
    header.at("input_digest").get_to(m.input_digest);
    header.at("config_digest").get_to(m.config_digest);
    if (header.contains("overrides")) {
      m.overrides = header.at("overrides").get<std::vector<std::string>>();
    }
    size_t line_no = 1;
    while (std::getline(in, line)) {
      line_no++;
      if (line.empty()) continue;
      auto entry = nlohmann::json::parse(line);
      std::string action = entry.at("action").get<std::string>();
      if (action == "kept") {
        m.counts.read++;
        m.counts.kept++;
        m.completed_ids.insert(entry.at("id").get<std::string>());
      } else if (action == "dropped") {
        m.counts.read++;
        m.counts.dropped_by_reason[entry.at("reason").get<std::string>()]++;
        if (entry.contains("id")) {
          m.completed_ids.insert(entry.at("id").get<std::string>());
        }
      } else if (action == "derived") {
        m.derived[entry.at("kind").get<std::string>()]++;
      } else {
        throw DataError("unknown manifest action: " + action);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt manifest " + path + ": " + e.what());
  }
  return m;
}

// Append-only manifest writer holding an exclusive lock for its lifetime.
// Each entry is flushed as a single line so a crash never leaves a torn
// record and concurrent stages on the same manifest are rejected up front.
class ManifestWriter {
 public:
  ManifestWriter(std::string path, const std::string& stage,
                 const std::string& input_digest,
                 const std::string& config_digest,
                 const std::vector<std::string>& overrides, bool resume)
      : path_(std::move(path)), lock_path_(path_ + ".lock") {
    acquire_lock();
    bool fresh = !resume || !std::filesystem::exists(path_);
    out_.open(path_, fresh ? std::ios::binary | std::ios::trunc
                           : std::ios::binary | std::ios::app);
    if (!out_) {
      release_lock();
      throw DataError("cannot open manifest: " + path_);
    }
    if (fresh) {
      nlohmann::json header{{"stage", stage},
                            {"input_digest", input_digest},
                            {"config_digest", config_digest},
                            {"overrides", overrides}};
      out_ << header.dump() << '\n';
      out_.flush();
    }
  }

  ~ManifestWriter() {
    out_.close();
    release_lock();
  }

  ManifestWriter(const ManifestWriter&) = delete;
  ManifestWriter& operator=(const ManifestWriter&) = delete;

  void record_kept(const std::string& id) {
    nlohmann::json j{{"id", id}, {"action", "kept"}};
    append(j);
  }

  void record_dropped(const std::string& id, const std::string& reason,
                      const std::string& detail = "") {
    nlohmann::json j{{"id", id}, {"action", "dropped"}, {"reason", reason}};
    if (!detail.empty()) j["detail"] = detail;
    append(j);
  }

  void record_derived(const std::string& id, const std::string& kind) {
    nlohmann::json j{{"id", id}, {"action", "derived"}, {"kind", kind}};
    append(j);
  }

 private:
  void append(const nlohmann::json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw DataError("manifest write failed: " + path_);
  }

  void acquire_lock() {
    int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw DataError("manifest locked by another writer: " + lock_path_ +
                      " (remove the lock file if the owner is gone)");
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
    locked_ = true;
  }

  void release_lock() {
    if (locked_) {
      ::unlink(lock_path_.c_str());
      locked_ = false;
    }
  }

  std::string path_;
  std::string lock_path_;
  std::ofstream out_;
  bool locked_ = false;
};

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for digest: " + path);
  StreamDigest d;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    d.update(buf, static_cast<size_t>(in.gcount()));
    if (!in) break;
  }
  return d.hex();
}

inline std::string combined_digest(const std::vector<std::string>& paths) {
  StreamDigest d;
  for (const auto& p : paths) {
    d.update(p);
    d.update("\x1f");
    d.update(file_digest(p));
  }
  return d.hex();
}

}  // namespace langmix
