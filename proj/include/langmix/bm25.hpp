#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "langmix/errors.hpp"
#include "langmix/text_metrics.hpp"

namespace langmix {

// Okapi BM25 over an in-memory inverted index. Documents are tokenized with
// normalized_tokens (punctuation stripped, whitespace split). IDF uses the
// ln((N - df + 0.5)/(df + 0.5) + 1) form, so scores are never negative.
class Bm25Index {
 public:
  struct Scored {
    size_t doc;        // index into the build order
    std::string id;    // caller-supplied document id
    double score;
  };

  Bm25Index(double k1 = 1.5, double b = 0.75) : k1_(k1), b_(b) {}

  void add_document(std::string id, std::string_view text) {
    size_t doc = doc_ids_.size();
    doc_ids_.push_back(std::move(id));
    std::unordered_map<std::string, int> tf;
    auto tokens = normalized_tokens(text);
    for (auto& t : tokens) tf[std::move(t)]++;
    for (auto& [term, freq] : tf) {
      postings_[term].push_back({doc, freq});
    }
    doc_lens_.push_back(tokens.size());
    total_len_ += tokens.size();
  }

  void finalize() {
    if (doc_ids_.empty()) throw DataError("bm25: empty document pool");
    avg_doc_len_ = static_cast<double>(total_len_) /
                   static_cast<double>(doc_ids_.size());
    finalized_ = true;
  }

  size_t doc_count() const { return doc_ids_.size(); }
  double avg_doc_len() const { return avg_doc_len_; }
  double k1() const { return k1_; }
  double b() const { return b_; }
  const std::string& doc_id(size_t doc) const { return doc_ids_.at(doc); }
  size_t doc_len(size_t doc) const { return doc_lens_.at(doc); }

  double idf(const std::string& term) const {
    auto it = postings_.find(term);
    double df = it == postings_.end() ? 0.0 : double(it->second.size());
    double n = static_cast<double>(doc_count());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
  }

  // Accumulated Okapi score of every document against the query.
  std::vector<double> score_all(std::string_view query) const {
    require_finalized();
    std::vector<double> scores(doc_count(), 0.0);
    auto terms = normalized_tokens(query);
    for (const auto& term : terms) {
      auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      double w = idf(term);
      for (const auto& [doc, tf] : it->second) {
        double norm = k1_ * (1.0 - b_ + b_ * double(doc_lens_[doc]) / avg_doc_len_);
        scores[doc] += w * (double(tf) * (k1_ + 1.0)) / (double(tf) + norm);
      }
    }
    return scores;
  }

  // Top-k positive-score documents, score descending, build order on ties.
  std::vector<Scored> top_k(std::string_view query, size_t k) const {
    auto scores = score_all(query);
    std::vector<size_t> order;
    order.reserve(scores.size());
    for (size_t i = 0; i < scores.size(); i++) {
      if (scores[i] > 0.0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return scores[a] > scores[b];
    });
    if (order.size() > k) order.resize(k);
    std::vector<Scored> out;
    out.reserve(order.size());
    for (size_t doc : order) out.push_back({doc, doc_ids_[doc], scores[doc]});
    return out;
  }

 private:
  void require_finalized() const {
    if (!finalized_) throw DataError("bm25: index not finalized");
  }

  double k1_;
  double b_;
  bool finalized_ = false;
  std::vector<std::string> doc_ids_;
  std::vector<size_t> doc_lens_;
  uint64_t total_len_ = 0;
  double avg_doc_len_ = 0.0;
  std::unordered_map<std::string, std::vector<std::pair<size_t, int>>> postings_;
};

template <typename Range, typename IdFn, typename TextFn>
Bm25Index build_bm25_index(const Range& items, IdFn id_of, TextFn text_of,
                           double k1 = 1.5, double b = 0.75) {
  Bm25Index index(k1, b);
  for (const auto& item : items) {
    index.add_document(id_of(item), text_of(item));
  }
  index.finalize();
  return index;
}

}  // namespace langmix
