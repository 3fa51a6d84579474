#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "langmix/errors.hpp"

namespace langmix {

// Loss-spike localization over training logs. A spike is a step whose loss
// exceeds a robust rolling threshold and whose successor does too (the
// non-recovery condition); the offending batch's record ids are surfaced for
// manual inspection.

struct LossSeries {
  std::vector<std::pair<int64_t, double>> steps;  // strictly increasing indices
  std::optional<std::map<int64_t, std::vector<std::string>>> batch_map;
};

// `step<TAB>loss` per line.
inline LossSeries parse_loss_log(std::istream& in, const std::string& name) {
  LossSeries series;
  std::string line;
  size_t line_no = 0;
  int64_t prev_step = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": expected 'step<TAB>loss'");
    }
    int64_t step = 0;
    double loss = 0.0;
    try {
      step = std::stoll(line.substr(0, tab));
      loss = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(name + ":" + std::to_string(line_no) + ": unparsable line");
    }
    if (!std::isfinite(loss)) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": non-finite loss value");
    }
    if (!series.steps.empty() && step <= prev_step) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": step indices must be strictly increasing");
    }
    prev_step = step;
    series.steps.push_back({step, loss});
  }
  return series;
}

inline LossSeries load_loss_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open loss log: " + path);
  return parse_loss_log(in, path);
}

// `step<TAB>id,id,...` per line.
inline std::map<int64_t, std::vector<std::string>> load_batch_map(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open batch map: " + path);
  std::map<int64_t, std::vector<std::string>> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'step<TAB>ids'");
    }
    int64_t step = 0;
    try {
      step = std::stoll(line.substr(0, tab));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad step index");
    }
    std::vector<std::string> ids;
    std::stringstream ss(line.substr(tab + 1));
    std::string id;
    while (std::getline(ss, id, ',')) {
      if (!id.empty()) ids.push_back(id);
    }
    out[step] = std::move(ids);
  }
  return out;
}

struct SpikeFinding {
  int64_t step = 0;                 // first flagged step
  std::vector<int64_t> steps;       // all merged contiguous flagged steps
  double baseline_loss = 0.0;
  double spike_loss = 0.0;
  bool recovered = false;           // always false for reported findings
  std::vector<std::string> suspect_ids;
};

inline void to_json(nlohmann::json& j, const SpikeFinding& f) {
  j = nlohmann::json{{"step", f.step},
                     {"steps", f.steps},
                     {"baseline_loss", f.baseline_loss},
                     {"spike_loss", f.spike_loss},
                     {"recovered", f.recovered},
                     {"suspect_ids", f.suspect_ids}};
}

namespace spike_detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace spike_detail

// Rolling median/MAD rule: at position t the baseline is the median of the
// prior `window` losses and the scale their median absolute deviation; t is
// flagged when both loss[t] and loss[t+1] exceed baseline + k * scale.
// Contiguous flagged positions merge into one finding. Median and MAD both
// scale linearly, so the flagged set is invariant under loss rescaling.
inline std::vector<SpikeFinding> detect_spikes(const LossSeries& series,
                                               size_t window = 50,
                                               double k = 4.0) {
  const auto& pts = series.steps;
  if (pts.size() <= window) {
    throw DataError("loss series too short: " + std::to_string(pts.size()) +
                    " points for window " + std::to_string(window));
  }
  for (const auto& [step, loss] : pts) {
    if (!std::isfinite(loss)) throw DataError("non-finite loss in series");
  }

  std::vector<char> flagged(pts.size(), 0);
  std::vector<double> baselines(pts.size(), 0.0);
  std::vector<double> buf(window);
  for (size_t t = window; t + 1 < pts.size(); t++) {
    for (size_t i = 0; i < window; i++) buf[i] = pts[t - window + i].second;
    double baseline = spike_detail::median(buf);
    for (size_t i = 0; i < window; i++) buf[i] = std::fabs(buf[i] - baseline);
    double scale = spike_detail::median(buf);
    double threshold = baseline + k * scale;
    baselines[t] = baseline;
    if (pts[t].second > threshold && pts[t + 1].second > threshold) {
      flagged[t] = 1;
    }
  }

  std::vector<SpikeFinding> findings;
  size_t t = 0;
  while (t < pts.size()) {
    if (!flagged[t]) {
      t++;
      continue;
    }
    SpikeFinding f;
    f.step = pts[t].first;
    f.baseline_loss = baselines[t];
    f.spike_loss = pts[t].second;
    while (t < pts.size() && flagged[t]) {
      f.steps.push_back(pts[t].first);
      t++;
    }
    findings.push_back(std::move(f));
  }
  return findings;
}

// Union of the batches behind every merged step of the finding, first-seen
// order, duplicates removed.
inline std::vector<std::string> map_to_records(
    const SpikeFinding& finding,
    const std::optional<std::map<int64_t, std::vector<std::string>>>& batch_map) {
  if (!batch_map) {
    throw DataError("no batch map supplied; cannot map spike at step " +
                    std::to_string(finding.step) + " to records");
  }
  std::vector<std::string> ids;
  for (int64_t step : finding.steps) {
    auto it = batch_map->find(step);
    if (it == batch_map->end()) {
      throw DataError("step " + std::to_string(step) + " absent from batch map");
    }
    for (const auto& id : it->second) {
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
  }
  return ids;
}

}  // namespace langmix
