// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "vitalradar/errors.hpp"

namespace vitalradar {
namespace {

struct Accumulator {
  double sq = 0.0;
  std::size_t within = 0, scored = 0, coast = 0, rows = 0;

  StreamMetrics finish() const {
    StreamMetrics m;
    m.rows = rows;
    m.scored = scored;
    if (scored > 0) {
      m.rmse_bpm = std::sqrt(sq / static_cast<double>(scored));
      m.within_interval = static_cast<double>(within) / static_cast<double>(scored);
    }
    m.coast_fraction = rows > 0 ? static_cast<double>(coast) / static_cast<double>(rows) : 0.0;
    return m;
  }
};

std::string fmt(const std::optional<double>& v, const char* spec = "%.3f") {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, *v);
  return buf;
}

}  // namespace

EvalReport evaluate(const std::vector<EstimateRow>& rows, const GroundTruth& truth, const RunConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (rows.empty()) throw MisalignedInput("no estimate rows");
  if (truth.size() == 0 || !(truth.fs > 0.0)) throw MisalignedInput("empty ground truth");
  const EvaluationConfig& ev = config.evaluation;
  const std::size_t n = truth.size();

  auto truth_index = [&](double t) {
    // Rows are stamped at window ends, so the last one sits one sample past
    // the record and matches the final sample.
    const double pos = std::clamp(std::round(t * truth.fs), 0.0, static_cast<double>(n - 1));
    if (std::abs(pos / truth.fs - t) > ev.match_tolerance_s) {
      throw MisalignedInput("no ground-truth sample within " + std::to_string(ev.match_tolerance_s) + " s of t=" +
                            std::to_string(t));
    }
    return static_cast<std::size_t>(pos);
  };

  Accumulator breath, heart;
  const double t_first = rows.front().t_s;
  for (const EstimateRow& row : rows) {
    const bool settled = row.t_s - t_first >= ev.settle_s;
    auto score = [&](Accumulator& acc, bool coast, double window_s, double estimate,
                     const std::vector<double>& reference, double interval) {
      const double t_ref = ev.align_window_center ? row.t_s - 0.5 * window_s : row.t_s;
      const double ref = reference[truth_index(t_ref)];
      ++acc.rows;
      if (coast) {
        ++acc.coast;
        return;
      }
      if (!settled) return;
      const double err = estimate - ref;
      acc.sq += err * err;
      ++acc.scored;
      if (std::abs(err) <= interval) ++acc.within;
    };
    score(breath, row.coast_flag & kCoastBreathing, config.estimation.breath_window_s, row.breathing_bpm,
          truth.breathing_bpm, ev.breathing_interval_bpm);
    score(heart, row.coast_flag & kCoastHeart, config.estimation.heart_window_s, row.heart_bpm, truth.heart_bpm,
          ev.heart_interval_bpm);
  }

  EvalReport report;
  report.breathing = breath.finish();
  report.heart = heart.finish();
  report.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return report;
}

double jaccard(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw MisalignedInput("mask lengths differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::uint8_t> dilate(std::span<const std::uint8_t> mask, std::size_t width) {
  const std::size_t n = mask.size();
  const std::size_t half = width / 2;
  std::vector<std::uint8_t> out(n, 0);
  // Distance to the nearest set sample, swept in both directions.
  std::vector<std::size_t> dist(n, n + half + 1);
  std::size_t last = n + half + 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) last = 0;
    else if (last <= n + half) ++last;
    dist[i] = last;
  }
  last = n + half + 1;
  for (std::size_t i = n; i-- > 0;) {
    if (mask[i]) last = 0;
    else if (last <= n + half) ++last;
    dist[i] = std::min(dist[i], last);
    out[i] = dist[i] <= half ? 1 : 0;
  }
  return out;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  auto stream = [](const StreamMetrics& m) {
    nlohmann::ordered_json j;
    j["rmse_bpm"] = m.rmse_bpm ? nlohmann::ordered_json(*m.rmse_bpm) : nlohmann::ordered_json(nullptr);
    j["within_interval"] = m.within_interval;
    j["coast_fraction"] = m.coast_fraction;
    j["rows"] = m.rows;
    j["scored"] = m.scored;
    return j;
  };
  nlohmann::ordered_json j;
  j["breathing"] = stream(r.breathing);
  j["heart"] = stream(r.heart);
  j["rbm_jaccard"] = r.rbm_jaccard ? nlohmann::ordered_json(*r.rbm_jaccard) : nlohmann::ordered_json(nullptr);
  j["runtime"] = {{"evaluate_ms", r.runtime_ms}};
  return j;
}

std::string format_table(const EvalReport& r) {
  std::string out = "stream     rmse_bpm  within  coast   scored/rows\n";
  auto line = [&](const char* name, const StreamMetrics& m) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s %-9s %-7.3f %-7.3f %zu/%zu\n", name, fmt(m.rmse_bpm).c_str(),
                  m.within_interval, m.coast_fraction, m.scored, m.rows);
    out += buf;
  };
  line("breathing", r.breathing);
  line("heart", r.heart);
  out += "rbm_jaccard " + fmt(r.rbm_jaccard) + "\n";
  return out;
}

}  // namespace vitalradar
