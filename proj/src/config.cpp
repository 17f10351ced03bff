// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "vitalradar/errors.hpp"

namespace vitalradar {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Walks one JSON object, recording the keys consumed so that leftovers can
// be reported as unknown.
class Reader {
 public:
  Reader(const json& node, std::string path, const std::string& text)
      : node_(node), path_(std::move(path)), text_(text) {
    if (!node_.is_object()) fail("", "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    out = convert<T>(*it, key);
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    if (it->is_null()) {
      out.reset();
    } else {
      out = convert<T>(*it, key);
    }
  }

  void get_band(const char* key, FrequencyBand& band) {
    std::vector<double> v{band.lo_hz, band.hi_hz};
    get(key, v);
    if (v.size() != 2 || !(v[0] >= 0.0) || !(v[1] > v[0])) fail(key, "expected [lo_hz, hi_hz] with 0 <= lo < hi");
    band = {v[0], v[1]};
  }

  template <typename F>
  void child(const char* key, F&& f) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    Reader r(*it, qualify(key), text_);
    f(r);
    r.finish();
  }

  template <typename F>
  void each(const char* key, F&& f) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_array()) fail(key, "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      Reader r((*it)[i], qualify(key) + "[" + std::to_string(i) + "]", text_);
      f(r, i);
      r.finish();
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    std::string where = qualify(key);
    if (!key.empty()) {
      const std::size_t pos = text_.find("\"" + key + "\"");
      if (pos != std::string::npos) where += " (line " + std::to_string(line_of_offset(text_, pos)) + ")";
    }
    throw SchemaError(qualify(key), where + ": " + message);
  }

  std::string qualify(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  template <typename T>
  T convert(const json& v, const char* key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(key, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(key, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
        fail(key, "expected a non-negative integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(key, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(key, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) fail(key, "expected an array of numbers");
      T out;
      for (const json& e : v) {
        if (!e.is_number()) fail(key, "expected an array of numbers");
        out.push_back(e.get<double>());
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  const json& node_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> seen_;
};

template <typename E>
E parse_enum(Reader& r, const char* key, const std::vector<std::pair<const char*, E>>& names, E current) {
  std::string s;
  for (const auto& [name, value] : names) {
    if (value == current) s = name;
  }
  r.get(key, s);
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  r.fail(key, "expected one of: " + allowed);
}

const std::vector<std::pair<const char*, BreathingPattern>> kPatterns{
    {"eupnea", BreathingPattern::eupnea}, {"apnea", BreathingPattern::apnea}, {"irregular", BreathingPattern::irregular}};
const std::vector<std::pair<const char*, RbmKind>> kRbmKinds{{"step", RbmKind::step},
                                                             {"ramp", RbmKind::ramp},
                                                             {"band_limited_noise", RbmKind::band_limited_noise},
                                                             {"sinusoid", RbmKind::sinusoid}};
const std::vector<std::pair<const char*, WindowKind>> kWindows{{"hann", WindowKind::hann}, {"hamming", WindowKind::hamming}};
const std::vector<std::pair<const char*, UnwrapMethod>> kMethods{{"robust", UnwrapMethod::robust},
                                                                 {"conventional", UnwrapMethod::conventional}};

template <typename E>
const char* enum_name(const std::vector<std::pair<const char*, E>>& names, E v) {
  for (const auto& [name, value] : names) {
    if (value == v) return name;
  }
  return "";
}

void read_schedule(Reader& r, std::vector<RateKnot>& schedule) {
  if (!r.raw("rate_schedule")) return;
  schedule.clear();
  r.each("rate_schedule", [&](Reader& k, std::size_t) {
    RateKnot knot;
    k.get("t_s", knot.t_s);
    k.get("bpm", knot.bpm);
    schedule.push_back(knot);
  });
}

void read_scenario(Reader& r, ScenarioConfig& s) {
  r.get("carrier_wavelength_mm", s.carrier_wavelength_mm);
  r.get("frame_rate_hz", s.frame_rate_hz);
  r.get("duration_s", s.duration_s);
  r.get("subject_range_bin", s.subject_range_bin);
  r.get("num_range_bins", s.num_range_bins);
  r.child("breathing", [&](Reader& b) {
    BreathingParams& p = s.breathing;
    b.get("rate_bpm", p.rate_bpm);
    b.get("amplitude_mm", p.amplitude_mm);
    b.get("harmonic_coeffs", p.harmonic_coeffs);
    p.pattern = parse_enum(b, "pattern", kPatterns, p.pattern);
    if (const json* segs = b.raw("apnea_segments")) {
      if (!segs->is_array()) b.fail("apnea_segments", "expected an array of [start_s, end_s] pairs");
      p.apnea_segments.clear();
      for (const json& seg : *segs) {
        if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number() || !seg[1].is_number()) {
          b.fail("apnea_segments", "expected an array of [start_s, end_s] pairs");
        }
        p.apnea_segments.emplace_back(seg[0].get<double>(), seg[1].get<double>());
      }
    }
    b.get("jitter_pct", p.jitter_pct);
    read_schedule(b, p.rate_schedule);
  });
  r.child("heartbeat", [&](Reader& h) {
    HeartbeatParams& p = s.heartbeat;
    h.get("rate_bpm", p.rate_bpm);
    h.get("amplitude_mm", p.amplitude_mm);
    h.get("harmonic_coeffs", p.harmonic_coeffs);
    read_schedule(h, p.rate_schedule);
  });
  if (r.raw("rbm_events")) {
    s.rbm_events.clear();
    r.each("rbm_events", [&](Reader& e, std::size_t) {
      RbmEvent ev;
      e.get("start_s", ev.start_s);
      e.get("duration_s", ev.duration_s);
      e.get("amplitude_mm", ev.amplitude_mm);
      ev.kind = parse_enum(e, "kind", kRbmKinds, ev.kind);
      e.get("freq_hz", ev.freq_hz);
      s.rbm_events.push_back(ev);
    });
  }
  r.get_optional("snr_db", s.snr_db);
  r.get("clutter_amplitude", s.clutter_amplitude);
  r.get("rng_seed", s.rng_seed);
}

void read_config(Reader& root, RunConfig& c) {
  root.child("scenario", [&](Reader& r) { read_scenario(r, c.scenario); });
  root.child("detection", [&](Reader& r) {
    r.get("threshold", c.detection.threshold);
    r.get_optional("range_bin", c.detection.range_bin);
  });
  root.child("demodulation", [&](Reader& r) {
    c.demodulation.method = parse_enum(r, "method", kMethods, c.demodulation.method);
    r.get("order", c.demodulation.unwrap.order);
    r.get("bound_rad", c.demodulation.unwrap.bound_rad);
    r.get("median_prefilter", c.demodulation.unwrap.median_prefilter);
    r.get("anchor_s", c.demodulation.unwrap.anchor_s);
  });
  root.child("rbm_filter", [&](Reader& r) {
    RbmFilterParams& p = c.rbm_filter;
    r.get("enabled", c.rbm_filter_enabled);
    r.get("window_s", p.window_s);
    r.get("hop_s", p.hop_s);
    p.window = parse_enum(r, "window", kWindows, p.window);
    r.get_band("breath_band_hz", p.breath_band);
    r.get_band("heart_band_hz", p.heart_band);
    r.get("rho", p.rho);
    r.get("kappa", p.kappa);
    r.get("median_span_s", p.median_span_s);
    r.get("motion_factor", p.motion_factor);
    r.get("level_span_s", p.level_span_s);
    r.get("max_gap_s", p.max_gap_s);
  });
  root.child("estimation", [&](Reader& r) {
    TrackParams& p = c.estimation;
    r.get("breath_window_s", p.breath_window_s);
    r.get("heart_window_s", p.heart_window_s);
    r.get("hop_s", p.hop_s);
    r.get("max_suspect_fraction", p.max_suspect_fraction);
    r.get("peak_floor_db", p.peak_floor_db);
    r.get("max_peaks", p.max_peaks);
    r.get("harmonic_search_hi_hz", p.harmonic_search_hi_hz);
    r.child("harmonics", [&](Reader& h) {
      h.get("max_divisor", p.harmonics.max_divisor);
      h.get("breath_harmonics", p.harmonics.breath_harmonics);
      h.get("guard_hz", p.harmonics.guard_hz);
    });
    r.child("kalman", [&](Reader& k) {
      k.get("q", p.kalman.q);
      k.get("r0", p.kalman.r0);
      k.get("gate_sigma", p.kalman.gate_sigma);
      k.get("max_misses", p.kalman.max_misses);
      k.get("reinit_variance", p.kalman.reinit_variance);
      k.get("initial_bpm", p.kalman.initial_bpm);
      k.get("initial_variance", p.kalman.initial_variance);
    });
  });
  root.child("evaluation", [&](Reader& r) {
    r.get("breathing_interval_bpm", c.evaluation.breathing_interval_bpm);
    r.get("heart_interval_bpm", c.evaluation.heart_interval_bpm);
    r.get("settle_s", c.evaluation.settle_s);
    r.get("match_tolerance_s", c.evaluation.match_tolerance_s);
    r.get("align_window_center", c.evaluation.align_window_center);
  });
  c.estimation.breath_band = c.rbm_filter.breath_band;
  c.estimation.heart_band = c.rbm_filter.heart_band;
}

ojson schedule_json(const std::vector<RateKnot>& s) {
  ojson a = ojson::array();
  for (const RateKnot& k : s) a.push_back({{"t_s", k.t_s}, {"bpm", k.bpm}});
  return a;
}

}  // namespace

void RunConfig::validate() const {
  try {
    scenario.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError("scenario", e.what());
  }
  auto require = [](bool ok, const char* key, const char* msg) {
    if (!ok) throw SchemaError(key, msg);
  };
  const double nyquist = 0.5 * scenario.frame_rate_hz;
  require(detection.threshold >= 1.0, "detection.threshold", "must be >= 1");
  require(!detection.range_bin || *detection.range_bin < scenario.num_range_bins, "detection.range_bin",
          "out of range");
  require(demodulation.unwrap.order >= 1 && demodulation.unwrap.order <= 3, "demodulation.order", "must be 1, 2 or 3");
  require(demodulation.unwrap.bound_rad > 0.0 && demodulation.unwrap.bound_rad <= kPi, "demodulation.bound_rad",
          "must lie in (0, pi]");
  require(demodulation.unwrap.anchor_s >= 0.0, "demodulation.anchor_s", "must be >= 0");
  require(rbm_filter.window_s > 0.0 && rbm_filter.hop_s > 0.0 && rbm_filter.hop_s <= rbm_filter.window_s,
          "rbm_filter.hop_s", "need 0 < hop_s <= window_s");
  require(rbm_filter.breath_band.hi_hz < nyquist && rbm_filter.heart_band.hi_hz < nyquist, "rbm_filter",
          "bands must lie below Nyquist");
  require(rbm_filter.rho > 0.0 && rbm_filter.rho <= 1.0, "rbm_filter.rho", "must lie in (0, 1]");
  require(rbm_filter.kappa > 1.0, "rbm_filter.kappa", "must be > 1");
  require(rbm_filter.median_span_s > 0.0, "rbm_filter.median_span_s", "must be > 0");
  require(rbm_filter.motion_factor > 0.0, "rbm_filter.motion_factor", "must be > 0");
  require(rbm_filter.level_span_s > 0.0, "rbm_filter.level_span_s", "must be > 0");
  require(rbm_filter.max_gap_s >= 0.0, "rbm_filter.max_gap_s", "must be >= 0");
  require(estimation.breath_window_s > 0.0 && estimation.heart_window_s > 0.0 && estimation.hop_s > 0.0,
          "estimation", "windows and hop must be > 0");
  require(estimation.max_suspect_fraction >= 0.0 && estimation.max_suspect_fraction <= 1.0,
          "estimation.max_suspect_fraction", "must lie in [0, 1]");
  require(estimation.max_peaks >= 1, "estimation.max_peaks", "must be >= 1");
  require(estimation.harmonics.max_divisor >= 1, "estimation.harmonics.max_divisor", "must be >= 1");
  require(estimation.harmonics.breath_harmonics >= 0, "estimation.harmonics.breath_harmonics", "must be >= 0");
  require(estimation.harmonics.guard_hz >= 0.0, "estimation.harmonics.guard_hz", "must be >= 0");
  require(estimation.kalman.q > 0.0, "estimation.kalman.q", "must be > 0");
  require(estimation.kalman.r0 > 0.0, "estimation.kalman.r0", "must be > 0");
  require(estimation.kalman.gate_sigma > 0.0, "estimation.kalman.gate_sigma", "must be > 0");
  require(estimation.kalman.max_misses >= 1, "estimation.kalman.max_misses", "must be >= 1");
  require(estimation.kalman.reinit_variance > 0.0 && estimation.kalman.initial_variance > 0.0, "estimation.kalman",
          "variances must be > 0");
  require(evaluation.breathing_interval_bpm > 0.0 && evaluation.heart_interval_bpm > 0.0, "evaluation",
          "error intervals must be > 0");
  require(evaluation.settle_s >= 0.0, "evaluation.settle_s", "must be >= 0");
  require(evaluation.match_tolerance_s > 0.0, "evaluation.match_tolerance_s", "must be > 0");
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", source + ": line " + std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                              ": malformed JSON (" + e.what() + ")");
  }
  RunConfig config;
  try {
    Reader root(doc, "", text);
    read_config(root, config);
    root.finish();
  } catch (const SchemaError& e) {
    throw SchemaError(e.key, source + ": " + e.what());
  } catch (const json::exception& e) {
    throw SchemaError("", source + ": " + e.what());
  }
  try {
    config.validate();
  } catch (const SchemaError& e) {
    throw SchemaError(e.key, source + ": " + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

ojson to_json(const RunConfig& c) {
  const ScenarioConfig& s = c.scenario;
  ojson apnea = ojson::array();
  for (const auto& [a, b] : s.breathing.apnea_segments) apnea.push_back({a, b});
  ojson events = ojson::array();
  for (const RbmEvent& e : s.rbm_events) {
    events.push_back({{"start_s", e.start_s},
                      {"duration_s", e.duration_s},
                      {"amplitude_mm", e.amplitude_mm},
                      {"kind", enum_name(kRbmKinds, e.kind)},
                      {"freq_hz", e.freq_hz}});
  }
  ojson j;
  j["scenario"] = {
      {"carrier_wavelength_mm", s.carrier_wavelength_mm},
      {"frame_rate_hz", s.frame_rate_hz},
      {"duration_s", s.duration_s},
      {"subject_range_bin", s.subject_range_bin},
      {"num_range_bins", s.num_range_bins},
      {"breathing",
       {{"rate_bpm", s.breathing.rate_bpm},
        {"amplitude_mm", s.breathing.amplitude_mm},
        {"harmonic_coeffs", s.breathing.harmonic_coeffs},
        {"pattern", enum_name(kPatterns, s.breathing.pattern)},
        {"apnea_segments", apnea},
        {"jitter_pct", s.breathing.jitter_pct},
        {"rate_schedule", schedule_json(s.breathing.rate_schedule)}}},
      {"heartbeat",
       {{"rate_bpm", s.heartbeat.rate_bpm},
        {"amplitude_mm", s.heartbeat.amplitude_mm},
        {"harmonic_coeffs", s.heartbeat.harmonic_coeffs},
        {"rate_schedule", schedule_json(s.heartbeat.rate_schedule)}}},
      {"rbm_events", events},
      {"snr_db", s.snr_db ? ojson(*s.snr_db) : ojson(nullptr)},
      {"clutter_amplitude", s.clutter_amplitude},
      {"rng_seed", s.rng_seed},
  };
  j["detection"] = {{"threshold", c.detection.threshold},
                    {"range_bin", c.detection.range_bin ? ojson(*c.detection.range_bin) : ojson(nullptr)}};
  j["demodulation"] = {{"method", enum_name(kMethods, c.demodulation.method)},
                       {"order", c.demodulation.unwrap.order},
                       {"bound_rad", c.demodulation.unwrap.bound_rad},
                       {"median_prefilter", c.demodulation.unwrap.median_prefilter},
                       {"anchor_s", c.demodulation.unwrap.anchor_s}};
  const RbmFilterParams& f = c.rbm_filter;
  j["rbm_filter"] = {{"enabled", c.rbm_filter_enabled},
                     {"window_s", f.window_s},
                     {"hop_s", f.hop_s},
                     {"window", enum_name(kWindows, f.window)},
                     {"breath_band_hz", {f.breath_band.lo_hz, f.breath_band.hi_hz}},
                     {"heart_band_hz", {f.heart_band.lo_hz, f.heart_band.hi_hz}},
                     {"rho", f.rho},
                     {"kappa", f.kappa},
                     {"median_span_s", f.median_span_s},
                     {"motion_factor", f.motion_factor},
                     {"level_span_s", f.level_span_s},
                     {"max_gap_s", f.max_gap_s}};
  const TrackParams& t = c.estimation;
  j["estimation"] = {{"breath_window_s", t.breath_window_s},
                     {"heart_window_s", t.heart_window_s},
                     {"hop_s", t.hop_s},
                     {"max_suspect_fraction", t.max_suspect_fraction},
                     {"peak_floor_db", t.peak_floor_db},
                     {"max_peaks", t.max_peaks},
                     {"harmonic_search_hi_hz", t.harmonic_search_hi_hz},
                     {"harmonics",
                      {{"max_divisor", t.harmonics.max_divisor},
                       {"breath_harmonics", t.harmonics.breath_harmonics},
                       {"guard_hz", t.harmonics.guard_hz}}},
                     {"kalman",
                      {{"q", t.kalman.q},
                       {"r0", t.kalman.r0},
                       {"gate_sigma", t.kalman.gate_sigma},
                       {"max_misses", t.kalman.max_misses},
                       {"reinit_variance", t.kalman.reinit_variance},
                       {"initial_bpm", t.kalman.initial_bpm},
                       {"initial_variance", t.kalman.initial_variance}}}};
  j["evaluation"] = {{"breathing_interval_bpm", c.evaluation.breathing_interval_bpm},
                     {"heart_interval_bpm", c.evaluation.heart_interval_bpm},
                     {"settle_s", c.evaluation.settle_s},
                     {"match_tolerance_s", c.evaluation.match_tolerance_s},
                     {"align_window_center", c.evaluation.align_window_center}};
  return j;
}

}  // namespace vitalradar
