// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Run configuration: the simulated scene plus every pipeline parameter,
// stored as JSON with fixed key names. Loading rejects unknown keys and
// wrongly typed values; keys that are absent take their defaults, so the
// loaded struct is always complete.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "vitalradar/demodulation.hpp"
#include "vitalradar/estimation.hpp"
#include "vitalradar/preprocessing.hpp"
#include "vitalradar/rbm_filter.hpp"
#include "vitalradar/simulator.hpp"

namespace vitalradar {

struct DetectionConfig {
  double threshold = kDefaultDetectionThreshold;
  // Skip detection and use this bin.
  std::optional<std::size_t> range_bin;
};

enum class UnwrapMethod { robust, conventional };

struct DemodulationConfig {
  UnwrapMethod method = UnwrapMethod::robust;
  UnwrapOptions unwrap;
};

struct EvaluationConfig {
  double breathing_interval_bpm = 1.0;
  double heart_interval_bpm = 3.0;
  double settle_s = 10.0;
  double match_tolerance_s = 0.5;
  // Compare each estimate with the truth at the centre of its window
  // rather than at the row time.
  bool align_window_center = true;
};

struct RunConfig {
  ScenarioConfig scenario;
  DetectionConfig detection;
  DemodulationConfig demodulation;
  bool rbm_filter_enabled = true;
  RbmFilterParams rbm_filter;
  // Bands are taken from rbm_filter on load.
  TrackParams estimation;
  EvaluationConfig evaluation;

  void validate() const;
};

// `source` names the document in diagnostics. Throws SchemaError.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Every field, defaults included.
nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace vitalradar
