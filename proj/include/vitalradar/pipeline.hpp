// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Cube in, rate estimates out: clutter/bin selection -> arc centring ->
// arctangent demodulation -> unwrapping -> displacement -> RBM mitigation
// -> tracking.

#include <filesystem>
#include <string>
#include <vector>

#include "vitalradar/config.hpp"
#include "vitalradar/demodulation.hpp"
#include "vitalradar/estimation.hpp"
#include "vitalradar/preprocessing.hpp"
#include "vitalradar/rbm_filter.hpp"

namespace vitalradar {

inline constexpr const char* kEstimatesCsvHeader =
    "t_s,breathing_bpm,breathing_conf,heart_bpm,heart_conf,heart_source,coast_flag";

// coast_flag bits.
inline constexpr int kCoastBreathing = 1;
inline constexpr int kCoastHeart = 2;

struct PipelineResult {
  SubjectDetection detection;
  ArcCentering centred;
  PhaseSeries wrapped;
  RecoveryReport recovery;
  PhaseSeries unwrapped;
  DisplacementSignal displacement;
  MitigationResult mitigation;
  TrackResult tracks;
};

// Recovered displacement only (no mitigation or tracking).
PipelineResult recover_displacement(const RadarCube& cube, const RunConfig& config);

PipelineResult run_pipeline(const RadarCube& cube, const RunConfig& config);

struct EstimateRow {
  double t_s = 0.0;
  double breathing_bpm = 0.0;
  double breathing_conf = 0.0;
  double heart_bpm = 0.0;
  double heart_conf = 0.0;
  std::string heart_source;
  int coast_flag = 0;
};

std::vector<EstimateRow> estimate_rows(const TrackResult& tracks);
std::string format_estimates_csv(const std::vector<EstimateRow>& rows);
void write_estimates_csv(const std::vector<EstimateRow>& rows, const std::filesystem::path& path);
// Throws IoError, or MisalignedInput for a malformed table.
std::vector<EstimateRow> read_estimates_csv(const std::filesystem::path& path);

// phase.csv (t_s,wrapped_rad,unwrapped_rad,suspect), displacement.csv
// (t_s,displacement_mm,filtered_mm,quality,flagged) and spectrogram.csv.
void write_debug_dumps(const PipelineResult& result, const RunConfig& config, const std::filesystem::path& dir);

// Reads the per-sample `flagged` column of displacement.csv.
std::vector<std::uint8_t> read_flagged_mask(const std::filesystem::path& path);

}  // namespace vitalradar
