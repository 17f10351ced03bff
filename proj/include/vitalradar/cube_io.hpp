// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// On-disk formats shared with downstream consumers:
//   cube:  little-endian float32 I/Q pairs, frame-major, bin-minor, plus a
//          sidecar JSON header {frame_rate_hz, num_range_bins, wavelength_mm,
//          num_frames} stored next to it with a .json extension.
//   truth: CSV t_s,total_mm,breathing_mm,heart_mm,rbm_mm,breathing_bpm,
//          heart_bpm,rbm_flag

#include <filesystem>
#include <string>

#include "vitalradar/simulator.hpp"
#include "vitalradar/types.hpp"

namespace vitalradar {

inline constexpr const char* kTruthCsvHeader =
    "t_s,total_mm,breathing_mm,heart_mm,rbm_mm,breathing_bpm,heart_bpm,rbm_flag";

// Sidecar path for a cube file: same stem, .json extension.
std::filesystem::path cube_header_path(const std::filesystem::path& cube_path);

void write_cube(const RadarCube& cube, const std::filesystem::path& cube_path);
RadarCube read_cube(const std::filesystem::path& cube_path);

void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path);
// Reads back the columns written by write_truth_csv (fs inferred from t_s).
GroundTruth read_truth_csv(const std::filesystem::path& path);

// printf-style "%.*g" formatting used by every CSV writer.
std::string format_number(double v, int precision = 10);

}  // namespace vitalradar
