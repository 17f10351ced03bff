// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitalradar/config.hpp"
#include "vitalradar/pipeline.hpp"
#include "vitalradar/simulator.hpp"

namespace vitalradar {

struct StreamMetrics {
  std::optional<double> rmse_bpm;  // none when no row is scored
  double within_interval = 0.0;
  double coast_fraction = 0.0;
  std::size_t rows = 0;
  std::size_t scored = 0;
};

struct EvalReport {
  StreamMetrics breathing;
  StreamMetrics heart;
  std::optional<double> rbm_jaccard;
  double runtime_ms = 0.0;
};

// Coast rows and rows whose window ends before settle_s are not scored.
// Every row must find a truth sample within match_tolerance_s; otherwise
// (or when either input is empty) MisalignedInput is thrown.
EvalReport evaluate(const std::vector<EstimateRow>& rows, const GroundTruth& truth, const RunConfig& config);

// Jaccard index of two boolean masks; 1 when both are empty.
double jaccard(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// Binary dilation by a centred structuring element `width` samples long.
std::vector<std::uint8_t> dilate(std::span<const std::uint8_t> mask, std::size_t width);

nlohmann::ordered_json to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);

}  // namespace vitalradar
