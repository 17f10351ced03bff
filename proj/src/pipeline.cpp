// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "vitalradar/cube_io.hpp"
#include "vitalradar/errors.hpp"

namespace vitalradar {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw MisalignedInput("line " + std::to_string(line) + ": not a number: '" + s + "'");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

}  // namespace

PipelineResult recover_displacement(const RadarCube& cube, const RunConfig& config) {
  PipelineResult r;
  if (config.detection.range_bin) {
    if (*config.detection.range_bin >= cube.num_bins) throw InvalidArgument("configured range bin out of range");
    r.detection.bin = *config.detection.range_bin;
  } else {
    r.detection = detect_subject_bin(remove_clutter(cube), config.detection.threshold);
  }
  r.centred = center_arc(extract_slow_time(cube, r.detection.bin));
  r.wrapped = arctan_demod(r.centred.signal);
  if (config.demodulation.method == UnwrapMethod::robust) {
    RobustUnwrap u = unwrap_robust(r.wrapped, config.demodulation.unwrap);
    r.unwrapped = std::move(u.phase);
    r.recovery = std::move(u.report);
  } else {
    r.unwrapped = unwrap_conventional(r.wrapped);
  }
  r.displacement = phase_to_displacement(r.unwrapped, cube.wavelength_mm);
  return r;
}

PipelineResult run_pipeline(const RadarCube& cube, const RunConfig& config) {
  PipelineResult r = recover_displacement(cube, config);
  if (config.rbm_filter_enabled) {
    r.mitigation = mitigate(r.displacement, config.rbm_filter);
  } else {
    const FrequencyBand bands[] = {config.rbm_filter.breath_band, config.rbm_filter.heart_band};
    r.mitigation.signal = band_limit(r.displacement, bands);
  }
  r.tracks = track(r.mitigation.signal, config.estimation);
  return r;
}

std::vector<EstimateRow> estimate_rows(const TrackResult& tracks) {
  if (tracks.breathing.size() != tracks.heart.size()) throw InvalidArgument("breathing/heart tracks differ in length");
  std::vector<EstimateRow> rows(tracks.breathing.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RateEstimate& b = tracks.breathing[i];
    const RateEstimate& h = tracks.heart[i];
    EstimateRow& row = rows[i];
    row.t_s = b.t_s;
    row.breathing_bpm = b.value_bpm;
    row.breathing_conf = b.confidence;
    row.heart_bpm = h.value_bpm;
    row.heart_conf = h.confidence;
    row.heart_source = source_label(h);
    row.coast_flag = (b.coast() ? kCoastBreathing : 0) | (h.coast() ? kCoastHeart : 0);
  }
  return rows;
}

std::string format_estimates_csv(const std::vector<EstimateRow>& rows) {
  std::string out = std::string(kEstimatesCsvHeader) + "\n";
  for (const EstimateRow& r : rows) {
    out += format_number(r.t_s) + ',' + format_number(r.breathing_bpm) + ',' + format_number(r.breathing_conf) + ',' +
           format_number(r.heart_bpm) + ',' + format_number(r.heart_conf) + ',' + r.heart_source + ',' +
           std::to_string(r.coast_flag) + '\n';
  }
  return out;
}

void write_estimates_csv(const std::vector<EstimateRow>& rows, const std::filesystem::path& path) {
  std::ofstream os = open_out(path);
  os << format_estimates_csv(rows);
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<EstimateRow> read_estimates_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kEstimatesCsvHeader) {
    throw MisalignedInput(path.string() + ": expected header " + kEstimatesCsvHeader);
  }
  std::vector<EstimateRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7) throw MisalignedInput(path.string() + ":" + std::to_string(lineno) + ": expected 7 fields");
    EstimateRow r;
    r.t_s = to_double(f[0], lineno);
    r.breathing_bpm = to_double(f[1], lineno);
    r.breathing_conf = to_double(f[2], lineno);
    r.heart_bpm = to_double(f[3], lineno);
    r.heart_conf = to_double(f[4], lineno);
    r.heart_source = f[5];
    r.coast_flag = static_cast<int>(to_double(f[6], lineno));
    rows.push_back(r);
  }
  return rows;
}

void write_debug_dumps(const PipelineResult& r, const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const double fs = r.displacement.fs;
  {
    std::ofstream os = open_out(dir / "phase.csv");
    os << "t_s,wrapped_rad,unwrapped_rad,suspect\n";
    for (std::size_t i = 0; i < r.wrapped.values.size(); ++i) {
      os << format_number(static_cast<double>(i) / fs) << ',' << format_number(r.wrapped.values[i]) << ','
         << format_number(r.unwrapped.values[i]) << ',' << int(r.unwrapped.suspect[i]) << '\n';
    }
  }
  {
    std::ofstream os = open_out(dir / "displacement.csv");
    os << "t_s,displacement_mm,filtered_mm,quality,flagged\n";
    const auto& filtered = r.mitigation.signal;
    const auto& flagged = r.mitigation.mask.samples;
    for (std::size_t i = 0; i < r.displacement.size(); ++i) {
      const int q = i < filtered.quality.size() ? static_cast<int>(filtered.quality[i]) : 0;
      const int f = i < flagged.size() ? flagged[i] : 0;
      os << format_number(static_cast<double>(i) / fs) << ',' << format_number(r.displacement.values[i]) << ','
         << format_number(i < filtered.size() ? filtered.values[i] : 0.0) << ',' << q << ',' << f << '\n';
    }
  }
  const auto window = static_cast<std::size_t>(std::llround(config.rbm_filter.window_s * fs));
  const auto hop = static_cast<std::size_t>(std::llround(config.rbm_filter.hop_s * fs));
  if (window <= r.displacement.size()) {
    write_spectrogram_csv(stft(r.displacement, window, hop, config.rbm_filter.window), dir / "spectrogram.csv");
  }
}

std::vector<std::uint8_t> read_flagged_mask(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw MisalignedInput(path.string() + ": empty file");
  const auto header = split(line);
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "flagged") col = i;
  }
  if (col == header.size()) throw MisalignedInput(path.string() + ": no 'flagged' column");
  std::vector<std::uint8_t> mask;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw MisalignedInput(path.string() + ":" + std::to_string(lineno) + ": bad row");
    mask.push_back(to_double(f[col], lineno) != 0.0 ? 1 : 0);
  }
  return mask;
}

}  // namespace vitalradar
