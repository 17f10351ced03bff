// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/cube_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "vitalradar/errors.hpp"

namespace vitalradar {
namespace {

static_assert(std::endian::native == std::endian::little, "cube format is little-endian");

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

}  // namespace

std::string format_number(double v, int precision) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::filesystem::path cube_header_path(const std::filesystem::path& cube_path) {
  std::filesystem::path p = cube_path;
  p.replace_extension(".json");
  return p;
}

void write_cube(const RadarCube& cube, const std::filesystem::path& cube_path) {
  if (cube.data.size() != cube.num_frames * cube.num_bins) throw InvalidArgument("cube shape mismatch");
  std::vector<float> raw(cube.data.size() * 2);
  for (std::size_t i = 0; i < cube.data.size(); ++i) {
    raw[2 * i] = static_cast<float>(cube.data[i].real());
    raw[2 * i + 1] = static_cast<float>(cube.data[i].imag());
  }
  std::ofstream out(cube_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + cube_path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw IoError("failed writing " + cube_path.string());

  nlohmann::ordered_json header;
  header["frame_rate_hz"] = cube.frame_rate_hz;
  header["num_range_bins"] = cube.num_bins;
  header["wavelength_mm"] = cube.wavelength_mm;
  header["num_frames"] = cube.num_frames;
  std::ofstream hout(cube_header_path(cube_path), std::ios::trunc);
  if (!hout) throw IoError("cannot open " + cube_header_path(cube_path).string() + " for writing");
  hout << header.dump(2) << "\n";
}

RadarCube read_cube(const std::filesystem::path& cube_path) {
  const std::filesystem::path header_path = cube_header_path(cube_path);
  std::ifstream hin(header_path);
  if (!hin) throw IoError("missing cube header " + header_path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hin);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(header_path.string() + ": " + e.what());
  }

  RadarCube cube;
  try {
    cube.frame_rate_hz = header.at("frame_rate_hz").get<double>();
    cube.num_bins = header.at("num_range_bins").get<std::size_t>();
    cube.wavelength_mm = header.at("wavelength_mm").get<double>();
    cube.num_frames = header.at("num_frames").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(header_path.string() + ": " + e.what());
  }
  if (cube.num_frames < 2) throw InvalidArgument("cube must contain at least two frames");
  if (cube.num_bins == 0) throw InvalidArgument("cube must contain at least one range bin");
  if (!(cube.frame_rate_hz > 0.0)) throw InvalidArgument("frame_rate_hz must be positive");

  const std::size_t count = cube.num_frames * cube.num_bins;
  std::vector<float> raw(2 * count);
  std::ifstream in(cube_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + cube_path.string());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(float))) {
    throw IoError(cube_path.string() + ": file shorter than header promises");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError(cube_path.string() + ": file longer than header promises");
  }
  cube.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    cube.data[i] = {raw[2 * i], raw[2 * i + 1]};
    if (!std::isfinite(raw[2 * i]) || !std::isfinite(raw[2 * i + 1])) {
      throw InvalidArgument(cube_path.string() + ": non-finite sample");
    }
  }
  return cube;
}

void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << kTruthCsvHeader << "\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out << format_number(static_cast<double>(i) / truth.fs) << ',' << format_number(truth.total_mm[i]) << ','
        << format_number(truth.breathing_mm[i]) << ',' << format_number(truth.heart_mm[i]) << ','
        << format_number(truth.rbm_mm[i]) << ',' << format_number(truth.breathing_bpm[i]) << ','
        << format_number(truth.heart_bpm[i]) << ',' << static_cast<int>(truth.rbm_mask[i]) << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

GroundTruth read_truth_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTruthCsvHeader) {
    throw IoError(path.string() + ": unexpected header");
  }
  GroundTruth truth;
  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    times.push_back(parse_double(f[0], path, line_no));
    truth.total_mm.push_back(parse_double(f[1], path, line_no));
    truth.breathing_mm.push_back(parse_double(f[2], path, line_no));
    truth.heart_mm.push_back(parse_double(f[3], path, line_no));
    truth.rbm_mm.push_back(parse_double(f[4], path, line_no));
    truth.breathing_bpm.push_back(parse_double(f[5], path, line_no));
    truth.heart_bpm.push_back(parse_double(f[6], path, line_no));
    truth.rbm_mask.push_back(parse_double(f[7], path, line_no) != 0.0 ? 1 : 0);
  }
  if (times.size() < 2) throw IoError(path.string() + ": need at least two rows");
  truth.fs = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  return truth;
}

}  // namespace vitalradar
