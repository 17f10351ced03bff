// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// vitalradar: simulate scenes, process radar cubes into rate estimates and
// score estimates against ground truth.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vitalradar/config.hpp"
#include "vitalradar/cube_io.hpp"
#include "vitalradar/errors.hpp"
#include "vitalradar/evaluation.hpp"
#include "vitalradar/pipeline.hpp"
#include "vitalradar/simulator.hpp"

namespace fs = std::filesystem;
using namespace vitalradar;

namespace {

enum ExitCode {
  kOk = 0,
  kGeneric = 1,
  kUsage = 2,
  kSchema = 3,
  kIo = 4,
  kAmbiguous = 5,
  kTooShort = 6,
  kMisaligned = 7,
};

int exit_code_for(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kSchema;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const AmbiguousDetection& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAmbiguous;
  } catch (const SignalTooShort& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTooShort;
  } catch (const MisalignedInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMisaligned;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeneric;
  }
}

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

void simulate_one(const std::string& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  RunConfig config = config_from(config_path);
  if (seed) config.scenario.rng_seed = *seed;
  const Scenario scene = run_scenario(config.scenario);
  fs::create_directories(out_dir);
  write_cube(scene.cube, out_dir / "cube.bin");
  write_truth_csv(scene.truth, out_dir / "truth.csv");
}

int cmd_simulate(const std::vector<std::string>& configs, const fs::path& out, std::optional<std::uint64_t> seed,
                 int jobs) {
  std::vector<std::string> work = configs;
  if (work.empty()) work.emplace_back();
  auto dir_for = [&](std::size_t i) {
    return work.size() == 1 ? out : out / fs::path(work[i]).stem();
  };

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      try {
        simulate_one(work[i], dir_for(i), seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(n_threads, work.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return first_error ? exit_code_for(first_error) : kOk;
}

int cmd_process(const fs::path& cube_path, const std::string& config_path, const fs::path& out,
                const std::string& debug_dir) {
  const RunConfig config = config_from(config_path);
  const RadarCube cube = read_cube(cube_path);
  const PipelineResult result = run_pipeline(cube, config);
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  write_estimates_csv(estimate_rows(result.tracks), out);
  if (!debug_dir.empty()) write_debug_dumps(result, config, debug_dir);
  for (const GapSegment& g : result.mitigation.unrecoverable) {
    std::fprintf(stderr, "warning: movement segment [%.2f, %.2f] s left unrecovered\n", g.start_s, g.end_s);
  }
  return kOk;
}

int cmd_evaluate(const fs::path& est_path, const fs::path& truth_path, const std::string& config_path,
                 const std::string& out, const std::string& quality_path) {
  const RunConfig config = config_from(config_path);
  const auto rows = read_estimates_csv(est_path);
  const GroundTruth truth = read_truth_csv(truth_path);
  EvalReport report = evaluate(rows, truth, config);
  if (!quality_path.empty()) {
    const auto flagged = read_flagged_mask(quality_path);
    if (flagged.size() != truth.rbm_mask.size()) throw MisalignedInput("quality mask and truth differ in length");
    const auto width = static_cast<std::size_t>(std::llround(config.rbm_filter.window_s * truth.fs));
    report.rbm_jaccard = jaccard(flagged, dilate(truth.rbm_mask, width));
  }
  const std::string json = to_json(report).dump(2) + "\n";
  if (out.empty()) {
    // Keep stdout parseable; the summary table goes to stderr.
    std::cerr << format_table(report);
    std::cout << json;
  } else {
    std::ofstream os(out, std::ios::trunc);
    if (!os) throw IoError("cannot open " + out + " for writing");
    os << json;
    std::cout << format_table(report);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar vital-sign pipeline: simulate, process, evaluate"};
  app.require_subcommand(1);

  std::vector<std::string> sim_configs;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  int jobs = 1;
  auto* sim = app.add_subcommand("simulate", "Write a simulated cube (cube.bin, cube.json) and truth.csv");
  sim->add_option("--config", sim_configs, "Run config JSON (repeat to simulate several scenes)");
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--seed", sim_seed, "Override scenario.rng_seed");
  sim->add_option("--jobs", jobs, "Worker threads for several configs")->check(CLI::PositiveNumber);

  std::string cube_path, proc_config, proc_out, debug_dir;
  auto* proc = app.add_subcommand("process", "Estimate breathing and heart rate from a cube");
  proc->add_option("cube", cube_path, "Cube file (header JSON alongside)")->required();
  proc->add_option("--config", proc_config, "Run config JSON");
  proc->add_option("--out", proc_out, "Estimates CSV")->required();
  proc->add_option("--debug-dir", debug_dir, "Write phase, displacement and spectrogram dumps here");

  std::string est_path, truth_path, eval_config, eval_out, quality_path;
  auto* eval = app.add_subcommand("evaluate", "Score estimates against ground truth");
  eval->add_option("estimates", est_path, "Estimates CSV")->required();
  eval->add_option("truth", truth_path, "Ground-truth CSV")->required();
  eval->add_option("--config", eval_config, "Run config JSON");
  eval->add_option("--out", eval_out, "Report JSON (default: stdout)");
  eval->add_option("--quality", quality_path, "displacement.csv debug dump, for the movement-mask Jaccard index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_configs, sim_out, sim_seed, jobs);
    if (*proc) return cmd_process(cube_path, proc_config, proc_out, debug_dir);
    if (*eval) return cmd_evaluate(est_path, truth_path, eval_config, eval_out, quality_path);
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return kUsage;
}
