#pragma once

// Subcommands of the floodtwin tool. Each reads one JSON run configuration, writes plain files
// into an output directory and leaves a manifest.json there describing what produced them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "floodtwin/assimilation.hpp"
#include "floodtwin/calibration.hpp"
#include "floodtwin/synthetic.hpp"
#include "floodtwin/twin.hpp"

namespace floodtwin {

inline constexpr const char* kVersion = "0.1.0";

struct GaugeObservationSource {
  std::string gauge;
  std::filesystem::path file;  // CSV timestamp,value
  std::string variable = "level";
};

// Run configuration JSON (paths relative to the file):
//   seed, threads, output, issue_date?
//   domain, datacube, rating_table, base_event {station: hydrograph csv}, anchor_station,
//   ladder? [peaks] | {start, stop, step}, duration_s?
//   forecasts, include_control?, observations [sidecar json]
//   pf? {alpha_mode: "adaptive"|"fixed", alpha, tau, wet_threshold, probability_clip}
//   verify? {runs {label: dir}, gauges [{gauge, file, variable}], extents [sidecar], probability_threshold}
//   calibration? {samples, ranges [{r_ch: [lo, hi], ...}], order, duration_s, gauges, reference_extent}
//   twin? {truth_layer (1-based), false_wet_rate, false_dry_rate, observation_times [ISO],
//          sigma, members, lead_days, persistence, issue_date}
// Only the paths a command needs are checked, when that command runs.
struct RunConfig {
  std::filesystem::path source;
  std::string hash;  // over the file's settings with the thread count left out
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path output;
  std::optional<std::string> issue_date;

  std::filesystem::path domain;
  std::filesystem::path datacube;
  std::filesystem::path rating_table;
  std::map<std::string, std::filesystem::path> base_event;
  std::string anchor_station;
  std::vector<double> ladder = default_peak_ladder();
  double duration = 0.0;

  std::filesystem::path forecasts;
  bool include_control = false;
  std::vector<std::filesystem::path> observations;
  AssimilationConfig pf;

  std::map<std::string, std::filesystem::path> verify_runs;
  std::vector<GaugeObservationSource> verify_gauges;
  std::vector<std::filesystem::path> verify_extents;
  double probability_threshold = 0.25;

  CalibrationConfig calibration;
  double calibration_duration = 0.0;
  std::vector<GaugeObservationSource> calibration_gauges;
  std::optional<std::filesystem::path> calibration_extent;

  TwinSpec twin;
};

// DataError for malformed JSON, unknown modes or out-of-range thresholds.
RunConfig load_run_config(const std::filesystem::path& path);

struct CommandOptions {
  std::optional<std::string> issue_date;  // YYYY-MM-DD
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<unsigned> threads;
};

// Builds and saves the datacube; a no-op when the saved cube has the same config hash and
// passes its integrity check. NumericalError naming the failed scenarios after saving the rest.
void cmd_build_datacube(const RunConfig& config, const CommandOptions& options, std::ostream& log);

// Open loop: depth_dNN.asc per lead day, gauges.csv, manifest.json.
void cmd_forecast(const RunConfig& config, const CommandOptions& options, std::ostream& log);

// Same products weighted by the observations, plus weights.csv. Observations off the datacube
// grid are resampled to it by nearest cell.
void cmd_assimilate(const RunConfig& config, const CommandOptions& options, std::ostream& log);

// report.json, report.txt and contingency_<run>_<observation>.asc for every run and extent.
void cmd_verify(const RunConfig& config, const CommandOptions& options, std::ostream& log);

// calibration.csv with every sample, its scores and the combined weight.
void cmd_calibrate(const RunConfig& config, const CommandOptions& options, std::ostream& log);

// forecast.csv, observations/, truth_depth.asc, truth_<gauge>.csv and twin.json.
void cmd_twin(const RunConfig& config, const CommandOptions& options, std::ostream& log);

// Depth raster file name of a lead day.
std::string depth_file_name(int lead_day);

// Self-contained case on a synthetic valley: DEM, channel, domain and run configs, rating table,
// base event, and gauge and extent observations from a reference run at `truth` parameters.
struct ExampleCase {
  // Gentle cross slope: every layer of the default ladder then floods a different extent.
  ValleySpec valley = [] {
    ValleySpec v;
    v.cross_slope = 0.002;
    return v;
  }();
  RegionParameters truth{0.08, 0.7, 0.035, 0.07};
  std::string station = "Upstream";
  std::string start = "2021-07-14T00:00:00Z";
  std::vector<double> base_hours{0.0, 3.0, 6.0};
  std::vector<double> base_discharge{10.0, 100.0, 30.0};
  std::vector<double> ladder;  // empty means 10, 20, ..., 200
  std::size_t calibration_samples = 40;
};

void write_example_case(const std::filesystem::path& dir, const ExampleCase& example = {});

}  // namespace floodtwin
