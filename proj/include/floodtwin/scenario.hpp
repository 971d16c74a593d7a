#pragma once

// Flood-hazard datacube: a ladder of peak-discharge scenarios, each forcing the solver with
// base-event hydrographs rescaled so every boundary station shares one return period.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "floodtwin/hydro_solver.hpp"

namespace floodtwin {

struct RatingKnot {
  double return_period;  // years
  double peak;           // m3/s
};

// Return-period curve of one station; knots sorted by return period, peaks increasing.
class RatingCurve {
 public:
  RatingCurve() = default;
  explicit RatingCurve(std::vector<RatingKnot> knots);

  const std::vector<RatingKnot>& knots() const { return knots_; }

 private:
  std::vector<RatingKnot> knots_;
};

using RatingTable = std::map<std::string, RatingCurve>;

// CSV columns station,return_period_years,peak_discharge_m3s; rows in any order.
RatingTable read_rating_table(const std::filesystem::path& path);

// Piecewise-linear in (discharge, log T) between knots and above the top knot. Below the
// lowest knot the first segment is continued in (log discharge, log T) so peaks stay positive.
// Knot discharges map to their return periods exactly. DataError for q <= 0.
double return_period_of_peak(double q, const RatingCurve& curve);

// Exact inverse of return_period_of_peak. DataError for T <= 0.
double peak_for_return_period(double return_period, const RatingCurve& curve);

// Every ordinate times target_peak / base.peak(); timestamps unchanged.
Hydrograph scale_hydrograph(const Hydrograph& base, double target_peak);

// 5, 10, ..., 190 m3/s.
std::vector<double> default_peak_ladder();

struct Scenario {
  double anchor_peak = 0.0;    // m3/s
  double return_period = 0.0;  // years
  std::map<std::string, double> peaks;  // per station, m3/s
  std::map<std::string, Hydrograph> hydrographs;
};

struct ScenarioSet {
  std::map<std::string, Hydrograph> base_event;
  std::string anchor_station;
  std::vector<Scenario> scenarios;  // ordered by anchor peak
};

// Throws DataError for a missing station curve or a non-increasing / non-positive ladder.
ScenarioSet build_scenario_set(const std::map<std::string, Hydrograph>& base_event, const RatingTable& table,
                               const std::string& anchor_station, const std::vector<double>& anchor_peaks);

struct LayerInfo {
  std::size_t index = 0;  // 1-based scenario number
  double anchor_peak = 0.0;
  double return_period = 0.0;
  std::string scenario_hash;
  std::string file;       // relative to the datacube directory
  std::string file_hash;  // filled when saved or loaded
  double wet_area = 0.0;  // m2 above the wet threshold
  double mass_error = 0.0;
};

struct DatacubeManifest {
  GridSpec grid;
  std::string config_hash;
  std::vector<LayerInfo> layers;
  bool complete = true;
  bool monotone = true;  // per-cell max depth non-decreasing with layer index
  std::vector<std::string> failures;  // scenarios that did not produce a layer
  std::vector<std::string> warnings;  // e.g. mass balance beyond tolerance

  std::vector<double> anchor_peaks() const;
};

struct HazardDatacube {
  DatacubeManifest manifest;
  std::vector<Raster> layers;

  std::size_t size() const { return layers.size(); }
};

struct DatacubeRunConfig {
  double duration = 0.0;          // s; <= 0 means the common span of the base hydrographs
  std::map<std::string, CellIndex> inflow_sites;
  unsigned threads = 1;
  double wet_threshold = kDefaultWetThreshold;
};

// Stable hash over domain fingerprint, run settings and every scenario's forcing.
std::string datacube_config_hash(const ScenarioSet& set, const ModelDomain& domain, const DatacubeRunConfig& run);

// One simulate() per scenario (run concurrently when threads > 1; the result does not depend
// on the thread count). Failed scenarios leave the cube marked incomplete with the failure named.
HazardDatacube build_datacube(const ScenarioSet& set, const ModelDomain& domain, const DatacubeRunConfig& run);

// True when every cell's depth is non-decreasing with layer index, up to `tolerance` m (nodata skipped).
bool depth_monotone(const std::vector<Raster>& layers, double tolerance = 1e-9);

// Directory of layer_NNN.asc files plus manifest.json.
void save_datacube(HazardDatacube& cube, const std::filesystem::path& dir);
// Verifies file hashes and grid alignment; DataError ("integrity") on mismatch.
HazardDatacube load_datacube(const std::filesystem::path& dir);
DatacubeManifest load_manifest(const std::filesystem::path& dir);

}  // namespace floodtwin
