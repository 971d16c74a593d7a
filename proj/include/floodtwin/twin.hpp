#pragma once

// Identical-twin experiments: a datacube layer plays the truth, synthetic probability maps are
// drawn from its extent, and a lognormal ensemble is spread around its anchor discharge.

#include <cstdint>
#include <string>
#include <vector>

#include "floodtwin/assimilation.hpp"
#include "floodtwin/forecast.hpp"
#include "floodtwin/rng.hpp"
#include "floodtwin/scenario.hpp"

namespace floodtwin {

struct TwinSpec {
  std::size_t truth_layer = 0;   // 0-based datacube layer
  double false_wet_rate = 0.1;   // mean P(wet) reported over truth-dry pixels
  double false_dry_rate = 0.1;   // mean P(dry) reported over truth-wet pixels
  std::vector<double> observation_times;  // epoch seconds
  double sigma = 0.3;            // lognormal spread of member discharge
  // Day-to-day correlation of each member's log factor: 1 keeps one factor per member
  // over the horizon, 0 draws every day independently.
  double member_persistence = 1.0;
  int members = 50;
  int lead_days = 30;
  std::string issue_date = "2021-07-14";
  double wet_threshold = kDefaultWetThreshold;
  std::uint64_t seed = 1;

  void validate() const;  // rates in [0, 0.5), sigma >= 0, persistence in [0, 1]
};

struct TwinDataset {
  std::size_t truth_layer = 0;
  double truth_discharge = 0.0;
  Raster truth_depth;
  ForecastEnsemble forecast;
  std::vector<ObservationMap> observations;
};

// Pixel p ~ clip(1 - r_fd + N(0, r_fd / 2)) over truth-wet cells, clip(r_fw + N(0, r_fw / 2))
// over truth-dry cells, clip to [0, 1]. Nodata stays nodata.
ObservationMap synthetic_observation(const Raster& truth_depth, const TwinSpec& spec, Rng& rng, std::string name,
                                     double time);

// Ensemble first, then observations in time order, all from one generator seeded with spec.seed.
TwinDataset make_twin(const TwinSpec& spec, const HazardDatacube& cube);

struct TwinScore {
  std::vector<std::string> gauges;
  Eigen::VectorXd ol_rmse;
  Eigen::VectorXd pf_rmse;
  Eigen::VectorXd improvement() const;  // (OL - PF) / OL per gauge
};

// Daily gauge depth of the open loop and of the filter against the static truth, over the horizon.
TwinScore score_twin(const TwinDataset& twin, const HazardDatacube& cube, const std::vector<GaugeSpec>& gauges,
                     const AssimilationConfig& config);

// Depth at a cell for every lead day of a cycle result.
std::vector<double> gauge_depths(const CycleResult& result, const CellIndex& cell);

}  // namespace floodtwin
