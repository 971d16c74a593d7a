#pragma once

// Weights-only particle filter over datacube particles, driven by flood-probability rasters.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floodtwin/forecast.hpp"
#include "floodtwin/raster.hpp"
#include "floodtwin/scenario.hpp"

namespace floodtwin {

inline constexpr double kProbabilityClip = 1e-6;

struct ObservationMap {
  std::string name;
  Raster probability;  // P(wet) per pixel, in [0, 1]
  double time = 0.0;   // epoch seconds of acquisition
  std::optional<MaskGrid> exclusion;  // true = ignore pixel

  // DataError for values outside [0, 1] or a misaligned exclusion mask.
  void validate() const;
};

// Sidecar JSON {"raster": path, "timestamp": ISO-8601, "exclusion_mask"?: path}; paths relative
// to the sidecar. The exclusion raster marks ignored pixels with any non-zero value.
ObservationMap load_observation(const std::filesystem::path& sidecar);
// Writes <name>.asc and <name>.json into dir.
void save_observation(const ObservationMap& obs, const std::filesystem::path& dir);

// theta = p for a wet prediction, 1 - p for a dry one, p clipped to [clip, 1 - clip].
double local_weight(double p, bool wet, double clip = kProbabilityClip);

// Sum of log local weights per extent. A pixel counts only when it is valid in the observation
// and in every extent and not excluded, so all particles see the same pixel set.
// DataError when no pixel remains or grids are misaligned.
Eigen::VectorXd global_log_weights(const ObservationMap& obs, const std::vector<BinaryMap>& extents,
                                   double clip = kProbabilityClip);

struct WeightVector {
  Eigen::VectorXd log_likelihood;
  Eigen::VectorXd weights;
  double alpha = 1.0;
  double ess = 0.0;
};

// weights_n proportional to exp(alpha * (logw_n - max logw)).
WeightVector tempered_weights(const Eigen::VectorXd& logw, double alpha);

double effective_sample_size(const Eigen::VectorXd& weights);

// Largest alpha in [0, 1] keeping ESS >= tau * N, by bisection to `tol`.
double select_alpha(const Eigen::VectorXd& logw, double tau = 0.5, double tol = 1e-6);

// Per pixel sum of weight times particle layer depth; nodata where any used layer has nodata.
Raster weighted_depth_map(const ParticleSet& particles, const HazardDatacube& cube);

double weighted_discharge(const ParticleSet& particles);
double weighted_discharge(const Eigen::VectorXd& weights, const Eigen::VectorXd& discharge);

struct AssimilationConfig {
  bool adaptive_alpha = true;
  double alpha = 1.0;  // used when adaptive_alpha is false
  double tau = 0.5;
  double wet_threshold = kDefaultWetThreshold;  // m, model depth to extent
  double clip = kProbabilityClip;
};

struct AnalysisRecord {
  std::string observation;
  double time = 0.0;
  int lead_day = 0;
  WeightVector weights;  // per member, in forecast member order
};

struct DailyProduct {
  int lead_day = 0;
  double time = 0.0;  // centre of the lead day, epoch seconds
  Raster depth;
  double discharge = 0.0;
  Eigen::VectorXd weights;
  std::vector<std::size_t> layers;  // per member
};

struct CycleResult {
  std::vector<DailyProduct> days;
  std::vector<AnalysisRecord> analyses;
  std::vector<std::string> ignored;  // observations beyond the forecast horizon
};

// Lead day (1-based) whose 24 h window contains t; DataError before the issue time.
int lead_day_of(double t, double issue_time);

// Daily loop over the horizon. An observation in day d resets weights to uniform and
// reweights that day's particles; members keep those weights until the next analysis.
// Without observations every day is the open-loop ensemble mean.
CycleResult assimilation_cycle(const ForecastEnsemble& fc, const HazardDatacube& cube,
                               const std::vector<ObservationMap>& observations, const AssimilationConfig& config);

}  // namespace floodtwin
