#pragma once

// GLUE-style calibration: Latin hypercube samples of the solver parameters, scored against gauge
// series (KGE) and a reference extent (CSI), combined by repeated Bayes updates.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floodtwin/hydro_solver.hpp"

namespace floodtwin {

struct ParameterRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct ParameterRanges {
  ParameterRange r_ch{0.01, 0.15};
  ParameterRange p_ch{0.01, 1.00};
  ParameterRange n_ch{0.01, 0.05};
  ParameterRange n_fp{0.03, 0.15};
};

struct ParameterSample {
  std::size_t id = 0;  // 1-based
  std::vector<RegionParameters> regions;
};

// n x d design with one point per stratum in every column, strata permuted per column.
// Points sit at lo + (hi - lo) * (j + u) / n, u ~ U(0.05, 0.95).
Eigen::MatrixXd latin_hypercube(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::size_t n, std::uint64_t seed);

// Joint design over every region's four parameters. DataError for an inverted range or n = 0.
std::vector<ParameterSample> lhs_sample(const std::vector<ParameterRanges>& regions, std::size_t n, std::uint64_t seed);

struct LikelihoodWeights {
  Eigen::VectorXd score;
  Eigen::VectorXd weight;
};

// Scores at or below zero (or NaN) get zero weight; the rest are normalized to one.
LikelihoodWeights scores_to_weights(const Eigen::VectorXd& scores);

LikelihoodWeights uniform_weights(std::size_t n);

// Posterior proportional to prior times likelihood. DataError when every product is zero.
LikelihoodWeights bayes_combine(const LikelihoodWeights& prior, const LikelihoodWeights& likelihood);

// Highest weight; ties go to the lowest sample id.
const ParameterSample& select_best(const std::vector<ParameterSample>& samples, const LikelihoodWeights& combined);

struct GaugeObservation {
  std::string gauge;
  std::string variable = "level";  // level | depth | discharge
  std::vector<double> time;        // epoch seconds
  std::vector<double> value;
};

// CSV timestamp,value.
GaugeObservation read_gauge_observation(const std::filesystem::path& path, const std::string& gauge,
                                        const std::string& variable = "level");

struct CalibrationData {
  std::vector<GaugeObservation> gauges;
  std::optional<BinaryMap> reference_extent;
};

struct CalibrationConfig {
  std::vector<ParameterRanges> ranges{ParameterRanges{}};
  std::size_t samples = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double wet_threshold = kDefaultWetThreshold;
  // Bayes update order over dataset names (gauge names and "extent"); empty means gauges
  // in listed order, then the extent.
  std::vector<std::string> order;
};

struct CalibrationResult {
  std::vector<ParameterSample> samples;
  std::vector<std::string> datasets;           // in update order
  std::vector<Eigen::VectorXd> scores;         // per dataset, per sample (NaN when undefined)
  LikelihoodWeights combined;
  std::size_t best = 0;                        // index into samples
  std::vector<std::string> failures;           // samples whose simulation aborted
};

// One simulation per sample (concurrent when threads > 1; results independent of thread count).
CalibrationResult run_calibration(const ModelDomain& domain, const BoundaryForcing& forcing, double duration,
                                  const std::vector<GaugeSpec>& gauges, const CalibrationData& data,
                                  const CalibrationConfig& config);

// sample_id, parameters per region, score per dataset, combined weight.
void write_calibration_csv(const CalibrationResult& result, const std::filesystem::path& path);

}  // namespace floodtwin
