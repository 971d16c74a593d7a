#pragma once

// Ensemble streamflow forecasts and their conversion to datacube particles.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floodtwin/scenario.hpp"

namespace floodtwin {

// One issue date at one station: daily-mean discharge per member and lead day (1-based).
struct ForecastEnsemble {
  std::string issue_date;   // YYYY-MM-DD
  std::string station;      // empty when the file carries no station column
  std::vector<int> member_ids;  // row labels of `values`
  Eigen::MatrixXd values;       // members x lead days, m3/s
  std::optional<Eigen::VectorXd> control;  // member 0, when present and not used as a particle

  Eigen::Index members() const { return values.rows(); }
  Eigen::Index lead_days() const { return values.cols(); }
  double issue_time() const;  // epoch seconds at 00:00Z of the issue date
};

struct ForecastLoadOptions {
  std::optional<std::string> issue_date;  // pick one date from a multi-date file
  bool include_control = false;           // member 0 becomes a particle
};

// CSV columns issue_date,member,lead_day,discharge_m3s (optional station). DataError listing
// any missing (member, lead_day) cells; ParseError for duplicates and negative discharge.
ForecastEnsemble load_forecast_ensemble(const std::filesystem::path& path, const ForecastLoadOptions& options = {});
void write_forecast_csv(const ForecastEnsemble& fc, const std::filesystem::path& path);

// Index (0-based) of the nearest peak; ties go to the lower layer, out-of-ladder values clamp.
std::size_t match_to_layer(double q, const std::vector<double>& peaks);
std::size_t match_to_layer(double q, const DatacubeManifest& manifest);

struct Particle {
  int member = 0;
  std::size_t layer = 0;  // 0-based datacube layer
  double discharge = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  Eigen::VectorXd weights;  // sums to one

  std::size_t size() const { return particles.size(); }
};

// Uniform weights 1/N; lead_day is 1-based.
ParticleSet ensemble_to_particles(const ForecastEnsemble& fc, int lead_day, const DatacubeManifest& manifest);

}  // namespace floodtwin
