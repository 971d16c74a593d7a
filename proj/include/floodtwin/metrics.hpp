#pragma once

// Verification scores for gauge series and flood extents.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floodtwin/raster.hpp"

namespace floodtwin {

// Observed and simulated values at the observation times.
struct SeriesPair {
  Eigen::VectorXd time;
  Eigen::VectorXd observed;
  Eigen::VectorXd simulated;

  Eigen::Index size() const { return observed.size(); }
  void validate() const;  // equal lengths, at least two points
};

// Linear interpolation of the simulated series onto observation times. Observations outside
// the simulated span are dropped; DataError if fewer than two remain.
SeriesPair sample_at_observations(const std::vector<double>& obs_time, const std::vector<double>& obs_value,
                                  const std::vector<double>& sim_time, const std::vector<double>& sim_value);

double rmse(const SeriesPair& s);
double nse(const SeriesPair& s);

struct KgeScore {
  double kge = 0.0;
  double r = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// Population statistics throughout.
KgeScore kge(const SeriesPair& s);

enum class Contingency : std::uint8_t {
  CorrectNegative = 0,
  Hit = 1,
  Miss = 2,
  FalseAlarm = 3,
  Excluded = 255,
};

struct ContingencyMap {
  GridSpec spec;
  Grid<std::uint8_t> labels;
  long long tp = 0, fn = 0, fp = 0, tn = 0, excluded = 0;
};

// Pixels invalid in either map or flagged in `exclusion` are labelled Excluded.
ContingencyMap contingency(const BinaryMap& sim, const BinaryMap& obs,
                           const std::optional<MaskGrid>& exclusion = std::nullopt);

double csi(long long tp, long long fp, long long fn);
double csi(const ContingencyMap& c);

// Label raster with NODATA_value 255.
void write_contingency_asc(const ContingencyMap& c, const std::filesystem::path& path);

struct StationScore {
  std::string station;
  std::string run;  // e.g. "OL" or "PF"
  long long samples = 0;
  double rmse = 0.0;
  double nse = 0.0;
  KgeScore kge;
  std::string error;  // set when a score is undefined for this series
};

struct ExtentScore {
  std::string observation;
  std::string run;
  long long tp = 0, fn = 0, fp = 0, tn = 0, excluded = 0;
  double csi = 0.0;
  std::string error;
};

struct VerificationReport {
  std::string issue_date;
  std::vector<StationScore> stations;
  std::vector<ExtentScore> extents;
};

// Scores one pair; undefined scores (constant series, zero mean) are reported in `error`.
StationScore score_station(const std::string& station, const std::string& run, const SeriesPair& s);

std::string report_json(const VerificationReport& report);
std::string report_text(const VerificationReport& report);

}  // namespace floodtwin
