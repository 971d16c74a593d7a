#pragma once

#include <filesystem>
#include <vector>

#include "floodtwin/timeutil.hpp"

namespace floodtwin {

// Discharge series at one station; times are epoch seconds, strictly increasing.
class Hydrograph {
 public:
  Hydrograph() = default;
  Hydrograph(std::vector<double> times, std::vector<double> discharge);

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& discharge() const { return discharge_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  double start() const { return times_.front(); }
  double end() const { return times_.back(); }
  double peak() const;

  // Linear interpolation; DataError outside [start, end].
  double at(double t) const;

  // Same timestamps, every ordinate multiplied by `factor`.
  Hydrograph scaled(double factor) const;

 private:
  std::vector<double> times_;
  std::vector<double> discharge_;
};

// CSV with header "timestamp,discharge_m3s"; timestamps ISO-8601.
Hydrograph read_hydrograph_csv(const std::filesystem::path& path);
void write_hydrograph_csv(const Hydrograph& h, const std::filesystem::path& path);

}  // namespace floodtwin
