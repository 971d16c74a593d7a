#include "floodtwin/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "floodtwin/csv.hpp"
#include "floodtwin/error.hpp"
#include "floodtwin/timeutil.hpp"

namespace floodtwin {

double ForecastEnsemble::issue_time() const { return parse_iso8601(issue_date); }

ForecastEnsemble load_forecast_ensemble(const std::filesystem::path& path, const ForecastLoadOptions& options) {
  const CsvTable t = read_csv(path);
  const auto cd = t.column("issue_date"), cm = t.column("member"), cl = t.column("lead_day"),
             cq = t.column("discharge_m3s");
  const auto station_it = std::find(t.header.begin(), t.header.end(), "station");
  const bool has_station = station_it != t.header.end();
  const auto cs = static_cast<std::size_t>(station_it - t.header.begin());

  std::set<std::string> dates;
  for (const auto& row : t.rows) {
    try {
      dates.insert(format_date(parse_iso8601(row.fields[cd])));
    } catch (const DataError& e) {
      throw ParseError(t.source, row.line, e.what());
    }
  }
  std::string date;
  if (options.issue_date) {
    date = format_date(parse_iso8601(*options.issue_date));
    if (!dates.count(date)) throw DataError(t.source + ": no forecast issued on " + date);
  } else {
    if (dates.size() != 1) throw DataError(t.source + ": expected exactly one issue date, found " + std::to_string(dates.size()));
    date = *dates.begin();
  }

  std::map<std::pair<int, int>, double> cells;
  std::string station;
  int max_lead = 0;
  for (const auto& row : t.rows) {
    if (format_date(parse_iso8601(row.fields[cd])) != date) continue;
    const long long member = csv_integer(t, row, cm);
    const long long lead = csv_integer(t, row, cl);
    const double q = csv_double(t, row, cq);
    if (member < 0) throw ParseError(t.source, row.line, "negative member id");
    if (lead < 1) throw ParseError(t.source, row.line, "lead_day must start at 1");
    if (!(q >= 0.0) || !std::isfinite(q)) throw ParseError(t.source, row.line, "negative or non-finite discharge");
    if (has_station) {
      if (station.empty()) station = row.fields[cs];
      else if (row.fields[cs] != station) throw ParseError(t.source, row.line, "mixed stations in one forecast");
    }
    const auto key = std::make_pair(static_cast<int>(member), static_cast<int>(lead));
    if (!cells.emplace(key, q).second)
      throw ParseError(t.source, row.line,
                       "duplicate member " + std::to_string(member) + " lead day " + std::to_string(lead));
    max_lead = std::max(max_lead, static_cast<int>(lead));
  }

  std::set<int> members;
  for (const auto& [key, q] : cells) members.insert(key.first);
  std::string gaps;
  std::size_t gap_count = 0;
  for (int m : members) {
    for (int d = 1; d <= max_lead; ++d) {
      if (cells.count({m, d})) continue;
      if (++gap_count <= 20) gaps += (gaps.empty() ? "" : ", ") + ("member " + std::to_string(m) + " day " + std::to_string(d));
    }
  }
  if (gap_count > 0) {
    if (gap_count > 20) gaps += ", ... (" + std::to_string(gap_count) + " in total)";
    throw DataError(t.source + ": missing forecast cells: " + gaps);
  }

  ForecastEnsemble fc;
  fc.issue_date = date;
  fc.station = station;
  for (int m : members)
    if (m != 0 || options.include_control) fc.member_ids.push_back(m);
  if (fc.member_ids.empty()) throw DataError(t.source + ": forecast has no ensemble members");
  fc.values.resize(static_cast<Eigen::Index>(fc.member_ids.size()), max_lead);
  for (std::size_t i = 0; i < fc.member_ids.size(); ++i)
    for (int d = 1; d <= max_lead; ++d) fc.values(static_cast<Eigen::Index>(i), d - 1) = cells.at({fc.member_ids[i], d});
  if (members.count(0) && !options.include_control) {
    Eigen::VectorXd control(max_lead);
    for (int d = 1; d <= max_lead; ++d) control(d - 1) = cells.at({0, d});
    fc.control = control;
  }
  return fc;
}

void write_forecast_csv(const ForecastEnsemble& fc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const bool station = !fc.station.empty();
  out << (station ? "station," : "") << "issue_date,member,lead_day,discharge_m3s\n";
  char buf[64];
  const auto row = [&](int member, Eigen::Index d, double q) {
    std::snprintf(buf, sizeof buf, "%.17g", q);
    if (station) out << fc.station << ',';
    out << fc.issue_date << ',' << member << ',' << d + 1 << ',' << buf << '\n';
  };
  if (fc.control)
    for (Eigen::Index d = 0; d < fc.control->size(); ++d) row(0, d, (*fc.control)(d));
  for (Eigen::Index m = 0; m < fc.members(); ++m)
    for (Eigen::Index d = 0; d < fc.lead_days(); ++d) row(fc.member_ids[static_cast<std::size_t>(m)], d, fc.values(m, d));
}

std::size_t match_to_layer(double q, const std::vector<double>& peaks) {
  if (peaks.empty()) throw DataError("cannot match against an empty datacube");
  if (std::isnan(q)) throw DataError("cannot match a NaN discharge");
  const auto it = std::lower_bound(peaks.begin(), peaks.end(), q);
  if (it == peaks.begin()) return 0;
  if (it == peaks.end()) return peaks.size() - 1;
  const auto hi = static_cast<std::size_t>(it - peaks.begin());
  return (q - peaks[hi - 1] <= peaks[hi] - q) ? hi - 1 : hi;
}

std::size_t match_to_layer(double q, const DatacubeManifest& manifest) {
  return match_to_layer(q, manifest.anchor_peaks());
}

ParticleSet ensemble_to_particles(const ForecastEnsemble& fc, int lead_day, const DatacubeManifest& manifest) {
  if (lead_day < 1 || lead_day > fc.lead_days())
    throw DataError("lead day " + std::to_string(lead_day) + " outside forecast horizon 1.." +
                    std::to_string(fc.lead_days()));
  const std::vector<double> peaks = manifest.anchor_peaks();
  ParticleSet set;
  const Eigen::Index n = fc.members();
  for (Eigen::Index m = 0; m < n; ++m) {
    const double q = fc.values(m, lead_day - 1);
    set.particles.push_back(Particle{fc.member_ids[static_cast<std::size_t>(m)], match_to_layer(q, peaks), q});
  }
  set.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return set;
}

}  // namespace floodtwin
