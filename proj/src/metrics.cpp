#include "floodtwin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "floodtwin/error.hpp"
#include "json.hpp"

namespace floodtwin {

void SeriesPair::validate() const {
  if (observed.size() != simulated.size()) throw DataError("observed and simulated series differ in length");
  if (time.size() != 0 && time.size() != observed.size()) throw DataError("series timestamps differ in length");
  if (observed.size() < 2) throw DataError("series needs at least two points");
  if (!observed.allFinite() || !simulated.allFinite()) throw DataError("series contains non-finite values");
}

SeriesPair sample_at_observations(const std::vector<double>& obs_time, const std::vector<double>& obs_value,
                                  const std::vector<double>& sim_time, const std::vector<double>& sim_value) {
  if (obs_time.size() != obs_value.size()) throw DataError("observed times and values differ in length");
  if (sim_time.size() != sim_value.size()) throw DataError("simulated times and values differ in length");
  if (sim_time.empty()) throw DataError("empty simulated series");
  for (std::size_t i = 1; i < sim_time.size(); ++i)
    if (!(sim_time[i] > sim_time[i - 1])) throw DataError("simulated times must be strictly increasing");

  std::vector<double> t, o, s;
  for (std::size_t i = 0; i < obs_time.size(); ++i) {
    const double x = obs_time[i];
    if (x < sim_time.front() || x > sim_time.back()) continue;
    const auto it = std::upper_bound(sim_time.begin(), sim_time.end(), x);
    double v;
    if (it == sim_time.end()) {
      v = sim_value.back();
    } else {
      const auto hi = static_cast<std::size_t>(it - sim_time.begin());
      const std::size_t lo = hi - 1;
      const double w = (x - sim_time[lo]) / (sim_time[hi] - sim_time[lo]);
      v = sim_value[lo] + w * (sim_value[hi] - sim_value[lo]);
    }
    t.push_back(x);
    o.push_back(obs_value[i]);
    s.push_back(v);
  }
  if (t.size() < 2) throw DataError("fewer than two observations fall inside the simulated period");
  SeriesPair p;
  p.time = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  p.observed = Eigen::Map<const Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()));
  p.simulated = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return p;
}

double rmse(const SeriesPair& s) {
  s.validate();
  return std::sqrt((s.simulated - s.observed).squaredNorm() / static_cast<double>(s.size()));
}

namespace {

bool constant(const Eigen::VectorXd& v) { return v.minCoeff() == v.maxCoeff(); }

}  // namespace

double nse(const SeriesPair& s) {
  s.validate();
  // Constancy is tested on the values: the mean of equal values can carry rounding, which
  // would leave a tiny spurious variance.
  if (constant(s.observed)) throw DataError("NSE undefined: observed series is constant");
  const double mean = s.observed.mean();
  const double denom = (s.observed.array() - mean).square().sum();
  return 1.0 - (s.simulated - s.observed).squaredNorm() / denom;
}

KgeScore kge(const SeriesPair& s) {
  s.validate();
  const double n = static_cast<double>(s.size());
  const double mo = s.observed.mean(), ms = s.simulated.mean();
  const Eigen::ArrayXd dox = s.observed.array() - mo, dsx = s.simulated.array() - ms;
  const double so = std::sqrt(dox.square().sum() / n), ss = std::sqrt(dsx.square().sum() / n);
  if (constant(s.observed) || !(so > 0.0)) throw DataError("KGE undefined: observed series has zero variance (r, gamma)");
  if (constant(s.simulated) || !(ss > 0.0)) throw DataError("KGE undefined: simulated series has zero variance (r, gamma)");
  if (mo == 0.0) throw DataError("KGE undefined: observed mean is zero (beta, gamma)");
  if (ms == 0.0) throw DataError("KGE undefined: simulated mean is zero (gamma)");
  KgeScore k;
  k.r = (dox * dsx).sum() / n / (so * ss);
  k.beta = ms / mo;
  k.gamma = (ss / ms) / (so / mo);
  k.kge = 1.0 - std::sqrt((1.0 - k.r) * (1.0 - k.r) + (1.0 - k.beta) * (1.0 - k.beta) +
                          (1.0 - k.gamma) * (1.0 - k.gamma));
  return k;
}

ContingencyMap contingency(const BinaryMap& sim, const BinaryMap& obs, const std::optional<MaskGrid>& exclusion) {
  if (!aligned(sim.spec, obs.spec)) throw DataError("contingency maps are not aligned");
  if (exclusion && (exclusion->rows() != sim.spec.nrows || exclusion->cols() != sim.spec.ncols))
    throw DataError("exclusion mask does not match the grid");
  ContingencyMap c;
  c.spec = sim.spec;
  c.labels.resize(sim.spec.nrows, sim.spec.ncols);
  const Eigen::Index n = sim.spec.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    Contingency label;
    if (!sim.valid.data()[i] || !obs.valid.data()[i] || (exclusion && exclusion->data()[i])) {
      label = Contingency::Excluded;
      ++c.excluded;
    } else {
      const bool s = sim.wet.data()[i], o = obs.wet.data()[i];
      if (s && o) label = Contingency::Hit, ++c.tp;
      else if (!s && o) label = Contingency::Miss, ++c.fn;
      else if (s && !o) label = Contingency::FalseAlarm, ++c.fp;
      else label = Contingency::CorrectNegative, ++c.tn;
    }
    c.labels.data()[i] = static_cast<std::uint8_t>(label);
  }
  return c;
}

double csi(long long tp, long long fp, long long fn) {
  const long long d = tp + fp + fn;
  if (d <= 0) throw DataError("CSI undefined: neither map has a wet pixel");
  return static_cast<double>(tp) / static_cast<double>(d);
}

double csi(const ContingencyMap& c) { return csi(c.tp, c.fp, c.fn); }

void write_contingency_asc(const ContingencyMap& c, const std::filesystem::path& path) {
  GridSpec g = c.spec;
  g.nodata = 255.0;
  Raster r(g, c.labels.cast<double>());
  write_ascii_grid(r, path);
}

StationScore score_station(const std::string& station, const std::string& run, const SeriesPair& s) {
  StationScore out;
  out.station = station;
  out.run = run;
  out.samples = s.size();
  const double nan = std::nan("");
  out.rmse = out.nse = nan;
  out.kge = {nan, nan, nan, nan};
  try {
    out.rmse = rmse(s);
  } catch (const DataError& e) {
    out.error = e.what();
    return out;
  }
  try {
    out.nse = nse(s);
  } catch (const DataError& e) {
    out.error = e.what();
  }
  try {
    out.kge = kge(s);
  } catch (const DataError& e) {
    out.error += (out.error.empty() ? "" : "; ") + std::string(e.what());
  }
  return out;
}

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string fmt(double v, const char* spec = "%9.4f") {
  if (!std::isfinite(v)) return "      n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string report_json(const VerificationReport& report) {
  using nlohmann::json;
  json stations = json::array();
  for (const auto& s : report.stations) {
    json j{{"station", s.station}, {"run", s.run},      {"samples", s.samples},    {"rmse", number(s.rmse)},
           {"nse", number(s.nse)}, {"kge", number(s.kge.kge)}, {"r", number(s.kge.r)}, {"beta", number(s.kge.beta)},
           {"gamma", number(s.kge.gamma)}};
    if (!s.error.empty()) j["error"] = s.error;
    stations.push_back(j);
  }
  json extents = json::array();
  for (const auto& e : report.extents) {
    json j{{"observation", e.observation}, {"run", e.run}, {"tp", e.tp}, {"fn", e.fn}, {"fp", e.fp},
           {"tn", e.tn}, {"excluded", e.excluded}, {"csi", number(e.csi)}};
    if (!e.error.empty()) j["error"] = e.error;
    extents.push_back(j);
  }
  const json doc{{"issue_date", report.issue_date},
                 {"contingency_legend", {{"0", "correct negative"}, {"1", "hit"}, {"2", "miss"}, {"3", "false alarm"},
                                         {"255", "excluded"}}},
                 {"stations", stations},
                 {"extents", extents}};
  return doc.dump(2) + "\n";
}

std::string report_text(const VerificationReport& report) {
  std::string out = "issue date " + report.issue_date + "\n\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %-4s %6s %9s %9s %9s %9s %9s %9s\n", "station", "run", "n", "RMSE", "NSE", "KGE",
                "r", "beta", "gamma");
  out += buf;
  for (const auto& s : report.stations) {
    std::snprintf(buf, sizeof buf, "%-16s %-4s %6lld %s %s %s %s %s %s\n", s.station.c_str(), s.run.c_str(), s.samples,
                  fmt(s.rmse).c_str(), fmt(s.nse).c_str(), fmt(s.kge.kge).c_str(), fmt(s.kge.r).c_str(),
                  fmt(s.kge.beta).c_str(), fmt(s.kge.gamma).c_str());
    out += buf;
  }
  if (!report.extents.empty()) {
    out += "\n";
    std::snprintf(buf, sizeof buf, "%-24s %-4s %8s %8s %8s %8s %9s\n", "observation", "run", "TP", "FN", "FP", "TN", "CSI");
    out += buf;
    for (const auto& e : report.extents) {
      std::snprintf(buf, sizeof buf, "%-24s %-4s %8lld %8lld %8lld %8lld %s\n", e.observation.c_str(), e.run.c_str(), e.tp,
                    e.fn, e.fp, e.tn, fmt(e.csi).c_str());
      out += buf;
    }
  }
  return out;
}

}  // namespace floodtwin
