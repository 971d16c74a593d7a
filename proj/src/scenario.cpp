#include "floodtwin/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "floodtwin/csv.hpp"
#include "floodtwin/domain_io.hpp"
#include "floodtwin/error.hpp"
#include "floodtwin/hashing.hpp"
#include "json.hpp"

namespace floodtwin {

namespace fs = std::filesystem;
using nlohmann::json;

RatingCurve::RatingCurve(std::vector<RatingKnot> knots) : knots_(std::move(knots)) {
  std::sort(knots_.begin(), knots_.end(),
            [](const RatingKnot& a, const RatingKnot& b) { return a.return_period < b.return_period; });
  if (knots_.size() < 2) throw DataError("rating curve needs at least two knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!(knots_[i].return_period > 0.0) || !(knots_[i].peak > 0.0))
      throw DataError("rating knots must have positive return period and discharge");
    if (i > 0 && !(knots_[i].return_period > knots_[i - 1].return_period))
      throw DataError("rating return periods must be strictly increasing");
    if (i > 0 && !(knots_[i].peak > knots_[i - 1].peak))
      throw DataError("rating discharge must increase with return period");
  }
}

RatingTable read_rating_table(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto cs = t.column("station"), ct = t.column("return_period_years"), cq = t.column("peak_discharge_m3s");
  std::map<std::string, std::vector<RatingKnot>> raw;
  for (const auto& row : t.rows) {
    const std::string& station = row.fields[cs];
    if (station.empty()) throw ParseError(t.source, row.line, "empty station name");
    raw[station].push_back({csv_double(t, row, ct), csv_double(t, row, cq)});
  }
  RatingTable table;
  for (auto& [station, knots] : raw) {
    try {
      table.emplace(station, RatingCurve(std::move(knots)));
    } catch (const DataError& e) {
      throw DataError(t.source + ": station '" + station + "': " + e.what());
    }
  }
  return table;
}

namespace {

// Segment index i such that knots i, i+1 bracket x (end segments for outside values).
template <typename Key>
std::size_t segment(const std::vector<RatingKnot>& k, double x, Key key) {
  std::size_t i = 0;
  while (i + 2 < k.size() && x > key(k[i + 1])) ++i;
  return i;
}

}  // namespace

double return_period_of_peak(double q, const RatingCurve& curve) {
  if (!(q > 0.0)) throw DataError("return period requested for non-positive discharge");
  const auto& k = curve.knots();
  if (k.empty()) throw DataError("empty rating curve");
  for (const auto& knot : k)
    if (q == knot.peak) return knot.return_period;
  if (q < k.front().peak) {
    const double s = std::log(k[1].return_period / k[0].return_period) / std::log(k[1].peak / k[0].peak);
    return k[0].return_period * std::exp(s * std::log(q / k[0].peak));
  }
  const std::size_t i = segment(k, q, [](const RatingKnot& r) { return r.peak; });
  const double f = (q - k[i].peak) / (k[i + 1].peak - k[i].peak);
  const double l0 = std::log(k[i].return_period), l1 = std::log(k[i + 1].return_period);
  return std::exp(l0 + f * (l1 - l0));
}

double peak_for_return_period(double T, const RatingCurve& curve) {
  if (!(T > 0.0)) throw DataError("non-positive return period");
  const auto& k = curve.knots();
  if (k.empty()) throw DataError("empty rating curve");
  for (const auto& knot : k)
    if (T == knot.return_period) return knot.peak;
  if (T < k.front().return_period) {
    const double s = std::log(k[1].return_period / k[0].return_period) / std::log(k[1].peak / k[0].peak);
    return k[0].peak * std::exp(std::log(T / k[0].return_period) / s);
  }
  const std::size_t i = segment(k, T, [](const RatingKnot& r) { return r.return_period; });
  const double l0 = std::log(k[i].return_period), l1 = std::log(k[i + 1].return_period);
  const double f = (std::log(T) - l0) / (l1 - l0);
  const double q = k[i].peak + f * (k[i + 1].peak - k[i].peak);
  if (!(q > 0.0)) throw DataError("return period maps to a non-positive discharge");
  return q;
}

Hydrograph scale_hydrograph(const Hydrograph& base, double target_peak) {
  if (!(target_peak > 0.0)) throw DataError("target peak must be positive");
  const double peak = base.empty() ? 0.0 : base.peak();
  if (!(peak > 0.0)) throw DataError("base hydrograph has no positive peak");
  if (target_peak == peak) return base;
  return base.scaled(target_peak / peak);
}

std::vector<double> default_peak_ladder() {
  std::vector<double> ladder;
  for (int q = 5; q <= 190; q += 5) ladder.push_back(q);
  return ladder;
}

ScenarioSet build_scenario_set(const std::map<std::string, Hydrograph>& base_event, const RatingTable& table,
                               const std::string& anchor_station, const std::vector<double>& anchor_peaks) {
  if (!base_event.count(anchor_station)) throw DataError("anchor station '" + anchor_station + "' has no hydrograph");
  for (const auto& [station, h] : base_event)
    if (!table.count(station)) throw DataError("no rating table for station '" + station + "'");
  if (anchor_peaks.empty()) throw DataError("empty scenario ladder");
  for (std::size_t i = 0; i < anchor_peaks.size(); ++i) {
    if (!(anchor_peaks[i] > 0.0)) throw DataError("scenario peaks must be positive");
    if (i > 0 && !(anchor_peaks[i] > anchor_peaks[i - 1])) throw DataError("scenario peaks must be strictly increasing");
  }

  ScenarioSet set{base_event, anchor_station, {}};
  const RatingCurve& anchor = table.at(anchor_station);
  for (double q : anchor_peaks) {
    Scenario s;
    s.anchor_peak = q;
    s.return_period = return_period_of_peak(q, anchor);
    for (const auto& [station, h] : base_event) {
      const double peak = station == anchor_station ? q : peak_for_return_period(s.return_period, table.at(station));
      s.peaks[station] = peak;
      s.hydrographs.emplace(station, scale_hydrograph(h, peak));
    }
    set.scenarios.push_back(std::move(s));
  }
  return set;
}

std::vector<double> DatacubeManifest::anchor_peaks() const {
  std::vector<double> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.anchor_peak);
  return out;
}

namespace {

std::string scenario_hash(const Scenario& s) {
  Fnv1a h;
  h.update(s.anchor_peak);
  for (const auto& [station, hg] : s.hydrographs) {
    h.update(station);
    for (std::size_t i = 0; i < hg.size(); ++i) h.update(hg.times()[i]).update(hg.discharge()[i]);
  }
  return h.hex();
}

struct Window {
  double start, duration;
};

Window forcing_window(const ScenarioSet& set, const DatacubeRunConfig& run) {
  double start = -1e300, end = 1e300;
  for (const auto& [station, h] : set.base_event) {
    start = std::max(start, h.start());
    end = std::min(end, h.end());
  }
  if (!(end > start)) throw DataError("base hydrographs share no common time span");
  const double duration = run.duration > 0.0 ? run.duration : end - start;
  if (start + duration > end) throw DataError("requested duration exceeds the base hydrograph span");
  return {start, duration};
}

}  // namespace

std::string datacube_config_hash(const ScenarioSet& set, const ModelDomain& domain, const DatacubeRunConfig& run) {
  Fnv1a h;
  h.update(domain_fingerprint(domain));
  h.update(run.duration).update(run.wet_threshold);
  for (const auto& [station, cell] : run.inflow_sites)
    h.update(station).update(static_cast<double>(cell.row)).update(static_cast<double>(cell.col));
  h.update(set.anchor_station);
  for (const auto& s : set.scenarios) h.update(scenario_hash(s));
  return h.hex();
}

bool depth_monotone(const std::vector<Raster>& layers, double tolerance) {
  for (std::size_t k = 1; k < layers.size(); ++k) {
    const Raster& a = layers[k - 1];
    const Raster& b = layers[k];
    if (!aligned(a.spec(), b.spec())) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a.is_nodata(i) || b.is_nodata(i)) continue;
      if (b[i] < a[i] - tolerance) return false;
    }
  }
  return true;
}

HazardDatacube build_datacube(const ScenarioSet& set, const ModelDomain& domain, const DatacubeRunConfig& run) {
  const Window w = forcing_window(set, run);
  for (const auto& [station, h] : set.base_event)
    if (!run.inflow_sites.count(station)) throw DataError("station '" + station + "' has no inflow site");

  const std::size_t n = set.scenarios.size();
  std::vector<std::optional<SimulationOutput>> results(n);
  std::vector<std::string> errors(n);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const Scenario& s = set.scenarios[i];
      BoundaryForcing forcing;
      forcing.start_time = w.start;
      for (const auto& [station, h] : s.hydrographs) forcing.inflows.push_back({station, run.inflow_sites.at(station), h});
      try {
        results[i] = simulate(domain, forcing, w.duration, {});
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(run.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  HazardDatacube cube;
  cube.manifest.grid = domain.grid();
  cube.manifest.config_hash = datacube_config_hash(set, domain, run);
  char name[64];
  for (std::size_t i = 0; i < n; ++i) {
    const Scenario& s = set.scenarios[i];
    std::snprintf(name, sizeof name, "S%02zu (anchor peak %g m3/s)", i + 1, s.anchor_peak);
    if (!results[i]) {
      cube.manifest.complete = false;
      cube.manifest.failures.push_back(std::string(name) + ": " + errors[i]);
      continue;
    }
    const SimulationOutput& out = *results[i];
    if (!out.mass_ok) {
      char msg[128];
      std::snprintf(msg, sizeof msg, ": mass error %.3g beyond tolerance", out.mass_error);
      cube.manifest.warnings.push_back(std::string(name) + msg);
    }
    LayerInfo info;
    info.index = i + 1;
    info.anchor_peak = s.anchor_peak;
    info.return_period = s.return_period;
    info.scenario_hash = scenario_hash(s);
    std::snprintf(name, sizeof name, "layer_%03zu.asc", i + 1);
    info.file = name;
    const BinaryMap wet = binarize_depth(out.max_depth, run.wet_threshold);
    info.wet_area = static_cast<double>(wet.wet_count()) * domain.grid().cell_area();
    info.mass_error = out.mass_error;
    cube.manifest.layers.push_back(info);
    cube.layers.push_back(out.max_depth);
  }
  cube.manifest.monotone = depth_monotone(cube.layers);
  return cube;
}

namespace {

json grid_json(const GridSpec& g) {
  return json{{"ncols", g.ncols}, {"nrows", g.nrows}, {"xllcorner", g.xll},
              {"yllcorner", g.yll}, {"cellsize", g.cellsize}, {"nodata_value", g.nodata}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.ncols = j.at("ncols").get<Eigen::Index>();
  g.nrows = j.at("nrows").get<Eigen::Index>();
  g.xll = j.at("xllcorner").get<double>();
  g.yll = j.at("yllcorner").get<double>();
  g.cellsize = j.at("cellsize").get<double>();
  g.nodata = j.at("nodata_value").get<double>();
  return g;
}

}  // namespace

void save_datacube(HazardDatacube& cube, const fs::path& dir) {
  if (cube.layers.size() != cube.manifest.layers.size()) throw DataError("datacube layer count does not match manifest");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());

  json layers = json::array();
  for (std::size_t i = 0; i < cube.layers.size(); ++i) {
    LayerInfo& info = cube.manifest.layers[i];
    write_ascii_grid(cube.layers[i], dir / info.file);
    info.file_hash = hash_file(dir / info.file);
    layers.push_back(json{{"index", info.index},
                          {"anchor_peak_m3s", info.anchor_peak},
                          {"return_period_years", info.return_period},
                          {"scenario_hash", info.scenario_hash},
                          {"file", info.file},
                          {"file_hash", info.file_hash},
                          {"wet_area_m2", info.wet_area},
                          {"mass_error", info.mass_error}});
  }
  const DatacubeManifest& m = cube.manifest;
  const json doc{{"format", "floodtwin-datacube-1"},
                 {"grid", grid_json(m.grid)},
                 {"config_hash", m.config_hash},
                 {"complete", m.complete},
                 {"monotone", m.monotone},
                 {"failures", m.failures},
                 {"warnings", m.warnings},
                 {"layers", layers}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write manifest in '" + dir.string() + "'");
  out << doc.dump(2) << '\n';
}

DatacubeManifest load_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("no datacube manifest at '" + path.string() + "'");
  try {
    const json j = json::parse(in);
    DatacubeManifest m;
    m.grid = grid_from_json(j.at("grid"));
    m.config_hash = j.at("config_hash").get<std::string>();
    m.complete = j.at("complete").get<bool>();
    m.monotone = j.value("monotone", true);
    m.failures = j.value("failures", std::vector<std::string>{});
    m.warnings = j.value("warnings", std::vector<std::string>{});
    for (const auto& l : j.at("layers")) {
      LayerInfo info;
      info.index = l.at("index").get<std::size_t>();
      info.anchor_peak = l.at("anchor_peak_m3s").get<double>();
      info.return_period = l.value("return_period_years", 0.0);
      info.scenario_hash = l.value("scenario_hash", std::string());
      info.file = l.at("file").get<std::string>();
      info.file_hash = l.at("file_hash").get<std::string>();
      info.wet_area = l.value("wet_area_m2", 0.0);
      info.mass_error = l.value("mass_error", 0.0);
      m.layers.push_back(info);
    }
    for (std::size_t i = 1; i < m.layers.size(); ++i)
      if (!(m.layers[i].anchor_peak > m.layers[i - 1].anchor_peak))
        throw DataError(path.string() + ": anchor peaks not strictly increasing");
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

HazardDatacube load_datacube(const fs::path& dir) {
  HazardDatacube cube;
  cube.manifest = load_manifest(dir);
  for (const auto& info : cube.manifest.layers) {
    const fs::path p = dir / info.file;
    if (hash_file(p) != info.file_hash) throw DataError("integrity check failed for datacube layer '" + p.string() + "'");
    Raster r = read_ascii_grid(p);
    if (!aligned(r.spec(), cube.manifest.grid))
      throw DataError("datacube layer '" + p.string() + "' is not aligned with the manifest grid");
    cube.layers.push_back(std::move(r));
  }
  return cube;
}

}  // namespace floodtwin
