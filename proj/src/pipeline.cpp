#include "floodtwin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "floodtwin/csv.hpp"
#include "floodtwin/domain_io.hpp"
#include "floodtwin/error.hpp"
#include "floodtwin/hashing.hpp"
#include "floodtwin/metrics.hpp"
#include "json.hpp"

namespace floodtwin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

const fs::path& need(const fs::path& p, const std::string& key) {
  if (p.empty()) throw DataError("run config has no '" + key + "'");
  if (!fs::exists(p)) throw DataError(key + " '" + p.string() + "' does not exist");
  return p;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<GaugeObservationSource> parse_gauge_sources(const json& arr, const fs::path& base) {
  std::vector<GaugeObservationSource> out;
  for (const auto& g : arr) {
    GaugeObservationSource s;
    s.gauge = g.at("gauge").get<std::string>();
    s.file = resolve(base, g.at("file").get<std::string>());
    s.variable = g.value("variable", s.variable);
    if (s.variable != "level" && s.variable != "depth" && s.variable != "discharge")
      throw DataError("gauge '" + s.gauge + "': unknown variable '" + s.variable + "'");
    out.push_back(std::move(s));
  }
  return out;
}

ParameterRange parse_range(const json& j, const char* key, ParameterRange fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j[key].get<std::vector<double>>();
  if (v.size() != 2) throw DataError(std::string("range '") + key + "' needs [lo, hi]");
  return {v[0], v[1]};
}

std::vector<double> parse_ladder(const json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  const double start = j.at("start").get<double>(), stop = j.at("stop").get<double>(), step = j.at("step").get<double>();
  if (!(step > 0.0) || !(stop >= start)) throw DataError("ladder needs start <= stop and step > 0");
  std::vector<double> out;
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  for (long long k = 0; k <= n; ++k) out.push_back(start + step * static_cast<double>(k));
  return out;
}

struct Effective {
  std::uint64_t seed;
  unsigned threads;
  std::optional<std::string> issue_date;
};

Effective effective(const RunConfig& c, const CommandOptions& o) {
  Effective e{o.seed.value_or(c.seed), o.threads.value_or(c.threads), o.issue_date ? o.issue_date : c.issue_date};
  if (e.issue_date) parse_iso8601(*e.issue_date);
  return e;
}

fs::path output_dir(const RunConfig& c, const CommandOptions& o, const std::string& command) {
  const fs::path dir = o.out ? *o.out : c.output / command;
  fs::create_directories(dir);
  return dir;
}

// Manifest of a run directory. Holds no clock time or thread count, so a rerun from the same
// inputs writes the same bytes.
void write_run_manifest(const fs::path& dir, const std::string& command, const RunConfig& c, const Effective& e,
                        const std::map<std::string, std::string>& inputs, const std::vector<std::string>& outputs) {
  json m;
  m["format"] = "floodtwin-run-1";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = c.source.filename().string();
  m["config_hash"] = c.hash;
  m["seed"] = e.seed;
  m["issue_date"] = e.issue_date ? json(*e.issue_date) : json(nullptr);
  m["inputs"] = inputs;
  json out = json::object();
  for (const auto& f : outputs) out[f] = hash_file(dir / f);
  m["outputs"] = out;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

ObservationMap on_grid(ObservationMap o, const GridSpec& g, std::ostream& log) {
  if (aligned(o.probability.spec(), g)) return o;
  log << "observation " << o.name << ": resampled to the model grid (nearest cell)\n";
  const GridSpec from = o.probability.spec();
  o.probability = resample_nearest(o.probability, g);
  if (o.exclusion) {
    const Raster mask(from, o.exclusion->cast<double>().eval());
    const Raster r = resample_nearest(mask, g);
    o.exclusion = (r.values() != 0.0 && r.values() != g.nodata).eval();
  }
  o.validate();
  return o;
}

std::vector<ObservationMap> load_observations(const std::vector<fs::path>& paths, const GridSpec& g,
                                              std::map<std::string, std::string>& inputs, std::ostream& log) {
  std::vector<ObservationMap> out;
  for (const auto& p : paths) {
    need(p, "observation");
    ObservationMap o = on_grid(load_observation(p), g, log);
    inputs["observation:" + o.name] = hash_file(p);
    out.push_back(std::move(o));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

double gauge_level(const ModelDomain& d, const CellIndex& cell, double depth) {
  const int k = d.channel_index()(cell.row, cell.col);
  if (k >= 0) return d.channel_bed()[static_cast<std::size_t>(k)] + depth;
  return d.dem()(cell.row, cell.col) + depth;
}

void write_daily_products(const fs::path& dir, const CycleResult& r, const DomainBundle& bundle,
                          std::vector<std::string>& outputs) {
  for (const auto& day : r.days) {
    const std::string name = depth_file_name(day.lead_day);
    write_ascii_grid(day.depth, dir / name);
    outputs.push_back(name);
  }
  std::string csv = "timestamp,lead_day,gauge,depth_m,level_m,discharge_m3s\n";
  for (const auto& day : r.days) {
    for (const auto& g : bundle.gauges) {
      if (!day.depth.spec().contains(g.cell.row, g.cell.col))
        throw DataError("gauge '" + g.name + "' lies outside the datacube grid");
      const bool nodata = day.depth.is_nodata(g.cell.row, g.cell.col);
      const double d = day.depth(g.cell.row, g.cell.col);
      csv += format_iso8601(day.time) + "," + std::to_string(day.lead_day) + "," + g.name + ",";
      csv += nodata ? std::string(",,") : num(d) + "," + num(gauge_level(bundle.domain, g.cell, d)) + ",";
      csv += num(day.discharge) + "\n";
    }
  }
  write_text(dir / "gauges.csv", csv);
  outputs.push_back("gauges.csv");
}

struct CycleInputs {
  DomainBundle bundle;
  HazardDatacube cube;
  ForecastEnsemble forecast;
  std::map<std::string, std::string> inputs;
};

CycleInputs cycle_inputs(const RunConfig& c, const Effective& e) {
  CycleInputs in{load_domain_config(need(c.domain, "domain")), load_datacube(need(c.datacube, "datacube")), {}, {}};
  if (!aligned(in.cube.manifest.grid, in.bundle.domain.grid()))
    throw DataError("datacube grid does not match the domain DEM");
  ForecastLoadOptions fo;
  fo.issue_date = e.issue_date;
  fo.include_control = c.include_control;
  in.forecast = load_forecast_ensemble(need(c.forecasts, "forecasts"), fo);
  in.inputs["domain"] = domain_fingerprint(in.bundle.domain);
  in.inputs["datacube"] = in.cube.manifest.config_hash;
  in.inputs["forecasts"] = hash_file(c.forecasts);
  return in;
}

Effective with_forecast_date(Effective e, const ForecastEnsemble& fc) {
  e.issue_date = fc.issue_date;
  return e;
}

struct Window {
  double start, duration;
};

Window common_window(const std::map<std::string, Hydrograph>& event, double duration) {
  double start = -1e300, end = 1e300;
  for (const auto& [station, h] : event) {
    start = std::max(start, h.start());
    end = std::min(end, h.end());
  }
  if (event.empty() || !(end > start)) throw DataError("base hydrographs share no common time span");
  const double d = duration > 0.0 ? duration : end - start;
  if (start + d > end) throw DataError("requested duration exceeds the base hydrograph span");
  return {start, d};
}

std::map<std::string, Hydrograph> read_base_event(const RunConfig& c, std::map<std::string, std::string>& inputs) {
  if (c.base_event.empty()) throw DataError("run config has no 'base_event'");
  std::map<std::string, Hydrograph> event;
  for (const auto& [station, path] : c.base_event) {
    event.emplace(station, read_hydrograph_csv(need(path, "base_event")));
    inputs["base_event:" + station] = hash_file(path);
  }
  return event;
}

BinaryMap observed_extent(const ObservationMap& o, double threshold) {
  BinaryMap b = binarize_probability(o.probability, threshold);
  if (o.exclusion) b.valid = (b.valid && !o.exclusion->array()).eval();
  return b;
}

}  // namespace

std::string depth_file_name(int lead_day) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "depth_d%02d.asc", lead_day);
  return buf;
}

RunConfig load_run_config(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_object()) throw DataError(path.string() + ": run config must be a JSON object");
  const fs::path base = path.parent_path();
  RunConfig c;
  c.source = path;
  try {
    json hashed = j;
    hashed.erase("threads");
    c.hash = hash_string(hashed.dump());
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (c.threads < 1) throw DataError("threads must be at least 1");
    c.output = resolve(base, j.value("output", std::string("runs")));
    if (j.contains("issue_date")) c.issue_date = j["issue_date"].get<std::string>();
    const auto path_of = [&](const char* key) { return j.contains(key) ? resolve(base, j[key].get<std::string>()) : fs::path(); };
    c.domain = path_of("domain");
    c.datacube = path_of("datacube");
    c.rating_table = path_of("rating_table");
    c.forecasts = path_of("forecasts");
    if (j.contains("base_event"))
      for (const auto& [station, p] : j["base_event"].items()) c.base_event[station] = resolve(base, p.get<std::string>());
    c.anchor_station = j.value("anchor_station", std::string());
    if (j.contains("ladder")) c.ladder = parse_ladder(j["ladder"]);
    c.duration = j.value("duration_s", 0.0);
    c.include_control = j.value("include_control", false);
    if (j.contains("observations"))
      for (const auto& p : j["observations"]) c.observations.push_back(resolve(base, p.get<std::string>()));

    if (j.contains("pf")) {
      const json& p = j["pf"];
      const std::string mode = p.value("alpha_mode", std::string("adaptive"));
      if (mode != "adaptive" && mode != "fixed") throw DataError("pf.alpha_mode must be 'adaptive' or 'fixed'");
      c.pf.adaptive_alpha = mode == "adaptive";
      c.pf.alpha = p.value("alpha", c.pf.alpha);
      c.pf.tau = p.value("tau", c.pf.tau);
      c.pf.wet_threshold = p.value("wet_threshold", c.pf.wet_threshold);
      c.pf.clip = p.value("probability_clip", c.pf.clip);
    }
    if (!(c.pf.alpha >= 0.0 && c.pf.alpha <= 1.0)) throw DataError("pf.alpha must lie in [0, 1]");
    if (!(c.pf.tau > 0.0 && c.pf.tau <= 1.0)) throw DataError("pf.tau must lie in (0, 1]");
    if (!(c.pf.wet_threshold >= 0.0)) throw DataError("pf.wet_threshold must be non-negative");
    if (!(c.pf.clip > 0.0 && c.pf.clip < 0.5)) throw DataError("pf.probability_clip must lie in (0, 0.5)");

    if (j.contains("verify")) {
      const json& v = j["verify"];
      if (v.contains("runs"))
        for (const auto& [label, p] : v["runs"].items()) c.verify_runs[label] = resolve(base, p.get<std::string>());
      if (v.contains("gauges")) c.verify_gauges = parse_gauge_sources(v["gauges"], base);
      if (v.contains("extents"))
        for (const auto& p : v["extents"]) c.verify_extents.push_back(resolve(base, p.get<std::string>()));
      c.probability_threshold = v.value("probability_threshold", c.probability_threshold);
    }
    if (!(c.probability_threshold > 0.0 && c.probability_threshold <= 1.0))
      throw DataError("verify.probability_threshold must lie in (0, 1]");

    if (j.contains("calibration")) {
      const json& k = j["calibration"];
      c.calibration.samples = k.value("samples", c.calibration.samples);
      if (k.contains("ranges")) {
        c.calibration.ranges.clear();
        for (const auto& r : k["ranges"]) {
          const ParameterRanges d;
          c.calibration.ranges.push_back({parse_range(r, "r_ch", d.r_ch), parse_range(r, "p_ch", d.p_ch),
                                          parse_range(r, "n_ch", d.n_ch), parse_range(r, "n_fp", d.n_fp)});
        }
      }
      if (k.contains("order")) c.calibration.order = k["order"].get<std::vector<std::string>>();
      c.calibration_duration = k.value("duration_s", 0.0);
      if (k.contains("gauges")) c.calibration_gauges = parse_gauge_sources(k["gauges"], base);
      if (k.contains("reference_extent")) c.calibration_extent = resolve(base, k["reference_extent"].get<std::string>());
    }

    if (c.issue_date) c.twin.issue_date = *c.issue_date;
    if (j.contains("twin")) {
      const json& t = j["twin"];
      const int layer = t.value("truth_layer", 1);
      if (layer < 1) throw DataError("twin.truth_layer is 1-based");
      c.twin.truth_layer = static_cast<std::size_t>(layer - 1);
      c.twin.false_wet_rate = t.value("false_wet_rate", c.twin.false_wet_rate);
      c.twin.false_dry_rate = t.value("false_dry_rate", c.twin.false_dry_rate);
      c.twin.sigma = t.value("sigma", c.twin.sigma);
      c.twin.members = t.value("members", c.twin.members);
      c.twin.lead_days = t.value("lead_days", c.twin.lead_days);
      c.twin.member_persistence = t.value("persistence", c.twin.member_persistence);
      c.twin.issue_date = t.value("issue_date", c.twin.issue_date);
      if (t.contains("observation_times"))
        for (const auto& s : t["observation_times"]) c.twin.observation_times.push_back(parse_iso8601(s.get<std::string>()));
      c.twin.validate();
    }
    c.twin.wet_threshold = c.pf.wet_threshold;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return c;
}

void cmd_build_datacube(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const Effective e = effective(c, o);
  const DomainBundle bundle = load_domain_config(need(c.domain, "domain"));
  const RatingTable table = read_rating_table(need(c.rating_table, "rating_table"));
  std::map<std::string, std::string> inputs;
  const ScenarioSet set = build_scenario_set(read_base_event(c, inputs), table, c.anchor_station, c.ladder);
  DatacubeRunConfig run;
  run.duration = c.duration;
  run.inflow_sites = bundle.inflow_sites;
  run.threads = e.threads;
  run.wet_threshold = c.pf.wet_threshold;
  const std::string hash = datacube_config_hash(set, bundle.domain, run);
  const fs::path dir = o.out ? *o.out : c.datacube;
  if (dir.empty()) throw DataError("run config has no 'datacube'");

  if (fs::exists(dir / "manifest.json")) {
    try {
      const DatacubeManifest m = load_manifest(dir);
      if (m.config_hash == hash && m.complete) {
        load_datacube(dir);
        log << "datacube " << dir.string() << " is up to date (" << hash << "), nothing to do\n";
        return;
      }
      log << "datacube configuration changed, rebuilding\n";
    } catch (const DataError& err) {
      log << "cached datacube unusable (" << err.what() << "), rebuilding\n";
    }
  }

  HazardDatacube cube = build_datacube(set, bundle.domain, run);
  fs::create_directories(dir);
  save_datacube(cube, dir);
  char line[160];
  for (const auto& l : cube.manifest.layers) {
    std::snprintf(line, sizeof line, "S%02zu  peak %7.2f m3/s  T %9.2f y  wet area %12.0f m2\n", l.index, l.anchor_peak,
                  l.return_period, l.wet_area);
    log << line;
  }
  for (const auto& w : cube.manifest.warnings) log << "warning: " << w << "\n";
  log << cube.size() << " layers written to " << dir.string() << "\n";
  if (!cube.manifest.complete) {
    std::string msg = "datacube incomplete:";
    for (const auto& f : cube.manifest.failures) msg += " " + f + ";";
    throw NumericalError(msg);
  }
}

void cmd_forecast(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  CycleInputs in = cycle_inputs(c, effective(c, o));
  const Effective e = with_forecast_date(effective(c, o), in.forecast);
  const CycleResult r = assimilation_cycle(in.forecast, in.cube, {}, c.pf);
  const fs::path dir = output_dir(c, o, "forecast");
  std::vector<std::string> outputs;
  write_daily_products(dir, r, in.bundle, outputs);
  write_run_manifest(dir, "forecast", c, e, in.inputs, outputs);
  log << "open loop for " << in.forecast.issue_date << ": " << in.forecast.members() << " members, "
      << r.days.size() << " lead days written to " << dir.string() << "\n";
}

void cmd_assimilate(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  CycleInputs in = cycle_inputs(c, effective(c, o));
  const Effective e = with_forecast_date(effective(c, o), in.forecast);
  if (c.observations.empty()) throw DataError("assimilate needs at least one observation");
  const std::vector<ObservationMap> obs = load_observations(c.observations, in.cube.manifest.grid, in.inputs, log);
  const CycleResult r = assimilation_cycle(in.forecast, in.cube, obs, c.pf);
  const fs::path dir = output_dir(c, o, "assimilate");
  std::vector<std::string> outputs;
  write_daily_products(dir, r, in.bundle, outputs);

  std::string csv = "observation,timestamp,lead_day,member,log_likelihood,weight,alpha,ess\n";
  for (const auto& a : r.analyses) {
    for (Eigen::Index m = 0; m < a.weights.weights.size(); ++m) {
      csv += a.observation + "," + format_iso8601(a.time) + "," + std::to_string(a.lead_day) + "," +
             std::to_string(in.forecast.member_ids[static_cast<std::size_t>(m)]) + "," +
             num(a.weights.log_likelihood(m)) + "," + num(a.weights.weights(m)) + "," + num(a.weights.alpha) + "," +
             num(a.weights.ess) + "\n";
    }
    char line[200];
    std::snprintf(line, sizeof line, "%s (lead day %d): alpha %.6f, ESS %.2f of %lld\n", a.observation.c_str(),
                  a.lead_day, a.weights.alpha, a.weights.ess, static_cast<long long>(a.weights.weights.size()));
    log << line;
  }
  write_text(dir / "weights.csv", csv);
  outputs.push_back("weights.csv");
  for (const auto& name : r.ignored) log << "observation " << name << " lies beyond the forecast horizon, ignored\n";
  write_run_manifest(dir, "assimilate", c, e, in.inputs, outputs);
  log << r.days.size() << " lead days written to " << dir.string() << "\n";
}

void cmd_verify(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const Effective e = effective(c, o);
  if (c.verify_runs.empty()) throw DataError("run config has no verify.runs");
  std::map<std::string, std::string> inputs;
  std::vector<GaugeObservation> observed;
  for (const auto& g : c.verify_gauges) {
    observed.push_back(read_gauge_observation(need(g.file, "verify gauge"), g.gauge, g.variable));
    inputs["gauge:" + g.gauge] = hash_file(g.file);
  }

  VerificationReport report;
  const fs::path dir = output_dir(c, o, "verify");
  std::vector<std::string> outputs;
  std::vector<std::string> gaps;
  for (const auto& [label, run_dir] : c.verify_runs) {
    need(run_dir / "manifest.json", "run manifest");
    const json manifest = read_json(run_dir / "manifest.json");
    inputs["run:" + label] = hash_file(run_dir / "manifest.json");
    const std::string issue = manifest.at("issue_date").is_string() ? manifest["issue_date"].get<std::string>() : "";
    if (issue.empty()) throw DataError("run '" + label + "' records no issue date");
    if (report.issue_date.empty()) report.issue_date = issue;
    else if (report.issue_date != issue) report.issue_date += "," + issue;

    const CsvTable t = read_csv(need(run_dir / "gauges.csv", "gauge series"));
    const auto ct = t.column("timestamp"), cg = t.column("gauge");
    std::map<std::string, std::size_t> col{{"depth", t.column("depth_m")}, {"level", t.column("level_m")},
                                           {"discharge", t.column("discharge_m3s")}};
    for (const auto& obs : observed) {
      std::vector<double> st, sv;
      bool present = false;
      for (const auto& row : t.rows) {
        if (row.fields[cg] != obs.gauge) continue;
        present = true;
        const std::string& v = row.fields[col.at(obs.variable)];
        if (v.empty()) continue;
        st.push_back(parse_iso8601(row.fields[ct]));
        sv.push_back(csv_double(t, row, col.at(obs.variable)));
      }
      if (!present) {
        gaps.push_back(label + "/" + obs.gauge);
        continue;
      }
      try {
        report.stations.push_back(score_station(obs.gauge, label, sample_at_observations(obs.time, obs.value, st, sv)));
      } catch (const DataError& err) {
        StationScore s;
        s.station = obs.gauge;
        s.run = label;
        s.rmse = s.nse = s.kge.kge = s.kge.r = s.kge.beta = s.kge.gamma = std::nan("");
        s.error = err.what();
        report.stations.push_back(s);
      }
    }

    for (const auto& p : c.verify_extents) {
      const ObservationMap raw = load_observation(need(p, "verify extent"));
      inputs["extent:" + raw.name] = hash_file(p);
      ExtentScore s;
      s.observation = raw.name;
      s.run = label;
      const int day = lead_day_of(raw.time, parse_iso8601(issue));
      const fs::path depth_file = run_dir / depth_file_name(day);
      if (!fs::exists(depth_file)) {
        s.csi = std::nan("");
        s.error = "no depth product for lead day " + std::to_string(day);
        report.extents.push_back(s);
        continue;
      }
      const Raster depth = read_ascii_grid(depth_file);
      const ObservationMap ob = on_grid(raw, depth.spec(), log);
      const ContingencyMap cm = contingency(binarize_depth(depth, c.pf.wet_threshold),
                                            observed_extent(ob, c.probability_threshold));
      const std::string name = "contingency_" + label + "_" + raw.name + ".asc";
      write_contingency_asc(cm, dir / name);
      outputs.push_back(name);
      s.tp = cm.tp;
      s.fn = cm.fn;
      s.fp = cm.fp;
      s.tn = cm.tn;
      s.excluded = cm.excluded;
      try {
        s.csi = csi(cm);
      } catch (const DataError& err) {
        s.csi = std::nan("");
        s.error = err.what();
      }
      report.extents.push_back(s);
    }
  }
  if (!gaps.empty()) {
    std::string msg = "missing gauge series:";
    for (const auto& g : gaps) msg += " " + g;
    throw DataError(msg);
  }
  write_text(dir / "report.json", report_json(report));
  write_text(dir / "report.txt", report_text(report));
  outputs.push_back("report.json");
  outputs.push_back("report.txt");
  write_run_manifest(dir, "verify", c, e, inputs, outputs);
  log << report_text(report);
}

void cmd_calibrate(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const Effective e = effective(c, o);
  const DomainBundle bundle = load_domain_config(need(c.domain, "domain"));
  std::map<std::string, std::string> inputs;
  inputs["domain"] = domain_fingerprint(bundle.domain);
  const std::map<std::string, Hydrograph> event = read_base_event(c, inputs);
  const Window w = common_window(event, c.calibration_duration > 0.0 ? c.calibration_duration : c.duration);
  BoundaryForcing forcing;
  forcing.start_time = w.start;
  for (const auto& [station, h] : event) {
    const auto site = bundle.inflow_sites.find(station);
    if (site == bundle.inflow_sites.end()) throw DataError("station '" + station + "' has no inflow site");
    forcing.inflows.push_back({station, site->second, h});
  }

  CalibrationData data;
  for (const auto& g : c.calibration_gauges) {
    data.gauges.push_back(read_gauge_observation(need(g.file, "calibration gauge"), g.gauge, g.variable));
    inputs["gauge:" + g.gauge] = hash_file(g.file);
  }
  if (c.calibration_extent) {
    const ObservationMap ob = on_grid(load_observation(need(*c.calibration_extent, "reference_extent")),
                                      bundle.domain.grid(), log);
    data.reference_extent = observed_extent(ob, c.probability_threshold);
    inputs["reference_extent"] = hash_file(*c.calibration_extent);
  }

  CalibrationConfig cc = c.calibration;
  cc.seed = e.seed;
  cc.threads = e.threads;
  cc.wet_threshold = c.pf.wet_threshold;
  const CalibrationResult r = run_calibration(bundle.domain, forcing, w.duration, bundle.gauges, data, cc);
  const fs::path dir = output_dir(c, o, "calibrate");
  write_calibration_csv(r, dir / "calibration.csv");
  write_run_manifest(dir, "calibrate", c, e, inputs, {"calibration.csv"});

  const ParameterSample& best = r.samples[r.best];
  log << r.samples.size() << " samples, " << r.failures.size() << " failed\n";
  for (const auto& f : r.failures) log << "  " << f << "\n";
  char line[200];
  for (std::size_t k = 0; k < best.regions.size(); ++k) {
    const RegionParameters& p = best.regions[k];
    std::snprintf(line, sizeof line, "best sample %zu region %zu: r_ch %.4f p_ch %.4f n_ch %.4f n_fp %.4f (weight %.4f)\n",
                  best.id, k + 1, p.r_ch, p.p_ch, p.n_ch, p.n_fp, r.combined.weight(static_cast<Eigen::Index>(r.best)));
    log << line;
  }
}

void cmd_twin(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const Effective e = effective(c, o);
  const HazardDatacube cube = load_datacube(need(c.datacube, "datacube"));
  const DomainBundle bundle = load_domain_config(need(c.domain, "domain"));
  TwinSpec spec = c.twin;
  spec.seed = e.seed;
  if (o.issue_date) spec.issue_date = *o.issue_date;
  const TwinDataset twin = make_twin(spec, cube);

  const fs::path dir = output_dir(c, o, "twin");
  std::vector<std::string> outputs;
  write_forecast_csv(twin.forecast, dir / "forecast.csv");
  outputs.push_back("forecast.csv");
  fs::create_directories(dir / "observations");
  json obs = json::array();
  for (const auto& ob : twin.observations) {
    save_observation(ob, dir / "observations");
    outputs.push_back("observations/" + ob.name + ".asc");
    outputs.push_back("observations/" + ob.name + ".json");
    obs.push_back({{"name", ob.name}, {"timestamp", format_iso8601(ob.time)}});
  }
  write_ascii_grid(twin.truth_depth, dir / "truth_depth.asc");
  outputs.push_back("truth_depth.asc");

  const double issue = twin.forecast.issue_time();
  for (const auto& g : bundle.gauges) {
    if (!twin.truth_depth.spec().contains(g.cell.row, g.cell.col))
      throw DataError("gauge '" + g.name + "' lies outside the datacube grid");
    std::string csv = "timestamp,value\n";
    const double d = twin.truth_depth(g.cell.row, g.cell.col);
    for (int day = 1; day <= spec.lead_days; ++day)
      csv += format_iso8601(issue + (day - 0.5) * kSecondsPerDay) + "," + num(d) + "\n";
    const std::string name = "truth_" + g.name + ".csv";
    write_text(dir / name, csv);
    outputs.push_back(name);
  }

  json info;
  info["truth_layer"] = twin.truth_layer + 1;
  info["truth_discharge_m3s"] = twin.truth_discharge;
  info["issue_date"] = twin.forecast.issue_date;
  info["members"] = spec.members;
  info["lead_days"] = spec.lead_days;
  info["sigma"] = spec.sigma;
  info["persistence"] = spec.member_persistence;
  info["false_wet_rate"] = spec.false_wet_rate;
  info["false_dry_rate"] = spec.false_dry_rate;
  info["observations"] = obs;
  write_text(dir / "twin.json", info.dump(2) + "\n");
  outputs.push_back("twin.json");

  std::map<std::string, std::string> inputs{{"datacube", cube.manifest.config_hash},
                                            {"domain", domain_fingerprint(bundle.domain)}};
  write_run_manifest(dir, "twin", c, Effective{e.seed, e.threads, twin.forecast.issue_date}, inputs, outputs);
  log << "twin: truth layer " << twin.truth_layer + 1 << " (" << twin.truth_discharge << " m3/s), "
      << spec.members << " members, " << twin.observations.size() << " observations written to " << dir.string() << "\n";
}

void write_example_case(const fs::path& dir, const ExampleCase& ex) {
  fs::create_directories(dir / "obs");
  const SyntheticValley v = make_valley(ex.valley);
  const ModelDomain& d = v.domain;
  write_ascii_grid(d.dem(), dir / "dem.asc");
  write_channel_csv(d.channel(), dir / "channel.csv");

  const auto cell = [](const CellIndex& c) { return json{{"row", c.row}, {"col", c.col}}; };
  const auto params = [](const RegionParameters& p) {
    return json{{"r_ch", p.r_ch}, {"p_ch", p.p_ch}, {"n_ch", p.n_ch}, {"n_fp", p.n_fp}};
  };
  const SolverConfig& s = ex.valley.solver;
  json dom;
  dom["dem"] = "dem.asc";
  dom["channel"] = "channel.csv";
  dom["use_depth_law"] = true;
  dom["parameters"] = params(ex.truth);
  dom["solver"] = {{"cfl", s.cfl},
                   {"dt_min", s.dt_min},
                   {"dt_max", s.dt_max},
                   {"depth_threshold", s.depth_threshold},
                   {"output_interval_s", s.output_interval},
                   {"mass_tolerance", s.mass_tolerance}};
  const CellIndex outlet{ex.valley.nrows - 1, ex.valley.ncols / 2};
  dom["outlets"] = json::array({{{"row", outlet.row}, {"col", outlet.col}, {"slope", ex.valley.slope}, {"kind", "channel"}},
                                {{"edge", "south"}, {"slope", ex.valley.slope}}});
  dom["inflows"] = {{ex.station, {{"channel_index", 0}}}};
  dom["gauges"] = json::array();
  for (const auto& g : v.gauges) {
    json gj = cell(g.cell);
    gj["name"] = g.name;
    dom["gauges"].push_back(gj);
  }
  write_text(dir / "domain.json", dom.dump(2) + "\n");

  write_text(dir / "rating.csv", "station,return_period_years,peak_discharge_m3s\n" + ex.station + ",2,51.8\n" +
                                     ex.station + ",5,66.8\n" + ex.station + ",10,78.5\n" + ex.station + ",20,90.5\n" +
                                     ex.station + ",50,107\n" + ex.station + ",100,121\n");
  const double t0 = parse_iso8601(ex.start);
  std::vector<double> times;
  for (double h : ex.base_hours) times.push_back(t0 + 3600.0 * h);
  const Hydrograph base(times, ex.base_discharge);
  write_hydrograph_csv(base, dir / "base_event.csv");

  // Reference run for the calibration data, from the files just written.
  const DomainBundle bundle = load_domain_config(dir / "domain.json");
  BoundaryForcing forcing{base.start(), {InflowPoint{ex.station, bundle.inflow_sites.at(ex.station), base}}};
  const SimulationOutput ref = simulate(bundle.domain, forcing, base.end() - base.start(), bundle.gauges);
  json calib_gauges = json::array();
  for (const auto& g : ref.gauges) {
    std::string csv = "timestamp,value\n";
    for (std::size_t i = 0; i < g.time.size(); ++i) csv += format_iso8601(base.start() + g.time[i]) + "," + num(g.level[i]) + "\n";
    write_text(dir / "obs" / ("level_" + g.gauge.name + ".csv"), csv);
    calib_gauges.push_back({{"gauge", g.gauge.name}, {"file", "obs/level_" + g.gauge.name + ".csv"}, {"variable", "level"}});
  }
  ObservationMap extent;
  extent.name = "reference_extent";
  extent.time = base.end();
  extent.probability = Raster(ref.max_depth.spec(), 0.0);
  for (Eigen::Index i = 0; i < extent.probability.size(); ++i)
    extent.probability[i] = ref.max_depth[i] > kDefaultWetThreshold ? 1.0 : 0.0;
  save_observation(extent, dir / "obs");

  std::vector<double> ladder = ex.ladder;
  if (ladder.empty())
    for (int k = 1; k <= 20; ++k) ladder.push_back(10.0 * k);
  const std::string issue = format_date(t0);
  json cfg;
  cfg["seed"] = 1;
  cfg["threads"] = 1;
  cfg["output"] = "runs";
  cfg["issue_date"] = issue;
  cfg["domain"] = "domain.json";
  cfg["datacube"] = "datacube";
  cfg["rating_table"] = "rating.csv";
  cfg["base_event"] = {{ex.station, "base_event.csv"}};
  cfg["anchor_station"] = ex.station;
  cfg["ladder"] = ladder;
  cfg["forecasts"] = "runs/twin/forecast.csv";
  cfg["observations"] = {"runs/twin/observations/obs_1.json", "runs/twin/observations/obs_2.json"};
  cfg["pf"] = {{"alpha_mode", "adaptive"}, {"tau", 0.5}, {"alpha", 1.0}, {"wet_threshold", kDefaultWetThreshold},
               {"probability_clip", kProbabilityClip}};
  json verify_gauges = json::array();
  for (const auto& g : v.gauges)
    verify_gauges.push_back({{"gauge", g.name}, {"file", "runs/twin/truth_" + g.name + ".csv"}, {"variable", "depth"}});
  cfg["verify"] = {{"runs", {{"OL", "runs/forecast"}, {"PF", "runs/assimilate"}}},
                   {"gauges", verify_gauges},
                   {"extents", cfg["observations"]},
                   {"probability_threshold", 0.25}};
  cfg["calibration"] = {{"samples", ex.calibration_samples},
                        {"gauges", calib_gauges},
                        {"reference_extent", "obs/reference_extent.json"}};
  cfg["twin"] = {{"truth_layer", (ladder.size() + 1) / 2},
                 {"false_wet_rate", 0.1},
                 {"false_dry_rate", 0.1},
                 {"sigma", 0.3},
                 {"members", 50},
                 {"lead_days", 30},
                 {"persistence", 1.0},
                 {"observation_times", {format_iso8601(t0 + 0.5 * kSecondsPerDay), format_iso8601(t0 + 5.5 * kSecondsPerDay)}}};
  write_text(dir / "config.json", cfg.dump(2) + "\n");
}

}  // namespace floodtwin
