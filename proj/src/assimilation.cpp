#include "floodtwin/assimilation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "floodtwin/error.hpp"
#include "floodtwin/timeutil.hpp"
#include "json.hpp"

namespace floodtwin {

namespace fs = std::filesystem;
using nlohmann::json;

void ObservationMap::validate() const {
  const Raster& p = probability;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p.is_nodata(i)) continue;
    if (!(p[i] >= 0.0 && p[i] <= 1.0))
      throw DataError("observation '" + name + "' has probability outside [0, 1] at cell " + std::to_string(i));
  }
  if (exclusion && (exclusion->rows() != p.rows() || exclusion->cols() != p.cols()))
    throw DataError("observation '" + name + "' exclusion mask does not match its grid");
}

ObservationMap load_observation(const fs::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw DataError("cannot open observation sidecar '" + sidecar.string() + "'");
  ObservationMap obs;
  try {
    const json j = json::parse(in);
    const fs::path base = sidecar.parent_path();
    const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    obs.name = sidecar.stem().string();
    obs.probability = read_ascii_grid(resolve(j.at("raster").get<std::string>()));
    obs.time = parse_iso8601(j.at("timestamp").get<std::string>());
    if (j.contains("exclusion_mask") && !j["exclusion_mask"].is_null()) {
      const Raster mask = read_ascii_grid(resolve(j["exclusion_mask"].get<std::string>()));
      if (!aligned(mask.spec(), obs.probability.spec()))
        throw DataError("exclusion mask of '" + sidecar.string() + "' is not aligned with its raster");
      obs.exclusion = MaskGrid(mask.valid_mask() && (mask.values() != 0.0));
    }
  } catch (const json::exception& e) {
    throw DataError(sidecar.string() + ": " + e.what());
  }
  obs.validate();
  return obs;
}

void save_observation(const ObservationMap& obs, const fs::path& dir) {
  if (obs.name.empty()) throw DataError("observation needs a name to be saved");
  fs::create_directories(dir);
  write_ascii_grid(obs.probability, dir / (obs.name + ".asc"));
  json j{{"raster", obs.name + ".asc"}, {"timestamp", format_iso8601(obs.time)}};
  if (obs.exclusion) {
    Raster mask(obs.probability.spec(), 0.0);
    mask.values() = obs.exclusion->cast<double>();
    write_ascii_grid(mask, dir / (obs.name + "_exclusion.asc"));
    j["exclusion_mask"] = obs.name + "_exclusion.asc";
  }
  std::ofstream out(dir / (obs.name + ".json"), std::ios::trunc);
  if (!out) throw DataError("cannot write observation sidecar in '" + dir.string() + "'");
  out << j.dump(2) << '\n';
}

double local_weight(double p, bool wet, double clip) {
  const double q = std::clamp(p, clip, 1.0 - clip);
  return wet ? q : 1.0 - q;
}

Eigen::VectorXd global_log_weights(const ObservationMap& obs, const std::vector<BinaryMap>& extents, double clip) {
  const Raster& p = obs.probability;
  MaskGrid include = p.valid_mask();
  if (obs.exclusion) include = include && !obs.exclusion.value();
  for (const auto& e : extents) {
    if (!aligned(e.spec, p.spec())) throw DataError("observation '" + obs.name + "' is not aligned with the model grid");
    include = include && e.valid;
  }
  if (include.count() == 0) throw DataError("observation '" + obs.name + "' has no usable pixels");

  Eigen::VectorXd logw = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(extents.size()));
  for (std::size_t n = 0; n < extents.size(); ++n) {
    const bool* wet = extents[n].wet.data();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (include.data()[i]) sum += std::log(local_weight(p[i], wet[i], clip));
    logw(static_cast<Eigen::Index>(n)) = sum;
  }
  return logw;
}

WeightVector tempered_weights(const Eigen::VectorXd& logw, double alpha) {
  if (logw.size() == 0) throw DataError("no particles to weight");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DataError("tempering alpha must lie in [0, 1]");
  if (!logw.allFinite()) throw NumericalError("non-finite log-likelihood");
  WeightVector w;
  w.log_likelihood = logw;
  w.alpha = alpha;
  const double top = logw.maxCoeff();
  w.weights = (alpha * (logw.array() - top)).exp().matrix();
  w.weights /= w.weights.sum();
  w.ess = effective_sample_size(w.weights);
  return w;
}

double effective_sample_size(const Eigen::VectorXd& weights) { return 1.0 / weights.squaredNorm(); }

double select_alpha(const Eigen::VectorXd& logw, double tau, double tol) {
  if (!(tau > 0.0 && tau <= 1.0)) throw DataError("target ESS fraction must lie in (0, 1]");
  const double target = tau * static_cast<double>(logw.size());
  const auto ok = [&](double a) { return tempered_weights(logw, a).ess >= target; };
  if (ok(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

Raster weighted_depth_map(const ParticleSet& particles, const HazardDatacube& cube) {
  if (particles.size() == 0) throw DataError("empty particle set");
  if (static_cast<std::size_t>(particles.weights.size()) != particles.size())
    throw DataError("particle weights do not match particle count");
  const GridSpec& g = cube.layers.at(particles.particles.front().layer).spec();
  Grid<double> acc = Grid<double>::Zero(g.nrows, g.ncols);
  MaskGrid valid = MaskGrid::Constant(g.nrows, g.ncols, true);
  for (std::size_t n = 0; n < particles.size(); ++n) {
    const std::size_t k = particles.particles[n].layer;
    if (k >= cube.size()) throw DataError("particle refers to missing datacube layer " + std::to_string(k + 1));
    const Raster& layer = cube.layers[k];
    if (!aligned(layer.spec(), g)) throw DataError("datacube layers are not aligned");
    valid = valid && layer.valid_mask();
    acc += particles.weights(static_cast<Eigen::Index>(n)) * layer.values();
  }
  Raster out(g, std::move(acc));
  out.values() = valid.select(out.values(), g.nodata);
  return out;
}

double weighted_discharge(const Eigen::VectorXd& weights, const Eigen::VectorXd& discharge) {
  if (weights.size() != discharge.size()) throw DataError("weights and discharges differ in length");
  double sum = 0.0;
  for (Eigen::Index n = 0; n < weights.size(); ++n) sum += weights(n) * discharge(n);
  return sum;
}

double weighted_discharge(const ParticleSet& particles) {
  Eigen::VectorXd q(static_cast<Eigen::Index>(particles.size()));
  for (std::size_t n = 0; n < particles.size(); ++n) q(static_cast<Eigen::Index>(n)) = particles.particles[n].discharge;
  return weighted_discharge(particles.weights, q);
}

int lead_day_of(double t, double issue_time) {
  if (t < issue_time) throw DataError("observation at " + format_iso8601(t) + " precedes the forecast issue time");
  return static_cast<int>(std::floor((t - issue_time) / kSecondsPerDay)) + 1;
}

CycleResult assimilation_cycle(const ForecastEnsemble& fc, const HazardDatacube& cube,
                               const std::vector<ObservationMap>& observations, const AssimilationConfig& config) {
  if (cube.size() == 0) throw DataError("empty datacube");
  for (std::size_t i = 1; i < observations.size(); ++i)
    if (observations[i].time < observations[i - 1].time) throw DataError("observations must be sorted by time");

  const double issue = fc.issue_time();
  const auto horizon = static_cast<int>(fc.lead_days());
  CycleResult result;
  std::map<int, std::vector<const ObservationMap*>> by_day;
  for (const auto& obs : observations) {
    if (!aligned(obs.probability.spec(), cube.manifest.grid))
      throw DataError("observation '" + obs.name + "' is not aligned with the datacube grid");
    const int day = lead_day_of(obs.time, issue);
    if (day > horizon) result.ignored.push_back(obs.name);
    else by_day[day].push_back(&obs);
  }

  std::vector<std::optional<BinaryMap>> extents(cube.size());
  const auto extent = [&](std::size_t k) -> const BinaryMap& {
    if (!extents[k]) extents[k] = binarize_depth(cube.layers[k], config.wet_threshold);
    return *extents[k];
  };

  const Eigen::Index n = fc.members();
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int day = 1; day <= horizon; ++day) {
    ParticleSet particles = ensemble_to_particles(fc, day, cube.manifest);
    if (const auto it = by_day.find(day); it != by_day.end()) {
      // distinct layers carry identical likelihoods, so score each once
      std::vector<std::size_t> distinct;
      for (const auto& p : particles.particles) distinct.push_back(p.layer);
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      std::vector<BinaryMap> maps;
      for (std::size_t k : distinct) maps.push_back(extent(k));

      for (const ObservationMap* obs : it->second) {
        const Eigen::VectorXd layer_logw = global_log_weights(*obs, maps, config.clip);
        Eigen::VectorXd logw(n);
        for (Eigen::Index m = 0; m < n; ++m) {
          const std::size_t k = particles.particles[static_cast<std::size_t>(m)].layer;
          const auto pos = std::lower_bound(distinct.begin(), distinct.end(), k) - distinct.begin();
          logw(m) = layer_logw(pos);
        }
        const double alpha = config.adaptive_alpha ? select_alpha(logw, config.tau) : config.alpha;
        AnalysisRecord rec{obs->name, obs->time, day, tempered_weights(logw, alpha)};
        weights = rec.weights.weights;
        result.analyses.push_back(std::move(rec));
      }
    }
    particles.weights = weights;

    DailyProduct prod;
    prod.lead_day = day;
    prod.time = issue + (day - 0.5) * kSecondsPerDay;
    prod.depth = weighted_depth_map(particles, cube);
    prod.discharge = weighted_discharge(particles);
    prod.weights = weights;
    for (const auto& p : particles.particles) prod.layers.push_back(p.layer);
    result.days.push_back(std::move(prod));
  }
  return result;
}

}  // namespace floodtwin
