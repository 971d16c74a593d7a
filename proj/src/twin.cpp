#include "floodtwin/twin.hpp"

#include <algorithm>
#include <cmath>

#include "floodtwin/error.hpp"
#include "floodtwin/rng.hpp"

namespace floodtwin {

void TwinSpec::validate() const {
  if (!(false_wet_rate >= 0.0 && false_wet_rate < 0.5)) throw DataError("false-wet rate must lie in [0, 0.5)");
  if (!(false_dry_rate >= 0.0 && false_dry_rate < 0.5)) throw DataError("false-dry rate must lie in [0, 0.5)");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DataError("ensemble sigma must be non-negative");
  if (!(member_persistence >= 0.0 && member_persistence <= 1.0)) throw DataError("member persistence must lie in [0, 1]");
  if (members < 1) throw DataError("twin needs at least one member");
  if (lead_days < 1) throw DataError("twin needs at least one lead day");
  if (!(wet_threshold >= 0.0)) throw DataError("wet threshold must be non-negative");
}

ObservationMap synthetic_observation(const Raster& truth_depth, const TwinSpec& spec, Rng& rng, std::string name,
                                     double time) {
  const BinaryMap wet = binarize_depth(truth_depth, spec.wet_threshold);
  Raster p(truth_depth.spec(), 0.0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!wet.valid.data()[i]) {
      p[i] = p.spec().nodata;
      continue;
    }
    const double r = wet.wet.data()[i] ? spec.false_dry_rate : spec.false_wet_rate;
    const double noise = rng.normal() * 0.5 * r;
    p[i] = std::clamp(wet.wet.data()[i] ? 1.0 - r + noise : r + noise, 0.0, 1.0);
  }
  ObservationMap obs;
  obs.name = std::move(name);
  obs.probability = std::move(p);
  obs.time = time;
  return obs;
}

TwinDataset make_twin(const TwinSpec& spec, const HazardDatacube& cube) {
  spec.validate();
  if (spec.truth_layer >= cube.size())
    throw DataError("truth layer " + std::to_string(spec.truth_layer + 1) + " outside datacube of " +
                    std::to_string(cube.size()) + " layers");
  Rng rng(spec.seed);
  TwinDataset twin;
  twin.truth_layer = spec.truth_layer;
  twin.truth_discharge = cube.manifest.layers[spec.truth_layer].anchor_peak;
  twin.truth_depth = cube.layers[spec.truth_layer];

  ForecastEnsemble& fc = twin.forecast;
  fc.issue_date = format_date(parse_iso8601(spec.issue_date));
  fc.values.resize(spec.members, spec.lead_days);
  const double rho = spec.member_persistence;
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (int m = 0; m < spec.members; ++m) {
    fc.member_ids.push_back(m + 1);
    double z = rng.normal();
    for (int d = 0; d < spec.lead_days; ++d) {
      if (d > 0) z = rho * z + innovation * rng.normal();
      fc.values(m, d) = twin.truth_discharge * std::exp(spec.sigma * z);
    }
  }

  std::vector<double> times = spec.observation_times;
  std::sort(times.begin(), times.end());
  for (std::size_t k = 0; k < times.size(); ++k)
    twin.observations.push_back(synthetic_observation(twin.truth_depth, spec, rng, "obs_" + std::to_string(k + 1), times[k]));
  return twin;
}

Eigen::VectorXd TwinScore::improvement() const { return ((ol_rmse - pf_rmse).array() / ol_rmse.array()).matrix(); }

std::vector<double> gauge_depths(const CycleResult& result, const CellIndex& cell) {
  std::vector<double> out;
  for (const auto& day : result.days) out.push_back(day.depth(cell.row, cell.col));
  return out;
}

TwinScore score_twin(const TwinDataset& twin, const HazardDatacube& cube, const std::vector<GaugeSpec>& gauges,
                     const AssimilationConfig& config) {
  const CycleResult ol = assimilation_cycle(twin.forecast, cube, {}, config);
  const CycleResult pf = assimilation_cycle(twin.forecast, cube, twin.observations, config);
  TwinScore s;
  const auto n = static_cast<Eigen::Index>(gauges.size());
  s.ol_rmse.resize(n);
  s.pf_rmse.resize(n);
  for (Eigen::Index g = 0; g < n; ++g) {
    const GaugeSpec& gauge = gauges[static_cast<std::size_t>(g)];
    s.gauges.push_back(gauge.name);
    const double truth = twin.truth_depth(gauge.cell.row, gauge.cell.col);
    const auto err = [&](const CycleResult& r) {
      double sum = 0.0;
      const std::vector<double> d = gauge_depths(r, gauge.cell);
      for (double v : d) sum += (v - truth) * (v - truth);
      return std::sqrt(sum / static_cast<double>(d.size()));
    };
    s.ol_rmse(g) = err(ol);
    s.pf_rmse(g) = err(pf);
  }
  return s;
}

}  // namespace floodtwin
