#include <cmath>

#include "doctest.h"
#include "floodtwin/error.hpp"
#include "floodtwin/twin.hpp"

using namespace floodtwin;

namespace {

// 20 layers, anchor peaks 10..200. Layer k is a wedge: depth 0.2 (k + 1) - 0.05 col, floored at zero.
HazardDatacube wedge_cube() {
  GridSpec g;
  g.ncols = 90;
  g.nrows = 3;
  g.cellsize = 10.0;
  HazardDatacube cube;
  cube.manifest.grid = g;
  for (std::size_t k = 0; k < 20; ++k) {
    Raster r(g, 0.0);
    for (Eigen::Index row = 0; row < g.nrows; ++row)
      for (Eigen::Index col = 0; col < g.ncols; ++col)
        r(row, col) = std::max(0.0, 0.2 * static_cast<double>(k + 1) - 0.05 * static_cast<double>(col));
    cube.layers.push_back(r);
    LayerInfo l;
    l.index = k + 1;
    l.anchor_peak = 10.0 * static_cast<double>(k + 1);
    cube.manifest.layers.push_back(l);
  }
  return cube;
}

const std::vector<GaugeSpec> kGauges = {{"near", {1, 0}}, {"mid", {1, 20}}};

TwinSpec base_spec() {
  TwinSpec s;
  s.truth_layer = 9;
  s.members = 50;
  s.lead_days = 10;
  const double issue = parse_iso8601(s.issue_date);
  s.observation_times = {issue + 0.5 * 86400.0, issue + 3.5 * 86400.0};
  return s;
}

}  // namespace

TEST_CASE("degenerate twin: sharp observations and a collapsed ensemble") {
  const HazardDatacube cube = wedge_cube();
  TwinSpec s = base_spec();
  s.false_wet_rate = 0.0;
  s.false_dry_rate = 0.0;
  s.sigma = 0.0;
  const TwinDataset twin = make_twin(s, cube);
  CHECK(twin.truth_discharge == 100.0);
  CHECK(twin.truth_depth == cube.layers[9]);
  CHECK((twin.forecast.values.array() == 100.0).all());
  REQUIRE(twin.observations.size() == 2);
  for (const auto& o : twin.observations) {
    for (Eigen::Index i = 0; i < o.probability.size(); ++i) {
      const bool wet = twin.truth_depth[i] > s.wet_threshold;
      CHECK(o.probability[i] == (wet ? 1.0 : 0.0));
    }
  }
  const AssimilationConfig cfg;
  const CycleResult ol = assimilation_cycle(twin.forecast, cube, {}, cfg);
  const CycleResult pf = assimilation_cycle(twin.forecast, cube, twin.observations, cfg);
  REQUIRE(ol.days.size() == pf.days.size());
  for (std::size_t d = 0; d < ol.days.size(); ++d) {
    CHECK(ol.days[d].depth == pf.days[d].depth);
    CHECK((pf.days[d].depth.values() - twin.truth_depth.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const TwinScore score = score_twin(twin, cube, kGauges, cfg);
  CHECK(score.ol_rmse.maxCoeff() <= 1e-12);
  CHECK(score.pf_rmse.maxCoeff() <= 1e-12);
}

TEST_CASE("twin datasets are reproducible from the seed") {
  const HazardDatacube cube = wedge_cube();
  const TwinSpec s = base_spec();
  const TwinDataset a = make_twin(s, cube);
  const TwinDataset b = make_twin(s, cube);
  CHECK(a.forecast.values == b.forecast.values);
  REQUIRE(a.observations.size() == b.observations.size());
  for (std::size_t k = 0; k < a.observations.size(); ++k) {
    CHECK(a.observations[k].probability == b.observations[k].probability);
    CHECK(a.observations[k].time == b.observations[k].time);
    CHECK(a.observations[k].name == "obs_" + std::to_string(k + 1));
  }
  TwinSpec other = s;
  other.seed = 2;
  CHECK(make_twin(other, cube).forecast.values != a.forecast.values);
}

TEST_CASE("member persistence") {
  const HazardDatacube cube = wedge_cube();
  TwinSpec s = base_spec();
  const TwinDataset held = make_twin(s, cube);
  for (Eigen::Index m = 0; m < held.forecast.values.rows(); ++m)
    CHECK((held.forecast.values.row(m).array() == held.forecast.values(m, 0)).all());
  s.member_persistence = 0.0;
  const TwinDataset fresh = make_twin(s, cube);
  CHECK(fresh.forecast.values(0, 0) != fresh.forecast.values(0, 1));
  CHECK((fresh.forecast.values.array() > 0.0).all());
}

TEST_CASE("observation noise centres on the error rates") {
  const HazardDatacube cube = wedge_cube();
  TwinSpec s = base_spec();
  s.false_wet_rate = 0.1;
  s.false_dry_rate = 0.2;
  Rng rng(11);
  double wet_sum = 0.0, dry_sum = 0.0;
  int wet_n = 0, dry_n = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const ObservationMap o = synthetic_observation(cube.layers[9], s, rng, "o", 0.0);
    for (Eigen::Index i = 0; i < o.probability.size(); ++i) {
      CHECK(o.probability[i] >= 0.0);
      CHECK(o.probability[i] <= 1.0);
      if (cube.layers[9][i] > s.wet_threshold) {
        wet_sum += o.probability[i];
        ++wet_n;
      } else {
        dry_sum += o.probability[i];
        ++dry_n;
      }
    }
  }
  CHECK(wet_sum / wet_n == doctest::Approx(0.8).epsilon(0.01));
  // Clipping at zero lifts the dry mean slightly above the nominal rate.
  CHECK(dry_sum / dry_n > 0.1);
  CHECK(dry_sum / dry_n < 0.11);
}

TEST_CASE("invalid twin specifications are rejected") {
  const HazardDatacube cube = wedge_cube();
  const auto bad = [&](auto edit) {
    TwinSpec s = base_spec();
    edit(s);
    CHECK_THROWS_AS(make_twin(s, cube), DataError);
  };
  bad([](TwinSpec& s) { s.false_wet_rate = 0.5; });
  bad([](TwinSpec& s) { s.false_dry_rate = -0.01; });
  bad([](TwinSpec& s) { s.sigma = -0.1; });
  bad([](TwinSpec& s) { s.member_persistence = 1.5; });
  bad([](TwinSpec& s) { s.members = 0; });
  bad([](TwinSpec& s) { s.truth_layer = 20; });
}

TEST_CASE("open-loop error grows with ensemble spread") {
  const HazardDatacube cube = wedge_cube();
  const AssimilationConfig cfg;
  double previous = 0.0;
  for (double sigma : {0.05, 0.15, 0.3, 0.5}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      TwinSpec s = base_spec();
      s.sigma = sigma;
      s.seed = seed;
      s.observation_times.clear();
      const TwinDataset twin = make_twin(s, cube);
      total += score_twin(twin, cube, kGauges, cfg).ol_rmse.mean();
    }
    CHECK(total / 20.0 > previous);
    previous = total / 20.0;
  }
}

TEST_CASE("filter beats the open loop on the wedge twin") {
  const HazardDatacube cube = wedge_cube();
  AssimilationConfig cfg;
  cfg.adaptive_alpha = false;
  cfg.alpha = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TwinSpec s = base_spec();
    s.seed = seed;
    const TwinScore score = score_twin(make_twin(s, cube), cube, kGauges, cfg);
    CHECK((score.pf_rmse.array() <= score.ol_rmse.array()).all());
  }
}
