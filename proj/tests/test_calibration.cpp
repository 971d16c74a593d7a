#include <cmath>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "floodtwin/calibration.hpp"
#include "floodtwin/error.hpp"
#include "floodtwin/rng.hpp"
#include "floodtwin/synthetic.hpp"
#include "rating_fixture.hpp"

using namespace floodtwin;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

std::vector<double> column(const std::vector<ParameterSample>& s, std::size_t region, int k) {
  std::vector<double> out;
  for (const auto& p : s) {
    const RegionParameters& r = p.regions[region];
    const double v[] = {r.r_ch, r.p_ch, r.n_ch, r.n_fp};
    out.push_back(v[k]);
  }
  return out;
}

}  // namespace

TEST_CASE("lhs stratification with the default ranges") {
  const ParameterRanges ranges;
  const ParameterRange rr[] = {ranges.r_ch, ranges.p_ch, ranges.n_ch, ranges.n_fp};
  for (std::size_t n : {1u, 10u, 500u}) {
    const auto s = lhs_sample({ranges, ranges}, n, 42);
    REQUIRE(s.size() == n);
    for (std::size_t region = 0; region < 2; ++region) {
      for (int k = 0; k < 4; ++k) {
        std::vector<int> count(n, 0);
        for (double v : column(s, region, k)) {
          CHECK(v > rr[k].lo);
          CHECK(v < rr[k].hi);
          const auto bin = static_cast<std::size_t>(std::floor((v - rr[k].lo) / (rr[k].hi - rr[k].lo) * n));
          REQUIRE(bin < n);
          ++count[bin];
        }
        for (int c : count) CHECK(c == 1);
      }
    }
    CHECK(s.front().id == 1);
    CHECK(s.back().id == n);
  }
}

TEST_CASE("lhs is reproducible for a fixed seed") {
  const auto a = lhs_sample({ParameterRanges{}}, 500, 7);
  const auto b = lhs_sample({ParameterRanges{}}, 500, 7);
  const auto c = lhs_sample({ParameterRanges{}}, 500, 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i].regions[0];
    const auto& y = b[i].regions[0];
    CHECK(std::memcmp(&x, &y, sizeof x) == 0);
    differs = differs || x.r_ch != c[i].regions[0].r_ch;
  }
  CHECK(differs);
  ParameterRanges bad;
  bad.n_fp = {0.2, 0.1};
  CHECK_THROWS_AS(lhs_sample({bad}, 10, 1), DataError);
  CHECK_THROWS_AS(lhs_sample({ParameterRanges{}}, 0, 1), DataError);
}

TEST_CASE("scores_to_weights") {
  LikelihoodWeights w = scores_to_weights(vec({0.8, 0.8}));
  CHECK(w.weight(0) == 0.5);
  CHECK(w.weight(1) == 0.5);
  w = scores_to_weights(vec({0.9, -0.5}));
  CHECK(w.weight(0) == 1.0);
  CHECK(w.weight(1) == 0.0);
  w = scores_to_weights(vec({0.6, 0.3, 0.1}));
  CHECK(std::abs(w.weight(0) - 0.6) <= 1e-12);
  CHECK(std::abs(w.weight(1) - 0.3) <= 1e-12);
  CHECK(std::abs(w.weight(2) - 0.1) <= 1e-12);
  w = scores_to_weights(vec({std::nan(""), 0.5}));
  CHECK(w.weight(0) == 0.0);
  CHECK_THROWS_AS(scores_to_weights(vec({0.0, -1.0})), DataError);
}

TEST_CASE("bayes_combine") {
  const LikelihoodWeights lik = scores_to_weights(vec({0.6, 0.3, 0.1}));
  LikelihoodWeights post = bayes_combine(uniform_weights(3), lik);
  CHECK((post.weight - lik.weight).cwiseAbs().maxCoeff() <= 1e-15);
  post = bayes_combine(lik, uniform_weights(3));
  CHECK((post.weight - lik.weight).cwiseAbs().maxCoeff() <= 1e-15);
  post = bayes_combine(scores_to_weights(vec({0.8, 0.2})), scores_to_weights(vec({0.5, 0.5})));
  CHECK(std::abs(post.weight(0) - 0.8) <= 1e-12);
  CHECK_THROWS_AS(bayes_combine(scores_to_weights(vec({1.0, 0.0})), scores_to_weights(vec({0.0, 1.0}))), DataError);
  CHECK_THROWS_AS(bayes_combine(uniform_weights(2), uniform_weights(3)), DataError);

  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd a(20), b(20);
    for (Eigen::Index i = 0; i < 20; ++i) a(i) = rng.uniform(-0.2, 1.0), b(i) = rng.uniform(0.01, 1.0);
    const LikelihoodWeights A = scores_to_weights(a), B = scores_to_weights(b);
    const auto ab = bayes_combine(bayes_combine(uniform_weights(20), A), B);
    const auto ba = bayes_combine(bayes_combine(uniform_weights(20), B), A);
    CHECK((ab.weight - ba.weight).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("select_best") {
  const auto s = lhs_sample({ParameterRanges{}}, 3, 1);
  CHECK(select_best({s[0]}, uniform_weights(1)).id == 1);
  LikelihoodWeights w = uniform_weights(3);
  w.weight = vec({0.1, 0.7, 0.2});
  CHECK(select_best(s, w).id == 2);
  w.weight *= 37.5;
  CHECK(select_best(s, w).id == 2);
  w.weight = vec({0.4, 0.2, 0.4});
  CHECK(select_best(s, w).id == 1);
}

TEST_CASE("calibration runner on a synthetic valley") {
  ValleySpec spec;
  spec.nrows = 24;
  spec.ncols = 11;
  spec.parameters = {0.08, 0.6, 0.03, 0.08};
  const SyntheticValley v = make_valley(spec);
  const Hydrograph hg({0.0, 3600.0, 7200.0}, {2.0, 20.0, 6.0});
  BoundaryForcing forcing{0.0, {InflowPoint{"in", v.inflow_cell, hg}}};
  const SimulationOutput truth = simulate(v.domain, forcing, 7200.0, v.gauges);

  CalibrationData data;
  for (const auto& g : truth.gauges) data.gauges.push_back(GaugeObservation{g.gauge.name, "level", g.time, g.level});
  data.reference_extent = binarize_depth(truth.max_depth);

  CalibrationConfig cfg;
  cfg.samples = 12;
  cfg.seed = 3;
  cfg.threads = 1;
  const CalibrationResult a = run_calibration(v.domain, forcing, 7200.0, v.gauges, data, cfg);
  cfg.threads = 4;
  const CalibrationResult b = run_calibration(v.domain, forcing, 7200.0, v.gauges, data, cfg);
  REQUIRE(a.samples.size() == 12);
  CHECK(a.failures.empty());
  CHECK(a.datasets == std::vector<std::string>{"G1", "G2", "G3", "extent"});
  CHECK(a.combined.weight == b.combined.weight);
  CHECK(a.best == b.best);
  CHECK(std::abs(a.combined.weight.sum() - 1.0) <= 1e-12);
  const std::size_t best = a.best;
  CHECK(a.combined.weight(static_cast<Eigen::Index>(best)) == a.combined.weight.maxCoeff());
  for (const auto& s : a.scores) CHECK(s(static_cast<Eigen::Index>(best)) > 0.0);

  cfg.order = {"extent", "G3", "G2", "G1"};
  const CalibrationResult c = run_calibration(v.domain, forcing, 7200.0, v.gauges, data, cfg);
  CHECK((c.combined.weight - a.combined.weight).cwiseAbs().maxCoeff() <= 1e-12);
  cfg.order = {"G9"};
  CHECK_THROWS_AS(run_calibration(v.domain, forcing, 7200.0, v.gauges, data, cfg), DataError);

  const auto dir = floodtwin::testing::scratch_dir("calibration");
  write_calibration_csv(a, dir / "results.csv");
  std::ifstream in(dir / "results.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "sample_id,r_ch,p_ch,n_ch,n_fp,kge_G1,kge_G2,kge_G3,csi,combined_weight");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 12);
}
