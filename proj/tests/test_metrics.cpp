#include <cmath>
#include <fstream>

#include "doctest.h"
#include "floodtwin/error.hpp"
#include "floodtwin/metrics.hpp"
#include "floodtwin/rng.hpp"
#include "rating_fixture.hpp"

using namespace floodtwin;

namespace {

SeriesPair pair(std::vector<double> o, std::vector<double> s) {
  SeriesPair p;
  p.observed = Eigen::Map<Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()));
  p.simulated = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return p;
}

GridSpec grid(Eigen::Index ncols, Eigen::Index nrows) {
  GridSpec g;
  g.ncols = ncols;
  g.nrows = nrows;
  return g;
}

}  // namespace

TEST_CASE("rmse") {
  CHECK(rmse(pair({1, 2, 3}, {1, 2, 3})) == 0.0);
  CHECK(std::abs(rmse(pair({0, 0}, {3, 4})) - std::sqrt(12.5)) <= 1e-12);
  CHECK(std::abs(rmse(pair({1, 5, 2, 7}, {1.25, 5.25, 2.25, 7.25})) - 0.25) <= 1e-12);
  CHECK_THROWS_AS(rmse(pair({1, 2, 3}, {1, 2})), DataError);
  CHECK_THROWS_AS(rmse(pair({1}, {1})), DataError);
}

TEST_CASE("nse") {
  CHECK(std::abs(nse(pair({1, 2, 3}, {1, 2, 3})) - 1.0) <= 1e-12);
  CHECK(std::abs(nse(pair({1, 2, 3}, {2, 2, 2}))) <= 1e-12);
  CHECK(std::abs(nse(pair({1, 2, 3}, {1, 2, 5})) + 1.0) <= 1e-12);
  CHECK_THROWS_AS(nse(pair({2, 2, 2}, {1, 2, 3})), DataError);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> o(20), s(20), o2(20), s2(20);
    const double c = rng.uniform(-100.0, 100.0);
    for (int i = 0; i < 20; ++i) {
      o[i] = rng.uniform(0.0, 5.0);
      s[i] = o[i] + rng.normal();
      o2[i] = o[i] + c;
      s2[i] = s[i] + c;
    }
    CHECK(nse(pair(o, s)) == doctest::Approx(nse(pair(o2, s2))).epsilon(1e-9));
  }
}

TEST_CASE("kge") {
  const KgeScore same = kge(pair({1, 3, 2, 5}, {1, 3, 2, 5}));
  CHECK(std::abs(same.kge - 1.0) <= 1e-12);
  CHECK(std::abs(same.r - 1.0) <= 1e-12);
  CHECK(same.beta == 1.0);
  CHECK(same.gamma == 1.0);

  const KgeScore twice = kge(pair({1, 3, 2, 5}, {2, 6, 4, 10}));
  CHECK(std::abs(twice.r - 1.0) <= 1e-12);
  CHECK(std::abs(twice.beta - 2.0) <= 1e-12);
  CHECK(std::abs(twice.gamma - 1.0) <= 1e-12);
  CHECK(std::abs(twice.kge) <= 1e-12);

  CHECK_THROWS_WITH_AS(kge(pair({1, 3, 2}, {2, 2, 2})), doctest::Contains("simulated"), DataError);
  CHECK_THROWS_WITH_AS(kge(pair({2, 2, 2}, {1, 3, 2})), doctest::Contains("observed"), DataError);
  CHECK_THROWS_WITH_AS(kge(pair({-1, 1, 0}, {1, 3, 2})), doctest::Contains("mean"), DataError);

  // population statistics: r by hand for a small case
  const KgeScore k = kge(pair({1, 2, 3, 4}, {2, 1, 4, 3}));
  CHECK(k.r == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(k.beta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k.kge == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("kge argmax is independent of batch order") {
  Rng rng(9);
  std::vector<double> o(30);
  for (auto& v : o) v = rng.uniform(1.0, 4.0);
  std::vector<std::vector<double>> sims(12, std::vector<double>(30));
  for (auto& s : sims)
    for (int i = 0; i < 30; ++i) s[static_cast<std::size_t>(i)] = o[static_cast<std::size_t>(i)] + 0.5 * rng.normal();
  const auto best = [&](const std::vector<std::size_t>& order) {
    std::size_t arg = order[0];
    double top = -1e300;
    for (std::size_t k : order) {
      const double v = kge(pair(o, sims[k])).kge;
      if (v > top) top = v, arg = k;
    }
    return arg;
  };
  std::vector<std::size_t> order(sims.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t ref = best(order);
  for (int t = 0; t < 10; ++t) {
    rng.shuffle(order);
    CHECK(best(order) == ref);
  }
}

TEST_CASE("sample_at_observations interpolates and drops out-of-span points") {
  const SeriesPair p = sample_at_observations({-1.0, 0.0, 5.0, 10.0, 11.0}, {9, 1, 2, 3, 9}, {0.0, 10.0}, {0.0, 10.0});
  REQUIRE(p.size() == 3);
  CHECK(p.simulated(1) == 5.0);
  CHECK(p.observed(2) == 3.0);
  CHECK_THROWS_AS(sample_at_observations({20.0, 30.0}, {1, 2}, {0.0, 10.0}, {0.0, 1.0}), DataError);
}

TEST_CASE("contingency examples and csi") {
  const GridSpec g = grid(2, 2);
  BinaryMap checker(g), wet(g, true), dry(g, false);
  checker.wet << true, false, false, true;
  const ContingencyMap c = contingency(checker, wet);
  CHECK(c.tp == 2);
  CHECK(c.fn == 2);
  CHECK(c.fp == 0);
  CHECK(c.tn == 0);

  const ContingencyMap same = contingency(checker, checker);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK(csi(same) == 1.0);

  const GridSpec g10 = grid(10, 1);
  const ContingencyMap fa = contingency(BinaryMap(g10, true), BinaryMap(g10, false));
  CHECK(fa.fp == 10);
  CHECK(csi(fa) == 0.0);

  CHECK(std::abs(csi(2, 1, 1) - 0.5) <= 1e-12);
  CHECK_THROWS_AS(csi(contingency(dry, dry)), DataError);
  CHECK(csi(5, 2, 7) == csi(5, 7, 2));
  CHECK_THROWS_AS(contingency(BinaryMap(g, true), BinaryMap(g10, true)), DataError);
}

TEST_CASE("contingency counts equal brute-force tallies") {
  const GridSpec g = grid(32, 32);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    BinaryMap sim(g), obs(g);
    MaskGrid excl = MaskGrid::Constant(32, 32, false);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      sim.wet.data()[i] = rng.uniform() < 0.4;
      obs.wet.data()[i] = rng.uniform() < 0.5;
      sim.valid.data()[i] = rng.uniform() < 0.95;
      obs.valid.data()[i] = rng.uniform() < 0.95;
      excl.data()[i] = rng.uniform() < 0.05;
    }
    const ContingencyMap c = contingency(sim, obs, excl);
    long long tp = 0, fn = 0, fp = 0, tn = 0, ex = 0;
    for (Eigen::Index r = 0; r < 32; ++r) {
      for (Eigen::Index col = 0; col < 32; ++col) {
        std::uint8_t expect;
        if (!sim.valid(r, col) || !obs.valid(r, col) || excl(r, col)) ++ex, expect = 255;
        else if (sim.wet(r, col) && obs.wet(r, col)) ++tp, expect = 1;
        else if (obs.wet(r, col)) ++fn, expect = 2;
        else if (sim.wet(r, col)) ++fp, expect = 3;
        else ++tn, expect = 0;
        CHECK(c.labels(r, col) == expect);
      }
    }
    CHECK(c.tp == tp);
    CHECK(c.fn == fn);
    CHECK(c.fp == fp);
    CHECK(c.tn == tn);
    CHECK(c.excluded == ex);
    CHECK(c.tp + c.fn + c.fp + c.tn + c.excluded == g.size());
  }
}

TEST_CASE("contingency raster uses the label legend") {
  const auto dir = floodtwin::testing::scratch_dir("contingency");
  const GridSpec g = grid(2, 2);
  BinaryMap sim(g), obs(g);
  sim.wet << true, true, false, false;
  obs.wet << true, false, true, false;
  obs.valid(1, 1) = false;
  write_contingency_asc(contingency(sim, obs), dir / "c.asc");
  const Raster r = read_ascii_grid(dir / "c.asc");
  CHECK(r.spec().nodata == 255.0);
  CHECK(r(0, 0) == 1.0);
  CHECK(r(0, 1) == 3.0);
  CHECK(r(1, 0) == 2.0);
  CHECK(r.is_nodata(1, 1));
}

TEST_CASE("report formats") {
  VerificationReport rep;
  rep.issue_date = "2021-07-14";
  rep.stations.push_back(score_station("G1", "OL", pair({1, 2, 3}, {1, 2, 3})));
  rep.stations.push_back(score_station("G1", "PF", pair({2, 2, 2}, {1, 2, 3})));
  ExtentScore e;
  e.observation = "s1";
  e.run = "PF";
  e.tp = 2;
  e.fp = 1;
  e.fn = 1;
  e.csi = 0.5;
  rep.extents.push_back(e);
  CHECK(rep.stations[0].rmse == 0.0);
  CHECK(rep.stations[0].nse == 1.0);
  CHECK_FALSE(rep.stations[1].error.empty());
  const std::string js = report_json(rep);
  CHECK(js.find("\"csi\": 0.5") != std::string::npos);
  CHECK(js.find("\"255\": \"excluded\"") != std::string::npos);
  const std::string txt = report_text(rep);
  CHECK(txt.find("n/a") != std::string::npos);
  CHECK(txt.find("KGE") != std::string::npos);
}
