#include "floodtwin/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "floodtwin/csv.hpp"
#include "floodtwin/error.hpp"
#include "floodtwin/metrics.hpp"
#include "floodtwin/rng.hpp"

namespace floodtwin {

Eigen::MatrixXd latin_hypercube(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DataError("LHS needs at least one sample");
  if (lo.size() != hi.size()) throw DataError("LHS bounds differ in length");
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (!(hi(k) >= lo(k)) || !std::isfinite(lo(k)) || !std::isfinite(hi(k)))
      throw DataError("LHS range " + std::to_string(k) + " is inverted or non-finite");

  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd design(rows, lo.size());
  std::vector<std::size_t> strata(n);
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    for (std::size_t j = 0; j < n; ++j) strata[j] = j;
    rng.shuffle(strata);
    const double width = hi(k) - lo(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = 0.05 + 0.9 * rng.uniform();
      design(static_cast<Eigen::Index>(i), k) =
          lo(k) + width * (static_cast<double>(strata[i]) + u) / static_cast<double>(n);
    }
  }
  return design;
}

std::vector<ParameterSample> lhs_sample(const std::vector<ParameterRanges>& regions, std::size_t n, std::uint64_t seed) {
  if (regions.empty()) throw DataError("no parameter ranges given");
  const auto d = static_cast<Eigen::Index>(4 * regions.size());
  Eigen::VectorXd lo(d), hi(d);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const ParameterRange* p[] = {&regions[r].r_ch, &regions[r].p_ch, &regions[r].n_ch, &regions[r].n_fp};
    for (int k = 0; k < 4; ++k) {
      lo(static_cast<Eigen::Index>(4 * r) + k) = p[k]->lo;
      hi(static_cast<Eigen::Index>(4 * r) + k) = p[k]->hi;
    }
  }
  const Eigen::MatrixXd x = latin_hypercube(lo, hi, n, seed);
  std::vector<ParameterSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = i + 1;
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t r = 0; r < regions.size(); ++r) {
      const auto c = static_cast<Eigen::Index>(4 * r);
      out[i].regions.push_back(RegionParameters{x(row, c), x(row, c + 1), x(row, c + 2), x(row, c + 3)});
    }
  }
  return out;
}

LikelihoodWeights scores_to_weights(const Eigen::VectorXd& scores) {
  LikelihoodWeights w;
  w.score = scores;
  w.weight = scores.unaryExpr([](double s) { return s > 0.0 ? s : 0.0; });
  const double total = w.weight.sum();
  if (!(total > 0.0)) throw DataError("no behavioural sample: every score is at or below zero");
  w.weight /= total;
  return w;
}

LikelihoodWeights uniform_weights(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return LikelihoodWeights{Eigen::VectorXd::Ones(m), Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(n))};
}

LikelihoodWeights bayes_combine(const LikelihoodWeights& prior, const LikelihoodWeights& likelihood) {
  if (prior.weight.size() != likelihood.weight.size()) throw DataError("prior and likelihood cover different samples");
  LikelihoodWeights post;
  post.score = likelihood.score;
  post.weight = prior.weight.cwiseProduct(likelihood.weight);
  const double total = post.weight.sum();
  if (!(total > 0.0)) throw DataError("posterior is zero for every sample");
  post.weight /= total;
  return post;
}

const ParameterSample& select_best(const std::vector<ParameterSample>& samples, const LikelihoodWeights& combined) {
  if (samples.empty()) throw DataError("no samples to select from");
  if (static_cast<std::size_t>(combined.weight.size()) != samples.size())
    throw DataError("weights do not match the sample count");
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double wi = combined.weight(static_cast<Eigen::Index>(i));
    const double wb = combined.weight(static_cast<Eigen::Index>(best));
    if (wi > wb || (wi == wb && samples[i].id < samples[best].id)) best = i;
  }
  return samples[best];
}

GaugeObservation read_gauge_observation(const std::filesystem::path& path, const std::string& gauge,
                                        const std::string& variable) {
  if (variable != "level" && variable != "depth" && variable != "discharge")
    throw DataError("unknown gauge variable '" + variable + "'");
  const CsvTable t = read_csv(path);
  const auto ct = t.column("timestamp"), cv = t.column("value");
  GaugeObservation g{gauge, variable, {}, {}};
  for (const auto& row : t.rows) {
    try {
      g.time.push_back(parse_iso8601(row.fields[ct]));
    } catch (const DataError& e) {
      throw ParseError(t.source, row.line, e.what());
    }
    g.value.push_back(csv_double(t, row, cv));
    if (g.time.size() > 1 && !(g.time.back() > g.time[g.time.size() - 2]))
      throw ParseError(t.source, row.line, "timestamps must be strictly increasing");
  }
  return g;
}

namespace {

const std::vector<double>& pick(const GaugeSeries& s, const std::string& variable) {
  if (variable == "depth") return s.depth;
  if (variable == "discharge") return s.discharge;
  return s.level;
}

}  // namespace

CalibrationResult run_calibration(const ModelDomain& domain, const BoundaryForcing& forcing, double duration,
                                  const std::vector<GaugeSpec>& gauges, const CalibrationData& data,
                                  const CalibrationConfig& config) {
  if (config.ranges.size() != domain.regions().size())
    throw DataError("calibration ranges given for " + std::to_string(config.ranges.size()) + " regions, domain has " +
                    std::to_string(domain.regions().size()));
  std::vector<std::string> names;
  for (const auto& g : data.gauges) {
    if (std::none_of(gauges.begin(), gauges.end(), [&](const GaugeSpec& s) { return s.name == g.gauge; }))
      throw DataError("observed gauge '" + g.gauge + "' is not among the model gauges");
    names.push_back(g.gauge);
  }
  if (data.reference_extent) {
    if (!aligned(data.reference_extent->spec, domain.grid())) throw DataError("reference extent is not aligned with the DEM");
    names.push_back("extent");
  }
  if (names.empty()) throw DataError("calibration needs at least one observed dataset");
  std::vector<std::string> order = config.order.empty() ? names : config.order;
  for (const auto& o : order)
    if (std::find(names.begin(), names.end(), o) == names.end()) throw DataError("unknown calibration dataset '" + o + "'");

  CalibrationResult result;
  result.samples = lhs_sample(config.ranges, config.samples, config.seed);
  result.datasets = order;
  const std::size_t n = result.samples.size();
  const double nan = std::nan("");
  std::vector<std::vector<double>> scores(n, std::vector<double>(names.size(), nan));
  std::vector<std::string> errors(n);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const ModelDomain d = domain.with_parameters(result.samples[i].regions);
        const SimulationOutput out = simulate(d, forcing, duration, gauges);
        for (std::size_t k = 0; k < data.gauges.size(); ++k) {
          const GaugeObservation& obs = data.gauges[k];
          const auto it = std::find_if(out.gauges.begin(), out.gauges.end(),
                                       [&](const GaugeSeries& s) { return s.gauge.name == obs.gauge; });
          std::vector<double> t = it->time;
          for (auto& v : t) v += forcing.start_time;
          try {
            scores[i][k] = kge(sample_at_observations(obs.time, obs.value, t, pick(*it, obs.variable))).kge;
          } catch (const DataError&) {
            scores[i][k] = nan;
          }
        }
        if (data.reference_extent) {
          const ContingencyMap c = contingency(binarize_depth(out.max_depth, config.wet_threshold), *data.reference_extent);
          try {
            scores[i][names.size() - 1] = csi(c);
          } catch (const DataError&) {
            scores[i][names.size() - 1] = nan;
          }
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty()) result.failures.push_back("sample " + std::to_string(i + 1) + ": " + errors[i]);

  result.combined = uniform_weights(n);
  for (const auto& name : order) {
    const auto k = static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
    Eigen::VectorXd s(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) s(static_cast<Eigen::Index>(i)) = scores[i][k];
    result.scores.push_back(s);
    result.combined = bayes_combine(result.combined, scores_to_weights(s));
  }
  const ParameterSample& best = select_best(result.samples, result.combined);
  result.best = best.id - 1;
  return result;
}

void write_calibration_csv(const CalibrationResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const std::size_t regions = result.samples.empty() ? 0 : result.samples.front().regions.size();
  out << "sample_id";
  for (std::size_t r = 0; r < regions; ++r) {
    const std::string sfx = regions > 1 ? "_" + std::to_string(r) : "";
    out << ",r_ch" << sfx << ",p_ch" << sfx << ",n_ch" << sfx << ",n_fp" << sfx;
  }
  for (const auto& d : result.datasets) out << (d == "extent" ? ",csi" : ",kge_" + d);
  out << ",combined_weight\n";
  char buf[40];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < result.samples.size(); ++i) {
    const ParameterSample& s = result.samples[i];
    out << s.id;
    for (const auto& p : s.regions) out << ',' << num(p.r_ch) << ',' << num(p.p_ch) << ',' << num(p.n_ch) << ',' << num(p.n_fp);
    for (const auto& sc : result.scores) out << ',' << num(sc(static_cast<Eigen::Index>(i)));
    out << ',' << num(result.combined.weight(static_cast<Eigen::Index>(i))) << '\n';
  }
}

}  // namespace floodtwin
