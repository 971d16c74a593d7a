#pragma once

// Synthetic V-shaped valley with a straight channel down its axis. Serves the twin
// experiments, the example-case generator, and the solver tests.

#include <vector>

#include "floodtwin/hydro_solver.hpp"

namespace floodtwin {

struct ValleySpec {
  Eigen::Index nrows = 80;   // along the valley, north (upstream) to south
  Eigen::Index ncols = 41;   // across; the channel runs down the middle column
  double cellsize = 20.0;    // m
  double top_elevation = 100.0;
  double slope = 0.001;        // down-valley, also the outlet slope
  double cross_slope = 0.01;   // rise per metre away from the channel
  double channel_width = 8.0;  // m
  RegionParameters parameters{0.1, 0.8, 0.03, 0.06};
  SolverConfig solver{};
};

struct SyntheticValley {
  ModelDomain domain;
  CellIndex inflow_cell;  // first channel cell
  std::vector<GaugeSpec> gauges;  // on the channel at 1/4, 1/2 and 3/4 of the reach
};

SyntheticValley make_valley(const ValleySpec& spec);

}  // namespace floodtwin
