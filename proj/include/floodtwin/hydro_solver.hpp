#pragma once

// Raster flood solver: local-inertial floodplain flow on a regular grid coupled to a
// 1D rectangular sub-grid channel running through a chain of cells.

#include <optional>
#include <string>
#include <vector>

#include "floodtwin/hydrograph.hpp"
#include "floodtwin/raster.hpp"

namespace floodtwin {

inline constexpr double kGravity = 9.81;

struct CellIndex {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct ChannelCell {
  CellIndex cell;
  double width = 1.0;  // m
  double bed = 0.0;    // m, used only when the depth law is disabled
  double bank = 0.0;   // m
};

// Ordered upstream-to-downstream chain of 4-connected channel cells.
struct ChannelNetwork {
  std::vector<ChannelCell> cells;
  // When set, bed = bank - r_ch * W^p_ch (per-region parameters) instead of the stored bed.
  bool use_depth_law = false;

  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
};

// Calibrated parameters for one region of the domain.
struct RegionParameters {
  double r_ch = 0.1;   // depth-law coefficient
  double p_ch = 0.5;   // depth-law exponent
  double n_ch = 0.03;  // channel Manning n
  double n_fp = 0.06;  // floodplain Manning n
};

struct SolverConfig {
  double cfl = 0.7;
  double dt_min = 0.01;  // s
  double dt_max = 10.0;  // s
  double depth_threshold = 1e-3;  // m; faces shallower than this carry no flow
  double output_interval = 900.0;  // s
  double mass_tolerance = 1e-6;    // relative
};

// Free (normal-flow) downstream boundary. The outflow carries momentum like an interior
// face whose water-surface slope is pinned to `slope`; slope <= 0 means "use the local bed slope".
struct Outlet {
  CellIndex cell;
  double slope = 0.0;
  bool channel = true;  // channel outlet (channel depth and width) or floodplain outlet
};

// D = r_ch * W^p_ch. Throws DataError for W <= 0 or r_ch <= 0.
double channel_depth_from_width(double width, double r_ch, double p_ch);

// Immutable model geometry with per-cell parameters resolved at construction.
class ModelDomain {
 public:
  // `region_mask`, when given, must be aligned with `dem` and carry labels 0..regions.size()-1
  // (nodata cells are treated as region 0). Without a mask, regions.size() must be 1.
  ModelDomain(Raster dem, ChannelNetwork channel, std::vector<RegionParameters> regions,
              std::optional<Raster> region_mask = std::nullopt, SolverConfig config = {},
              std::vector<Outlet> outlets = {});

  const Raster& dem() const { return dem_; }
  const GridSpec& grid() const { return dem_.spec(); }
  const ChannelNetwork& channel() const { return channel_; }
  const std::vector<RegionParameters>& regions() const { return regions_; }
  const std::optional<Raster>& region_mask() const { return region_mask_; }
  const SolverConfig& config() const { return config_; }
  const std::vector<Outlet>& outlets() const { return outlets_; }

  // Same geometry with different parameters (used by calibration).
  ModelDomain with_parameters(std::vector<RegionParameters> regions) const;
  ModelDomain with_config(SolverConfig config) const;
  ModelDomain with_outlets(std::vector<Outlet> outlets) const;

  // Resolved outlet slopes, one per outlet.
  const std::vector<double>& outlet_slopes() const { return outlet_slope_; }

  // Resolved per-cell data.
  const Grid<double>& floodplain_n() const { return n_fp_; }
  const MaskGrid& active() const { return active_; }
  // -1 where the cell carries no channel, else the channel index.
  const Grid<int>& channel_index() const { return channel_at_; }
  const std::vector<double>& channel_bed() const { return ch_bed_; }
  const std::vector<double>& channel_n() const { return ch_n_; }
  const std::vector<double>& channel_capacity() const { return ch_capacity_; }

  double cellsize() const { return dem_.spec().cellsize; }

 private:
  void resolve();

  Raster dem_;
  ChannelNetwork channel_;
  std::vector<RegionParameters> regions_;
  std::optional<Raster> region_mask_;
  SolverConfig config_;
  std::vector<Outlet> outlets_;

  Grid<double> n_fp_;
  MaskGrid active_;
  Grid<int> channel_at_;
  std::vector<double> ch_bed_, ch_n_, ch_capacity_;
  std::vector<double> outlet_slope_;
};

struct MassLedger {
  double inflow = 0.0;   // m3, cumulative
  double outflow = 0.0;  // m3, cumulative
  double initial_storage = 0.0;
};

struct FlowState {
  Grid<double> h;   // floodplain depth, nrows x ncols
  Grid<double> qx;  // unit discharge on x faces, nrows x (ncols+1), positive eastwards
  Grid<double> qy;  // unit discharge on y faces, (nrows+1) x ncols, positive southwards (row+1)
  Eigen::VectorXd channel_depth;  // per channel cell, <= bankfull after each step
  Eigen::VectorXd channel_q;      // m3/s on the face between channel cell k and k+1
  Eigen::VectorXd outlet_q;       // per domain outlet: m3/s (channel) or m2/s (floodplain)
  double t = 0.0;                 // s since simulation start
  MassLedger ledger;

  // All-dry state sized for `domain`.
  static FlowState dry(const ModelDomain& domain);
};

// Volume held in the domain (floodplain + channel), m3.
double storage_volume(const FlowState& state, const ModelDomain& domain);

// Total water column per cell (channel cells add their in-channel depth).
Raster water_depth(const FlowState& state, const ModelDomain& domain);

// CFL step alpha * dx / sqrt(g * h_max), clamped to [dt_min, dt_max]; dt_max when dry.
double stable_dt(const FlowState& state, const ModelDomain& domain, double cfl);
double stable_dt(const FlowState& state, const ModelDomain& domain);

// One explicit step: face and outlet momentum with semi-implicit friction, flux limiting,
// continuity, and channel/floodplain exchange. Outlet volume is booked to the ledger.
// Throws NumericalError on a non-finite input or result.
FlowState step_floodplain(const FlowState& state, const ModelDomain& domain, double dt);

struct InflowPoint {
  std::string name;
  CellIndex cell;  // a channel cell receives the volume in-channel
  Hydrograph hydrograph;
};

struct BoundaryForcing {
  double start_time = 0.0;  // epoch seconds at simulation t = 0
  std::vector<InflowPoint> inflows;
};

// Adds Q(t)*dt at each inflow point. Outlets are part of the domain and act inside
// step_floodplain. DataError if start_time + t falls outside any hydrograph.
FlowState apply_boundaries(const FlowState& state, const ModelDomain& domain, const BoundaryForcing& forcing,
                           double t, double dt);

struct GaugeSpec {
  std::string name;
  CellIndex cell;
};

struct GaugeSeries {
  GaugeSpec gauge;
  std::vector<double> time;       // s since start
  std::vector<double> level;      // water surface elevation, m
  std::vector<double> depth;      // water column, m
  std::vector<double> discharge;  // m3/s
};

struct SimulationOutput {
  Raster max_depth;
  std::vector<GaugeSeries> gauges;
  MassLedger ledger;
  double final_storage = 0.0;
  double mass_error = 0.0;  // |in - out - dstorage| / max(in, eps)
  bool mass_ok = true;
  std::size_t steps = 0;
};

SimulationOutput simulate(const ModelDomain& domain, const BoundaryForcing& forcing, double duration,
                          const std::vector<GaugeSpec>& gauges);

// Same, starting from a given state (its ledger is reset).
SimulationOutput simulate(const ModelDomain& domain, const BoundaryForcing& forcing, double duration,
                          const std::vector<GaugeSpec>& gauges, FlowState initial);

}  // namespace floodtwin
