#include "floodtwin/hydro_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "floodtwin/error.hpp"

namespace floodtwin {

double channel_depth_from_width(double width, double r_ch, double p_ch) {
  if (!(width > 0.0)) throw DataError("channel width must be positive");
  if (!(r_ch > 0.0)) throw DataError("depth-law coefficient r_ch must be positive");
  return r_ch * std::pow(width, p_ch);
}

// --- ModelDomain ---------------------------------------------------------

ModelDomain::ModelDomain(Raster dem, ChannelNetwork channel, std::vector<RegionParameters> regions,
                         std::optional<Raster> region_mask, SolverConfig config, std::vector<Outlet> outlets)
    : dem_(std::move(dem)),
      channel_(std::move(channel)),
      regions_(std::move(regions)),
      region_mask_(std::move(region_mask)),
      config_(config),
      outlets_(std::move(outlets)) {
  resolve();
}

ModelDomain ModelDomain::with_parameters(std::vector<RegionParameters> regions) const {
  return ModelDomain(dem_, channel_, std::move(regions), region_mask_, config_, outlets_);
}

ModelDomain ModelDomain::with_config(SolverConfig config) const {
  return ModelDomain(dem_, channel_, regions_, region_mask_, config, outlets_);
}

ModelDomain ModelDomain::with_outlets(std::vector<Outlet> outlets) const {
  return ModelDomain(dem_, channel_, regions_, region_mask_, config_, std::move(outlets));
}

void ModelDomain::resolve() {
  const GridSpec& g = dem_.spec();
  if (regions_.empty()) throw DataError("domain needs at least one parameter region");
  if (!(config_.cfl > 0.0 && config_.cfl <= 1.0)) throw DataError("CFL coefficient must lie in (0, 1]");
  if (!(config_.dt_min > 0.0 && config_.dt_max >= config_.dt_min)) throw DataError("need 0 < dt_min <= dt_max");
  if (!(config_.output_interval > 0.0)) throw DataError("output interval must be positive");
  if (!(config_.depth_threshold >= 0.0)) throw DataError("depth threshold must be non-negative");

  Grid<int> region = Grid<int>::Zero(g.nrows, g.ncols);
  if (region_mask_) {
    if (!aligned(region_mask_->spec(), g)) throw DataError("region mask is not aligned with the DEM");
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (region_mask_->is_nodata(i)) continue;
      const double v = (*region_mask_)[i];
      if (v != std::floor(v) || v < 0 || v >= static_cast<double>(regions_.size()))
        throw DataError("region mask label " + std::to_string(v) + " has no parameter set");
      region.data()[i] = static_cast<int>(v);
    }
  } else if (regions_.size() != 1) {
    throw DataError("multiple parameter regions given without a region mask");
  }
  for (const auto& p : regions_) {
    if (!(p.n_fp > 0.0) || !(p.n_ch > 0.0)) throw DataError("Manning coefficients must be positive");
  }

  active_ = dem_.valid_mask();
  n_fp_.resize(g.nrows, g.ncols);
  for (Eigen::Index i = 0; i < g.size(); ++i) n_fp_.data()[i] = regions_[static_cast<std::size_t>(region.data()[i])].n_fp;

  channel_at_ = Grid<int>::Constant(g.nrows, g.ncols, -1);
  const auto k_count = channel_.cells.size();
  ch_bed_.assign(k_count, 0.0);
  ch_n_.assign(k_count, 0.0);
  ch_capacity_.assign(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    const ChannelCell& c = channel_.cells[k];
    std::ostringstream where;
    where << "channel cell " << k << " (row " << c.cell.row << ", col " << c.cell.col << ")";
    if (!g.contains(c.cell.row, c.cell.col)) throw DataError(where.str() + " lies outside the grid");
    if (!active_(c.cell.row, c.cell.col)) throw DataError(where.str() + " lies on a nodata DEM cell");
    if (channel_at_(c.cell.row, c.cell.col) >= 0) throw DataError(where.str() + " repeats an earlier cell");
    if (!(c.width > 0.0)) throw DataError(where.str() + " has non-positive width");
    if (k > 0) {
      const auto& prev = channel_.cells[k - 1].cell;
      const auto manhattan = std::abs(prev.row - c.cell.row) + std::abs(prev.col - c.cell.col);
      if (manhattan != 1) throw DataError(where.str() + " is not a 4-neighbour of its predecessor");
    }
    const RegionParameters& p = regions_[static_cast<std::size_t>(region(c.cell.row, c.cell.col))];
    const double bed = channel_.use_depth_law ? c.bank - channel_depth_from_width(c.width, p.r_ch, p.p_ch) : c.bed;
    if (c.bank < bed) throw DataError(where.str() + " has bank below bed");
    channel_at_(c.cell.row, c.cell.col) = static_cast<int>(k);
    ch_bed_[k] = bed;
    ch_n_[k] = p.n_ch;
    ch_capacity_[k] = c.bank - bed;
  }

  constexpr double kMinOutletSlope = 1e-5;
  const double dx = g.cellsize;
  outlet_slope_.clear();
  for (const Outlet& o : outlets_) {
    if (!g.contains(o.cell.row, o.cell.col) || !active_(o.cell.row, o.cell.col))
      throw DataError("outlet cell must be an active grid cell");
    double slope = o.slope;
    if (o.channel) {
      const int k = channel_at_(o.cell.row, o.cell.col);
      if (k < 0) throw DataError("channel outlet is not on a channel cell");
      if (slope <= 0.0 && k > 0) slope = (ch_bed_[static_cast<std::size_t>(k) - 1] - ch_bed_[static_cast<std::size_t>(k)]) / dx;
    } else if (slope <= 0.0) {
      const double z0 = dem_(o.cell.row, o.cell.col);
      const Eigen::Index dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int m = 0; m < 4; ++m) {
        const Eigen::Index r = o.cell.row + dr[m], c = o.cell.col + dc[m];
        if (g.contains(r, c) && active_(r, c)) slope = std::max(slope, (dem_(r, c) - z0) / dx);
      }
    }
    outlet_slope_.push_back(std::max(slope, kMinOutletSlope));
  }
}

// --- state helpers -------------------------------------------------------

FlowState FlowState::dry(const ModelDomain& domain) {
  const GridSpec& g = domain.grid();
  FlowState s;
  s.h = Grid<double>::Zero(g.nrows, g.ncols);
  s.qx = Grid<double>::Zero(g.nrows, g.ncols + 1);
  s.qy = Grid<double>::Zero(g.nrows + 1, g.ncols);
  const auto k = static_cast<Eigen::Index>(domain.channel().size());
  s.channel_depth = Eigen::VectorXd::Zero(k);
  s.channel_q = Eigen::VectorXd::Zero(std::max<Eigen::Index>(k - 1, 0));
  s.outlet_q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain.outlets().size()));
  return s;
}

double storage_volume(const FlowState& state, const ModelDomain& domain) {
  const double dx = domain.cellsize();
  double v = state.h.sum() * dx * dx;
  const auto& cells = domain.channel().cells;
  for (std::size_t k = 0; k < cells.size(); ++k)
    v += state.channel_depth[static_cast<Eigen::Index>(k)] * cells[k].width * dx;
  return v;
}

Raster water_depth(const FlowState& state, const ModelDomain& domain) {
  const GridSpec& g = domain.grid();
  Raster out(g, state.h);
  const auto& cells = domain.channel().cells;
  for (std::size_t k = 0; k < cells.size(); ++k)
    out(cells[k].cell.row, cells[k].cell.col) += state.channel_depth[static_cast<Eigen::Index>(k)];
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (!domain.active().data()[i]) out[i] = g.nodata;
  return out;
}

double stable_dt(const FlowState& state, const ModelDomain& domain, double cfl) {
  const SolverConfig& cfg = domain.config();
  double h_max = state.h.size() ? state.h.maxCoeff() : 0.0;
  const auto& cells = domain.channel().cells;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double col = state.channel_depth[static_cast<Eigen::Index>(k)] + state.h(cells[k].cell.row, cells[k].cell.col);
    h_max = std::max(h_max, col);
  }
  if (!(h_max > 0.0)) return cfg.dt_max;
  const double dt = cfl * domain.cellsize() / std::sqrt(kGravity * h_max);
  return std::clamp(dt, cfg.dt_min, cfg.dt_max);
}

double stable_dt(const FlowState& state, const ModelDomain& domain) {
  return stable_dt(state, domain, domain.config().cfl);
}

namespace {

[[noreturn]] void report_non_finite(const FlowState& s, const ModelDomain& domain) {
  const GridSpec& g = domain.grid();
  for (Eigen::Index r = 0; r < g.nrows; ++r)
    for (Eigen::Index c = 0; c < g.ncols; ++c)
      if (!std::isfinite(s.h(r, c))) {
        std::ostringstream os;
        os << "non-finite depth at row " << r << ", col " << c << " (t = " << s.t << " s)";
        throw NumericalError(os.str());
      }
  for (Eigen::Index k = 0; k < s.channel_depth.size(); ++k)
    if (!std::isfinite(s.channel_depth[k])) {
      std::ostringstream os;
      os << "non-finite channel depth at channel cell " << k << " (t = " << s.t << " s)";
      throw NumericalError(os.str());
    }
  throw NumericalError("non-finite flux in solver state at t = " + std::to_string(s.t) + " s");
}

// Semi-implicit friction update of one face's unit discharge.
inline double inertial_face(double q, double hf, double slope, double n, double dt) {
  return (q - kGravity * hf * dt * slope) / (1.0 + kGravity * dt * n * n * std::abs(q) / std::pow(hf, 7.0 / 3.0));
}

void advance(FlowState& s, const ModelDomain& domain, double dt) {
  const GridSpec& g = domain.grid();
  const Eigen::Index nr = g.nrows, nc = g.ncols;
  const double dx = domain.cellsize();
  const double thr = domain.config().depth_threshold;
  const double* z = domain.dem().values().data();
  const double* nfp = domain.floodplain_n().data();
  const bool* act = domain.active().data();
  double* h = s.h.data();

  // Face momentum. Boundary faces stay closed; outlets are handled in apply_boundaries.
  for (Eigen::Index r = 0; r < nr; ++r) {
    s.qx(r, 0) = 0.0;
    s.qx(r, nc) = 0.0;
    for (Eigen::Index c = 1; c < nc; ++c) {
      const Eigen::Index i = r * nc + c - 1, j = i + 1;
      double& q = s.qx(r, c);
      if (!act[i] || !act[j]) {
        q = 0.0;
        continue;
      }
      const double ei = z[i] + h[i], ej = z[j] + h[j];
      const double hf = std::max(ei, ej) - std::max(z[i], z[j]);
      if (hf <= thr) {
        q = 0.0;
        continue;
      }
      q = inertial_face(q, hf, (ej - ei) / dx, 0.5 * (nfp[i] + nfp[j]), dt);
    }
  }
  for (Eigen::Index c = 0; c < nc; ++c) {
    s.qy(0, c) = 0.0;
    s.qy(nr, c) = 0.0;
  }
  for (Eigen::Index r = 1; r < nr; ++r) {
    for (Eigen::Index c = 0; c < nc; ++c) {
      const Eigen::Index i = (r - 1) * nc + c, j = r * nc + c;
      double& q = s.qy(r, c);
      if (!act[i] || !act[j]) {
        q = 0.0;
        continue;
      }
      const double ei = z[i] + h[i], ej = z[j] + h[j];
      const double hf = std::max(ei, ej) - std::max(z[i], z[j]);
      if (hf <= thr) {
        q = 0.0;
        continue;
      }
      q = inertial_face(q, hf, (ej - ei) / dx, 0.5 * (nfp[i] + nfp[j]), dt);
    }
  }

  // Channel momentum along the cell chain, rectangular section.
  const auto& cells = domain.channel().cells;
  const auto& bed = domain.channel_bed();
  const auto& nch = domain.channel_n();
  const auto K = static_cast<Eigen::Index>(cells.size());
  for (Eigen::Index k = 0; k + 1 < K; ++k) {
    const auto a = static_cast<std::size_t>(k), b = a + 1;
    const double ea = bed[a] + s.channel_depth[k], eb = bed[b] + s.channel_depth[k + 1];
    const double hf = std::max(ea, eb) - std::max(bed[a], bed[b]);
    double& Q = s.channel_q[k];
    if (hf <= thr) {
      Q = 0.0;
      continue;
    }
    const double w = 0.5 * (cells[a].width + cells[b].width);
    const double area = w * hf;
    const double radius = area / (w + 2.0 * hf);
    const double n = 0.5 * (nch[a] + nch[b]);
    const double slope = (eb - ea) / dx;
    Q = (Q - kGravity * area * dt * slope) /
        (1.0 + kGravity * dt * n * n * std::abs(Q) / (area * std::pow(radius, 4.0 / 3.0)));
  }

  // Outlet momentum: free outflow with the water-surface slope pinned to the outlet slope.
  const auto& outlets = domain.outlets();
  const auto& outlet_slope = domain.outlet_slopes();
  for (std::size_t j = 0; j < outlets.size(); ++j) {
    const Outlet& o = outlets[j];
    const double slope = outlet_slope[j];
    double& q = s.outlet_q[static_cast<Eigen::Index>(j)];
    if (o.channel) {
      const auto k = static_cast<std::size_t>(domain.channel_index()(o.cell.row, o.cell.col));
      const double d = s.channel_depth[static_cast<Eigen::Index>(k)];
      if (d <= thr) {
        q = 0.0;
        continue;
      }
      const double w = cells[k].width;
      const double area = w * d;
      const double radius = area / (w + 2.0 * d);
      q = (q + kGravity * area * dt * slope) /
          (1.0 + kGravity * dt * nch[k] * nch[k] * std::abs(q) / (area * std::pow(radius, 4.0 / 3.0)));
    } else {
      const double hv = s.h(o.cell.row, o.cell.col);
      if (hv <= thr) {
        q = 0.0;
        continue;
      }
      const double n = domain.floodplain_n()(o.cell.row, o.cell.col);
      q = inertial_face(q, hv, -slope, n, dt);
    }
    q = std::max(q, 0.0);
  }

  // Flux limiting: no cell may export more than it holds during dt.
  Grid<double> out_vol = Grid<double>::Zero(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 1; c < nc; ++c) {
      const double q = s.qx(r, c);
      if (q > 0.0) out_vol(r, c - 1) += q * dx * dt;
      else if (q < 0.0) out_vol(r, c) -= q * dx * dt;
    }
  for (Eigen::Index r = 1; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) {
      const double q = s.qy(r, c);
      if (q > 0.0) out_vol(r - 1, c) += q * dx * dt;
      else if (q < 0.0) out_vol(r, c) -= q * dx * dt;
    }
  Eigen::VectorXd ch_out = Eigen::VectorXd::Zero(K);
  for (std::size_t j = 0; j < outlets.size(); ++j) {
    const Outlet& o = outlets[j];
    const double q = s.outlet_q[static_cast<Eigen::Index>(j)];
    if (o.channel) ch_out[domain.channel_index()(o.cell.row, o.cell.col)] += q * dt;
    else out_vol(o.cell.row, o.cell.col) += q * dx * dt;
  }
  Grid<double> factor = Grid<double>::Ones(nr, nc);
  for (Eigen::Index i = 0; i < nr * nc; ++i) {
    const double avail = h[i] * dx * dx;
    const double ov = out_vol.data()[i];
    if (ov > avail) factor.data()[i] = ov > 0.0 ? avail / ov : 0.0;
  }
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 1; c < nc; ++c) {
      double& q = s.qx(r, c);
      q *= q > 0.0 ? factor(r, c - 1) : factor(r, c);
    }
  for (Eigen::Index r = 1; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) {
      double& q = s.qy(r, c);
      q *= q > 0.0 ? factor(r - 1, c) : factor(r, c);
    }
  Eigen::VectorXd ch_factor = Eigen::VectorXd::Ones(K);
  if (K > 0) {
    for (Eigen::Index k = 0; k + 1 < K; ++k) {
      const double Q = s.channel_q[k];
      if (Q > 0.0) ch_out[k] += Q * dt;
      else if (Q < 0.0) ch_out[k + 1] -= Q * dt;
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const double avail = s.channel_depth[k] * cells[static_cast<std::size_t>(k)].width * dx;
      if (ch_out[k] > avail) ch_factor[k] = ch_out[k] > 0.0 ? avail / ch_out[k] : 0.0;
    }
    for (Eigen::Index k = 0; k + 1 < K; ++k) {
      double& Q = s.channel_q[k];
      Q *= Q > 0.0 ? ch_factor[k] : ch_factor[k + 1];
    }
  }

  for (std::size_t j = 0; j < outlets.size(); ++j) {
    const Outlet& o = outlets[j];
    double& q = s.outlet_q[static_cast<Eigen::Index>(j)];
    q *= o.channel ? ch_factor[domain.channel_index()(o.cell.row, o.cell.col)] : factor(o.cell.row, o.cell.col);
  }

  // Continuity.
  const double rate = dt / dx;
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) {
      const double net = s.qx(r, c) - s.qx(r, c + 1) + s.qy(r, c) - s.qy(r + 1, c);
      double& hv = s.h(r, c);
      hv += rate * net;
      if (hv < 0.0) hv = 0.0;
    }
  for (Eigen::Index k = 0; k < K; ++k) {
    const double in = k > 0 ? s.channel_q[k - 1] : 0.0;
    const double out = k + 1 < K ? s.channel_q[k] : 0.0;
    double& d = s.channel_depth[k];
    d += dt * (in - out) / (cells[static_cast<std::size_t>(k)].width * dx);
    if (d < 0.0) d = 0.0;
  }

  for (std::size_t j = 0; j < outlets.size(); ++j) {
    const Outlet& o = outlets[j];
    const double q = s.outlet_q[static_cast<Eigen::Index>(j)];
    if (q <= 0.0) continue;
    if (o.channel) {
      const int k = domain.channel_index()(o.cell.row, o.cell.col);
      const double w = cells[static_cast<std::size_t>(k)].width;
      double& d = s.channel_depth[k];
      const double vol = std::min(q * dt, d * w * dx);
      d -= vol / (w * dx);
      if (d < 0.0) d = 0.0;
      s.ledger.outflow += vol;
    } else {
      double& hv = s.h(o.cell.row, o.cell.col);
      const double vol = std::min(q * dx * dt, hv * dx * dx);
      hv -= vol / (dx * dx);
      if (hv < 0.0) hv = 0.0;
      s.ledger.outflow += vol;
    }
  }

  // Exchange: in-channel water above bankfull spills onto the cell; floodplain water on a
  // channel cell refills a channel below bankfull.
  const auto& cap = domain.channel_capacity();
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& cc = cells[static_cast<std::size_t>(k)];
    const double w = cc.width;
    double& d = s.channel_depth[k];
    double& hv = s.h(cc.cell.row, cc.cell.col);
    const double capacity = cap[static_cast<std::size_t>(k)];
    if (d > capacity) {
      hv += (d - capacity) * w * dx / (dx * dx);
      d = capacity;
    } else if (hv > 0.0) {
      const double deficit = (capacity - d) * w * dx;
      const double avail = hv * dx * dx;
      if (avail <= deficit) {
        d += avail / (w * dx);
        hv = 0.0;
      } else {
        hv -= deficit / (dx * dx);
        d = capacity;
      }
    }
  }

  s.t += dt;
  if (!s.h.allFinite() || !s.channel_depth.allFinite() || !s.qx.allFinite() || !s.qy.allFinite())
    report_non_finite(s, domain);
}

void apply_forcing(FlowState& s, const ModelDomain& domain, const BoundaryForcing& forcing, double t, double dt) {
  const GridSpec& g = domain.grid();
  const double dx = domain.cellsize();
  const auto& cells = domain.channel().cells;
  for (const auto& in : forcing.inflows) {
    if (!g.contains(in.cell.row, in.cell.col)) throw DataError("inflow '" + in.name + "' lies outside the grid");
    const double q = in.hydrograph.at(forcing.start_time + t);
    const double vol = q * dt;
    const int k = domain.channel_index()(in.cell.row, in.cell.col);
    if (k >= 0) s.channel_depth[k] += vol / (cells[static_cast<std::size_t>(k)].width * dx);
    else s.h(in.cell.row, in.cell.col) += vol / (dx * dx);
    s.ledger.inflow += vol;
  }
}

void record_gauges(std::vector<GaugeSeries>& series, const FlowState& s, const ModelDomain& domain) {
  const double dx = domain.cellsize();
  for (auto& gs : series) {
    const auto [r, c] = gs.gauge.cell;
    const double z = domain.dem()(r, c);
    const double hv = s.h(r, c);
    const int k = domain.channel_index()(r, c);
    double level = z + hv, depth = hv;
    const double qxc = 0.5 * (s.qx(r, c) + s.qx(r, c + 1));
    const double qyc = 0.5 * (s.qy(r, c) + s.qy(r + 1, c));
    double discharge = dx * std::hypot(qxc, qyc);
    if (k >= 0) {
      const auto kk = static_cast<std::size_t>(k);
      const double d = s.channel_depth[k];
      depth += d;
      if (hv <= 0.0) level = domain.channel_bed()[kk] + d;
      const auto nq = s.channel_q.size();
      if (nq > 0) discharge += std::abs(s.channel_q[std::min<Eigen::Index>(k, nq - 1)]);
    }
    gs.time.push_back(s.t);
    gs.level.push_back(level);
    gs.depth.push_back(depth);
    gs.discharge.push_back(discharge);
  }
}

void update_max(Grid<double>& max_depth, const FlowState& s, const ModelDomain& domain) {
  max_depth = max_depth.max(s.h);
  const auto& cells = domain.channel().cells;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto [r, c] = cells[k].cell;
    max_depth(r, c) = std::max(max_depth(r, c), s.h(r, c) + s.channel_depth[static_cast<Eigen::Index>(k)]);
  }
}

}  // namespace

FlowState step_floodplain(const FlowState& state, const ModelDomain& domain, double dt) {
  if (!(dt > 0.0)) throw DataError("time step must be positive");
  FlowState next = state;
  if (next.outlet_q.size() != static_cast<Eigen::Index>(domain.outlets().size()))
    next.outlet_q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain.outlets().size()));
  if (!next.h.allFinite() || !next.channel_depth.allFinite()) report_non_finite(next, domain);
  advance(next, domain, dt);
  return next;
}

FlowState apply_boundaries(const FlowState& state, const ModelDomain& domain, const BoundaryForcing& forcing,
                           double t, double dt) {
  FlowState next = state;
  apply_forcing(next, domain, forcing, t, dt);
  return next;
}

SimulationOutput simulate(const ModelDomain& domain, const BoundaryForcing& forcing, double duration,
                          const std::vector<GaugeSpec>& gauges) {
  return simulate(domain, forcing, duration, gauges, FlowState::dry(domain));
}

SimulationOutput simulate(const ModelDomain& domain, const BoundaryForcing& forcing, double duration,
                          const std::vector<GaugeSpec>& gauges, FlowState state) {
  if (!(duration > 0.0)) throw DataError("simulation duration must be positive");
  const GridSpec& g = domain.grid();
  for (const auto& in : forcing.inflows) {
    if (in.hydrograph.empty() || forcing.start_time < in.hydrograph.start() ||
        forcing.start_time + duration > in.hydrograph.end())
      throw DataError("hydrograph '" + in.name + "' does not cover the simulation window");
  }
  std::vector<GaugeSeries> series;
  for (const auto& gs : gauges) {
    if (!g.contains(gs.cell.row, gs.cell.col)) throw DataError("gauge '" + gs.name + "' lies outside the grid");
    series.push_back(GaugeSeries{gs, {}, {}, {}, {}});
  }

  state.t = 0.0;
  state.ledger = MassLedger{};
  state.ledger.initial_storage = storage_volume(state, domain);

  Grid<double> max_depth = Grid<double>::Zero(g.nrows, g.ncols);
  update_max(max_depth, state, domain);
  record_gauges(series, state, domain);

  const double interval = domain.config().output_interval;
  double next_output = interval;
  std::size_t steps = 0;
  const double eps_t = 1e-9 * std::max(1.0, duration);
  while (state.t < duration - eps_t) {
    double dt = stable_dt(state, domain);
    dt = std::min({dt, duration - state.t, next_output - state.t});
    apply_forcing(state, domain, forcing, state.t, dt);
    advance(state, domain, dt);
    ++steps;
    update_max(max_depth, state, domain);
    if (state.t >= next_output - eps_t) {
      state.t = next_output;  // snap so output times are exact multiples
      record_gauges(series, state, domain);
      next_output += interval;
    }
  }

  SimulationOutput out;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (!domain.active().data()[i]) max_depth.data()[i] = g.nodata;
  out.max_depth = Raster(g, std::move(max_depth));
  out.gauges = std::move(series);
  out.ledger = state.ledger;
  out.final_storage = storage_volume(state, domain);
  const double residual =
      state.ledger.inflow - state.ledger.outflow - (out.final_storage - state.ledger.initial_storage);
  const double scale = std::max({state.ledger.inflow, state.ledger.initial_storage, 1e-12});
  out.mass_error = std::abs(residual) / scale;
  out.mass_ok = out.mass_error <= domain.config().mass_tolerance;
  out.steps = steps;
  return out;
}

}  // namespace floodtwin
