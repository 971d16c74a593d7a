#include "floodtwin/synthetic.hpp"

#include <cmath>

namespace floodtwin {

SyntheticValley make_valley(const ValleySpec& spec) {
  GridSpec g;
  g.nrows = spec.nrows;
  g.ncols = spec.ncols;
  g.cellsize = spec.cellsize;
  const Eigen::Index mid = spec.ncols / 2;

  Raster dem(g);
  for (Eigen::Index r = 0; r < g.nrows; ++r)
    for (Eigen::Index c = 0; c < g.ncols; ++c)
      dem(r, c) = spec.top_elevation - spec.slope * spec.cellsize * static_cast<double>(r) +
                  spec.cross_slope * spec.cellsize * static_cast<double>(std::abs(c - mid));

  ChannelNetwork channel;
  channel.use_depth_law = true;
  for (Eigen::Index r = 0; r < g.nrows; ++r) {
    const double bank = dem(r, mid);
    channel.cells.push_back(ChannelCell{{r, mid}, spec.channel_width, bank, bank});
  }

  std::vector<Outlet> outlets;
  outlets.push_back(Outlet{{g.nrows - 1, mid}, spec.slope, true});
  for (Eigen::Index c = 0; c < g.ncols; ++c) outlets.push_back(Outlet{{g.nrows - 1, c}, spec.slope, false});

  SyntheticValley v{
      ModelDomain(std::move(dem), std::move(channel), {spec.parameters}, std::nullopt, spec.solver, std::move(outlets)),
      CellIndex{0, mid},
      {}};
  const Eigen::Index quarter = g.nrows / 4;
  v.gauges = {GaugeSpec{"G1", {quarter, mid}}, GaugeSpec{"G2", {2 * quarter, mid}}, GaugeSpec{"G3", {3 * quarter, mid}}};
  return v;
}

}  // namespace floodtwin
