#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "floodtwin/hydro_solver.hpp"

namespace floodtwin {

// Everything a domain config file describes.
struct DomainBundle {
  ModelDomain domain;
  std::vector<GaugeSpec> gauges;
  std::map<std::string, CellIndex> inflow_sites;  // boundary station -> grid cell
};

// Domain config JSON:
//   dem, region_mask?, channel? (CSV path), use_depth_law?, parameters (object or array per region),
//   solver? {cfl, dt_min, dt_max, depth_threshold, output_interval_s, mass_tolerance},
//   outlets? [{row, col, slope?, kind: "channel"|"floodplain"} | {edge: "north"|"south"|"east"|"west", slope?}],
//   inflows? {station: {row, col} | {channel_index}}, gauges? [{name, row, col}]
// Relative paths resolve against the config file's directory.
DomainBundle load_domain_config(const std::filesystem::path& path);

// Channel CSV with columns row,col,width_m,bed_elev_m,bank_elev_m, upstream to downstream.
ChannelNetwork read_channel_csv(const std::filesystem::path& path);
void write_channel_csv(const ChannelNetwork& channel, const std::filesystem::path& path);

// Stable content hash of geometry, parameters, solver settings and outlets.
std::string domain_fingerprint(const ModelDomain& domain);

}  // namespace floodtwin
