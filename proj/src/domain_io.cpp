#include "floodtwin/domain_io.hpp"

#include <cstdio>
#include <fstream>

#include "floodtwin/csv.hpp"
#include "floodtwin/error.hpp"
#include "floodtwin/hashing.hpp"
#include "json.hpp"

namespace floodtwin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

RegionParameters parse_region(const json& j) {
  RegionParameters p;
  p.r_ch = j.value("r_ch", p.r_ch);
  p.p_ch = j.value("p_ch", p.p_ch);
  p.n_ch = j.value("n_ch", p.n_ch);
  p.n_fp = j.value("n_fp", p.n_fp);
  return p;
}

CellIndex parse_cell(const json& j) { return CellIndex{j.at("row").get<Eigen::Index>(), j.at("col").get<Eigen::Index>()}; }

}  // namespace

ChannelNetwork read_channel_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto cr = t.column("row"), cc = t.column("col"), cw = t.column("width_m"), cb = t.column("bed_elev_m"),
             ck = t.column("bank_elev_m");
  ChannelNetwork net;
  for (const auto& row : t.rows) {
    ChannelCell c;
    c.cell = {static_cast<Eigen::Index>(csv_integer(t, row, cr)), static_cast<Eigen::Index>(csv_integer(t, row, cc))};
    c.width = csv_double(t, row, cw);
    c.bed = csv_double(t, row, cb);
    c.bank = csv_double(t, row, ck);
    if (!(c.width > 0.0)) throw ParseError(t.source, row.line, "channel width must be positive");
    net.cells.push_back(c);
  }
  return net;
}

void write_channel_csv(const ChannelNetwork& channel, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "row,col,width_m,bed_elev_m,bank_elev_m\n";
  char buf[160];
  for (const auto& c : channel.cells) {
    std::snprintf(buf, sizeof buf, "%lld,%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(c.cell.row),
                  static_cast<long long>(c.cell.col), c.width, c.bed, c.bank);
    out << buf;
  }
}

DomainBundle load_domain_config(const fs::path& path) {
  const json j = read_json(path);
  const fs::path base = path.parent_path();
  try {
    Raster dem = read_ascii_grid(resolve(base, j.at("dem").get<std::string>()));
    std::optional<Raster> mask;
    if (j.contains("region_mask") && !j["region_mask"].is_null()) {
      mask = read_ascii_grid(resolve(base, j["region_mask"].get<std::string>()));
    }
    ChannelNetwork channel;
    if (j.contains("channel") && !j["channel"].is_null())
      channel = read_channel_csv(resolve(base, j["channel"].get<std::string>()));
    channel.use_depth_law = j.value("use_depth_law", false);

    std::vector<RegionParameters> regions;
    const json& params = j.at("parameters");
    if (params.is_array()) {
      for (const auto& p : params) regions.push_back(parse_region(p));
    } else {
      regions.push_back(parse_region(params));
    }

    SolverConfig cfg;
    if (j.contains("solver")) {
      const json& s = j["solver"];
      cfg.cfl = s.value("cfl", cfg.cfl);
      cfg.dt_min = s.value("dt_min", cfg.dt_min);
      cfg.dt_max = s.value("dt_max", cfg.dt_max);
      cfg.depth_threshold = s.value("depth_threshold", cfg.depth_threshold);
      cfg.output_interval = s.value("output_interval_s", cfg.output_interval);
      cfg.mass_tolerance = s.value("mass_tolerance", cfg.mass_tolerance);
    }

    const GridSpec g = dem.spec();
    std::vector<Outlet> outlets;
    if (j.contains("outlets")) {
      for (const auto& o : j["outlets"]) {
        const double slope = o.value("slope", 0.0);
        if (o.contains("edge")) {
          const std::string edge = o["edge"].get<std::string>();
          const auto add = [&](Eigen::Index r, Eigen::Index c) {
            if (dem.is_nodata(r, c)) return;
            outlets.push_back(Outlet{{r, c}, slope, false});
          };
          if (edge == "south") for (Eigen::Index c = 0; c < g.ncols; ++c) add(g.nrows - 1, c);
          else if (edge == "north") for (Eigen::Index c = 0; c < g.ncols; ++c) add(0, c);
          else if (edge == "west") for (Eigen::Index r = 0; r < g.nrows; ++r) add(r, 0);
          else if (edge == "east") for (Eigen::Index r = 0; r < g.nrows; ++r) add(r, g.ncols - 1);
          else throw DataError("unknown outlet edge '" + edge + "'");
        } else {
          const std::string kind = o.value("kind", std::string("channel"));
          if (kind != "channel" && kind != "floodplain") throw DataError("outlet kind must be channel or floodplain");
          CellIndex cell;
          if (o.contains("channel_index")) {
            const auto k = o["channel_index"].get<std::size_t>();
            if (k >= channel.cells.size()) throw DataError("outlet channel_index out of range");
            cell = channel.cells[k].cell;
          } else {
            cell = parse_cell(o);
          }
          outlets.push_back(Outlet{cell, slope, kind == "channel"});
        }
      }
    }

    std::map<std::string, CellIndex> inflows;
    if (j.contains("inflows")) {
      for (const auto& [name, site] : j["inflows"].items()) {
        if (site.contains("channel_index")) {
          const auto k = site["channel_index"].get<std::size_t>();
          if (k >= channel.cells.size()) throw DataError("inflow '" + name + "' channel_index out of range");
          inflows[name] = channel.cells[k].cell;
        } else {
          inflows[name] = parse_cell(site);
        }
      }
    }

    std::vector<GaugeSpec> gauges;
    if (j.contains("gauges")) {
      for (const auto& gj : j["gauges"]) {
        GaugeSpec gs{gj.at("name").get<std::string>(), parse_cell(gj)};
        if (!g.contains(gs.cell.row, gs.cell.col)) throw DataError("gauge '" + gs.name + "' lies outside the grid");
        gauges.push_back(gs);
      }
    }

    return DomainBundle{ModelDomain(std::move(dem), std::move(channel), std::move(regions), std::move(mask), cfg,
                                    std::move(outlets)),
                        std::move(gauges), std::move(inflows)};
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string domain_fingerprint(const ModelDomain& d) {
  Fnv1a h;
  const GridSpec& g = d.grid();
  h.update("dem").update(static_cast<double>(g.ncols)).update(static_cast<double>(g.nrows));
  h.update(g.xll).update(g.yll).update(g.cellsize).update(g.nodata);
  for (Eigen::Index i = 0; i < g.size(); ++i) h.update(d.dem()[i]);
  if (d.region_mask()) {
    h.update("regions");
    for (Eigen::Index i = 0; i < g.size(); ++i) h.update((*d.region_mask())[i]);
  }
  h.update("channel").update(d.channel().use_depth_law ? 1.0 : 0.0);
  for (const auto& c : d.channel().cells) {
    h.update(static_cast<double>(c.cell.row)).update(static_cast<double>(c.cell.col));
    h.update(c.width).update(c.bed).update(c.bank);
  }
  h.update("params");
  for (const auto& p : d.regions()) h.update(p.r_ch).update(p.p_ch).update(p.n_ch).update(p.n_fp);
  const SolverConfig& s = d.config();
  h.update("solver").update(s.cfl).update(s.dt_min).update(s.dt_max).update(s.depth_threshold);
  h.update(s.output_interval).update(s.mass_tolerance);
  h.update("outlets");
  for (const auto& o : d.outlets()) {
    h.update(static_cast<double>(o.cell.row)).update(static_cast<double>(o.cell.col));
    h.update(o.slope).update(o.channel ? 1.0 : 0.0);
  }
  return h.hex();
}

}  // namespace floodtwin
