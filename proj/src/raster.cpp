#include "floodtwin/raster.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace floodtwin {

void GridSpec::validate() const {
  if (ncols < 1 || nrows < 1) throw DataError("grid must have at least one row and column");
  if (!(cellsize > 0.0) || !std::isfinite(cellsize)) throw DataError("grid cellsize must be positive");
  if (!std::isfinite(xll) || !std::isfinite(yll)) throw DataError("grid origin must be finite");
  if (std::isnan(nodata)) throw DataError("NODATA_value may not be NaN");
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

Raster read_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ASCII grid '" + path.string() + "'");
  const std::string src = path.string();

  GridSpec spec;
  bool have_ncols = false, have_nrows = false, have_x = false, have_y = false, have_cs = false;
  bool x_center = false, y_center = false;
  std::string line;
  std::size_t lineno = 0;
  std::streampos data_start = in.tellg();
  std::size_t data_lineno = 0;

  // Header lines are "key value" pairs; the first line whose first token is numeric starts the data.
  while (true) {
    data_start = in.tellg();
    if (!std::getline(in, line)) break;
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    double probe;
    if (parse_double(toks[0], probe)) {
      data_lineno = lineno - 1;
      break;
    }
    if (toks.size() != 2) throw ParseError(src, lineno, "malformed header line '" + line + "'");
    const std::string key = lower(std::string(toks[0]));
    double v;
    if (!parse_double(toks[1], v)) throw ParseError(src, lineno, "non-numeric header value for " + key);
    if (key == "ncols") {
      spec.ncols = static_cast<Eigen::Index>(v);
      have_ncols = v == std::floor(v);
    } else if (key == "nrows") {
      spec.nrows = static_cast<Eigen::Index>(v);
      have_nrows = v == std::floor(v);
    } else if (key == "xllcorner" || key == "xllcenter") {
      spec.xll = v;
      have_x = true;
      x_center = key == "xllcenter";
    } else if (key == "yllcorner" || key == "yllcenter") {
      spec.yll = v;
      have_y = true;
      y_center = key == "yllcenter";
    } else if (key == "cellsize") {
      spec.cellsize = v;
      have_cs = true;
    } else if (key == "nodata_value") {
      spec.nodata = v;
    } else {
      throw ParseError(src, lineno, "unknown header key '" + std::string(toks[0]) + "'");
    }
  }
  if (!(have_ncols && have_nrows && have_x && have_y && have_cs))
    throw ParseError(src, lineno, "incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)");
  if (x_center) spec.xll -= 0.5 * spec.cellsize;
  if (y_center) spec.yll -= 0.5 * spec.cellsize;
  try {
    spec.validate();
  } catch (const DataError& e) {
    throw ParseError(src, lineno, e.what());
  }

  in.clear();
  in.seekg(data_start);
  lineno = data_lineno;
  Grid<double> values(spec.nrows, spec.ncols);
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (row >= spec.nrows) throw ParseError(src, lineno, "more data rows than nrows");
    if (static_cast<Eigen::Index>(toks.size()) != spec.ncols)
      throw ParseError(src, lineno,
                       "expected " + std::to_string(spec.ncols) + " values, found " + std::to_string(toks.size()));
    for (Eigen::Index c = 0; c < spec.ncols; ++c) {
      double v;
      if (!parse_double(toks[static_cast<std::size_t>(c)], v))
        throw ParseError(src, lineno, "non-numeric cell '" + std::string(toks[static_cast<std::size_t>(c)]) + "'");
      if (!std::isfinite(v)) throw ParseError(src, lineno, "non-finite cell value");
      values(row, c) = v;
    }
    ++row;
  }
  if (row != spec.nrows)
    throw ParseError(src, lineno, "expected " + std::to_string(spec.nrows) + " rows, found " + std::to_string(row));
  return Raster(spec, std::move(values));
}

void write_ascii_grid(const Raster& raster, const std::filesystem::path& path) {
  if (path.empty()) throw DataError("empty output path for ASCII grid");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write ASCII grid '" + path.string() + "'");
  const GridSpec& s = raster.spec();
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "ncols " << s.ncols << '\n'
      << "nrows " << s.nrows << '\n'
      << "xllcorner " << num(s.xll) << '\n'
      << "yllcorner " << num(s.yll) << '\n'
      << "cellsize " << num(s.cellsize) << '\n'
      << "NODATA_value " << num(s.nodata) << '\n';
  std::string row;
  for (Eigen::Index r = 0; r < s.nrows; ++r) {
    row.clear();
    for (Eigen::Index c = 0; c < s.ncols; ++c) {
      if (c) row.push_back(' ');
      row += num(raster(r, c));
    }
    row.push_back('\n');
    out << row;
  }
  if (!out) throw DataError("I/O failure writing '" + path.string() + "'");
}

Raster resample_nearest(const Raster& source, const GridSpec& target) {
  target.validate();
  const GridSpec& s = source.spec();
  if (aligned(s, target)) return source;

  const double sx0 = s.xll, sx1 = s.xll + s.ncols * s.cellsize;
  const double sy0 = s.yll, sy1 = s.yll + s.nrows * s.cellsize;
  const double tx0 = target.xll, tx1 = target.xll + target.ncols * target.cellsize;
  const double ty0 = target.yll, ty1 = target.yll + target.nrows * target.cellsize;
  if (tx0 >= sx1 || tx1 <= sx0 || ty0 >= sy1 || ty1 <= sy0)
    throw DataError("resample: source and target extents do not overlap");

  Raster out(target, target.nodata);
  for (Eigen::Index r = 0; r < target.nrows; ++r) {
    const double y = target.y_center(r);
    // Source row whose centre is nearest; row 0 is north.
    const double fr = (sy1 - y) / s.cellsize;
    if (fr < 0.0 || fr >= static_cast<double>(s.nrows)) continue;
    const auto sr = static_cast<Eigen::Index>(std::floor(fr));
    for (Eigen::Index c = 0; c < target.ncols; ++c) {
      const double fc = (target.x_center(c) - sx0) / s.cellsize;
      if (fc < 0.0 || fc >= static_cast<double>(s.ncols)) continue;
      const auto sc = static_cast<Eigen::Index>(std::floor(fc));
      out(r, c) = source.is_nodata(sr, sc) ? target.nodata : source(sr, sc);
    }
  }
  return out;
}

BinaryMap binarize_depth(const Raster& depth, double threshold) {
  if (!(threshold >= 0.0)) throw DataError("wet threshold must be non-negative");
  BinaryMap m(depth.spec());
  m.valid = depth.valid_mask();
  m.wet = (depth.values() > threshold) && m.valid;
  return m;
}

BinaryMap binarize_probability(const Raster& probability, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw DataError("probability threshold must lie in [0, 1]");
  BinaryMap m(probability.spec());
  m.valid = probability.valid_mask();
  m.wet = (probability.values() >= threshold) && m.valid;
  return m;
}

}  // namespace floodtwin
