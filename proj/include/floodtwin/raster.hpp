#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>

#include "floodtwin/error.hpp"

namespace floodtwin {

template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MaskGrid = Grid<bool>;

// Georeferencing of a north-up raster. Row 0 is the northern-most row.
struct GridSpec {
  Eigen::Index ncols = 1;
  Eigen::Index nrows = 1;
  double xll = 0.0;
  double yll = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;

  Eigen::Index size() const { return ncols * nrows; }
  double cell_area() const { return cellsize * cellsize; }
  double x_center(Eigen::Index col) const { return xll + (static_cast<double>(col) + 0.5) * cellsize; }
  double y_center(Eigen::Index row) const {
    return yll + (static_cast<double>(nrows - row) - 0.5) * cellsize;
  }
  bool contains(Eigen::Index row, Eigen::Index col) const {
    return row >= 0 && row < nrows && col >= 0 && col < ncols;
  }

  // Throws DataError unless ncols, nrows >= 1 and cellsize > 0.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline bool aligned(const GridSpec& a, const GridSpec& b) { return a == b; }

// One scalar field on a GridSpec. Nodata cells hold exactly spec.nodata.
template <typename Scalar>
class BasicRaster {
 public:
  BasicRaster() = default;

  explicit BasicRaster(const GridSpec& spec, Scalar fill = Scalar(0))
      : spec_(spec), values_(Grid<Scalar>::Constant(spec.nrows, spec.ncols, fill)) {
    spec_.validate();
  }

  BasicRaster(const GridSpec& spec, Grid<Scalar> values) : spec_(spec), values_(std::move(values)) {
    spec_.validate();
    if (values_.rows() != spec_.nrows || values_.cols() != spec_.ncols)
      throw DataError("raster values do not match grid dimensions");
  }

  const GridSpec& spec() const { return spec_; }
  const Grid<Scalar>& values() const { return values_; }
  Grid<Scalar>& values() { return values_; }

  Eigen::Index rows() const { return spec_.nrows; }
  Eigen::Index cols() const { return spec_.ncols; }
  Eigen::Index size() const { return spec_.size(); }

  Scalar& operator()(Eigen::Index r, Eigen::Index c) { return values_(r, c); }
  Scalar operator()(Eigen::Index r, Eigen::Index c) const { return values_(r, c); }

  // Row-major flat access.
  Scalar& operator[](Eigen::Index i) { return values_.data()[i]; }
  Scalar operator[](Eigen::Index i) const { return values_.data()[i]; }

  bool is_nodata(Eigen::Index r, Eigen::Index c) const {
    return values_(r, c) == static_cast<Scalar>(spec_.nodata);
  }
  bool is_nodata(Eigen::Index i) const { return values_.data()[i] == static_cast<Scalar>(spec_.nodata); }

  MaskGrid valid_mask() const { return values_ != static_cast<Scalar>(spec_.nodata); }

  Eigen::Index nodata_count() const { return static_cast<Eigen::Index>((!valid_mask()).count()); }

  friend bool operator==(const BasicRaster& a, const BasicRaster& b) {
    return a.spec_ == b.spec_ && (a.values_ == b.values_).all();
  }

 private:
  GridSpec spec_;
  Grid<Scalar> values_;
};

using Raster = BasicRaster<double>;

// Wet/dry classification with a validity mask; wet is meaningless where valid is false.
struct BinaryMap {
  GridSpec spec;
  MaskGrid wet;
  MaskGrid valid;

  BinaryMap() = default;
  explicit BinaryMap(const GridSpec& s, bool fill = false)
      : spec(s), wet(MaskGrid::Constant(s.nrows, s.ncols, fill)), valid(MaskGrid::Constant(s.nrows, s.ncols, true)) {}

  Eigen::Index wet_count() const { return (wet && valid).count(); }
};

Raster read_ascii_grid(const std::filesystem::path& path);
void write_ascii_grid(const Raster& raster, const std::filesystem::path& path);

// Nearest-cell-centre resampling onto `target`; cells outside the source extent become nodata.
// Throws DataError if the extents are disjoint.
Raster resample_nearest(const Raster& source, const GridSpec& target);

inline constexpr double kDefaultWetThreshold = 0.10;

// wet = depth > threshold (strict). Nodata cells become invalid.
BinaryMap binarize_depth(const Raster& depth, double threshold = kDefaultWetThreshold);

// wet = probability >= threshold; used to binarise observation probability maps.
BinaryMap binarize_probability(const Raster& probability, double threshold);

}  // namespace floodtwin
