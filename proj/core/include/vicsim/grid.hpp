#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vicsim/geometry.hpp"

namespace vicsim {

struct CellIndex {
  int row{0};
  int col{0};
  bool operator==(const CellIndex& o) const { return row == o.row && col == o.col; }
};

// Fixed raster layout over a world-frame rectangle. Rows index y, columns
// index x, both ascending; storage is row-major so file dumps are
// bit-reproducible.
struct GridSpec {
  double x_min{-51.2}, x_max{51.2};
  double y_min{-51.2}, y_max{51.2};
  double cell_size{0.8};

  static GridSpec default_spec() { return {}; }

  int cols() const { return static_cast<int>(std::lround((x_max - x_min) / cell_size)); }
  int rows() const { return static_cast<int>(std::lround((y_max - y_min) / cell_size)); }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols());
  }

  void validate() const;

  Point2 cell_center(const CellIndex& c) const {
    return {x_min + (c.col + 0.5) * cell_size, y_min + (c.row + 0.5) * cell_size};
  }

  bool operator==(const GridSpec& o) const {
    return x_min == o.x_min && x_max == o.x_max && y_min == o.y_min &&
           y_max == o.y_max && cell_size == o.cell_size;
  }
};

// Cell containing p, or absent when p is outside the extent. Points exactly
// on the max edge are outside.
std::optional<CellIndex> world_to_cell(const GridSpec& spec, const Point2& p);

template <typename T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(const GridSpec& spec, T init = T{})
      : spec_(spec), cells_(spec.cell_count(), init) {
    spec_.validate();
  }

  const GridSpec& spec() const { return spec_; }
  int rows() const { return spec_.rows(); }
  int cols() const { return spec_.cols(); }
  std::size_t size() const { return cells_.size(); }

  T& at(int row, int col) {
    assert(row >= 0 && row < rows() && col >= 0 && col < cols());
    return cells_[static_cast<std::size_t>(row) * cols() + col];
  }
  const T& at(int row, int col) const {
    assert(row >= 0 && row < rows() && col >= 0 && col < cols());
    return cells_[static_cast<std::size_t>(row) * cols() + col];
  }
  T& at(const CellIndex& c) { return at(c.row, c.col); }
  const T& at(const CellIndex& c) const { return at(c.row, c.col); }

  const std::vector<T>& cells() const { return cells_; }
  std::vector<T>& cells() { return cells_; }

  void fill(T v) { cells_.assign(cells_.size(), v); }

  bool operator==(const Grid& o) const { return spec_ == o.spec_ && cells_ == o.cells_; }

 private:
  GridSpec spec_{};
  std::vector<T> cells_{};
};

using OccupancyGrid = Grid<double>;   // non-negative evidence counts
using CellMask = Grid<std::uint8_t>;  // 0/1
using Heatmap = Grid<double>;         // values in [0, 1]

std::size_t mask_cardinality(const CellMask& m);

// |a ∧ b| / |a ∨ b|; two empty masks compare as identical (ratio 1) so frames
// with no relevant area do not poison averages.
double mask_iou(const CellMask& a, const CellMask& b);

// Portable graymap (P5) exports. write_pgm maps [0,1] onto the byte range;
// write_pgm_autoscale normalizes by the grid maximum first (for count grids).
void write_pgm(const Heatmap& h, const std::string& path);
void write_pgm_autoscale(const OccupancyGrid& g, const std::string& path);
void write_pgm(const CellMask& m, const std::string& path);

// Flat CSV: header then one "row,col,value" line per cell.
void write_csv(const Heatmap& h, const std::string& path);
void write_csv(const CellMask& m, const std::string& path);

}  // namespace vicsim
