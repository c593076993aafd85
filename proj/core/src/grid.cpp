#include "vicsim/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace vicsim {

void GridSpec::validate() const {
  if (cell_size <= 0.0) {
    throw std::invalid_argument("GridSpec: cell_size must be positive");
  }
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw std::invalid_argument("GridSpec: extent must be non-empty");
  }
  const double nx = (x_max - x_min) / cell_size;
  const double ny = (y_max - y_min) / cell_size;
  const double tol = 1e-9;
  if (std::abs(nx - std::lround(nx)) > tol || std::lround(nx) < 1) {
    throw std::invalid_argument("GridSpec: x extent is not an integer number of cells");
  }
  if (std::abs(ny - std::lround(ny)) > tol || std::lround(ny) < 1) {
    throw std::invalid_argument("GridSpec: y extent is not an integer number of cells");
  }
}

std::optional<CellIndex> world_to_cell(const GridSpec& spec, const Point2& p) {
  const int col = static_cast<int>(std::floor((p.x - spec.x_min) / spec.cell_size));
  const int row = static_cast<int>(std::floor((p.y - spec.y_min) / spec.cell_size));
  if (col < 0 || col >= spec.cols() || row < 0 || row >= spec.rows()) {
    return std::nullopt;
  }
  return CellIndex{row, col};
}

std::size_t mask_cardinality(const CellMask& m) {
  std::size_t n = 0;
  for (auto v : m.cells()) {
    n += (v != 0);
  }
  return n;
}

double mask_iou(const CellMask& a, const CellMask& b) {
  if (!(a.spec() == b.spec())) {
    throw std::invalid_argument("mask_iou: grid specs differ");
  }
  std::size_t inter = 0, uni = 0;
  const auto& ca = a.cells();
  const auto& cb = b.cells();
  for (std::size_t i = 0; i < ca.size(); ++i) {
    const bool va = ca[i] != 0;
    const bool vb = cb[i] != 0;
    inter += (va && vb);
    uni += (va || vb);
  }
  if (uni == 0) {
    return 1.0;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void write_pgm_bytes(const std::vector<std::uint8_t>& bytes, int cols, int rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("write_pgm: cannot open " + path);
  }
  out << "P5\n" << cols << " " << rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("write_pgm: write failed for " + path);
  }
}

std::uint8_t to_byte(double v01) {
  const double v = v01 < 0.0 ? 0.0 : (v01 > 1.0 ? 1.0 : v01);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

template <typename T>
void write_csv_impl(const Grid<T>& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_csv: cannot open " + path);
  }
  out << "row,col,value\n";
  char buf[64];
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(g.at(r, c)));
      out << r << "," << c << "," << buf << "\n";
    }
  }
}

}  // namespace

void write_pgm(const Heatmap& h, const std::string& path) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(h.size());
  for (double v : h.cells()) {
    bytes.push_back(to_byte(v));
  }
  write_pgm_bytes(bytes, h.cols(), h.rows(), path);
}

void write_pgm_autoscale(const OccupancyGrid& g, const std::string& path) {
  double max_v = 0.0;
  for (double v : g.cells()) {
    max_v = std::max(max_v, v);
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(g.size());
  for (double v : g.cells()) {
    bytes.push_back(max_v > 0.0 ? to_byte(v / max_v) : 0);
  }
  write_pgm_bytes(bytes, g.cols(), g.rows(), path);
}

void write_pgm(const CellMask& m, const std::string& path) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(m.size());
  for (auto v : m.cells()) {
    bytes.push_back(v != 0 ? 255 : 0);
  }
  write_pgm_bytes(bytes, m.cols(), m.rows(), path);
}

void write_csv(const Heatmap& h, const std::string& path) { write_csv_impl(h, path); }
void write_csv(const CellMask& m, const std::string& path) { write_csv_impl(m, path); }

}  // namespace vicsim
