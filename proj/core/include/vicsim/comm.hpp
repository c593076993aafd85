#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vicsim/grid.hpp"

namespace vicsim {

struct FeatureBlock {
  int block_row{0};
  int block_col{0};
  std::vector<double> payload;  // block_size^2 values, row-major
};

struct FeatureBlockSet {
  int block_size{4};
  GridSpec source_spec{};
  std::vector<FeatureBlock> blocks;  // unique coordinates, row-major order
};

// Exact transmission accounting. cells_sent counts whole-block payload
// cells; volume_log2 is log2 of the payload size in bits and is absent when
// nothing was sent.
struct CommStats {
  std::int64_t cells_sent{0};
  std::int64_t cells_total{0};
  std::int64_t bytes_sent{0};
  std::optional<double> volume_log2;
  double percent_of_full{0.0};
};

struct ChannelModel {
  double drop_probability{0.0};
  std::uint64_t seed{0};
};

// mask(c) = heatmap(c) >= tau.
CellMask build_mask(const Heatmap& heatmap, double tau);

// Mask of the top k cells ranked by value (ties broken by row-major cell
// index). Used to pin different mask policies to one cell budget.
CellMask top_k_mask(const Heatmap& heatmap, std::size_t k);

// Every block containing at least one masked cell, carrying that block's
// full occupancy payload. Grid dimensions must divide by block_size.
FeatureBlockSet blockify(const CellMask& mask, const OccupancyGrid& occupancy,
                         int block_size = 4);

CommStats comm_volume(const FeatureBlockSet& blocks, int bytes_per_cell = 4,
                      int header_bytes = 4);

// Drops each block independently with drop_probability. Per-block seeds are
// split from (seed, block index) so the outcome does not depend on iteration
// order.
FeatureBlockSet transmit(const FeatureBlockSet& blocks, const ChannelModel& channel);

// Length-prefixed binary format: magic "RISEBLK1", u32 block_size, u32 count,
// then per block u16 row, u16 col and the payload as little-endian 32-bit
// floats. Bit-exact across platforms.
void write_block_set(const FeatureBlockSet& blocks, const std::string& path);
FeatureBlockSet read_block_set(const std::string& path, const GridSpec& source_spec);

}  // namespace vicsim
