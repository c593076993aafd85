#include "vicsim/comm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "vicsim/rng.hpp"

namespace vicsim {

CellMask build_mask(const Heatmap& heatmap, double tau) {
  CellMask mask(heatmap.spec(), 0);
  const auto& h = heatmap.cells();
  auto& m = mask.cells();
  for (std::size_t i = 0; i < h.size(); ++i) {
    m[i] = h[i] >= tau ? 1 : 0;
  }
  return mask;
}

CellMask top_k_mask(const Heatmap& heatmap, std::size_t k) {
  const auto& h = heatmap.cells();
  std::vector<std::uint32_t> order(h.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (h[a] != h[b]) return h[a] > h[b];
    return a < b;
  });
  CellMask mask(heatmap.spec(), 0);
  const std::size_t take = std::min(k, order.size());
  for (std::size_t i = 0; i < take; ++i) {
    mask.cells()[order[i]] = 1;
  }
  return mask;
}

FeatureBlockSet blockify(const CellMask& mask, const OccupancyGrid& occupancy,
                         int block_size) {
  if (!(mask.spec() == occupancy.spec())) {
    throw std::invalid_argument("blockify: mask and occupancy specs differ");
  }
  if (block_size < 1) {
    throw std::invalid_argument("blockify: block_size must be >= 1");
  }
  const int rows = mask.rows();
  const int cols = mask.cols();
  if (rows % block_size != 0 || cols % block_size != 0) {
    throw std::invalid_argument("blockify: grid dimensions must divide by block_size");
  }
  FeatureBlockSet out;
  out.block_size = block_size;
  out.source_spec = mask.spec();
  const int block_rows = rows / block_size;
  const int block_cols = cols / block_size;
  for (int br = 0; br < block_rows; ++br) {
    for (int bc = 0; bc < block_cols; ++bc) {
      bool any = false;
      for (int r = br * block_size; !any && r < (br + 1) * block_size; ++r) {
        for (int c = bc * block_size; c < (bc + 1) * block_size; ++c) {
          if (mask.at(r, c) != 0) {
            any = true;
            break;
          }
        }
      }
      if (!any) {
        continue;
      }
      FeatureBlock block;
      block.block_row = br;
      block.block_col = bc;
      block.payload.reserve(static_cast<std::size_t>(block_size) * block_size);
      for (int r = br * block_size; r < (br + 1) * block_size; ++r) {
        for (int c = bc * block_size; c < (bc + 1) * block_size; ++c) {
          block.payload.push_back(occupancy.at(r, c));
        }
      }
      out.blocks.push_back(std::move(block));
    }
  }
  return out;
}

CommStats comm_volume(const FeatureBlockSet& blocks, int bytes_per_cell,
                      int header_bytes) {
  CommStats stats;
  const std::int64_t cells_per_block =
      static_cast<std::int64_t>(blocks.block_size) * blocks.block_size;
  stats.cells_total = static_cast<std::int64_t>(blocks.source_spec.rows()) *
                      blocks.source_spec.cols();
  stats.cells_sent = cells_per_block * static_cast<std::int64_t>(blocks.blocks.size());
  stats.bytes_sent = static_cast<std::int64_t>(blocks.blocks.size()) *
                     (cells_per_block * bytes_per_cell + header_bytes);
  if (stats.bytes_sent > 0) {
    stats.volume_log2 = std::log2(static_cast<double>(stats.bytes_sent) * 8.0);
  }
  stats.percent_of_full =
      stats.cells_total > 0
          ? 100.0 * static_cast<double>(stats.cells_sent) / stats.cells_total
          : 0.0;
  return stats;
}

FeatureBlockSet transmit(const FeatureBlockSet& blocks, const ChannelModel& channel) {
  if (channel.drop_probability < 0.0 || channel.drop_probability > 1.0) {
    throw std::invalid_argument("transmit: drop_probability must be in [0, 1]");
  }
  FeatureBlockSet out;
  out.block_size = blocks.block_size;
  out.source_spec = blocks.source_spec;
  const int block_cols = blocks.source_spec.cols() / blocks.block_size;
  for (const auto& b : blocks.blocks) {
    const std::uint64_t index =
        static_cast<std::uint64_t>(b.block_row) * block_cols + b.block_col;
    SeededRng rng(channel.seed ^ mix_u64(index));
    if (rng.next_double() < channel.drop_probability) {
      continue;
    }
    out.blocks.push_back(b);
  }
  return out;
}

namespace {

constexpr char kBlockMagic[8] = {'R', 'I', 'S', 'E', 'B', 'L', 'K', '1'};

void put_u16(std::vector<unsigned char>& buf, std::uint16_t v) {
  buf.push_back(static_cast<unsigned char>(v & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }
}

void put_f32(std::vector<unsigned char>& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(buf, bits);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  }
  return v;
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void write_block_set(const FeatureBlockSet& blocks, const std::string& path) {
  std::vector<unsigned char> buf;
  buf.insert(buf.end(), kBlockMagic, kBlockMagic + 8);
  put_u32(buf, static_cast<std::uint32_t>(blocks.block_size));
  put_u32(buf, static_cast<std::uint32_t>(blocks.blocks.size()));
  for (const auto& b : blocks.blocks) {
    put_u16(buf, static_cast<std::uint16_t>(b.block_row));
    put_u16(buf, static_cast<std::uint16_t>(b.block_col));
    for (double v : b.payload) {
      put_f32(buf, static_cast<float>(v));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("write_block_set: cannot open " + path);
  }
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) {
    throw std::runtime_error("write_block_set: write failed for " + path);
  }
}

FeatureBlockSet read_block_set(const std::string& path, const GridSpec& source_spec) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("read_block_set: cannot open " + path);
  }
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 16 || std::memcmp(buf.data(), kBlockMagic, 8) != 0) {
    throw std::runtime_error("read_block_set: bad header in " + path);
  }
  FeatureBlockSet out;
  out.source_spec = source_spec;
  out.block_size = static_cast<int>(get_u32(&buf[8]));
  const std::uint32_t count = get_u32(&buf[12]);
  if (out.block_size < 1 || source_spec.rows() % out.block_size != 0 ||
      source_spec.cols() % out.block_size != 0) {
    throw std::runtime_error("read_block_set: block size does not fit the grid in " +
                             path);
  }
  const int block_rows = source_spec.rows() / out.block_size;
  const int block_cols = source_spec.cols() / out.block_size;
  const std::size_t cells = static_cast<std::size_t>(out.block_size) * out.block_size;
  const std::size_t per_block = 4 + cells * 4;
  if (buf.size() != 16 + static_cast<std::size_t>(count) * per_block) {
    throw std::runtime_error("read_block_set: truncated file " + path);
  }
  std::size_t off = 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureBlock b;
    b.block_row = get_u16(&buf[off]);
    b.block_col = get_u16(&buf[off + 2]);
    off += 4;
    if (b.block_row >= block_rows || b.block_col >= block_cols) {
      throw std::runtime_error("read_block_set: block coordinates outside the grid in " +
                               path);
    }
    b.payload.reserve(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      b.payload.push_back(get_f32(&buf[off]));
      off += 4;
    }
    out.blocks.push_back(std::move(b));
  }
  return out;
}

}  // namespace vicsim
