#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <set>

#include "vicsim/comm.hpp"
#include "vicsim/rng.hpp"

using namespace vicsim;

namespace {
const GridSpec kSpec = GridSpec::default_spec();  // 128x128
}

TEST_CASE("build_mask thresholds") {
  Heatmap h(kSpec, 0.05);
  CHECK(mask_cardinality(build_mask(h, 0.0)) == h.size());
  CHECK(mask_cardinality(build_mask(h, 1.01)) == 0);

  // 116 cells at or above the threshold: the sub-1% transmission regime.
  Heatmap fixture(kSpec, 0.0);
  for (int i = 0; i < 116; ++i) {
    fixture.at(40 + i / 16, 60 + i % 16) = 0.5;
  }
  const CellMask m = build_mask(fixture, 0.25);
  CHECK(mask_cardinality(m) == 116);
  CHECK(100.0 * 116.0 / 16384.0 == doctest::Approx(0.708).epsilon(1e-3));
}

TEST_CASE("mask grows as tau shrinks") {
  SeededRng rng(13);
  Heatmap h(kSpec, 0.0);
  for (auto& v : h.cells()) {
    v = rng.next_double();
  }
  std::size_t prev = 0;
  for (double tau : {0.9, 0.7, 0.5, 0.3, 0.1, 0.0}) {
    const auto m = build_mask(h, tau);
    CHECK(mask_cardinality(m) >= prev);
    prev = mask_cardinality(m);
  }
}

TEST_CASE("top_k_mask takes exactly k cells, ranked by value") {
  Heatmap h(kSpec, 0.0);
  h.at(3, 3) = 0.9;
  h.at(10, 10) = 0.8;
  h.at(20, 20) = 0.7;
  const CellMask m = top_k_mask(h, 2);
  CHECK(mask_cardinality(m) == 2);
  CHECK(m.at(3, 3) == 1);
  CHECK(m.at(10, 10) == 1);
  CHECK(m.at(20, 20) == 0);
}

TEST_CASE("blockify") {
  OccupancyGrid occ(kSpec, 0.0);
  occ.at(5, 5) = 3.0;

  SUBCASE("empty mask, empty set") {
    const auto blocks = blockify(CellMask(kSpec, 0), occ, 4);
    CHECK(blocks.blocks.empty());
  }

  SUBCASE("one masked cell selects exactly one block with the payload") {
    CellMask m(kSpec, 0);
    m.at(5, 5) = 1;
    const auto blocks = blockify(m, occ, 4);
    REQUIRE(blocks.blocks.size() == 1);
    CHECK(blocks.blocks[0].block_row == 1);
    CHECK(blocks.blocks[0].block_col == 1);
    // (5,5) inside block (1,1) is local (1,1) -> payload index 5
    CHECK(blocks.blocks[0].payload[5] == doctest::Approx(3.0));
  }

  SUBCASE("a 2x2-cell patch on a block corner touches four blocks") {
    CellMask m(kSpec, 0);
    m.at(3, 3) = 1;
    m.at(3, 4) = 1;
    m.at(4, 3) = 1;
    m.at(4, 4) = 1;
    CHECK(blockify(m, occ, 4).blocks.size() == 4);
  }

  SUBCASE("every masked cell lies inside some block") {
    SeededRng rng(99);
    CellMask m(kSpec, 0);
    for (auto& v : m.cells()) {
      v = rng.next_double() < 0.02;
    }
    const auto blocks = blockify(m, occ, 4);
    const int bc = kSpec.cols() / 4;
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(kSpec.rows() / 4) * bc, 0);
    for (const auto& b : blocks.blocks) {
      covered[static_cast<std::size_t>(b.block_row) * bc + b.block_col] = 1;
    }
    for (int r = 0; r < kSpec.rows(); ++r) {
      for (int c = 0; c < kSpec.cols(); ++c) {
        if (m.at(r, c)) {
          CHECK(covered[static_cast<std::size_t>(r / 4) * bc + c / 4] == 1);
        }
      }
    }
  }

  SUBCASE("indivisible dimensions are rejected") {
    CHECK_THROWS_AS(blockify(CellMask(kSpec, 0), occ, 3), std::invalid_argument);
  }
}

TEST_CASE("comm_volume accounting") {
  SUBCASE("nothing sent") {
    const FeatureBlockSet empty{4, kSpec, {}};
    const CommStats s = comm_volume(empty, 4, 4);
    CHECK(s.cells_sent == 0);
    CHECK(s.percent_of_full == doctest::Approx(0.0));
    CHECK_FALSE(s.volume_log2.has_value());
  }

  SUBCASE("full transmission is exactly 100 percent") {
    CellMask m(kSpec, 1);
    const auto blocks = blockify(m, OccupancyGrid(kSpec, 0.0), 4);
    CHECK(blocks.blocks.size() == 1024);
    const CommStats s = comm_volume(blocks, 4, 4);
    CHECK(s.percent_of_full == doctest::Approx(100.0));
    CHECK(s.cells_sent == 16384);
  }

  SUBCASE("eight blocks of 4x4 at 4 bytes per cell") {
    FeatureBlockSet blocks{4, kSpec, {}};
    for (int i = 0; i < 8; ++i) {
      blocks.blocks.push_back({0, i, std::vector<double>(16, 1.0)});
    }
    const CommStats s = comm_volume(blocks, 4, 4);
    CHECK(s.bytes_sent == 544);
    CHECK(s.cells_sent == 128);
    CHECK(s.percent_of_full == doctest::Approx(100.0 * 128.0 / 16384.0));
    REQUIRE(s.volume_log2.has_value());
    CHECK(*s.volume_log2 == doctest::Approx(std::log2(4352.0)).epsilon(1e-12));
    CHECK(*s.volume_log2 == doctest::Approx(12.0875).epsilon(1e-4));
  }
}

TEST_CASE("transmit") {
  FeatureBlockSet blocks{4, kSpec, {}};
  for (int i = 0; i < 1000; ++i) {
    blocks.blocks.push_back({i / 32, i % 32, std::vector<double>(16, 0.0)});
  }

  SUBCASE("zero drop probability is the identity") {
    const auto out = transmit(blocks, {0.0, 9});
    CHECK(out.blocks.size() == 1000);
  }

  SUBCASE("certain drop empties the set") {
    const auto out = transmit(blocks, {1.0, 9});
    CHECK(out.blocks.empty());
  }

  SUBCASE("seeded half drop: binomial bound and frozen regression value") {
    const auto out = transmit(blocks, {0.5, 42});
    CHECK(out.blocks.size() >= 450);
    CHECK(out.blocks.size() <= 550);
    CHECK(out.blocks.size() == 475);
  }

  SUBCASE("outcome does not depend on block order") {
    FeatureBlockSet reversed{4, kSpec, {}};
    for (auto it = blocks.blocks.rbegin(); it != blocks.blocks.rend(); ++it) {
      reversed.blocks.push_back(*it);
    }
    const auto a = transmit(blocks, {0.5, 42});
    const auto b = transmit(reversed, {0.5, 42});
    std::set<std::pair<int, int>> sa, sb;
    for (const auto& blk : a.blocks) sa.insert({blk.block_row, blk.block_col});
    for (const auto& blk : b.blocks) sb.insert({blk.block_row, blk.block_col});
    CHECK(sa == sb);
  }

  SUBCASE("invalid probability is rejected") {
    CHECK_THROWS_AS(transmit(blocks, {1.5, 0}), std::invalid_argument);
  }
}

TEST_CASE("block set wire format round trip") {
  OccupancyGrid occ(kSpec, 0.0);
  occ.at(10, 20) = 7.0;
  occ.at(11, 21) = 2.0;
  CellMask m(kSpec, 0);
  m.at(10, 20) = 1;
  m.at(11, 21) = 1;
  m.at(100, 3) = 1;
  const auto blocks = blockify(m, occ, 4);

  const std::string path = "/tmp/vicsim_blocks.bin";
  write_block_set(blocks, path);
  const auto loaded = read_block_set(path, kSpec);
  REQUIRE(loaded.blocks.size() == blocks.blocks.size());
  CHECK(loaded.block_size == blocks.block_size);
  for (std::size_t i = 0; i < blocks.blocks.size(); ++i) {
    CHECK(loaded.blocks[i].block_row == blocks.blocks[i].block_row);
    CHECK(loaded.blocks[i].block_col == blocks.blocks[i].block_col);
    CHECK(loaded.blocks[i].payload == blocks.blocks[i].payload);
  }

  // Header magic is pinned.
  std::FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f);
  char magic[9] = {};
  REQUIRE(std::fread(magic, 1, 8, f) == 8);
  std::fclose(f);
  CHECK(std::string(magic) == "RISEBLK1");

  // Coordinates outside the target grid are refused.
  FeatureBlockSet rogue{4, kSpec, {{500, 2, std::vector<double>(16, 0.0)}}};
  write_block_set(rogue, path);
  CHECK_THROWS_AS(read_block_set(path, kSpec), std::runtime_error);
  std::remove(path.c_str());
}
