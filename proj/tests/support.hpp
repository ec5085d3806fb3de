#pragma once

#include <optional>
#include <tuple>

#include "dslc/flash.hpp"
#include "dslc/ftl.hpp"
#include "dslc/retention.hpp"

namespace testing_support {

inline dslc::flash::DeviceConfig small_device(std::uint32_t blocks, std::uint32_t pages, std::uint32_t endurance,
                                              std::uint32_t chips = 1) {
  dslc::flash::DeviceConfig c;
  c.chips = chips;
  c.blocks_per_chip = blocks;
  c.pages_per_block = pages;
  c.endurance = endurance;
  return c;
}

// Every level routed to 4 states except written-once data.
inline dslc::retention::ModeAssignmentTable four_state_table() {
  return {"four", {2, 4}, {{{4, 4, 4, 4, 4}, {4, 4, 4, 4, 4}, {4, 4, 4, 4, 4}, {2, 2, 2, 2, 2}}}};
}

// Greedy minimum computed straight from block state: sealed, in use, not retired.
inline std::optional<std::uint32_t> brute_force_victim(const dslc::flash::FlashArray& dev, std::uint32_t chip,
                                                       std::optional<std::uint32_t> excluded = std::nullopt) {
  std::optional<std::uint32_t> best;
  std::tuple<std::uint32_t, std::uint32_t, std::uint32_t> key{};
  const auto& blocks = dev.chip(chip);
  for (std::uint32_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.retired() || b.is_clean() || !b.sealed() || excluded == i) continue;
    const auto k = std::make_tuple(b.valid_count(), b.pe_count(), i);
    if (!best || k < key) {
      best = i;
      key = k;
    }
  }
  return best;
}

}  // namespace testing_support
