#include "dslc/flash.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dslc::flash {

std::vector<std::string> DeviceConfig::violations() const {
  std::vector<std::string> out;
  auto need = [&](bool ok, const char* field, const char* what) {
    if (!ok) out.push_back(std::string(field) + ": " + what);
  };
  need(chips > 0, "chips", "must be > 0");
  need(blocks_per_chip > 0, "blocks_per_chip", "must be > 0");
  need(pages_per_block > 0, "pages_per_block", "must be > 0");
  need(page_size_bytes > 0, "page_size_bytes", "must be > 0");
  need(endurance > 0, "endurance", "must be > 0");
  need(read_us >= 0.0, "read_us", "must be >= 0");
  need(write_us >= 0.0, "write_us", "must be >= 0");
  need(erase_us >= 0.0, "erase_us", "must be >= 0");
  need(transfer_mb_s > 0.0, "transfer_mb_s", "must be > 0");
  need(gc_clean_threshold > 0.0 && gc_clean_threshold < 1.0, "gc_clean_threshold", "must be in (0, 1)");
  need(scrub_period_s > 0.0, "scrub_period_s", "must be > 0");
  need(overprovision >= 0.0 && overprovision < 1.0, "overprovision", "must be in [0, 1)");
  need(dummy_write_multiplier >= 0.0, "dummy_write_multiplier", "must be >= 0");
  return out;
}

void DeviceConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

std::uint64_t DeviceConfig::logical_pages() const {
  return static_cast<std::uint64_t>(std::floor((1.0 - overprovision) * static_cast<double>(physical_pages())));
}

Micros DeviceConfig::scrub_period() const {
  return static_cast<Micros>(std::llround(scrub_period_s * static_cast<double>(kMicrosPerSecond)));
}

DeviceConfig scaled_config(const std::string& scale) {
  DeviceConfig c;
  if (scale == "paper") return c;
  if (scale == "desk") {
    c.chips = 1;
    c.blocks_per_chip = 64;
    c.pages_per_block = 16;
    c.endurance = 20;
    return c;
  }
  if (scale == "desk-large") {
    c.chips = 1;
    c.blocks_per_chip = 128;
    c.pages_per_block = 32;
    c.endurance = 100;
    return c;
  }
  throw std::invalid_argument("unknown scale '" + scale + "' (expected paper, desk, desk-large)");
}

namespace {
std::string join_problems(const std::vector<std::string>& problems) {
  std::string s = "invalid configuration";
  for (const auto& p : problems) s += "\n  " + p;
  return s;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

// ---------------------------------------------------------------------------

Block::Block(BlockId id, std::uint32_t pages) : id_(id), lpn_(pages, kFreeSlot) {}

retention::StateMode Block::mode() const {
  if (states_ == 0) throw FlashFault("clean block has no mode");
  return retention::StateMode(states_);
}

PageState Block::page_state(std::uint32_t page) const {
  switch (lpn_.at(page)) {
    case kFreeSlot: return PageState::Free;
    case kInvalidSlot: return PageState::Invalid;
    default: return PageState::Valid;
  }
}

std::uint64_t Block::page_lpn(std::uint32_t page) const {
  if (page_state(page) != PageState::Valid) throw FlashFault("page holds no valid data");
  return lpn_[page];
}

void Block::open(retention::StateMode mode, Micros capacity) {
  if (retired_) throw FlashFault("cannot open a retired block");
  if (states_ == 0) {
    states_ = mode.states();
    round_ = 1;
  } else if (states_ != mode.states() || !all_free()) {
    throw FlashFault("only an empty block of the same mode can be reopened");
  }
  capacity_ = capacity;
  sealed_ = false;
}

void Block::program(std::uint32_t page, std::uint64_t lpn, Micros now) {
  if (states_ == 0 || retired_) throw FlashFault("program on a clean or retired block");
  if (sealed_) throw FlashFault("program on a sealed block");
  if (page != write_ptr_ || page >= pages()) {
    throw FlashFault("out-of-order program: page " + std::to_string(page) + ", write pointer " +
                     std::to_string(write_ptr_));
  }
  if (round_ > states_ - 1) throw FlashFault("round exceeds writes per erase cycle");
  if (lpn >= kInvalidSlot) throw FlashFault("lpn out of representable range");
  if (write_ptr_ == 0) {
    round_start_ = now;
    deadline_ = capacity_ == kNever || now > kNever - capacity_ ? kNever : now + capacity_;
  }
  lpn_[page] = static_cast<std::uint32_t>(lpn);
  ++write_ptr_;
  ++valid_;
  ++writes_this_cycle_;
}

void Block::invalidate(std::uint32_t page) {
  if (page_state(page) != PageState::Valid) throw FlashFault("invalidate of a non-valid page");
  lpn_[page] = kInvalidSlot;
  --valid_;
}

void Block::dummy_write() {
  if (states_ == 0) throw FlashFault("dummy write on a clean block");
  if (round_ >= states_ - 1) throw FlashFault("dummy write in the final round; the block must be erased");
  if (valid_ != 0) throw FlashFault("dummy write with valid pages present");
  ++round_;
  std::fill(lpn_.begin(), lpn_.end(), kFreeSlot);
  write_ptr_ = 0;
  deadline_ = kNever;
  sealed_ = false;
}

bool Block::erase(std::uint32_t endurance) {
  if (retired_) throw FlashFault("erase of a retired block");
  if (states_ == 0) throw FlashFault("erase of a clean block");
  if (valid_ != 0) throw FlashFault("erase with valid pages present");
  std::fill(lpn_.begin(), lpn_.end(), kFreeSlot);
  write_ptr_ = 0;
  deadline_ = kNever;
  sealed_ = false;
  writes_this_cycle_ = 0;
  states_ = 0;
  round_ = 0;
  if (pe_count_ >= endurance) {
    retired_ = true;
    return false;
  }
  ++pe_count_;
  return true;
}

// ---------------------------------------------------------------------------

double LatencyLedger::total(std::uint32_t chip) const {
  const auto& b = busy_.at(chip);
  return std::accumulate(b.begin(), b.end(), 0.0);
}

double LatencyLedger::max_chip_total() const {
  double m = 0.0;
  for (std::uint32_t c = 0; c < chips(); ++c) m = std::max(m, total(c));
  return m;
}

double LatencyLedger::sum_component(OpClass cls) const {
  double s = 0.0;
  for (const auto& b : busy_) s += b[static_cast<int>(cls)];
  return s;
}

double op_latency(LatencyLedger& ledger, const DeviceConfig& cfg, std::uint32_t chip, OpClass kind,
                  std::uint64_t bytes) {
  double device = 0.0;
  switch (kind) {
    case OpClass::Read: device = cfg.read_us; break;
    case OpClass::Write: device = cfg.write_us; break;
    case OpClass::Erase: device = cfg.erase_us; break;
    case OpClass::DummyWrite:
      device = cfg.dummy_write_multiplier * cfg.pages_per_block * cfg.write_us;
      break;
    case OpClass::Transfer: break;
  }
  // MB/s is 1e6 bytes per second, so bytes / rate is already in microseconds.
  const double transfer = static_cast<double>(bytes) / cfg.transfer_mb_s;
  ledger.add(chip, kind, device);
  ledger.add(chip, OpClass::Transfer, transfer);
  return device + transfer;
}

// ---------------------------------------------------------------------------

FlashArray::FlashArray(const DeviceConfig& cfg) : cfg_(cfg), ledger_(cfg.chips) {
  cfg_.validate();
  chips_.resize(cfg_.chips);
  for (std::uint32_t c = 0; c < cfg_.chips; ++c) {
    chips_[c].reserve(cfg_.blocks_per_chip);
    for (std::uint32_t b = 0; b < cfg_.blocks_per_chip; ++b) chips_[c].emplace_back(BlockId{c, b}, cfg_.pages_per_block);
  }
}

double FlashArray::program_page(BlockId id, std::uint32_t page, std::uint64_t lpn, Micros now) {
  block(id).program(page, lpn, now);
  return op_latency(ledger_, cfg_, id.chip, OpClass::Write, cfg_.page_size_bytes);
}

double FlashArray::read_page(std::uint32_t chip) {
  return op_latency(ledger_, cfg_, chip, OpClass::Read, cfg_.page_size_bytes);
}

double FlashArray::dummy_write(BlockId id) {
  block(id).dummy_write();
  return op_latency(ledger_, cfg_, id.chip, OpClass::DummyWrite, 0);
}

double FlashArray::erase_block(BlockId id) {
  if (!block(id).erase(cfg_.endurance)) return 0.0;
  return op_latency(ledger_, cfg_, id.chip, OpClass::Erase, 0);
}

}  // namespace dslc::flash
