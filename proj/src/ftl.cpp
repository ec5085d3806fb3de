#include "dslc/ftl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dslc::ftl {

using flash::Block;
using flash::PageState;
using retention::StateMode;

std::string_view policy_name(Policy p) {
  switch (p) {
    case Policy::Baseline: return "baseline";
    case Policy::Dslc: return "dslc";
    case Policy::Oracle: return "oracle";
  }
  return "?";
}

Policy parse_policy(std::string_view name) {
  if (name == "baseline") return Policy::Baseline;
  if (name == "dslc") return Policy::Dslc;
  if (name == "oracle") return Policy::Oracle;
  throw std::invalid_argument("unknown policy '" + std::string(name) + "' (expected baseline, dslc, oracle)");
}

void MappingTable::set(std::uint64_t lpn, PhysLoc loc) {
  PhysLoc& slot = loc_.at(lpn);
  if (!slot.mapped() && loc.mapped()) ++mapped_;
  if (slot.mapped() && !loc.mapped()) --mapped_;
  slot = loc;
}

void MappingTable::clear(std::uint64_t lpn) { set(lpn, PhysLoc{}); }

// ---------------------------------------------------------------------------

OracleIndex OracleIndex::build(std::span<const trace::PageOp> stream) {
  OracleIndex idx;
  for (const auto& op : stream) {
    if (op.kind == trace::OpKind::Write) idx.writes_[op.lpn].push_back(op.timestamp);
  }
  for (auto& [lpn, w] : idx.writes_) std::sort(w.begin(), w.end());
  return idx;
}

OracleIndex OracleIndex::build_looped(std::span<const trace::PageOp> base_epoch, Micros period, std::uint64_t epochs) {
  OracleIndex idx = build(base_epoch);
  if (period <= 0) throw std::invalid_argument("loop period must be positive");
  idx.period_ = period;
  idx.epochs_ = std::max<std::uint64_t>(1, epochs);
  idx.first_ = base_epoch.empty() ? 0 : base_epoch.front().timestamp;
  for (const auto& op : base_epoch) idx.first_ = std::min(idx.first_, op.timestamp);
  return idx;
}

Micros OracleIndex::next_write(std::uint64_t lpn, Micros t) const {
  auto it = writes_.find(lpn);
  if (it == writes_.end()) return kNever;
  const auto& w = it->second;
  if (period_ == 0) {
    auto ub = std::upper_bound(w.begin(), w.end(), t);
    return ub == w.end() ? kNever : *ub;
  }
  const std::uint64_t e0 = t < first_ ? 0 : static_cast<std::uint64_t>((t - first_) / period_);
  for (std::uint64_t e = e0; e <= e0 + 1 && e < epochs_; ++e) {
    const Micros shift = static_cast<Micros>(e) * period_;
    auto ub = std::upper_bound(w.begin(), w.end(), t - shift);
    if (ub != w.end()) return *ub + shift;
  }
  return kNever;
}

// ---------------------------------------------------------------------------

std::string counters_csv_header() {
  return "gc_invocations,gc_page_migrations,erases,round_transitions,scrub_invocations,scrub_page_migrations,"
         "host_pages_written,total_pages_written,host_pages_read,cold_reads,blocks_allocated,retired_blocks,"
         "integrity_violations,page_events";
}

std::string counters_csv_row(const FtlCounters& c) {
  std::ostringstream os;
  os << c.gc_invocations << ',' << c.gc_page_migrations << ',' << c.erases << ',' << c.round_transitions << ','
     << c.scrub_invocations << ',' << c.scrub_page_migrations << ',' << c.host_pages_written << ','
     << c.total_pages_written << ',' << c.host_pages_read << ',' << c.cold_reads << ',' << c.blocks_allocated << ','
     << c.retired_blocks << ',' << c.integrity_violations << ',' << c.page_events;
  return os.str();
}

DeviceDead::DeviceDead(std::uint32_t chip, const std::string& why, const FtlCounters& totals)
    : std::runtime_error("chip " + std::to_string(chip) + ": " + why), chip_(chip), totals_(totals) {}

// ---------------------------------------------------------------------------

Ftl::Ftl(const flash::DeviceConfig& cfg, retention::ModeAssignmentTable table, Policy policy, const OracleIndex* oracle)
    : cfg_(cfg),
      table_(policy == Policy::Baseline ? retention::baseline_table() : std::move(table)),
      policy_(policy),
      oracle_(oracle),
      flash_(cfg),
      map_(cfg.logical_pages()),
      chips_(cfg.chips),
      scrub_period_(cfg.scrub_period()) {
  if (policy_ == Policy::Oracle && oracle_ == nullptr) throw std::invalid_argument("oracle policy needs an OracleIndex");
  for (auto& cs : chips_) {
    cs.pooled.assign(cfg_.blocks_per_chip, 0);
    cs.free_count = cfg_.blocks_per_chip;
  }
}

std::optional<std::uint32_t> Ftl::active_block(std::uint32_t chip, StateMode mode) const {
  const std::int32_t a = chips_.at(chip).active.at(mode.states());
  if (a < 0) return std::nullopt;
  return static_cast<std::uint32_t>(a);
}

Micros Ftl::capacity_for(StateMode mode, std::uint32_t pe) const {
  const double hours =
      retention::mode_retention_capacity(table_, mode, retention::age_bucket(pe, cfg_.endurance));
  if (std::isinf(hours)) return kNever;
  return static_cast<Micros>(std::llround(hours * static_cast<double>(kMicrosPerHour)));
}

void Ftl::index_deadline(const Block& b) {
  if (b.deadline() == kNever) return;
  deadlines_.emplace(b.deadline(), (std::uint64_t{b.id().chip} << 32) | b.id().index);
}

void Ftl::unindex_deadline(const Block& b) {
  if (b.deadline() == kNever) return;
  deadlines_.erase({b.deadline(), (std::uint64_t{b.id().chip} << 32) | b.id().index});
}

void Ftl::die(std::uint32_t chip, const std::string& why) const { throw DeviceDead(chip, why, counters_); }

void Ftl::check_deadline(const Block& b, Micros now) {
  if (b.deadline() != kNever && now > b.deadline()) {
    ++counters_.integrity_violations;
    if (strict_) {
      throw IntegrityFault("data in block " + std::to_string(b.id().chip) + ":" + std::to_string(b.id().index) +
                           " accessed after its retention deadline");
    }
  }
}

void Ftl::release_active(std::uint32_t chip, std::uint32_t block) {
  for (auto& a : chips_[chip].active) {
    if (a == static_cast<std::int32_t>(block)) a = -1;
  }
}

void Ftl::note_cycle_end(const Block& b) {
  const int s = b.states();
  if (s < 2 || s > 8) return;
  const std::uint64_t w = b.writes_this_cycle();
  const std::uint64_t cap = std::uint64_t{b.pages()} * static_cast<std::uint64_t>(s - 1);
  pwe_.max_writes_per_cycle[s] = std::max(pwe_.max_writes_per_cycle[s], w);
  ++pwe_.completed_cycles[s];
  if (w == cap) ++pwe_.saturated_cycles[s];
  if (w > cap) ++pwe_.violations;
}

std::uint32_t Ftl::gc_reserve(std::uint32_t chip) const {
  const std::uint32_t usable = cfg_.blocks_per_chip - chips_[chip].retired;
  const auto by_fraction = static_cast<std::uint32_t>(std::ceil(cfg_.gc_clean_threshold * usable));
  return std::max<std::uint32_t>(by_fraction, static_cast<std::uint32_t>(table_.mode_set().size()) + 1);
}

// ---------------------------------------------------------------------------

std::optional<std::uint32_t> Ftl::pick_block(std::uint32_t chip, StateMode mode) const {
  const auto& blocks = flash_.chip(chip);
  const auto& cs = chips_[chip];
  // Preference: emptied block of this mode, then Clean, then an emptied block of another mode.
  std::optional<std::uint32_t> best[3];
  for (std::uint32_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    int tier;
    if (cs.pooled[i]) {
      tier = b.states() == mode.states() ? 0 : 2;
    } else if (b.is_clean()) {
      tier = 1;
    } else {
      continue;
    }
    auto& slot = best[tier];
    if (!slot || b.pe_count() < blocks[*slot].pe_count()) slot = i;
  }
  for (auto& s : best) {
    if (s) return s;
  }
  return std::nullopt;
}

std::uint32_t Ftl::activate(std::uint32_t chip, StateMode mode, Micros now, bool allow_gc) {
  auto& cs = chips_[chip];
  std::uint32_t gc_rounds = 0;
  while (true) {
    if (auto idx = pick_block(chip, mode)) {
      Block& b = flash_.block(bid(chip, *idx));
      if (cs.pooled[*idx]) {
        cs.pooled[*idx] = 0;
        --cs.free_count;
        if (b.states() != mode.states()) {
          note_cycle_end(b);
          flash_.erase_block(b.id());
          if (b.retired()) {
            ++counters_.retired_blocks;
            ++cs.retired;
            continue;
          }
          ++counters_.erases;
        }
      } else {
        --cs.free_count;
      }
      b.open(mode, capacity_for(mode, b.pe_count()));
      cs.active[mode.states()] = static_cast<std::int32_t>(*idx);
      ++counters_.blocks_allocated;
      return *idx;
    }
    if (!allow_gc) die(chip, "no free block for GC relocation");
    if (gc_rounds++ > cfg_.blocks_per_chip || !run_gc(chip, now)) die(chip, "no block obtainable");
  }
}

std::uint32_t Ftl::activate_block(std::uint32_t chip, StateMode mode, Micros now) {
  if (!table_.contains(mode)) throw std::invalid_argument("mode not in the device mode set");
  return activate(chip, mode, now, true);
}

std::uint32_t Ftl::writable_active(std::uint32_t chip, StateMode mode, Micros now, bool allow_gc) {
  auto& slot = chips_[chip].active.at(mode.states());
  if (slot >= 0) {
    Block& b = flash_.block(bid(chip, static_cast<std::uint32_t>(slot)));
    const bool expiring = b.write_ptr() > 0 && b.deadline() != kNever && now >= b.deadline() - scrub_period_;
    if (!b.sealed() && !expiring) return static_cast<std::uint32_t>(slot);
    if (!b.full()) b.seal();
    slot = -1;
  }
  return activate(chip, mode, now, allow_gc);
}

std::uint64_t Ftl::candidate_pe(std::uint32_t chip, StateMode mode) const {
  if (auto a = active_block(chip, mode)) {
    const Block& b = flash_.block(bid(chip, *a));
    if (!b.sealed()) return b.pe_count();
  }
  if (auto p = pick_block(chip, mode)) return flash_.block(bid(chip, *p)).pe_count();
  return 0;
}

StateMode Ftl::target_mode(std::uint64_t lpn, Micros now) const {
  switch (policy_) {
    case Policy::Baseline: return StateMode(2);
    case Policy::Dslc: {
      const PhysLoc& loc = map_.at(lpn);
      if (loc.mapped()) return flash_.block(bid(loc.chip, loc.block)).mode();
      return table_.highest();
    }
    case Policy::Oracle: {
      const Micros next = oracle_->next_write(lpn, now);
      const auto cat = retention::categorize_longevity(next == kNever ? kNever : next - now);
      const std::uint32_t chip = chip_of(lpn);
      StateMode m = table_.highest();
      for (std::size_t i = 0; i < table_.mode_set().size(); ++i) {
        const StateMode next_mode = table_.at(cat, retention::age_bucket(candidate_pe(chip, m), cfg_.endurance));
        if (next_mode == m) break;
        m = next_mode;
      }
      return m;
    }
  }
  return StateMode(2);
}

// ---------------------------------------------------------------------------

double Ftl::handle_write(std::uint64_t lpn, Micros now) {
  if (lpn >= map_.size()) throw std::out_of_range("lpn " + std::to_string(lpn) + " beyond logical capacity");
  const std::uint32_t chip = chip_of(lpn);
  const StateMode mode = target_mode(lpn, now);

  const PhysLoc old = map_.at(lpn);
  if (old.mapped()) {
    check_deadline(flash_.block(bid(old.chip, old.block)), now);
    flash_.invalidate(bid(old.chip, old.block), old.page);
    map_.clear(lpn);
  }

  const std::uint32_t dst = writable_active(chip, mode, now, true);
  Block& b = flash_.block(bid(chip, dst));
  const std::uint32_t page = b.write_ptr();
  const double lat = flash_.program_page(b.id(), page, lpn, now);
  if (page == 0) index_deadline(b);
  map_.set(lpn, {chip, dst, page});
  ++counters_.host_pages_written;
  ++counters_.total_pages_written;
  ++counters_.page_events;

  if (chips_[chip].free_count < gc_reserve(chip)) background_gc(chip, now);
  return lat;
}

double Ftl::handle_read(std::uint64_t lpn, Micros now) {
  const std::uint32_t chip = chip_of(lpn);
  ++counters_.host_pages_read;
  if (lpn >= map_.size() || !map_.at(lpn).mapped()) {
    ++counters_.cold_reads;
    ++counters_.page_events;
    return flash_.read_page(chip);
  }
  const PhysLoc& loc = map_.at(lpn);
  ++counters_.page_events;
  check_deadline(flash_.block(bid(loc.chip, loc.block)), now);
  return flash_.read_page(loc.chip);
}

void Ftl::migrate_page(std::uint32_t chip, std::uint32_t src_block, std::uint32_t page, StateMode dest, Micros now,
                       bool allow_gc, bool scrub) {
  Block& src = flash_.block(bid(chip, src_block));
  check_deadline(src, now);
  const std::uint64_t lpn = src.page_lpn(page);
  flash_.read_page(chip);
  flash_.invalidate(src.id(), page);
  map_.clear(lpn);

  const std::uint32_t dst = writable_active(chip, dest, now, allow_gc);
  Block& d = flash_.block(bid(chip, dst));
  const std::uint32_t dp = d.write_ptr();
  flash_.program_page(d.id(), dp, lpn, now);
  if (dp == 0) index_deadline(d);
  map_.set(lpn, {chip, dst, dp});
  ++counters_.total_pages_written;
  ++counters_.page_events;
  if (scrub) {
    ++counters_.scrub_page_migrations;
  } else {
    ++counters_.gc_page_migrations;
  }
}

// ---------------------------------------------------------------------------

bool Ftl::gc_candidate(std::uint32_t chip, std::uint32_t block) const {
  const Block& b = flash_.block(bid(chip, block));
  if (b.retired() || b.is_clean() || chips_[chip].pooled[block] || !b.sealed()) return false;
  if (scrubbing_ && *scrubbing_ == b.id()) return false;
  return true;
}

std::optional<std::uint32_t> Ftl::select_gc_victim(std::uint32_t chip) const {
  const auto& blocks = flash_.chip(chip);
  std::optional<std::uint32_t> best;
  for (std::uint32_t i = 0; i < blocks.size(); ++i) {
    if (!gc_candidate(chip, i)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const Block& a = blocks[i];
    const Block& c = blocks[*best];
    if (a.valid_count() < c.valid_count() ||
        (a.valid_count() == c.valid_count() && a.pe_count() < c.pe_count())) {
      best = i;
    }
  }
  return best;
}

bool Ftl::gc_feasible(std::uint32_t chip, std::uint32_t victim) const {
  const Block& v = flash_.block(bid(chip, victim));
  const std::uint32_t valid = v.valid_count();
  if (valid == 0) return true;
  std::uint32_t room = 0;
  if (auto a = active_block(chip, v.mode()); a && *a != victim) {
    const Block& ab = flash_.block(bid(chip, *a));
    if (!ab.sealed()) room = ab.pages() - ab.write_ptr();
  }
  if (valid <= room) return true;
  const std::uint32_t blocks_needed = (valid - room + cfg_.pages_per_block - 1) / cfg_.pages_per_block;
  return blocks_needed <= chips_[chip].free_count;
}

bool Ftl::run_gc(std::uint32_t chip, Micros now) {
  auto& cs = chips_[chip];
  for (std::uint32_t tries = 0; tries < cfg_.blocks_per_chip; ++tries) {
    const auto victim = select_gc_victim(chip);
    if (!victim || !gc_feasible(chip, *victim)) return false;

    Block& b = flash_.block(bid(chip, *victim));
    release_active(chip, *victim);
    const StateMode mode = b.mode();
    for (std::uint32_t p = 0; p < b.write_ptr(); ++p) {
      if (b.page_state(p) == PageState::Valid) migrate_page(chip, *victim, p, mode, now, false, false);
    }
    ++counters_.gc_invocations;
    unindex_deadline(b);

    if (b.round() < mode.pwe()) {
      flash_.dummy_write(b.id());
      ++counters_.round_transitions;
      cs.pooled[*victim] = 1;
      ++cs.free_count;
      return true;
    }
    note_cycle_end(b);
    flash_.erase_block(b.id());
    if (b.retired()) {
      ++counters_.retired_blocks;
      ++cs.retired;
      continue;
    }
    ++counters_.erases;
    ++cs.free_count;
    return true;
  }
  return false;
}

void Ftl::background_gc(std::uint32_t chip, Micros now) {
  auto& cs = chips_[chip];
  for (std::uint32_t i = 0; i < cfg_.blocks_per_chip && cs.free_count < gc_reserve(chip); ++i) {
    const std::uint32_t before = cs.free_count;
    const std::uint64_t retired_before = counters_.retired_blocks;
    if (!run_gc(chip, now)) break;
    if (cs.free_count <= before && counters_.retired_blocks == retired_before) break;
  }
}

std::uint64_t Ftl::scrub_expired(Micros now) {
  std::uint64_t migrated = 0;
  while (!deadlines_.empty()) {
    const auto [deadline, key] = *deadlines_.begin();
    if (deadline - scrub_period_ > now) break;
    deadlines_.erase(deadlines_.begin());
    const auto chip = static_cast<std::uint32_t>(key >> 32);
    const auto idx = static_cast<std::uint32_t>(key & 0xFFFFFFFFu);
    Block& b = flash_.block(bid(chip, idx));
    release_active(chip, idx);
    if (!b.full()) b.seal();
    if (b.valid_count() == 0 || b.states() == 2) continue;

    ++counters_.scrub_invocations;
    const StateMode dest = table_.next_lower(b.mode());
    scrubbing_ = b.id();
    try {
      for (std::uint32_t p = 0; p < b.write_ptr(); ++p) {
        if (b.page_state(p) != PageState::Valid) continue;
        migrate_page(chip, idx, p, dest, now, true, true);
        ++migrated;
      }
    } catch (...) {
      scrubbing_.reset();
      throw;
    }
    scrubbing_.reset();
  }
  return migrated;
}

// ---------------------------------------------------------------------------

std::optional<std::string> Ftl::audit() const {
  std::uint64_t valid_total = 0;
  std::uint64_t pe_total = 0;
  for (std::uint32_t c = 0; c < cfg_.chips; ++c) {
    std::uint32_t free_count = 0;
    const auto& blocks = flash_.chip(c);
    for (std::uint32_t i = 0; i < blocks.size(); ++i) {
      const Block& b = blocks[i];
      const std::string where = "block " + std::to_string(c) + ":" + std::to_string(i);
      pe_total += b.pe_count();
      if (b.pe_count() > cfg_.endurance) return where + " exceeds endurance";
      if (b.is_clean() || chips_[c].pooled[i]) ++free_count;
      if (chips_[c].pooled[i] && !b.all_free()) return where + " pooled but not empty";
      std::uint32_t valid = 0;
      for (std::uint32_t p = 0; p < b.pages(); ++p) {
        const PageState s = b.page_state(p);
        if ((p < b.write_ptr()) == (s == PageState::Free)) return where + " violates in-order programming";
        if (s == PageState::Valid) {
          ++valid;
          const std::uint64_t lpn = b.page_lpn(p);
          if (lpn >= map_.size() || !(map_.at(lpn) == PhysLoc{c, i, p})) return where + " holds an unmapped page";
        }
      }
      if (valid != b.valid_count()) return where + " valid count mismatch";
      valid_total += valid;
      if (!b.is_clean() && !b.retired()) {
        if (b.round() < 1 || b.round() > b.states() - 1) return where + " round out of range";
        if (policy_ == Policy::Baseline && b.states() != 2) return where + " is not 2-state under baseline";
      }
    }
    if (free_count != chips_[c].free_count) return "chip " + std::to_string(c) + " free count mismatch";
  }
  if (valid_total != map_.mapped_count()) return std::string("mapped LPNs != valid pages");
  if (counters_.total_pages_written !=
      counters_.host_pages_written + counters_.gc_page_migrations + counters_.scrub_page_migrations) {
    return std::string("page write conservation broken");
  }
  if (counters_.erases != pe_total) return std::string("erase count != sum of P/E counts");
  if (pwe_.violations != 0) return std::string("writes per erase cycle exceeded pages x (states - 1)");
  return std::nullopt;
}

}  // namespace dslc::ftl
