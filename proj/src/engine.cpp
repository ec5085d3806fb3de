#include "dslc/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <unordered_map>

namespace dslc::engine {

using trace::OpKind;
using trace::PageOp;

double PweSnapshot::fraction(int states) const {
  for (std::size_t i = 0; i < kSnapshotStates.size(); ++i) {
    if (kSnapshotStates[i] == states) return fractions[i];
  }
  return 0.0;
}

PweSnapshot snapshot_pwe(const flash::FlashArray& device, Micros now) {
  PweSnapshot s;
  s.time_hours = to_hours(now);
  std::array<std::uint64_t, 5> counts{};
  std::uint64_t total = 0;
  for (std::uint32_t c = 0; c < device.config().chips; ++c) {
    for (const auto& b : device.chip(c)) {
      if (b.is_clean() || b.retired()) continue;
      for (std::size_t i = 0; i < kSnapshotStates.size(); ++i) {
        if (kSnapshotStates[i] == b.states()) ++counts[i];
      }
      ++total;
    }
  }
  if (total == 0) return s;
  s.empty = false;
  for (std::size_t i = 0; i < counts.size(); ++i) s.fractions[i] = static_cast<double>(counts[i]) / total;
  return s;
}

std::vector<PageOp> fit_to_device(std::vector<PageOp> ops, std::uint64_t logical_pages) {
  const bool fits = std::all_of(ops.begin(), ops.end(), [&](const PageOp& op) { return op.lpn < logical_pages; });
  if (fits) return ops;
  std::unordered_map<std::uint64_t, std::uint64_t> renum;
  for (auto& op : ops) {
    auto [it, fresh] = renum.try_emplace(op.lpn, renum.size());
    if (fresh && it->second >= logical_pages) {
      throw std::invalid_argument("trace touches more distinct pages than the device's logical capacity (" +
                                  std::to_string(logical_pages) + ")");
    }
    op.lpn = it->second;
  }
  return ops;
}

namespace {

// Drives one FTL: scrub ticks fire at every multiple of the scrub period, before any event at that time.
class Replayer {
 public:
  Replayer(ftl::Ftl& f) : ftl_(f), period_(f.config().scrub_period()), next_tick_(period_) {}

  void apply(const PageOp& op, Micros t) {
    while (next_tick_ <= t) {
      ftl_.scrub_expired(next_tick_);
      next_tick_ += period_;
    }
    if (op.kind == OpKind::Write) {
      ftl_.handle_write(op.lpn, t);
    } else {
      ftl_.handle_read(op.lpn, t);
    }
    ++host_pages_;
    last_ = t;
  }

  std::uint64_t host_pages() const { return host_pages_; }
  Micros last() const { return last_; }

 private:
  ftl::Ftl& ftl_;
  Micros period_;
  Micros next_tick_;
  std::uint64_t host_pages_ = 0;
  Micros last_ = 0;
};

void finish_report(SimReport& r, const ftl::Ftl& f, const Replayer& rep, Micros start) {
  const auto& c = f.counters();
  const auto& cfg = f.config();
  r.policy = std::string(ftl::policy_name(f.policy()));
  r.table = f.table().name();
  r.counters = c;
  r.pwe_law = f.pwe_stats();
  if (auto a = f.audit()) r.audit_failure = *a;
  const double page_kb = cfg.page_size_bytes / 1024.0;
  r.lifetime_kb_written = static_cast<double>(c.host_pages_written) * page_kb;
  r.gc_rate = c.host_pages_written ? c.gc_invocations * 1e6 / static_cast<double>(c.host_pages_written) : 0.0;
  r.gc_cost = c.gc_invocations ? static_cast<double>(c.gc_page_migrations) / c.gc_invocations : 0.0;
  r.scrub_rate = c.blocks_allocated ? static_cast<double>(c.scrub_invocations) / c.blocks_allocated : 0.0;
  r.scrub_cost = c.scrub_invocations ? static_cast<double>(c.scrub_page_migrations) / c.scrub_invocations : 0.0;
  r.host_kb_transferred = static_cast<double>(rep.host_pages()) * page_kb;
  r.elapsed_s = to_seconds(std::max<Micros>(0, rep.last() - start));
  r.busy_s = f.device().ledger().max_chip_total() / 1e6;
  const double denom = std::max(r.elapsed_s, r.busy_s);
  r.throughput_kb_s = denom > 0.0 ? r.host_kb_transferred / denom : 0.0;
}

Micros first_time(std::span<const PageOp> ops) {
  Micros t = ops.front().timestamp;
  for (const auto& op : ops) t = std::min(t, op.timestamp);
  return t;
}

}  // namespace

SimReport run_trace(const flash::DeviceConfig& cfg, const retention::ModeAssignmentTable& table, ftl::Policy policy,
                    std::span<const trace::IORequest> trace, const RunOptions& opts) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  cfg.validate();
  const auto ops = fit_to_device(trace::split_all(trace, cfg.page_size_bytes), cfg.logical_pages());
  std::optional<ftl::OracleIndex> oracle;
  if (policy == ftl::Policy::Oracle) oracle = ftl::OracleIndex::build(ops);
  ftl::Ftl f(cfg, table, policy, oracle ? &*oracle : nullptr);
  f.set_strict_integrity(opts.strict_integrity);
  Replayer rep(f);

  SimReport r;
  r.epochs = 1;
  const Micros start = first_time(ops);
  const Micros span = std::max<Micros>(1, ops.back().timestamp - start);
  const auto step = std::max<Micros>(1, static_cast<Micros>(std::llround(span * opts.snapshot_fraction)));
  Micros next_snap = start + step;
  try {
    for (const auto& op : ops) {
      rep.apply(op, op.timestamp);
      if (op.timestamp >= next_snap) {
        r.pwe_timeline.push_back(snapshot_pwe(f.device(), op.timestamp));
        while (next_snap <= op.timestamp) next_snap += step;
      }
    }
  } catch (const ftl::DeviceDead& e) {
    r.device_dead = true;
    r.truncated = true;
    r.death_cause = e.what();
  }
  r.pwe_timeline.push_back(snapshot_pwe(f.device(), rep.last()));
  finish_report(r, f, rep, start);
  return r;
}

SimReport run_until_death(const flash::DeviceConfig& cfg, const retention::ModeAssignmentTable& table,
                          ftl::Policy policy, std::span<const trace::IORequest> trace, const RunOptions& opts) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  cfg.validate();
  const auto ops = fit_to_device(trace::split_all(trace, cfg.page_size_bytes), cfg.logical_pages());
  const Micros period = trace::epoch_period(trace);
  std::optional<ftl::OracleIndex> oracle;
  if (policy == ftl::Policy::Oracle) oracle = ftl::OracleIndex::build_looped(ops, period, opts.epoch_limit);
  ftl::Ftl f(cfg, table, policy, oracle ? &*oracle : nullptr);
  f.set_strict_integrity(opts.strict_integrity);
  Replayer rep(f);

  // Expected lifespan in wear units: every block erased endurance times and then retired.
  const double budget = static_cast<double>(cfg.chips) * cfg.blocks_per_chip * (cfg.endurance + 1.0);
  const auto step = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(budget * opts.snapshot_fraction)));
  std::uint64_t next_mark = step;
  auto wear = [&] { return f.counters().erases + f.counters().retired_blocks; };

  SimReport r;
  const Micros start = first_time(ops);
  try {
    for (std::uint64_t e = 0; e < opts.epoch_limit; ++e) {
      const Micros shift = static_cast<Micros>(e) * period;
      r.epochs = e + 1;
      for (const auto& op : ops) {
        rep.apply(op, op.timestamp + shift);
        if (wear() >= next_mark) {
          r.pwe_timeline.push_back(snapshot_pwe(f.device(), rep.last()));
          while (next_mark <= wear()) next_mark += step;
        }
      }
    }
    r.truncated = true;
    r.death_cause = "epoch limit reached before device death";
  } catch (const ftl::DeviceDead& e) {
    r.device_dead = true;
    r.death_cause = e.what();
  }
  r.pwe_timeline.push_back(snapshot_pwe(f.device(), rep.last()));
  finish_report(r, f, rep, start);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string report_csv_header() {
  return "policy,table,lifetime_kb_written,gc_rate,gc_cost,scrub_rate,scrub_cost,throughput_kb_s,"
         "host_kb_transferred,elapsed_s,busy_s,epochs,device_dead,truncated,death_cause," +
         ftl::counters_csv_header();
}

std::string report_csv_row(const SimReport& r) {
  std::string s = r.policy + ',' + r.table;
  for (double v : {r.lifetime_kb_written, r.gc_rate, r.gc_cost, r.scrub_rate, r.scrub_cost, r.throughput_kb_s,
                   r.host_kb_transferred, r.elapsed_s, r.busy_s}) {
    s += ',' + num(v);
  }
  s += ',' + std::to_string(r.epochs) + ',' + (r.device_dead ? "1" : "0") + ',' + (r.truncated ? "1" : "0") + ',' +
       csv_safe(r.death_cause) + ',' + ftl::counters_csv_row(r.counters);
  return s;
}

void write_report_csv(std::ostream& out, const SimReport& r) {
  out << report_csv_header() << '\n' << report_csv_row(r) << '\n';
}

void write_timeline_csv(std::ostream& out, const SimReport& r) {
  out << "time_hours,frac_2,frac_4,frac_5,frac_6,frac_8\n";
  for (const auto& s : r.pwe_timeline) {
    if (s.empty) continue;
    out << num(s.time_hours);
    for (double f : s.fractions) out << ',' << num(f);
    out << '\n';
  }
}

}  // namespace dslc::engine
