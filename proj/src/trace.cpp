#include "dslc/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace dslc::trace {

using retention::RetentionCategory;

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_int(std::string_view field, std::size_t line_no, const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw TraceParseError(line_no, std::string("non-numeric ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

MsrRecord parse_msr_record(std::string_view line, std::size_t line_no) {
  std::array<std::string_view, 7> fields;
  std::size_t count = 0;
  line = trim(line);
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (count < fields.size()) fields[count] = trim(f);
    ++count;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (count != fields.size()) {
    throw TraceParseError(line_no, "expected 7 fields, found " + std::to_string(count));
  }

  MsrRecord rec;
  rec.ticks = parse_int<std::int64_t>(fields[0], line_no, "timestamp");
  if (iequals(fields[3], "write")) {
    rec.kind = OpKind::Write;
  } else if (iequals(fields[3], "read")) {
    rec.kind = OpKind::Read;
  } else {
    throw TraceParseError(line_no, "unknown request type '" + std::string(fields[3]) + "'");
  }
  rec.offset_bytes = parse_int<std::uint64_t>(fields[4], line_no, "offset");
  rec.size_bytes = parse_int<std::uint64_t>(fields[5], line_no, "size");
  if (rec.size_bytes == 0) throw TraceParseError(line_no, "zero-length request");
  return rec;
}

IORequest parse_msr_line(std::string_view line, std::int64_t anchor_ticks, std::size_t line_no) {
  MsrRecord rec = parse_msr_record(line, line_no);
  return {(rec.ticks - anchor_ticks) / 10, rec.kind, rec.offset_bytes, rec.size_bytes};
}

std::vector<IORequest> read_msr_trace(std::istream& in) {
  std::vector<MsrRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    records.push_back(parse_msr_record(line, line_no));
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const MsrRecord& a, const MsrRecord& b) { return a.ticks < b.ticks; });

  std::vector<IORequest> out;
  out.reserve(records.size());
  const std::int64_t anchor = records.empty() ? 0 : records.front().ticks;
  for (const auto& r : records) out.push_back({(r.ticks - anchor) / 10, r.kind, r.offset_bytes, r.size_bytes});
  return out;
}

std::vector<IORequest> load_msr_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  return read_msr_trace(in);
}

std::string format_msr_line(const IORequest& req, std::int64_t base_ticks) {
  std::ostringstream os;
  os << (base_ticks + req.timestamp * 10) << ",synth,0," << (req.kind == OpKind::Write ? "Write" : "Read") << ','
     << req.offset_bytes << ',' << req.size_bytes << ",0";
  return os.str();
}

void write_msr_trace(std::ostream& out, std::span<const IORequest> trace) {
  for (const auto& r : trace) out << format_msr_line(r) << '\n';
}

std::vector<PageOp> split_to_pages(const IORequest& req, std::uint64_t page_size_bytes) {
  std::vector<PageOp> ops;
  if (req.size_bytes == 0 || page_size_bytes == 0) return ops;
  const std::uint64_t first = req.offset_bytes / page_size_bytes;
  const std::uint64_t last = (req.offset_bytes + req.size_bytes - 1) / page_size_bytes;
  ops.reserve(last - first + 1);
  for (std::uint64_t lpn = first; lpn <= last; ++lpn) ops.push_back({req.timestamp, req.kind, lpn});
  return ops;
}

std::vector<PageOp> split_all(std::span<const IORequest> trace, std::uint64_t page_size_bytes) {
  std::vector<PageOp> ops;
  ops.reserve(trace.size());
  for (const auto& r : trace) {
    auto pages = split_to_pages(r, page_size_bytes);
    ops.insert(ops.end(), pages.begin(), pages.end());
  }
  return ops;
}

// ---------------------------------------------------------------------------

void LongevityAnalyzer::add(const PageOp& op) {
  if (op.kind != OpKind::Write) return;
  LpnState& s = lpns_[op.lpn];
  if (s.writes > 0) gaps_.push_back(op.timestamp - s.last_write);
  s.last_write = op.timestamp;
  ++s.writes;
}

LongevityProfile LongevityAnalyzer::finish() const {
  LongevityProfile p;
  p.samples = gaps_;
  for (const auto& [lpn, s] : lpns_) {
    if (s.writes == 1) p.samples.push_back(kNever);
  }
  if (p.samples.empty()) return p;
  p.empty = false;

  std::sort(p.samples.begin(), p.samples.end());
  const double n = static_cast<double>(p.samples.size());
  std::array<std::size_t, retention::kCategoryCount> counts{};
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    const Micros v = p.samples[i];
    ++counts[static_cast<int>(retention::categorize_longevity(v))];
    if (i + 1 == p.samples.size() || p.samples[i + 1] != v) {
      const double x = v == kNever ? std::numeric_limits<double>::infinity() : to_seconds(v);
      p.cdf_points.emplace_back(x, static_cast<double>(i + 1) / n);
    }
  }
  p.cdf_points.back().second = 1.0;
  for (int c = 0; c < retention::kCategoryCount; ++c) p.category_fractions[c] = static_cast<double>(counts[c]) / n;
  return p;
}

LongevityProfile analyze_longevity(std::span<const PageOp> ops) {
  LongevityAnalyzer a;
  for (const auto& op : ops) a.add(op);
  return a.finish();
}

void write_longevity_csv(std::ostream& out, const LongevityProfile& profile) {
  out << "longevity_seconds,cdf\n";
  for (const auto& [x, f] : profile.cdf_points) {
    if (std::isinf(x)) {
      out << "inf";
    } else {
      out << x;
    }
    out << ',' << f << '\n';
  }
  out << "\ncategory,fraction\n";
  for (auto c : retention::kAllCategories) {
    out << retention::category_name(c) << ',' << profile.category_fractions[static_cast<int>(c)] << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

// Portable uniform [0,1) from the 64-bit Mersenne twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 gen_;
};

// Range from which a per-extent longevity is drawn for a category entry; kept inside the
// category even after +-5% jitter.
std::pair<double, double> category_draw_range_hours(RetentionCategory c) {
  switch (c) {
    case RetentionCategory::UpTo1Hour: return {5.0 / 60.0, 55.0 / 60.0};
    case RetentionCategory::Hours1To10: return {1.5, 9.0};
    case RetentionCategory::Hours10To3Days: return {12.0, 66.0};
    case RetentionCategory::Beyond3Days: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

struct Extent {
  std::size_t component;
  std::uint64_t pages;
  std::uint64_t first_lpn = 0;
  double period_us = 0.0;
};

}  // namespace

std::vector<IORequest> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.mixture.empty()) throw std::invalid_argument("synthetic mixture is empty");
  if (spec.working_set_pages == 0) throw std::invalid_argument("working set must be non-empty");
  if (spec.page_size_bytes == 0) throw std::invalid_argument("page size must be positive");
  if (!(spec.write_ratio > 0.0 && spec.write_ratio <= 1.0)) throw std::invalid_argument("write_ratio must be in (0,1]");
  if (spec.duration <= 0) throw std::invalid_argument("duration must be positive");
  if (spec.min_request_pages == 0 || spec.max_request_pages < spec.min_request_pages) {
    throw std::invalid_argument("invalid request size range");
  }
  if (spec.jitter < 0.0 || spec.jitter > 0.05) throw std::invalid_argument("jitter must be within [0, 0.05]");
  double wsum = 0.0;
  for (const auto& m : spec.mixture) {
    if (m.weight < 0.0) throw std::invalid_argument("negative mixture weight");
    wsum += m.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-6) throw std::invalid_argument("mixture weights must sum to 1");

  const double dur_h = to_hours(spec.duration);
  const std::size_t k = spec.mixture.size();

  // Written-once components and E[1/L] of rewriting components (rewrites per hour).
  std::vector<bool> once(k);
  std::vector<double> rate(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& m = spec.mixture[i];
    if (m.category) {
      once[i] = *m.category == RetentionCategory::Beyond3Days;
      auto [lo, hi] = category_draw_range_hours(*m.category);
      // L ~ U[lo, hi]
      if (!once[i]) rate[i] = std::log(hi / lo) / (hi - lo);
      if (!once[i] && hi * (1.0 + spec.jitter) * 2.0 > dur_h) {
        throw std::invalid_argument("duration too short to rewrite category " +
                                    std::string(retention::category_name(*m.category)));
      }
    } else {
      if (m.longevity <= 0) throw std::invalid_argument("mixture longevity must be positive");
      once[i] = m.longevity == kNever;
      const double l = once[i] ? 0.0 : to_hours(m.longevity);
      if (!once[i]) rate[i] = 1.0 / l;
      if (!once[i] && l * (1.0 + spec.jitter) * 2.0 > dur_h) {
        throw std::invalid_argument("duration too short to rewrite longevity " + std::to_string(l) + " h");
      }
    }
  }

  // Pages per component so that longevity samples (not pages) follow the weights.
  std::vector<double> share(k);
  double share_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double gaps_per_page = once[i] ? 1.0 : std::max(1.0, dur_h * rate[i] - 1.0);
    share[i] = spec.mixture[i].weight / gaps_per_page;
    share_sum += share[i];
  }
  std::vector<std::uint64_t> pages(k, 0);
  {
    std::vector<std::pair<double, std::size_t>> rema;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double exact = static_cast<double>(spec.working_set_pages) * share[i] / share_sum;
      pages[i] = static_cast<std::uint64_t>(std::floor(exact));
      assigned += pages[i];
      rema.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(rema.begin(), rema.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < spec.working_set_pages; ++j, ++assigned) ++pages[rema[j % k].second];
  }

  Rng rng(spec.seed);

  std::vector<Extent> extents;
  for (std::size_t i = 0; i < k; ++i) {
    std::uint64_t left = pages[i];
    const std::size_t first = extents.size();
    while (left > 0) {
      const std::uint64_t span = spec.max_request_pages - spec.min_request_pages + 1;
      const std::uint64_t size = std::min<std::uint64_t>(left, spec.min_request_pages + rng.below(span));
      extents.push_back({i, size});
      left -= size;
    }
    const auto& m = spec.mixture[i];
    if (once[i] || !m.category) {
      for (std::size_t j = first; j < extents.size(); ++j) {
        extents[j].period_us = once[i] ? 0.0 : static_cast<double>(m.longevity);
      }
      continue;
    }
    // Each extent owns a slice of u in page order and takes the L whose 1/L is the slice mean, so the
    // component's expected rewrite count (sum of pages/L) matches E[1/L] exactly.
    auto [lo, hi] = category_draw_range_hours(*m.category);
    std::uint64_t before = 0;
    for (std::size_t j = first; j < extents.size(); ++j) {
      const double a = static_cast<double>(before) / static_cast<double>(pages[i]);
      before += extents[j].pages;
      const double b = static_cast<double>(before) / static_cast<double>(pages[i]);
      const double la = lo + (hi - lo) * a, lb = lo + (hi - lo) * b;
      const double inv = std::log(lb / la) / ((hi - lo) * (b - a));
      extents[j].period_us = static_cast<double>(kMicrosPerHour) / inv;
    }
  }
  for (std::size_t i = extents.size(); i > 1; --i) std::swap(extents[i - 1], extents[rng.below(i)]);
  std::uint64_t next_lpn = 0;
  for (auto& e : extents) {
    e.first_lpn = next_lpn;
    next_lpn += e.pages;
  }

  std::vector<IORequest> out;
  const std::uint64_t ps = spec.page_size_bytes;
  for (const auto& e : extents) {
    const std::uint64_t off = e.first_lpn * ps;
    const std::uint64_t size = e.pages * ps;
    if (once[e.component]) {
      out.push_back({static_cast<Micros>(rng.uniform() * static_cast<double>(spec.duration)), OpKind::Write, off, size});
      continue;
    }
    const double period_us = e.period_us;
    double t = rng.uniform() * period_us;
    while (t < static_cast<double>(spec.duration)) {
      out.push_back({static_cast<Micros>(t), OpKind::Write, off, size});
      t += period_us * (1.0 + spec.jitter * rng.uniform(-1.0, 1.0));
    }
  }

  if (spec.write_ratio < 1.0) {
    const auto writes = static_cast<double>(out.size());
    const auto reads = static_cast<std::uint64_t>(std::llround(writes * (1.0 - spec.write_ratio) / spec.write_ratio));
    for (std::uint64_t r = 0; r < reads; ++r) {
      const auto& e = extents[rng.below(extents.size())];
      const auto t = static_cast<Micros>(rng.uniform() * static_cast<double>(spec.duration));
      out.push_back({t, OpKind::Read, e.first_lpn * ps, e.pages * ps});
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const IORequest& a, const IORequest& b) { return a.timestamp < b.timestamp; });
  return out;
}

Micros parse_duration(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty duration");
  Micros unit = kMicrosPerSecond;
  switch (text.back()) {
    case 's': unit = kMicrosPerSecond; text.remove_suffix(1); break;
    case 'm': unit = 60 * kMicrosPerSecond; text.remove_suffix(1); break;
    case 'h': unit = kMicrosPerHour; text.remove_suffix(1); break;
    case 'd': unit = 24 * kMicrosPerHour; text.remove_suffix(1); break;
    default: break;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !(v > 0.0)) {
    throw std::invalid_argument("bad duration '" + std::string(text) + "'");
  }
  return static_cast<Micros>(std::llround(v * static_cast<double>(unit)));
}

MixtureEntry parse_mixture_term(std::string_view term, double weight) {
  term = trim(term);
  for (auto c : retention::kAllCategories) {
    if (term == retention::category_name(c)) return MixtureEntry::of_category(c, weight);
  }
  if (term == "once") return MixtureEntry::of_duration(kNever, weight);
  return MixtureEntry::of_duration(parse_duration(term), weight);
}

// ---------------------------------------------------------------------------

Micros epoch_period(std::span<const IORequest> trace) {
  if (trace.empty()) throw std::invalid_argument("trace is empty");
  const Micros span = trace.back().timestamp - trace.front().timestamp;
  const Micros gap = trace.size() > 1 ? span / static_cast<Micros>(trace.size() - 1) : 0;
  return std::max<Micros>(1, span + gap);
}

std::vector<IORequest> loop_stream(std::span<const IORequest> trace, std::uint64_t epoch) {
  const Micros shift = static_cast<Micros>(epoch) * epoch_period(trace);
  std::vector<IORequest> out(trace.begin(), trace.end());
  for (auto& r : out) r.timestamp += shift;
  return out;
}

}  // namespace dslc::trace
