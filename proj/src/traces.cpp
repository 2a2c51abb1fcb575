#include "upscost/traces.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "rng.hpp"

namespace upscost {

namespace {

double sample_from(const Distribution& dist, detail::Rng& rng, std::size_t* index = nullptr) {
  if (const auto* range = std::get_if<UniformRange>(&dist)) return rng.uniform(range->lo, range->hi);
  const auto& set = std::get<std::vector<double>>(dist);
  if (set.empty()) throw ConfigError("empty value set");
  const std::size_t i = rng.pick(set.size());
  if (index) *index = i;
  return set[i];
}

void check_distribution(const Distribution& dist, const char* what) {
  if (const auto* range = std::get_if<UniformRange>(&dist)) {
    if (!(range->lo <= range->hi) || range->lo < 0.0)
      throw ConfigError(std::string(what) + ": need 0 <= lo <= hi");
    return;
  }
  const auto& set = std::get<std::vector<double>>(dist);
  if (set.empty()) throw ConfigError(std::string(what) + ": empty value set");
  for (double v : set)
    if (v < 0.0) throw ConfigError(std::string(what) + ": negative value");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

[[noreturn]] void bad_line(std::size_t line_no, const std::string& what) {
  throw ConfigError("line " + std::to_string(line_no) + ": " + what);
}

double parse_number(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    bad_line(line_no, "malformed number '" + std::string(tok) + "'");
  return v;
}

std::size_t parse_index(std::string_view tok, std::size_t line_no) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    bad_line(line_no, "malformed integer '" + std::string(tok) + "'");
  return v;
}

// Hours since the Unix epoch for "YYYY-MM-DDTHH[:00[:00]][Z]".
long long parse_hour(std::string_view ts, std::size_t line_no) {
  auto digits = [&](std::size_t pos, std::size_t len) {
    if (pos + len > ts.size()) bad_line(line_no, "malformed timestamp '" + std::string(ts) + "'");
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (ts[i] < '0' || ts[i] > '9') bad_line(line_no, "malformed timestamp '" + std::string(ts) + "'");
      v = v * 10 + (ts[i] - '0');
    }
    return v;
  };
  if (ts.size() < 13 || ts[4] != '-' || ts[7] != '-' || (ts[10] != 'T' && ts[10] != ' '))
    bad_line(line_no, "malformed timestamp '" + std::string(ts) + "'");
  const int year = digits(0, 4), month = digits(5, 2), day = digits(8, 2), hour = digits(11, 2);
  std::string_view rest = ts.substr(13);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  if (!(rest.empty() || rest == ":00" || rest == ":00:00"))
    bad_line(line_no, "timestamp not at hour resolution '" + std::string(ts) + "'");
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23) bad_line(line_no, "invalid date '" + std::string(ts) + "'");
  return static_cast<long long>(sys_days{ymd}.time_since_epoch().count()) * 24 + hour;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------

WorkloadLimits Trace::observed_limits() const {
  WorkloadLimits lim;
  for (const auto& s : samples) {
    lim.w_max = std::max(lim.w_max, s.total());
    lim.w1_max = std::max(lim.w1_max, s.w1);
    lim.w2_max = std::max(lim.w2_max, s.w2);
  }
  return lim;
}

void Trace::validate(const WorkloadLimits& limits) const {
  if (samples.empty()) throw ConfigError("trace: empty");
  if (aux.size() != samples.size()) throw ConfigError("trace: aux/sample length mismatch");
  for (std::size_t t = 0; t < samples.size(); ++t) {
    if (aux[t] >= state_prices.size()) throw ConfigError("trace: aux state without price at slot " + std::to_string(t));
    if (!limits.admits(samples[t])) throw ConfigError("trace: sample outside workload limits at slot " + std::to_string(t));
  }
}

Trace trace_from_prices(std::span<const double> slot_prices, std::vector<WorkloadSample> samples,
                        double slot_minutes) {
  if (slot_prices.size() != samples.size()) throw ConfigError("trace: price/workload length mismatch");
  Trace tr;
  tr.slot_minutes = slot_minutes;
  tr.samples = std::move(samples);
  std::map<double, std::size_t> index;
  tr.aux.reserve(slot_prices.size());
  for (double c : slot_prices) {
    auto [it, inserted] = index.try_emplace(c, tr.state_prices.size());
    if (inserted) tr.state_prices.push_back(c);
    tr.aux.push_back(it->second);
  }
  return tr;
}

void split_workload(Trace& trace, double tolerant_fraction) {
  if (tolerant_fraction < 0.0 || tolerant_fraction > 1.0) throw ConfigError("tolerant fraction outside [0, 1]");
  for (auto& s : trace.samples) {
    const double total = s.total();
    s.w1 = total * tolerant_fraction;
    s.w2 = total - s.w1;
  }
}

Trace gen_frame_periodic(std::size_t frame_len, std::array<double, 3> w, std::array<double, 3> c,
                         std::size_t n_slots) {
  if (frame_len < 2) throw ConfigError("frame length must be at least 2");
  Trace tr;
  tr.state_prices.assign(c.begin(), c.end());
  tr.samples.reserve(n_slots);
  tr.aux.reserve(n_slots);
  for (std::size_t t = 0; t < n_slots; ++t) {
    const std::size_t frame = t / frame_len + 1;
    std::size_t level = 1;
    if (t % frame_len == frame_len - 1) level = (frame % 2 == 1) ? 0 : 2;
    tr.samples.push_back({0.0, w[level]});
    tr.aux.push_back(level);
  }
  return tr;
}

std::vector<WorkloadSample> iid_workload(const Distribution& workload, std::size_t n_slots,
                                         std::uint64_t seed, double tolerant_fraction) {
  check_distribution(workload, "workload");
  detail::Rng rng(seed);
  std::vector<WorkloadSample> out;
  out.reserve(n_slots);
  for (std::size_t t = 0; t < n_slots; ++t) {
    const double total = sample_from(workload, rng);
    const double w1 = total * tolerant_fraction;
    out.push_back({w1, total - w1});
  }
  return out;
}

Trace gen_iid_uniform(const IidSpec& spec) {
  check_distribution(spec.workload, "workload");
  check_distribution(spec.price, "price");
  if (spec.tolerant_fraction < 0.0 || spec.tolerant_fraction > 1.0)
    throw ConfigError("tolerant fraction outside [0, 1]");
  detail::Rng rng(spec.seed);
  std::vector<WorkloadSample> samples;
  std::vector<double> prices;
  std::vector<std::size_t> set_index;
  samples.reserve(spec.n_slots);
  prices.reserve(spec.n_slots);
  for (std::size_t t = 0; t < spec.n_slots; ++t) {
    const double total = sample_from(spec.workload, rng);
    std::size_t idx = 0;
    prices.push_back(sample_from(spec.price, rng, &idx));
    set_index.push_back(idx);
    const double w1 = total * spec.tolerant_fraction;
    samples.push_back({w1, total - w1});
  }
  if (const auto* set = std::get_if<std::vector<double>>(&spec.price)) {
    // Keep the set's own ordering as the state space so that every listed
    // price is a state even if a short trace never draws it.
    Trace tr;
    tr.slot_minutes = spec.slot_minutes;
    tr.samples = std::move(samples);
    tr.aux = std::move(set_index);
    tr.state_prices = *set;
    return tr;
  }
  return trace_from_prices(prices, std::move(samples), spec.slot_minutes);
}

Trace gen_daily_periodic(std::span<const double> hourly_w, std::span<const double> hourly_c,
                         double slot_minutes, std::size_t n_days, double tolerant_fraction) {
  if (hourly_w.size() != 24 || hourly_c.size() != 24) throw ConfigError("daily profiles need 24 entries");
  if (!(slot_minutes > 0.0) || std::fmod(60.0, slot_minutes) != 0.0)
    throw ConfigError("slot length must divide 60 minutes");
  const auto per_hour = static_cast<std::size_t>(60.0 / slot_minutes);
  std::vector<double> prices;
  std::vector<WorkloadSample> samples;
  prices.reserve(n_days * 24 * per_hour);
  samples.reserve(n_days * 24 * per_hour);
  for (std::size_t d = 0; d < n_days; ++d)
    for (std::size_t h = 0; h < 24; ++h)
      for (std::size_t k = 0; k < per_hour; ++k) {
        prices.push_back(hourly_c[h]);
        const double w1 = hourly_w[h] * tolerant_fraction;
        samples.push_back({w1, hourly_w[h] - w1});
      }
  return trace_from_prices(prices, std::move(samples), slot_minutes);
}

const std::array<double, 24>& standin_daily_prices() {
  static const std::array<double, 24> prices = {55, 52, 50, 50, 50, 52, 60, 70, 78, 82, 85, 88,
                                                92, 96, 100, 100, 98, 94, 88, 80, 72, 66, 62, 58};
  return prices;
}

const std::array<double, 24>& standin_daily_workload() {
  static const std::array<double, 24> load = {0.4, 0.3, 0.3, 0.3, 0.3, 0.4, 0.5, 0.6, 0.8, 0.9, 1.0, 1.0,
                                              0.9, 1.0, 1.0, 0.9, 0.9, 0.8, 0.7, 0.6, 0.6, 0.5, 0.5, 0.4};
  return load;
}

// ---------------------------------------------------------------------------

PriceSeries parse_price_csv(std::istream& in, double slot_minutes) {
  if (!(slot_minutes > 0.0) || std::fmod(60.0, slot_minutes) != 0.0)
    throw ConfigError("slot length must divide 60 minutes");
  PriceSeries out;
  out.slot_minutes = slot_minutes;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ConfigError("line 1: missing header");
  ++line_no;
  if (trim(line) != "timestamp,price_per_mwh") bad_line(line_no, "expected header 'timestamp,price_per_mwh'");

  long long prev_hour = 0;
  std::size_t blank_run = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      ++blank_run;
      continue;
    }
    if (blank_run) bad_line(line_no - 1, "blank line inside data");
    const auto fields = split(line);
    if (fields.size() != 2) bad_line(line_no, "expected 2 fields");
    const long long hour = parse_hour(fields[0], line_no);
    const double price = parse_number(fields[1], line_no);
    if (price < 0.0) bad_line(line_no, "negative price");
    if (!out.rows.empty()) {
      if (hour <= prev_hour) bad_line(line_no, "timestamps not strictly increasing");
      if (hour != prev_hour + 1) bad_line(line_no, "missing hour");
    }
    prev_hour = hour;
    out.rows.push_back({std::string(fields[0]), price});
  }
  if (out.rows.empty()) throw ConfigError("price file has no data rows");

  const auto per_hour = static_cast<std::size_t>(60.0 / slot_minutes);
  const double scale = slot_minutes / 60.0;
  out.slot_prices.reserve(out.rows.size() * per_hour);
  for (const auto& row : out.rows)
    for (std::size_t k = 0; k < per_hour; ++k) out.slot_prices.push_back(row.price_per_mwh * scale);
  return out;
}

PriceSeries ingest_price_csv(const std::filesystem::path& path, double slot_minutes) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open price file " + path.string());
  return parse_price_csv(in, slot_minutes);
}

void write_price_csv(std::ostream& out, std::span<const PriceCsvRow> rows) {
  out << "timestamp,price_per_mwh\n";
  for (const auto& row : rows) out << row.timestamp << ',' << format_double(row.price_per_mwh) << '\n';
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "slot,w1,w2,aux_state,price_per_mw_slot\n";
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out << t << ',' << format_double(trace.samples[t].w1) << ',' << format_double(trace.samples[t].w2) << ','
        << trace.aux[t] << ',' << format_double(trace.price_at(t)) << '\n';
  }
}

Trace read_trace_csv(std::istream& in, double slot_minutes) {
  Trace tr;
  tr.slot_minutes = slot_minutes;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != "slot,w1,w2,aux_state,price_per_mw_slot")
    bad_line(1, "expected header 'slot,w1,w2,aux_state,price_per_mw_slot'");
  std::map<std::size_t, double> prices;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (f.size() != 5) bad_line(line_no, "expected 5 fields");
    if (parse_index(f[0], line_no) != tr.size()) bad_line(line_no, "slot index out of sequence");
    const double w1 = parse_number(f[1], line_no);
    const double w2 = parse_number(f[2], line_no);
    const std::size_t aux = parse_index(f[3], line_no);
    const double price = parse_number(f[4], line_no);
    if (w1 < 0.0 || w2 < 0.0 || price < 0.0) bad_line(line_no, "negative value");
    auto [it, inserted] = prices.try_emplace(aux, price);
    if (!inserted && it->second != price) bad_line(line_no, "aux state has two different prices");
    tr.samples.push_back({w1, w2});
    tr.aux.push_back(aux);
  }
  if (tr.samples.empty()) throw ConfigError("trace file has no data rows");
  for (std::size_t s = 0; s < prices.size(); ++s) {
    auto it = prices.find(s);
    if (it == prices.end()) throw ConfigError("trace: aux states must be numbered 0..k-1 without gaps");
    tr.state_prices.push_back(it->second);
  }
  if (prices.rbegin()->first != prices.size() - 1)
    throw ConfigError("trace: aux states must be numbered 0..k-1 without gaps");
  return tr;
}

Trace read_trace_csv(const std::filesystem::path& path, double slot_minutes) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file " + path.string());
  return read_trace_csv(in, slot_minutes);
}

}  // namespace upscost
