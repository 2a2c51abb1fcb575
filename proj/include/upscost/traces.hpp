#pragma once

// Input processes: deterministic and seeded generators for workload and
// price traces, plus CSV ingestion/emission.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the C++ standard. Uniform doubles are built from the top 53 bits
// ((x >> 11) * 2^-53) and set elements are picked with floor(u * n), so a
// given seed yields the same trace on every conforming platform.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "upscost/model.hpp"

namespace upscost {

struct Trace {
  double slot_minutes = 1.0;
  std::vector<WorkloadSample> samples;
  std::vector<std::size_t> aux;     // auxiliary state per slot
  std::vector<double> state_prices; // flat unit price per auxiliary state (dollars/MW-slot)

  std::size_t size() const { return samples.size(); }
  double price_at(std::size_t t) const { return state_prices.at(aux.at(t)); }

  /// Tightest limits covering every sample.
  WorkloadLimits observed_limits() const;
  /// Throws ConfigError if a sample breaks `limits` or the trace is malformed.
  void validate(const WorkloadLimits& limits) const;
};

/// Builds a trace whose auxiliary states are the distinct per-slot prices.
Trace trace_from_prices(std::span<const double> slot_prices, std::vector<WorkloadSample> samples,
                        double slot_minutes);

/// Splits each sample's total into a delay-tolerant share `tolerant_fraction`
/// and an intolerant remainder.
void split_workload(Trace& trace, double tolerant_fraction);

/// Frame-periodic workload: in odd frames every slot draws w_mid except the
/// last (w_low); in even frames the last slot draws w_high. Prices follow
/// the workload level. Frames are numbered from 1.
Trace gen_frame_periodic(std::size_t frame_len, std::array<double, 3> w_low_mid_high,
                         std::array<double, 3> c_low_mid_high, std::size_t n_slots);

struct UniformRange {
  double lo = 0.0;
  double hi = 0.0;
};
using Distribution = std::variant<UniformRange, std::vector<double>>;

struct IidSpec {
  Distribution workload;
  Distribution price;
  std::size_t n_slots = 0;
  std::uint64_t seed = 0;
  double slot_minutes = 1.0;
  double tolerant_fraction = 0.0;
};

/// i.i.d. workload and price per slot. Identical specs give identical traces.
Trace gen_iid_uniform(const IidSpec& spec);

/// Tiles 24-entry hourly profiles over n_days. Prices are taken as given
/// (dollars/MW-slot) and held constant within each hour.
Trace gen_daily_periodic(std::span<const double> hourly_w, std::span<const double> hourly_c,
                         double slot_minutes, std::size_t n_days, double tolerant_fraction = 0.0);

/// Stand-in daily price profile (dollars/MW-slot, hour 0..23) spanning
/// exactly [50, 100]: cheap overnight, a morning shoulder, an afternoon peak
/// and an evening decline.
const std::array<double, 24>& standin_daily_prices();
/// Stand-in daily workload profile (MW-slot, hour 0..23) on a 0.1 grid
/// within [0.3, 1.0], following a business-hours shape.
const std::array<double, 24>& standin_daily_workload();

/// Workload-only i.i.d. samples, used to pair a price series with demand.
std::vector<WorkloadSample> iid_workload(const Distribution& workload, std::size_t n_slots,
                                         std::uint64_t seed, double tolerant_fraction = 0.0);

struct PriceCsvRow {
  std::string timestamp;  // ISO-8601, hour resolution
  double price_per_mwh = 0.0;
};

struct PriceSeries {
  std::vector<PriceCsvRow> rows;
  double slot_minutes = 60.0;
  std::vector<double> slot_prices;  // dollars/MW-slot
};

/// Parses `timestamp,price_per_mwh`, requires strictly increasing,
/// gap-free hourly timestamps, and expands each hour to 60/slot_minutes
/// slots priced at price * slot_minutes / 60.
PriceSeries ingest_price_csv(const std::filesystem::path& path, double slot_minutes);
PriceSeries parse_price_csv(std::istream& in, double slot_minutes);
void write_price_csv(std::ostream& out, std::span<const PriceCsvRow> rows);

/// Trace CSV: slot,w1,w2,aux_state,price_per_mw_slot
void write_trace_csv(std::ostream& out, const Trace& trace);
Trace read_trace_csv(std::istream& in, double slot_minutes);
Trace read_trace_csv(const std::filesystem::path& path, double slot_minutes);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace upscost
