#pragma once

// Experiment harness: JSON configuration, policy construction, the
// simulation loop with record auditing, sweeps and the scheme comparison.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "upscost/model.hpp"
#include "upscost/traces.hpp"

namespace upscost {

enum class ModelKind { basic, extended };
enum class PolicyKind { dynamic, no_battery, threshold, scheme_c, oracle };

std::string to_string(ModelKind m);
std::string to_string(PolicyKind p);

struct TraceSpec {
  enum class Kind { frame, iid, daily, file, prices };
  Kind kind = Kind::frame;

  // frame
  std::size_t frame_len = 5;
  std::array<double, 3> w_levels{10, 15, 20};
  std::array<double, 3> c_levels{2, 6, 10};
  // iid (price unused for `prices`); daily uses `workload` when workload_iid
  Distribution workload = UniformRange{0.0, 0.0};
  bool workload_iid = false;
  Distribution price = std::vector<double>{};
  // daily; empty means the stand-in profile
  std::vector<double> hourly_w;
  std::vector<double> hourly_c;
  // file / prices
  std::filesystem::path path;

  double slot_minutes = 1.0;
  double tolerant_fraction = 0.0;
};

struct CostSpec {
  enum class Kind { flat, quadratic };
  Kind kind = Kind::flat;
  std::vector<std::array<double, 3>> coeffs;  // quadratic: per auxiliary state
};

struct ExperimentConfig {
  ModelKind model = ModelKind::basic;
  PolicyKind policy = PolicyKind::dynamic;
  BatteryConfig battery;
  std::optional<double> p_peak;  // default w_max + max(r_max, d_max)
  CostSpec cost;
  TraceSpec trace;
  std::optional<WorkloadLimits> limits;  // default derived from the trace spec
  std::optional<double> v;               // nullopt means "max"
  std::optional<double> eps;             // default w_max / 2
  double threshold = 0.0;
  double oracle_step = 0.5;
  std::optional<long> delta_target;      // scheme C; default is scheme D's bound
  std::size_t n_slots = 1000;  // 0: whole file for file/prices traces
  std::uint64_t seed = 1;
  bool check_invariants = false;
  std::string sweep_axis = "y_max";      // or "v"
  std::vector<double> sweep_values;
  std::vector<double> scheme_y_max;      // compare-schemes battery sizes
};

/// Collects every problem in `j` and throws one ConfigError listing them.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Trace, cost model and limits built from a config.
struct Prepared {
  Trace trace;
  CostModel cm;
  WorkloadLimits limits;
  double eps = 0.0;
};

Trace build_trace(const ExperimentConfig& cfg);
Prepared prepare(const ExperimentConfig& cfg);

/// One slot at a time; used by run_policy.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual SlotRecord step(std::size_t slot, const WorkloadSample& sample, std::size_t s) = 0;
  virtual bool extended() const { return false; }
  virtual std::optional<long> delay_bound() const { return std::nullopt; }
  virtual double v() const { return 0.0; }
  virtual BatteryConfig battery() const { return BatteryConfig::none(); }
};

/// Builds the configured policy. Throws ConfigError on any precondition
/// failure (V above its maximum, threshold not positive, ...).
std::unique_ptr<Policy> make_policy(const ExperimentConfig& cfg, const Prepared& prep);

struct RunResult {
  std::vector<SlotRecord> records;
  RunSummary summary;
  std::string policy;
  double v = 0.0;
  std::optional<double> eps;
};

/// Runs `policy` over the trace. A thrown InvariantViolation or
/// InfeasibleDecision ends the run and is counted as a violation. With
/// `audit` every record is also re-checked against the physical model.
RunResult run_policy(Policy& policy, const Trace& trace, const CostModel& cm, bool audit);

RunResult simulate(const ExperimentConfig& cfg);

struct SweepPoint {
  double value = 0.0;
  double y_max = 0.0;
  double v = 0.0;
  std::string policy;
  std::optional<RunSummary> summary;
  std::string error;
};

/// One simulation per value, run concurrently on a shared trace. V is
/// recomputed per point when the config asks for "max"; a basic-model point
/// whose V_max is not positive falls back to the no-battery policy.
std::vector<SweepPoint> sweep(const ExperimentConfig& cfg);

struct SchemeRow {
  double y_max = 0.0;
  double cost_a = 0.0;
  double cost_b = 0.0;
  double cost_c = 0.0;
  double cost_d = 0.0;
  std::optional<double> ratio_b;  // nullopt when cost_a == 0
  std::optional<double> ratio_c;
  std::optional<double> ratio_d;
  double v_b = 0.0;
  double v_d = 0.0;
  double eps_c = 0.0;
  double eps_d = 0.0;
  long delta_max = 0;
};

/// Schemes A (grid only), B (battery), C (postponement), D (both) on one
/// trace for each battery size in cfg.scheme_y_max (or cfg.battery.y_max).
std::vector<SchemeRow> compare_schemes(const ExperimentConfig& cfg);

// Output
void write_slots_csv(std::ostream& out, const std::vector<SlotRecord>& records);
nlohmann::json summary_json(const RunResult& result);
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);
void write_schemes_csv(std::ostream& out, const std::vector<SchemeRow>& rows);

/// 0 on success, 2 when the run recorded a violation.
int exit_code(const RunSummary& summary);

}  // namespace upscost
