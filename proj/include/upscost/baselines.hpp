#pragma once

// Reference policies: grid-only, price threshold, postponement without a
// battery, and an offline dynamic-programming oracle for known traces.

#include <cstddef>
#include <optional>
#include <vector>

#include "upscost/extended_controller.hpp"
#include "upscost/model.hpp"
#include "upscost/traces.hpp"

namespace upscost {

/// Serve everything from the grid: p = w, no battery use.
/// Throws ConfigError if w exceeds the grid cap.
ControlDecision no_battery_policy(const WorkloadSample& sample, std::size_t s, const CostModel& cm);

struct ThresholdPolicyConfig {
  double threshold = 0.0;  // dollars/MW-slot

  void validate() const;
};

/// Below the threshold recharge min(r_max, y_max - y, p_peak - w); above it
/// discharge min(d_max, y - y_min, w); otherwise idle. Demand is always met.
ControlDecision threshold_policy(const ThresholdPolicyConfig& tcfg, double y, const WorkloadSample& sample,
                                 double price, const BatteryConfig& cfg, double p_peak);

std::vector<SlotRecord> run_no_battery(const Trace& trace, const CostModel& cm);
std::vector<SlotRecord> run_threshold(const ThresholdPolicyConfig& tcfg, const Trace& trace,
                                      const BatteryConfig& cfg, const CostModel& cm);

struct SchemeCParams {
  double v = 0.0;
  double eps = 0.0;
  long delta_max = 0;
};

/// Smallest eps giving the postponement-only controller (same V, no battery)
/// a worst-case delay of at most `delta_target` slots.
/// Throws ConfigError when that eps exceeds w_max - w2_max or delta_target < 2.
SchemeCParams scheme_c_params(double v, const CostModel& cm, const WorkloadLimits& limits, long delta_target);

/// Postponement-only controller: BatteryConfig::none() with scheme_c_params.
ExtendedController make_scheme_c(const CostModel& cm, const WorkloadLimits& limits, double v, long delta_target);

struct OracleConfig {
  double step = 0.5;  // battery discretization, MW-slot
  bool keep_path = true;  // false: cost only, O(levels) memory

  /// Throws ConfigError unless step divides r_max, d_max, y_max - y_min and y_init - y_min.
  void validate(const BatteryConfig& cfg) const;
};

struct OracleResult {
  double total_cost = 0.0;
  double avg_cost = 0.0;
  std::vector<ControlDecision> decisions;  // empty unless keep_path
  std::vector<SlotRecord> records;
};

/// Exact minimum total cost over battery trajectories on the step grid,
/// meeting demand every slot without postponement. Ties prefer idle.
OracleResult offline_oracle(const OracleConfig& ocfg, const BatteryConfig& cfg, const CostModel& cm,
                            const Trace& trace);

}  // namespace upscost
