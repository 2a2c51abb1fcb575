#pragma once

// Physical and economic model shared by every controller: workload samples,
// battery dynamics, unit-cost functions and per-slot telemetry.
//
// Units: energy in MW-slot, prices in dollars per MW-slot, costs in dollars.
// All math is per slot; slot duration only matters when reporting per hour.

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace upscost {

/// Absolute tolerance used for feasibility comparisons.
inline constexpr double kFeasTol = 1e-9;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected configuration or malformed input. Raised before any simulation runs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A decision that breaks a physical constraint. Signals a controller bug.
class InfeasibleDecision : public Error {
 public:
  using Error::Error;
};

/// A runtime-checked guarantee (queue bounds, decision structure, delay bound) failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

struct WorkloadSample {
  double w1 = 0.0;  // delay-tolerant part
  double w2 = 0.0;  // delay-intolerant part

  double total() const { return w1 + w2; }
};

struct WorkloadLimits {
  double w_max = 0.0;
  double w1_max = 0.0;
  double w2_max = 0.0;

  /// The extended model needs strict w1_max, w2_max < w_max; the basic model
  /// only uses w_max.
  void validate(bool extended) const;
  bool admits(const WorkloadSample& s) const;
};

struct BatteryConfig {
  double y_min = 0.0;
  double y_max = 0.0;
  double y_init = 0.0;
  double r_max = 0.0;
  double d_max = 0.0;
  double c_rc = 0.0;
  double c_dc = 0.0;

  /// A battery that can neither charge nor discharge. Used by the grid-only
  /// and postponement-only schemes.
  static BatteryConfig none();

  bool is_degenerate() const { return r_max == 0.0 && d_max == 0.0 && y_max == y_min; }
  double span() const { return y_max - y_min; }

  /// Adds y_max - y_min > r_max + d_max to validate_physical(); the online
  /// controllers need the margin, baselines and the oracle do not.
  void validate() const;
  void validate_physical() const;
};

struct BatteryState {
  double y = 0.0;
};

struct ControlDecision {
  double p = 0.0;      // grid draw
  double r = 0.0;      // recharge
  double d = 0.0;      // discharge
  double gamma = 0.0;  // share of p - r + d serving delay-tolerant work

  bool ind_r() const { return r > 0.0; }
  bool ind_d() const { return d > 0.0; }
  double delivered() const { return p - r + d; }
};

/// Builds the decision implied by a grid draw in the basic model:
/// recharge the surplus, discharge the shortfall.
ControlDecision decision_from_draw(double p, double w);

/// Per-state unit-price curve for the convex variant. `slope` may be empty.
struct PriceCurve {
  std::function<double(double)> price;
  std::function<double(double)> slope;
};

class CostModel {
 public:
  enum class Kind { flat, convex, generic };

  /// Unit price depends only on the auxiliary state.
  static CostModel flat(std::vector<double> state_prices, double p_peak);
  /// Per-state convex, increasing unit price with an optional derivative.
  static CostModel convex(std::vector<PriceCurve> curves, double p_peak);
  /// Convex helper: price(s, p) = a_s + b_s p + c_s p^2 with a, b, c >= 0.
  static CostModel quadratic(std::vector<std::array<double, 3>> coeffs, double p_peak);
  /// Any non-decreasing per-state price. chi_min must be supplied and is
  /// verified on a grid; throws ConfigError when the check fails.
  static CostModel generic(std::vector<std::function<double(double)>> curves, double p_peak,
                           double chi_min);

  Kind kind() const { return kind_; }
  std::size_t num_states() const { return curves_.size(); }
  double p_peak() const { return p_peak_; }
  double c_min() const { return c_min_; }
  double c_max() const { return c_max_; }
  double chi_min() const { return chi_min_; }

  double price(std::size_t s, double p) const;
  bool has_slope() const;
  std::optional<double> slope(std::size_t s, double p) const;

  /// Flat variant only.
  double flat_price(std::size_t s) const;
  const std::vector<double>& flat_prices() const { return flat_prices_; }

 private:
  CostModel() = default;
  void finish(std::optional<double> supplied_chi);

  Kind kind_ = Kind::flat;
  double p_peak_ = 0.0;
  double c_min_ = 0.0;
  double c_max_ = 0.0;
  double chi_min_ = 0.0;
  std::vector<double> flat_prices_;
  std::vector<PriceCurve> curves_;
};

/// Smallest chi for which p (C(s, p) - chi) is non-increasing in p.
/// Flat: C_max. Convex: max_s C(s, P_peak) + P_peak C'(s, P_peak).
/// Throws ConfigError for the generic variant and for degenerate models
/// where chi_min would equal C_min.
double compute_chi_min(const CostModel& cm);

/// Checks P1 (-chi + C(P1)) >= P2 (-chi + C(P2)) for all P1 <= P2 on an
/// n-point grid per state. Returns the worst violation (<= 0 when it holds).
double chi_condition_violation(const CostModel& cm, double chi, std::size_t n = 100);

/// y' = y - d + r. Throws InfeasibleDecision if y' leaves [y_min, y_max].
BatteryState battery_apply(BatteryState state, const ControlDecision& decision,
                           const BatteryConfig& cfg);

/// p C(s, p) + 1_R C_rc + 1_D C_dc.
double slot_cost(const ControlDecision& decision, const CostModel& cm, std::size_t s,
                 const BatteryConfig& cfg);

/// Validates one decision against the per-slot constraints: mutual
/// exclusion, rate caps, grid cap, gamma range and workload balance.
/// `extended` selects the (1 - gamma)(p - r + d) = w2 balance.
void check_decision(const ControlDecision& decision, const WorkloadSample& sample,
                    const BatteryConfig& cfg, double p_peak, bool extended);

struct SlotRecord {
  std::size_t slot = 0;
  WorkloadSample sample;
  std::size_t aux = 0;
  double price = 0.0;  // unit price at the chosen draw
  ControlDecision decision;
  double cost = 0.0;
  double y_before = 0.0;
  double y_after = 0.0;
  // Controller queues at the start of the slot (0 where not applicable).
  double x = 0.0;
  double u = 0.0;
  double z = 0.0;
  long max_delay = 0;  // largest completed-job delay so far, in slots
};

struct RunSummary {
  std::size_t slots = 0;
  double slot_minutes = 1.0;
  double total_cost = 0.0;
  double avg_cost = 0.0;
  double avg_cost_per_hour = 0.0;
  double r_bar = 0.0;
  double d_bar = 0.0;
  double avg_y = 0.0;
  double max_y = 0.0;
  double y_init = 0.0;
  double y_final = 0.0;
  double max_u = 0.0;
  double max_z = 0.0;
  double max_abs_x = 0.0;
  double u_bar = 0.0;
  long max_delay = 0;
  std::optional<long> delay_bound;
  std::size_t violations = 0;
  std::vector<std::string> violation_messages;
};

/// Aggregates a non-empty record sequence. Throws ConfigError when empty.
RunSummary time_average_metrics(std::span<const SlotRecord> records, double slot_minutes = 1.0);

}  // namespace upscost
