#pragma once

// Online controller for the basic model (no workload postponement).
//
// Each slot it minimizes  X P + V [P C(S, P) + 1_R C_rc + 1_D C_dc]
// over P_low <= P <= P_high, then recharges the surplus P - W or discharges
// the shortfall W - P. X is the battery level shifted by V chi_min + D_max + Y_min.

#include <cstddef>

#include "upscost/model.hpp"

namespace upscost {

/// (y_max - y_min - r_max - d_max) / (chi_min - c_min).
double v_max(const BatteryConfig& cfg, const CostModel& cm);

/// B = max(r_max^2, d_max^2) / 2.
double drift_constant(const BatteryConfig& cfg);

struct DrawRange {
  double low = 0.0;
  double high = 0.0;
};

/// [max(0, w - d_max), min(p_peak, w + r_max)].
DrawRange draw_range(double w, const BatteryConfig& cfg, double p_peak);

/// Value of the per-slot objective for grid draw p.
double p3_objective(double p, double x, double v, double w, std::size_t s, const BatteryConfig& cfg,
                    const CostModel& cm);

/// Closed-form threshold rule for state-only prices.
ControlDecision solve_p3_flat(double x, double v, double w, double price, const BatteryConfig& cfg,
                              double p_peak);

/// Closed form for convex increasing prices. Falls back to solve_p3_grid
/// (with refinement) when the cost model has no derivative.
ControlDecision solve_p3_convex(double x, double v, double w, std::size_t s, const BatteryConfig& cfg,
                                const CostModel& cm);

struct GridOptions {
  std::size_t grid_n = 4096;
  /// Golden-section polish inside the cells around the best grid point.
  /// Only changes the answer when the objective is curved between grid points.
  bool refine = false;
};

/// Brute-force reference: evaluates the objective at grid_n evenly spaced
/// draws plus {P_low, w, P_high} and keeps the best. Ties prefer idle, then
/// the draw closest to w.
ControlDecision solve_p3_grid(double x, double v, double w, std::size_t s, const BatteryConfig& cfg,
                              const CostModel& cm, GridOptions opts = {});

class BasicController {
 public:
  /// Throws ConfigError unless 0 < v <= v_max(cfg, cm).
  BasicController(const BatteryConfig& cfg, const CostModel& cm, double v);

  double v() const { return v_; }
  double y() const { return battery_.y; }
  /// X = Y - V chi_min - D_max - Y_min.
  double x() const { return battery_.y - shift_; }
  double x_lower() const { return -v_ * cm_.chi_min() - cfg_.d_max; }
  double x_upper() const { return cfg_.span() - cfg_.d_max - v_ * cm_.chi_min(); }
  double b_const() const { return drift_constant(cfg_); }
  const BatteryConfig& battery_config() const { return cfg_; }

  /// Solves the per-slot problem without changing state.
  ControlDecision decide(double w, std::size_t s) const;

  /// Decides, applies and checks one slot. Throws InvariantViolation or
  /// InfeasibleDecision on any broken guarantee.
  SlotRecord step(std::size_t slot, const WorkloadSample& sample, std::size_t s);

 private:
  BatteryConfig cfg_;
  CostModel cm_;
  double v_;
  double shift_;
  BatteryState battery_;
};

}  // namespace upscost
