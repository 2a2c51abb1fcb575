#pragma once

// Online controller for the extended model: part of the workload may be
// postponed, subject to a deterministic worst-case delay.
//
// Queue state (X, U, Z):
//   U  unfinished delay-tolerant work,
//   Z  epsilon-persistent virtual queue that grows by eps while U > 0,
//   X  battery level shifted by Q_max + D_max + Y_min.
// Each slot maximizes
//   (U + Z) P - V [P C + 1_R C_rc + 1_D C_dc] + (X + U + Z)(D - R)
// subject to (1 - gamma)(P - R + D) = W2 and the usual rate/grid caps.

#include <cstddef>
#include <deque>
#include <optional>

#include "upscost/model.hpp"

namespace upscost {

/// (y_max - y_min - (r_max + d_max + w1_max + eps)) / (chi_min - c_min).
/// Throws ConfigError when the numerator is not positive.
double v_max_ext(const BatteryConfig& cfg, const CostModel& cm, const WorkloadLimits& limits,
                 double eps);

/// max(u - service, 0) + w1.
double update_u(double u, double service, double w1);

/// max(z - service + eps 1{u > 0}, 0).
double update_z(double z, double service, bool u_positive, double eps);

/// ceil((u_max + z_max) / eps). Throws ConfigError for eps <= 0.
long delay_bound(double u_max, double z_max, double eps);

struct QueueState {
  double x = 0.0;
  double u = 0.0;
  double z = 0.0;
  double v = 0.0;
};

double p6_objective(const ControlDecision& dec, const QueueState& q, std::size_t s,
                    const BatteryConfig& cfg, const CostModel& cm);

/// Best objective per mode for state-only prices. Values for modes whose
/// optimum is only approached as R or D -> 0+ are suprema.
struct ModeValues {
  double idle = 0.0;
  double recharge = 0.0;
  double discharge = 0.0;
};

ModeValues p6_mode_values(double q1, double q2, double w2, const BatteryConfig& cfg, double p_peak,
                          double v);

/// Closed form for state-only prices: pick the best mode (ties: idle, then
/// recharge, then discharge) and rebuild its maximizing (P, R, D, gamma).
ControlDecision solve_p6_flat(const QueueState& q, double w2, double price, const BatteryConfig& cfg,
                              double p_peak);

struct P6GridOptions {
  std::size_t grid_n = 1000;   // draws on [0, p_peak]
  std::size_t inner_n = 1000;  // recharge/discharge amounts per draw
};

/// Brute-force reference: enumerates mode x draw grid x amount grid (plus
/// the constraint breakpoints) and keeps the best feasible decision.
ControlDecision solve_p6_grid(const QueueState& q, double w2, std::size_t s, const BatteryConfig& cfg,
                              const CostModel& cm, P6GridOptions opts = {});

/// gamma that meets w2 exactly for the given draw/charge pair.
double gamma_for(double delivered, double w2);

/// FIFO record of delay-tolerant arrivals still awaiting service.
class JobLedger {
 public:
  struct Job {
    std::size_t arrival;
    double remaining;
  };

  void push(std::size_t arrival, double amount);
  /// Serves up to `amount` in slot `now`, oldest first. Returns the largest
  /// delay (now - arrival) among jobs finished in this call, or 0.
  long serve(std::size_t now, double amount);

  double backlog() const;
  bool empty() const { return jobs_.empty(); }
  std::size_t size() const { return jobs_.size(); }
  std::optional<std::size_t> oldest_arrival() const;

 private:
  std::deque<Job> jobs_;
};

class ExtendedController {
 public:
  /// For a usable battery V must satisfy 0 < V <= v_max_ext. With
  /// BatteryConfig::none() any V > 0 is accepted. eps must lie in
  /// [0, w_max - w2_max]; eps = 0 gives no delay guarantee.
  ExtendedController(const BatteryConfig& cfg, const CostModel& cm, const WorkloadLimits& limits,
                     double v, double eps, P6GridOptions grid = {});

  double v() const { return v_; }
  double eps() const { return eps_; }
  double u() const { return u_; }
  double z() const { return z_; }
  double y() const { return battery_.y; }
  double x() const { return battery_.y - shift_; }

  double u_max() const { return v_ * cm_.chi_min() + limits_.w1_max; }
  double z_max() const { return v_ * cm_.chi_min() + eps_; }
  double q_max() const { return v_ * cm_.chi_min() + limits_.w1_max + eps_; }
  double x_lower() const { return -q_max() - cfg_.d_max; }
  double x_upper() const { return cfg_.span() - q_max() - cfg_.d_max; }
  std::optional<long> delta_max() const { return delta_max_; }
  double b_ext() const;
  const JobLedger& ledger() const { return ledger_; }
  const BatteryConfig& battery_config() const { return cfg_; }

  ControlDecision decide(double w2, std::size_t s) const;

  /// Decides, serves the ledger, updates (X, U, Z, Y) and checks every
  /// bound. Throws InvariantViolation or InfeasibleDecision on failure.
  SlotRecord step(std::size_t slot, const WorkloadSample& sample, std::size_t s);

 private:
  BatteryConfig cfg_;
  CostModel cm_;
  WorkloadLimits limits_;
  double v_;
  double eps_;
  P6GridOptions grid_;
  double shift_;
  std::optional<long> delta_max_;
  BatteryState battery_;
  double u_ = 0.0;
  double z_ = 0.0;
  long max_delay_ = 0;
  JobLedger ledger_;
};

}  // namespace upscost
