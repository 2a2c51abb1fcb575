#include "upscost/extended_controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "upscost/basic_controller.hpp"

namespace upscost {

double v_max_ext(const BatteryConfig& cfg, const CostModel& cm, const WorkloadLimits& limits,
                 double eps) {
  const double gap = cm.chi_min() - cm.c_min();
  if (!(gap > 0.0)) throw ConfigError("degenerate cost model: chi_min must exceed c_min");
  const double room = cfg.y_max - cfg.y_min - (cfg.r_max + cfg.d_max + limits.w1_max + eps);
  if (!(room > 0.0)) throw ConfigError("battery too small for extended model");
  return room / gap;
}

double update_u(double u, double service, double w1) { return std::max(u - service, 0.0) + w1; }

double update_z(double z, double service, bool u_positive, double eps) {
  return std::max(z - service + (u_positive ? eps : 0.0), 0.0);
}

long delay_bound(double u_max, double z_max, double eps) {
  if (!(eps > 0.0)) throw ConfigError("no delay guarantee: eps must be positive");
  const double ratio = (u_max + z_max) / eps;
  // Absorb representation error so exact multiples do not round up.
  return static_cast<long>(std::ceil(ratio * (1.0 - 1e-12)));
}

double gamma_for(double delivered, double w2) {
  if (!(delivered > 0.0)) return 0.0;
  return std::clamp(1.0 - w2 / delivered, 0.0, 1.0);
}

double p6_objective(const ControlDecision& dec, const QueueState& q, std::size_t s,
                    const BatteryConfig& cfg, const CostModel& cm) {
  double penalty = dec.p * cm.price(s, dec.p);
  if (dec.ind_r()) penalty += cfg.c_rc;
  if (dec.ind_d()) penalty += cfg.c_dc;
  return (q.u + q.z) * dec.p - q.v * penalty + (q.x + q.u + q.z) * (dec.d - dec.r);
}

ModeValues p6_mode_values(double q1, double q2, double w2, const BatteryConfig& cfg, double p_peak,
                          double v) {
  const double r_max = cfg.r_max, d_max = cfg.d_max;
  const double vc_rc = v * cfg.c_rc, vc_dc = v * cfg.c_dc;
  ModeValues m;
  m.idle = q1 >= 0.0 ? q1 * p_peak : q1 * w2;

  if (q1 >= 0.0 && q2 >= 0.0) {
    m.recharge = q1 * p_peak - vc_rc;
  } else if (q1 >= 0.0) {
    m.recharge = q1 * p_peak - q2 * r_max - vc_rc;
  } else if (q2 >= 0.0) {
    m.recharge = q1 * w2 - vc_rc;
  } else if (q1 >= q2) {
    m.recharge = q1 * (r_max + w2) - q2 * r_max - vc_rc;
  } else {
    m.recharge = q1 * w2 - vc_rc;
  }

  const double low = std::max(0.0, w2 - d_max);
  if (q1 >= 0.0 && q2 >= 0.0) {
    m.discharge = q1 * p_peak + q2 * d_max - vc_dc;
  } else if (q1 >= 0.0) {
    m.discharge = q1 * p_peak - vc_dc;
  } else if (q2 >= 0.0) {
    m.discharge = q1 * low + q2 * d_max - vc_dc;
  } else if (q1 <= q2) {
    m.discharge = q1 * low + q2 * std::min(w2, d_max) - vc_dc;
  } else {
    m.discharge = q1 * w2 - vc_dc;
  }
  return m;
}

ControlDecision solve_p6_flat(const QueueState& q, double w2, double price, const BatteryConfig& cfg,
                              double p_peak) {
  const double q1 = q.u + q.z - q.v * price;
  const double q2 = q.x + q.u + q.z;
  const ModeValues m = p6_mode_values(q1, q2, w2, cfg, p_peak, q.v);

  enum class Mode { idle, recharge, discharge } mode = Mode::idle;
  double best = m.idle;
  if (m.recharge > best) {
    mode = Mode::recharge;
    best = m.recharge;
  }
  if (m.discharge > best) mode = Mode::discharge;

  ControlDecision dec;
  switch (mode) {
    case Mode::idle:
      dec.p = q1 >= 0.0 ? p_peak : w2;
      break;
    case Mode::recharge:
      // Only the two cases that attain their value with R > 0 can beat idle.
      if (q1 >= 0.0) {
        dec.p = p_peak;
        dec.r = cfg.r_max;
      } else {
        dec.p = w2 + cfg.r_max;
        dec.r = cfg.r_max;
      }
      break;
    case Mode::discharge:
      dec.p = q1 >= 0.0 ? p_peak : std::max(0.0, w2 - cfg.d_max);
      dec.d = (q1 < 0.0 && q2 < 0.0) ? std::min(w2, cfg.d_max) : cfg.d_max;
      break;
  }
  dec.gamma = gamma_for(dec.delivered(), w2);
  return dec;
}

ControlDecision solve_p6_grid(const QueueState& q, double w2, std::size_t s, const BatteryConfig& cfg,
                              const CostModel& cm, P6GridOptions opts) {
  const double p_peak = cm.p_peak();
  const std::size_t n = std::max<std::size_t>(opts.grid_n, 2);
  const std::size_t m = std::max<std::size_t>(opts.inner_n, 1);
  const double qsum = q.u + q.z;
  const double q2 = q.x + q.u + q.z;
  const double feas = 1e-12 * std::max(1.0, p_peak);

  std::vector<double> draws;
  draws.reserve(n + 6);
  for (std::size_t i = 0; i < n; ++i) draws.push_back(p_peak * static_cast<double>(i) / static_cast<double>(n - 1));
  for (double p : {w2, w2 + cfg.r_max, w2 - cfg.d_max, p_peak - cfg.r_max})
    if (p >= 0.0 && p <= p_peak) draws.push_back(p);

  ControlDecision best;
  double best_obj = -std::numeric_limits<double>::infinity();
  auto offer = [&](double obj, double p, double r, double d) {
    const double tie = 1e-12 * std::max(1.0, std::abs(best_obj));
    if (obj > best_obj + tie || best_obj == -std::numeric_limits<double>::infinity()) {
      best_obj = obj;
      best.p = p;
      best.r = r;
      best.d = d;
    }
  };

  // Idle first, recharge second, discharge last: later modes must win strictly.
  for (double p : draws)
    if (p + feas >= w2) offer(qsum * p - q.v * p * cm.price(s, p), p, 0.0, 0.0);

  if (cfg.r_max > 0.0) {
    for (double p : draws) {
      const double hi = std::min(cfg.r_max, p - w2);
      if (!(hi > 0.0)) continue;
      const double base = qsum * p - q.v * (p * cm.price(s, p) + cfg.c_rc);
      for (std::size_t k = 1; k <= m; ++k) {
        const double r = cfg.r_max * static_cast<double>(k) / static_cast<double>(m);
        if (r > hi) break;
        offer(base - q2 * r, p, r, 0.0);
      }
      offer(base - q2 * hi, p, hi, 0.0);
    }
  }

  if (cfg.d_max > 0.0) {
    for (double p : draws) {
      const double base = qsum * p - q.v * (p * cm.price(s, p) + cfg.c_dc);
      auto consider = [&](double d) {
        if (d > 0.0 && d <= cfg.d_max && p + d + feas >= w2) offer(base + q2 * d, p, 0.0, d);
      };
      for (std::size_t k = 1; k <= m; ++k) consider(cfg.d_max * static_cast<double>(k) / static_cast<double>(m));
      consider(w2 - p);
      consider(std::min(w2, cfg.d_max));
    }
  }

  if (best.delivered() < w2) best.p += w2 - best.delivered();
  best.gamma = gamma_for(best.delivered(), w2);
  return best;
}

// ---------------------------------------------------------------------------

void JobLedger::push(std::size_t arrival, double amount) {
  if (amount > 0.0) jobs_.push_back({arrival, amount});
}

long JobLedger::serve(std::size_t now, double amount) {
  long worst = 0;
  while (amount > 0.0 && !jobs_.empty()) {
    Job& job = jobs_.front();
    const double take = std::min(job.remaining, amount);
    job.remaining -= take;
    amount -= take;
    if (job.remaining <= 1e-12) {
      worst = std::max(worst, static_cast<long>(now - job.arrival));
      jobs_.pop_front();
    }
  }
  return worst;
}

double JobLedger::backlog() const {
  double sum = 0.0;
  for (const Job& j : jobs_) sum += j.remaining;
  return sum;
}

std::optional<std::size_t> JobLedger::oldest_arrival() const {
  if (jobs_.empty()) return std::nullopt;
  return jobs_.front().arrival;
}

// ---------------------------------------------------------------------------

ExtendedController::ExtendedController(const BatteryConfig& cfg, const CostModel& cm,
                                       const WorkloadLimits& limits, double v, double eps,
                                       P6GridOptions grid)
    : cfg_(cfg), cm_(cm), limits_(limits), v_(v), eps_(eps), grid_(grid) {
  cfg_.validate();
  limits_.validate(true);
  if (cm_.p_peak() < limits_.w_max + std::max(cfg_.r_max, cfg_.d_max) - kFeasTol)
    throw ConfigError("extended model needs p_peak >= w_max + max(r_max, d_max)");
  if (eps_ < 0.0 || eps_ > limits_.w_max - limits_.w2_max + kFeasTol)
    throw ConfigError("eps must lie in [0, w_max - w2_max]");
  if (!(v_ > 0.0)) throw ConfigError("control parameter V must be positive");
  if (!cfg_.is_degenerate() && v_ > v_max_ext(cfg_, cm_, limits_, eps_) * (1.0 + 1e-12))
    throw ConfigError("control parameter V exceeds V_max_ext");
  shift_ = q_max() + cfg_.d_max + cfg_.y_min;
  if (eps_ > 0.0) delta_max_ = delay_bound(u_max(), z_max(), eps_);
  battery_.y = cfg_.y_init;
}

double ExtendedController::b_ext() const {
  const double a = cm_.p_peak() + cfg_.d_max;
  return a * a + (limits_.w1_max * limits_.w1_max + eps_ * eps_) / 2.0 + drift_constant(cfg_);
}

ControlDecision ExtendedController::decide(double w2, std::size_t s) const {
  const QueueState q{x(), u_, z_, v_};
  if (cm_.kind() == CostModel::Kind::flat) return solve_p6_flat(q, w2, cm_.flat_price(s), cfg_, cm_.p_peak());
  return solve_p6_grid(q, w2, s, cfg_, cm_, grid_);
}

SlotRecord ExtendedController::step(std::size_t slot, const WorkloadSample& sample, std::size_t s) {
  const double x0 = x(), u0 = u_, z0 = z_, y0 = battery_.y;
  const double scale = std::max({1.0, std::abs(x0), q_max(), cfg_.y_max});
  const double tol = kFeasTol * scale;

  auto violation = [&](const std::string& what) {
    std::ostringstream os;
    os.precision(17);
    os << "slot " << slot << ": " << what << " (x=" << x0 << ", u=" << u0 << ", z=" << z0 << ", y=" << y0
       << ")";
    throw InvariantViolation(os.str());
  };

  ControlDecision dec = decide(sample.w2, s);

  if (dec.r > 0.0 && x0 > -v_ * cm_.c_min() + tol) violation("recharge chosen with x > -V c_min");
  if (dec.d > 0.0 && x0 < -q_max() - tol) violation("discharge chosen with x < -Q_max");

  dec.r = std::min(dec.r, cfg_.r_max);
  dec.d = std::min(dec.d, cfg_.d_max);
  if (dec.r > 0.0 && y0 + dec.r > cfg_.y_max) {
    if (y0 + dec.r > cfg_.y_max + tol) violation("recharge would overflow the battery");
    dec.r = cfg_.y_max - y0;
  }
  if (dec.d > 0.0 && y0 - dec.d < cfg_.y_min) {
    if (y0 - dec.d < cfg_.y_min - tol) violation("discharge would drain below y_min");
    dec.d = y0 - cfg_.y_min;
    if (dec.delivered() < sample.w2) dec.p = std::min(cm_.p_peak(), dec.p + sample.w2 - dec.delivered());
  }
  dec.gamma = gamma_for(dec.delivered(), sample.w2);
  check_decision(dec, sample, cfg_, cm_.p_peak(), true);

  const double service = std::max(0.0, dec.delivered() - sample.w2);
  const long served_delay = ledger_.serve(slot, service);
  ledger_.push(slot, sample.w1);
  u_ = update_u(u0, service, sample.w1);
  z_ = update_z(z0, service, u0 > 0.0, eps_);
  battery_ = battery_apply(battery_, dec, cfg_);
  max_delay_ = std::max(max_delay_, served_delay);

  const double x1 = x();
  if (u_ > u_max() + tol) violation("U exceeded U_max");
  if (z_ > z_max() + tol) violation("Z exceeded Z_max");
  if (u_ + z_ > q_max() + tol) violation("U + Z exceeded Q_max");
  if (x1 < x_lower() - tol || x1 > x_upper() + tol) violation("shifted queue left its deterministic bounds");
  if (std::abs(ledger_.backlog() - u_) > tol) violation("job ledger out of step with U");
  if (delta_max_) {
    if (served_delay > *delta_max_) violation("served job exceeded the worst-case delay");
    if (auto oldest = ledger_.oldest_arrival(); oldest && slot >= *oldest + static_cast<std::size_t>(*delta_max_))
      violation("pending job is past the worst-case delay");
  }

  // One-slot drift of (U^2 + Z^2 + X^2)/2 against its decision-dependent bound.
  const double drift = (u_ * u_ - u0 * u0 + z_ * z_ - z0 * z0 + x1 * x1 - x0 * x0) / 2.0;
  const double bound = b_ext() - (u0 + z0) * dec.p + (u0 + z0) * sample.w2 + u0 * sample.w1 +
                       (u0 > 0.0 ? z0 * eps_ : 0.0) - (x0 + u0 + z0) * (dec.d - dec.r);
  if (drift > bound + kFeasTol * std::max(1.0, scale * scale)) violation("per-slot drift exceeds its bound");

  SlotRecord rec;
  rec.slot = slot;
  rec.sample = sample;
  rec.aux = s;
  rec.price = cm_.price(s, dec.p);
  rec.decision = dec;
  rec.cost = slot_cost(dec, cm_, s, cfg_);
  rec.y_before = y0;
  rec.y_after = battery_.y;
  rec.x = x0;
  rec.u = u0;
  rec.z = z0;
  rec.max_delay = max_delay_;
  return rec;
}

}  // namespace upscost
