#include "upscost/basic_controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "numeric.hpp"

namespace upscost {

double v_max(const BatteryConfig& cfg, const CostModel& cm) {
  const double gap = cm.chi_min() - cm.c_min();
  if (!(gap > 0.0)) throw ConfigError("degenerate cost model: chi_min must exceed c_min");
  return (cfg.y_max - cfg.y_min - cfg.r_max - cfg.d_max) / gap;
}

double drift_constant(const BatteryConfig& cfg) {
  return std::max(cfg.r_max * cfg.r_max, cfg.d_max * cfg.d_max) / 2.0;
}

DrawRange draw_range(double w, const BatteryConfig& cfg, double p_peak) {
  return {std::max(0.0, w - cfg.d_max), std::min(p_peak, w + cfg.r_max)};
}

double p3_objective(double p, double x, double v, double w, std::size_t s, const BatteryConfig& cfg,
                    const CostModel& cm) {
  double obj = x * p + v * p * cm.price(s, p);
  if (p > w) obj += v * cfg.c_rc;
  if (p < w) obj += v * cfg.c_dc;
  return obj;
}

ControlDecision solve_p3_flat(double x, double v, double w, double price, const BatteryConfig& cfg,
                              double p_peak) {
  const double a = x + v * price;
  const double theta = w * a;
  const DrawRange range = draw_range(w, cfg, p_peak);
  if (a > 0.0) {
    if (range.low * a + v * cfg.c_dc < theta) return decision_from_draw(range.low, w);
  } else {
    if (range.high * a + v * cfg.c_rc < theta) return decision_from_draw(range.high, w);
  }
  return decision_from_draw(w, w);
}

ControlDecision solve_p3_convex(double x, double v, double w, std::size_t s, const BatteryConfig& cfg,
                                const CostModel& cm) {
  if (!cm.has_slope()) return solve_p3_grid(x, v, w, s, cfg, cm, {.grid_n = 4096, .refine = true});

  const double p_peak = cm.p_peak();
  // Derivative of p (x + v C(p)); non-decreasing because p C(p) is convex.
  auto deriv = [&](double p) { return x + v * cm.price(s, p) + v * p * *cm.slope(s, p); };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  double p_prime;
  const double g0 = deriv(0.0);
  const double gpk = deriv(p_peak);
  if (g0 > 0.0) {
    p_prime = -kInf;
  } else if (gpk < 0.0) {
    p_prime = kInf;
  } else {
    p_prime = detail::bisect_root(deriv, 0.0, p_peak);
  }

  const DrawRange range = draw_range(w, cfg, p_peak);
  const double theta = w * (x + v * cm.price(s, w));
  auto value = [&](double p) { return p * (x + v * cm.price(s, p)); };

  double candidate;
  double fixed;
  if (p_prime >= range.low && p_prime <= w) {
    candidate = p_prime;
    fixed = cfg.c_dc;
  } else if (p_prime > w && p_prime <= range.high) {
    candidate = p_prime;
    fixed = cfg.c_rc;
  } else if (p_prime > range.high) {
    // Minimizer beyond the feasible range: the best draw is the top of the
    // range, which recharges.
    candidate = range.high;
    fixed = cfg.c_rc;
  } else {
    candidate = range.low;
    fixed = cfg.c_dc;
  }
  if (candidate != w && value(candidate) + v * fixed < theta) return decision_from_draw(candidate, w);
  return decision_from_draw(w, w);
}

namespace {

struct Best {
  double p = 0.0;
  double obj = std::numeric_limits<double>::infinity();
  bool found = false;
};

bool better(double obj, double p, const Best& cur, double w) {
  if (!cur.found) return true;
  const double tie = 1e-12 * std::max(1.0, std::abs(cur.obj));
  if (obj < cur.obj - tie) return true;
  if (obj > cur.obj + tie) return false;
  const bool idle = (p == w), cur_idle = (cur.p == w);
  if (idle != cur_idle) return idle;
  return std::abs(p - w) < std::abs(cur.p - w);
}

}  // namespace

ControlDecision solve_p3_grid(double x, double v, double w, std::size_t s, const BatteryConfig& cfg,
                              const CostModel& cm, GridOptions opts) {
  const DrawRange range = draw_range(w, cfg, cm.p_peak());
  const std::size_t n = std::max<std::size_t>(opts.grid_n, 1);
  const double step = n > 1 ? (range.high - range.low) / static_cast<double>(n - 1) : 0.0;

  Best below, above, idle;  // p < w, p > w, p == w
  auto consider = [&](double p) {
    p = std::clamp(p, range.low, range.high);
    const double obj = p3_objective(p, x, v, w, s, cfg, cm);
    Best& slot = p < w ? below : (p > w ? above : idle);
    if (better(obj, p, slot, w)) slot = {p, obj, true};
  };
  if (n > 1)
    for (std::size_t i = 0; i < n; ++i) consider(range.low + step * static_cast<double>(i));
  consider(range.low);
  consider(w);
  consider(range.high);

  if (opts.refine && n > 1) {
    // Within one side of w the fixed charge is constant, so polish the
    // smooth part on the two grid cells around the side's best point.
    auto polish = [&](Best& b, double lo_side, double hi_side, double fixed) {
      if (!b.found) return;
      const double a = std::max(lo_side, b.p - step);
      const double c = std::min(hi_side, b.p + step);
      auto smooth = [&](double p) { return p * (x + v * cm.price(s, p)) + v * fixed; };
      const double p = detail::golden_min(smooth, a, c);
      if (p != w) {
        const double obj = p3_objective(p, x, v, w, s, cfg, cm);
        if (obj < b.obj) b = {p, obj, true};
      }
    };
    polish(below, range.low, w, cfg.c_dc);
    polish(above, w, range.high, cfg.c_rc);
  }

  Best best;
  for (const Best* b : {&idle, &below, &above})
    if (b->found && better(b->obj, b->p, best, w)) best = *b;
  return decision_from_draw(best.p, w);
}

// ---------------------------------------------------------------------------

BasicController::BasicController(const BatteryConfig& cfg, const CostModel& cm, double v)
    : cfg_(cfg), cm_(cm), v_(v) {
  cfg_.validate();
  if (cfg_.is_degenerate()) throw ConfigError("basic controller needs a usable battery");
  const double cap = v_max(cfg_, cm_);
  if (!(v > 0.0)) throw ConfigError("control parameter V must be positive");
  if (v > cap * (1.0 + 1e-12)) throw ConfigError("control parameter V exceeds V_max");
  shift_ = v_ * cm_.chi_min() + cfg_.d_max + cfg_.y_min;
  battery_.y = cfg_.y_init;
}

ControlDecision BasicController::decide(double w, std::size_t s) const {
  const double xv = x();
  switch (cm_.kind()) {
    case CostModel::Kind::flat:
      return solve_p3_flat(xv, v_, w, cm_.flat_price(s), cfg_, cm_.p_peak());
    case CostModel::Kind::convex:
      return solve_p3_convex(xv, v_, w, s, cfg_, cm_);
    case CostModel::Kind::generic:
      break;
  }
  return solve_p3_grid(xv, v_, w, s, cfg_, cm_, {.grid_n = 4096, .refine = true});
}

SlotRecord BasicController::step(std::size_t slot, const WorkloadSample& sample, std::size_t s) {
  const double w = sample.total();
  const double y0 = battery_.y;
  const double x0 = x();
  const double scale = std::max({1.0, std::abs(x0), cfg_.y_max});
  const double tol = kFeasTol * scale;

  auto violation = [&](const std::string& what) {
    std::ostringstream os;
    os.precision(17);
    os << "slot " << slot << ": " << what << " (x=" << x0 << ", y=" << y0 << ", w=" << w << ")";
    throw InvariantViolation(os.str());
  };

  ControlDecision dec = decide(w, s);

  if (dec.r > 0.0 && x0 > -v_ * cm_.c_min() + tol) violation("recharge chosen with x > -V c_min");
  if (dec.d > 0.0 && x0 < -v_ * cm_.chi_min() - tol) violation("discharge chosen with x < -V chi_min");

  if (dec.r > cfg_.r_max) {
    dec.r = cfg_.r_max;
    dec.p = w + dec.r;
  }
  if (dec.d > cfg_.d_max) {
    dec.d = cfg_.d_max;
    dec.p = w - dec.d;
  }
  if (dec.r > 0.0 && y0 + dec.r > cfg_.y_max) {
    if (y0 + dec.r > cfg_.y_max + tol) violation("recharge would overflow the battery");
    dec.r = cfg_.y_max - y0;
    dec.p = w + dec.r;
  }
  if (dec.d > 0.0 && y0 - dec.d < cfg_.y_min) {
    if (y0 - dec.d < cfg_.y_min - tol) violation("discharge would drain below y_min");
    dec.d = y0 - cfg_.y_min;
    dec.p = w - dec.d;
  }
  check_decision(dec, sample, cfg_, cm_.p_peak(), false);
  battery_ = battery_apply(battery_, dec, cfg_);

  const double x1 = x();
  if (x1 < x_lower() - tol || x1 > x_upper() + tol) violation("shifted queue left its deterministic bounds");
  const double drift = (x1 * x1 - x0 * x0) / 2.0 + x0 * (dec.d - dec.r);
  if (drift > b_const() + kFeasTol * std::max(1.0, x0 * x0)) violation("per-slot drift exceeds B");

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
  return rec;
}

}  // namespace upscost
