#include "upscost/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace upscost {

namespace {

std::string describe(const ControlDecision& d) {
  std::ostringstream os;
  os.precision(17);
  os << "(p=" << d.p << ", r=" << d.r << ", d=" << d.d << ", gamma=" << d.gamma << ")";
  return os.str();
}

double scaled_tol(double magnitude) { return kFeasTol * std::max(1.0, std::abs(magnitude)); }

}  // namespace

void WorkloadLimits::validate(bool extended) const {
  if (!(w_max > 0.0)) throw ConfigError("workload limits: w_max must be positive");
  if (w1_max < 0.0 || w2_max < 0.0) throw ConfigError("workload limits: negative component bound");
  if (extended) {
    if (!(w1_max > 0.0) || !(w2_max > 0.0))
      throw ConfigError("workload limits: w1_max and w2_max must be positive");
    if (!(w1_max < w_max) || !(w2_max < w_max))
      throw ConfigError("workload limits: w1_max and w2_max must be below w_max");
  }
}

bool WorkloadLimits::admits(const WorkloadSample& s) const {
  const double tol = scaled_tol(w_max);
  return s.w1 >= 0.0 && s.w2 >= 0.0 && s.total() <= w_max + tol && s.w1 <= w1_max + tol &&
         s.w2 <= w2_max + tol;
}

BatteryConfig BatteryConfig::none() { return BatteryConfig{}; }

void BatteryConfig::validate() const {
  validate_physical();
  if (is_degenerate()) return;
  if (!(y_max - y_min > r_max + d_max))
    throw ConfigError("battery: require y_max - y_min > r_max + d_max");
}

void BatteryConfig::validate_physical() const {
  if (c_rc < 0.0 || c_dc < 0.0) throw ConfigError("battery: operation costs must be non-negative");
  if (y_min < 0.0) throw ConfigError("battery: y_min must be non-negative");
  if (!(y_min <= y_init && y_init <= y_max))
    throw ConfigError("battery: require y_min <= y_init <= y_max");
  if (is_degenerate()) return;
  if (!(r_max > 0.0) || !(d_max > 0.0)) throw ConfigError("battery: r_max and d_max must be positive");
}

ControlDecision decision_from_draw(double p, double w) {
  ControlDecision out;
  out.p = p;
  if (p > w) out.r = p - w;
  if (p < w) out.d = w - p;
  return out;
}

// ---------------------------------------------------------------------------
// CostModel

CostModel CostModel::flat(std::vector<double> state_prices, double p_peak) {
  if (state_prices.empty()) throw ConfigError("cost model: no price states");
  CostModel cm;
  cm.kind_ = Kind::flat;
  cm.p_peak_ = p_peak;
  for (double c : state_prices) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("cost model: prices must be finite and >= 0");
    cm.curves_.push_back({[c](double) { return c; }, [](double) { return 0.0; }});
  }
  cm.flat_prices_ = std::move(state_prices);
  cm.finish(std::nullopt);
  return cm;
}

CostModel CostModel::convex(std::vector<PriceCurve> curves, double p_peak) {
  if (curves.empty()) throw ConfigError("cost model: no price states");
  for (const auto& c : curves)
    if (!c.price) throw ConfigError("cost model: missing price function");
  CostModel cm;
  cm.kind_ = Kind::convex;
  cm.p_peak_ = p_peak;
  cm.curves_ = std::move(curves);
  cm.finish(std::nullopt);
  return cm;
}

CostModel CostModel::quadratic(std::vector<std::array<double, 3>> coeffs, double p_peak) {
  std::vector<PriceCurve> curves;
  for (const auto& k : coeffs) {
    if (k[0] < 0.0 || k[1] < 0.0 || k[2] < 0.0)
      throw ConfigError("cost model: quadratic coefficients must be non-negative");
    const double a = k[0], b = k[1], c = k[2];
    curves.push_back({[a, b, c](double p) { return a + (b + c * p) * p; },
                      [b, c](double p) { return b + 2.0 * c * p; }});
  }
  return convex(std::move(curves), p_peak);
}

CostModel CostModel::generic(std::vector<std::function<double(double)>> curves, double p_peak,
                             double chi_min) {
  if (curves.empty()) throw ConfigError("cost model: no price states");
  CostModel cm;
  cm.kind_ = Kind::generic;
  cm.p_peak_ = p_peak;
  for (auto& f : curves) {
    if (!f) throw ConfigError("cost model: missing price function");
    cm.curves_.push_back({std::move(f), {}});
  }
  cm.finish(chi_min);
  return cm;
}

void CostModel::finish(std::optional<double> supplied_chi) {
  if (!(p_peak_ > 0.0)) throw ConfigError("cost model: p_peak must be positive");
  c_min_ = std::numeric_limits<double>::infinity();
  c_max_ = -std::numeric_limits<double>::infinity();
  constexpr std::size_t kProbe = 64;
  for (std::size_t s = 0; s < curves_.size(); ++s) {
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kProbe; ++i) {
      const double p = p_peak_ * static_cast<double>(i) / static_cast<double>(kProbe - 1);
      const double c = curves_[s].price(p);
      if (!(c >= 0.0) || !std::isfinite(c))
        throw ConfigError("cost model: unit price must be finite and non-negative");
      if (c < prev - scaled_tol(prev)) throw ConfigError("cost model: unit price must be non-decreasing in p");
      prev = c;
      c_min_ = std::min(c_min_, c);
      c_max_ = std::max(c_max_, c);
    }
  }
  if (supplied_chi) {
    chi_min_ = *supplied_chi;
    if (!(chi_min_ > c_min_)) throw ConfigError("degenerate cost model: chi_min must exceed c_min");
    const double worst = chi_condition_violation(*this, chi_min_);
    if (worst > scaled_tol(chi_min_ * p_peak_))
      throw ConfigError("cost model: supplied chi_min does not satisfy the chi condition");
  } else {
    chi_min_ = compute_chi_min(*this);
  }
}

double CostModel::price(std::size_t s, double p) const {
  if (kind_ == Kind::flat) return flat_prices_.at(s);
  return curves_.at(s).price(p);
}

bool CostModel::has_slope() const {
  return std::all_of(curves_.begin(), curves_.end(), [](const PriceCurve& c) { return bool(c.slope); });
}

std::optional<double> CostModel::slope(std::size_t s, double p) const {
  const auto& c = curves_.at(s);
  if (!c.slope) return std::nullopt;
  return c.slope(p);
}

double CostModel::flat_price(std::size_t s) const {
  if (kind_ != Kind::flat) throw Error("flat_price on a non-flat cost model");
  return flat_prices_.at(s);
}

double compute_chi_min(const CostModel& cm) {
  double chi = 0.0;
  switch (cm.kind()) {
    case CostModel::Kind::flat:
      chi = cm.c_max();
      break;
    case CostModel::Kind::convex: {
      const double pk = cm.p_peak();
      chi = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < cm.num_states(); ++s) {
        double slope;
        if (auto sl = cm.slope(s, pk)) {
          slope = *sl;
        } else {
          // Forward difference overestimates the slope of a convex curve,
          // which keeps the result on the safe side of the chi condition.
          const double h = 1e-6 * std::max(1.0, pk);
          slope = (cm.price(s, pk + h) - cm.price(s, pk)) / h;
        }
        chi = std::max(chi, cm.price(s, pk) + pk * slope);
      }
      break;
    }
    case CostModel::Kind::generic:
      throw ConfigError("generic cost model requires a caller-supplied chi_min");
  }
  if (!(chi > cm.c_min())) throw ConfigError("degenerate cost model: unit cost is fixed");
  return chi;
}

double chi_condition_violation(const CostModel& cm, double chi, std::size_t n) {
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> g(n);
  for (std::size_t s = 0; s < cm.num_states(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = cm.p_peak() * static_cast<double>(i) / static_cast<double>(n - 1);
      g[i] = p * (cm.price(s, p) - chi);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) worst = std::max(worst, g[j] - g[i]);
  }
  return worst;
}

// ---------------------------------------------------------------------------

BatteryState battery_apply(BatteryState state, const ControlDecision& decision,
                           const BatteryConfig& cfg) {
  if (decision.r < 0.0 || decision.d < 0.0 || (decision.r > 0.0 && decision.d > 0.0))
    throw InfeasibleDecision("infeasible decision: bad recharge/discharge pair " + describe(decision));
  if (decision.r > cfg.r_max || decision.d > cfg.d_max)
    throw InfeasibleDecision("infeasible decision: rate cap exceeded " + describe(decision));
  if (state.y - decision.d < cfg.y_min || state.y + decision.r > cfg.y_max)
    throw InfeasibleDecision("infeasible decision: battery bound violated " + describe(decision));
  const double next = state.y - decision.d + decision.r;
  if (next < cfg.y_min || next > cfg.y_max)
    throw InfeasibleDecision("infeasible decision: battery bound violated " + describe(decision));
  return BatteryState{next};
}

double slot_cost(const ControlDecision& decision, const CostModel& cm, std::size_t s,
                 const BatteryConfig& cfg) {
  double cost = decision.p * cm.price(s, decision.p);
  if (decision.ind_r()) cost += cfg.c_rc;
  if (decision.ind_d()) cost += cfg.c_dc;
  return cost;
}

void check_decision(const ControlDecision& d, const WorkloadSample& sample,
                    const BatteryConfig& cfg, double p_peak, bool extended) {
  const double tol = scaled_tol(p_peak + cfg.d_max);
  auto fail = [&](const char* what) {
    throw InfeasibleDecision(std::string("infeasible decision: ") + what + " " + describe(d));
  };
  if (d.r < 0.0 || d.d < 0.0 || d.p < -tol) fail("negative quantity");
  if (d.r > 0.0 && d.d > 0.0) fail("simultaneous recharge and discharge");
  if (d.r > cfg.r_max + tol || d.d > cfg.d_max + tol) fail("rate cap exceeded");
  if (d.p > p_peak + tol) fail("grid draw above p_peak");
  if (d.gamma < 0.0 || d.gamma > 1.0) fail("gamma outside [0, 1]");
  if (extended) {
    if (std::abs((1.0 - d.gamma) * d.delivered() - sample.w2) > tol) fail("intolerant workload not met");
  } else {
    if (std::abs(d.delivered() - sample.total()) > tol) fail("workload balance broken");
  }
}

RunSummary time_average_metrics(std::span<const SlotRecord> records, double slot_minutes) {
  if (records.empty()) throw ConfigError("time_average_metrics: empty record sequence");
  RunSummary out;
  out.slots = records.size();
  out.slot_minutes = slot_minutes;
  double sum_r = 0.0, sum_d = 0.0, sum_y = 0.0, sum_u = 0.0;
  for (const auto& rec : records) {
    out.total_cost += rec.cost;
    sum_r += rec.decision.r;
    sum_d += rec.decision.d;
    sum_y += rec.y_before;
    sum_u += rec.u;
    out.max_y = std::max({out.max_y, rec.y_before, rec.y_after});
    out.max_u = std::max(out.max_u, rec.u);
    out.max_z = std::max(out.max_z, rec.z);
    out.max_abs_x = std::max(out.max_abs_x, std::abs(rec.x));
    out.max_delay = std::max(out.max_delay, rec.max_delay);
  }
  const double n = static_cast<double>(records.size());
  out.avg_cost = out.total_cost / n;
  out.avg_cost_per_hour = out.avg_cost * 60.0 / slot_minutes;
  out.r_bar = sum_r / n;
  out.d_bar = sum_d / n;
  out.avg_y = sum_y / n;
  out.u_bar = sum_u / n;
  out.y_init = records.front().y_before;
  out.y_final = records.back().y_after;
  return out;
}

}  // namespace upscost
