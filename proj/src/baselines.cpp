#include "upscost/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace upscost {

namespace {

double gamma_share(const WorkloadSample& sample) {
  const double w = sample.total();
  return w > 0.0 ? sample.w1 / w : 0.0;
}

SlotRecord make_record(std::size_t slot, const WorkloadSample& sample, std::size_t s, const ControlDecision& dec,
                       double y_before, double y_after, const BatteryConfig& cfg, const CostModel& cm) {
  SlotRecord rec;
  rec.slot = slot;
  rec.sample = sample;
  rec.aux = s;
  rec.price = cm.price(s, dec.p);
  rec.decision = dec;
  rec.cost = slot_cost(dec, cm, s, cfg);
  rec.y_before = y_before;
  rec.y_after = y_after;
  return rec;
}

bool divides(double step, double value) {
  const double n = value / step;
  return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, std::abs(n));
}

}  // namespace

ControlDecision no_battery_policy(const WorkloadSample& sample, std::size_t /*s*/, const CostModel& cm) {
  const double w = sample.total();
  if (w > cm.p_peak() + kFeasTol) throw ConfigError("no-battery policy: workload exceeds p_peak");
  ControlDecision dec;
  dec.p = w;
  dec.gamma = gamma_share(sample);
  return dec;
}

void ThresholdPolicyConfig::validate() const {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) throw ConfigError("threshold must be positive");
}

ControlDecision threshold_policy(const ThresholdPolicyConfig& tcfg, double y, const WorkloadSample& sample,
                                 double price, const BatteryConfig& cfg, double p_peak) {
  const double w = sample.total();
  ControlDecision dec;
  dec.p = w;
  dec.gamma = gamma_share(sample);
  if (price < tcfg.threshold) {
    dec.r = std::max(0.0, std::min({cfg.r_max, cfg.y_max - y, p_peak - w}));
  } else if (price > tcfg.threshold) {
    dec.d = std::max(0.0, std::min({cfg.d_max, y - cfg.y_min, w}));
  }
  dec.p = w + dec.r - dec.d;
  return dec;
}

std::vector<SlotRecord> run_no_battery(const Trace& trace, const CostModel& cm) {
  const BatteryConfig none = BatteryConfig::none();
  std::vector<SlotRecord> out;
  out.reserve(trace.size());
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto dec = no_battery_policy(trace.samples[t], trace.aux[t], cm);
    out.push_back(make_record(t, trace.samples[t], trace.aux[t], dec, 0.0, 0.0, none, cm));
  }
  return out;
}

std::vector<SlotRecord> run_threshold(const ThresholdPolicyConfig& tcfg, const Trace& trace,
                                      const BatteryConfig& cfg, const CostModel& cm) {
  tcfg.validate();
  cfg.validate_physical();
  std::vector<SlotRecord> out;
  out.reserve(trace.size());
  BatteryState state{cfg.y_init};
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const std::size_t s = trace.aux[t];
    const auto& sample = trace.samples[t];
    const auto dec = threshold_policy(tcfg, state.y, sample, cm.price(s, sample.total()), cfg, cm.p_peak());
    check_decision(dec, sample, cfg, cm.p_peak(), false);
    const double y0 = state.y;
    state = battery_apply(state, dec, cfg);
    out.push_back(make_record(t, sample, s, dec, y0, state.y, cfg, cm));
  }
  return out;
}

SchemeCParams scheme_c_params(double v, const CostModel& cm, const WorkloadLimits& limits, long delta_target) {
  if (!(v > 0.0)) throw ConfigError("scheme C: V must be positive");
  if (delta_target < 2) throw ConfigError("scheme C: delay target must be at least 2 slots");
  // ceil((2 V chi + w1_max + eps) / eps) <= delta  <=>  eps >= (2 V chi + w1_max) / (delta - 1)
  SchemeCParams out;
  out.v = v;
  out.eps = (2.0 * v * cm.chi_min() + limits.w1_max) / static_cast<double>(delta_target - 1);
  if (out.eps > limits.w_max - limits.w2_max + kFeasTol)
    throw ConfigError("scheme C: matching the delay target needs eps > w_max - w2_max");
  out.eps = std::min(out.eps, limits.w_max - limits.w2_max);
  out.delta_max = delay_bound(v * cm.chi_min() + limits.w1_max, v * cm.chi_min() + out.eps, out.eps);
  return out;
}

ExtendedController make_scheme_c(const CostModel& cm, const WorkloadLimits& limits, double v, long delta_target) {
  const auto params = scheme_c_params(v, cm, limits, delta_target);
  return ExtendedController(BatteryConfig::none(), cm, limits, params.v, params.eps);
}

void OracleConfig::validate(const BatteryConfig& cfg) const {
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("oracle: step must be positive");
  if (!divides(step, cfg.r_max) || !divides(step, cfg.d_max) || !divides(step, cfg.span()) ||
      !divides(step, cfg.y_init - cfg.y_min))
    throw ConfigError("oracle: step must divide r_max, d_max, y_max - y_min and y_init - y_min");
}

OracleResult offline_oracle(const OracleConfig& ocfg, const BatteryConfig& cfg, const CostModel& cm,
                            const Trace& trace) {
  cfg.validate_physical();
  ocfg.validate(cfg);
  if (trace.size() == 0) throw ConfigError("oracle: empty trace");
  const double h = ocfg.step;
  const auto levels = static_cast<long>(std::llround(cfg.span() / h)) + 1;
  const auto up = static_cast<long>(std::llround(cfg.r_max / h));
  const auto down = static_cast<long>(std::llround(cfg.d_max / h));
  const auto k0 = static_cast<long>(std::llround((cfg.y_init - cfg.y_min) / h));
  if (up > std::numeric_limits<std::int16_t>::max() || down > std::numeric_limits<std::int16_t>::max())
    throw ConfigError("oracle: too many charge moves per slot");
  const std::size_t n = trace.size();
  if (static_cast<double>(levels) * static_cast<double>(up + down + 1) > 1e6)
    throw ConfigError("oracle: discretization too fine");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> next(static_cast<std::size_t>(levels), 0.0), cur(static_cast<std::size_t>(levels));
  std::vector<std::int16_t> choice(ocfg.keep_path ? n * static_cast<std::size_t>(levels) : 0, 0);

  // Cost of each move j in slot t does not depend on the level, only its feasibility does.
  std::vector<double> move_cost(static_cast<std::size_t>(up + down + 1));
  const double p_tol = kFeasTol * std::max(1.0, cm.p_peak());

  for (std::size_t t = n; t-- > 0;) {
    const double w = trace.samples[t].total();
    const std::size_t s = trace.aux[t];
    for (long j = -down; j <= up; ++j) {
      ControlDecision dec;
      if (j > 0) dec.r = static_cast<double>(j) * h;
      if (j < 0) dec.d = static_cast<double>(-j) * h;
      double p = w + dec.r - dec.d;
      if (p < -p_tol || p > cm.p_peak() + p_tol) {
        move_cost[static_cast<std::size_t>(j + down)] = kInf;
        continue;
      }
      dec.p = std::clamp(p, 0.0, cm.p_peak());
      move_cost[static_cast<std::size_t>(j + down)] = slot_cost(dec, cm, s, cfg);
    }
    for (long k = 0; k < levels; ++k) {
      double best = move_cost[static_cast<std::size_t>(down)] + next[static_cast<std::size_t>(k)];
      long best_j = 0;
      const long lo = std::max(-down, -k), hi = std::min(up, levels - 1 - k);
      for (long j = lo; j <= hi; ++j) {
        if (j == 0) continue;
        const double c = move_cost[static_cast<std::size_t>(j + down)] + next[static_cast<std::size_t>(k + j)];
        if (c < best - 1e-12 * std::max(1.0, std::abs(best))) {
          best = c;
          best_j = j;
        }
      }
      cur[static_cast<std::size_t>(k)] = best;
      if (ocfg.keep_path)
        choice[t * static_cast<std::size_t>(levels) + static_cast<std::size_t>(k)] = static_cast<std::int16_t>(best_j);
    }
    std::swap(cur, next);
  }
  if (!std::isfinite(next[static_cast<std::size_t>(k0)])) throw ConfigError("oracle: no feasible trajectory");

  OracleResult out;
  if (!ocfg.keep_path) {
    out.total_cost = next[static_cast<std::size_t>(k0)];
    out.avg_cost = out.total_cost / static_cast<double>(n);
    return out;
  }
  out.decisions.reserve(n);
  out.records.reserve(n);
  long k = k0;
  for (std::size_t t = 0; t < n; ++t) {
    const long j = choice[t * static_cast<std::size_t>(levels) + static_cast<std::size_t>(k)];
    const auto& sample = trace.samples[t];
    ControlDecision dec;
    if (j > 0) dec.r = static_cast<double>(j) * h;
    if (j < 0) dec.d = static_cast<double>(-j) * h;
    dec.p = std::clamp(sample.total() + dec.r - dec.d, 0.0, cm.p_peak());
    dec.gamma = gamma_share(sample);
    const double y0 = cfg.y_min + static_cast<double>(k) * h;
    k += j;
    const double y1 = cfg.y_min + static_cast<double>(k) * h;
    out.decisions.push_back(dec);
    out.records.push_back(make_record(t, sample, trace.aux[t], dec, y0, y1, cfg, cm));
    out.total_cost += out.records.back().cost;
  }
  out.avg_cost = out.total_cost / static_cast<double>(n);
  return out;
}

}  // namespace upscost
