#include "upscost/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rng.hpp"
#include "upscost/baselines.hpp"
#include "upscost/basic_controller.hpp"
#include "upscost/extended_controller.hpp"
#include "upscost/traces.hpp"

namespace upscost {

using detail::Rng;

bool ValidationReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed(); });
}

namespace {

constexpr double kObjTol = 1e-9;

class Recorder {
 public:
  Recorder(std::string name, std::size_t max_messages)
      : max_(max_messages), start_(std::chrono::steady_clock::now()) {
    res_.name = std::move(name);
  }
  void pass() { ++res_.cases; }
  void fail(const std::string& msg) {
    ++res_.cases;
    ++res_.failures;
    if (res_.messages.size() < max_) res_.messages.push_back(msg);
  }
  void check(bool ok, const std::string& msg) { ok ? pass() : fail(msg); }
  SuiteResult finish() {
    res_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return res_;
  }

 private:
  std::size_t max_;
  std::chrono::steady_clock::time_point start_;
  SuiteResult res_;
};

bool close(double a, double b) { return std::abs(a - b) <= kObjTol * std::max({1.0, std::abs(a), std::abs(b)}); }

std::string fmt(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [k, v] : kv) {
    os << (first ? "" : " ") << k << '=' << v;
    first = false;
  }
  return os.str();
}

// Occasionally returns an edge value so boundaries get exercised.
double draw(Rng& rng, double lo, double hi) {
  const double u = rng.unit();
  if (u < 0.05) return lo;
  if (u < 0.10) return hi;
  return rng.uniform(lo, hi);
}

double fixed_cost(Rng& rng) { return rng.unit() < 0.25 ? 0.0 : rng.uniform(0.0, 10.0); }

std::vector<double> distinct_prices(Rng& rng, std::size_t k, double lo, double hi) {
  std::vector<double> p(k);
  for (auto& v : p) v = rng.uniform(lo, hi);
  p[0] = lo;
  p[k - 1] = hi;
  return p;
}

BatteryConfig random_rates(Rng& rng) {
  BatteryConfig b;
  b.r_max = rng.uniform(0.5, 20.0);
  b.d_max = rng.unit() < 0.2 ? b.r_max : rng.uniform(0.5, 20.0);
  b.c_rc = fixed_cost(rng);
  b.c_dc = fixed_cost(rng);
  b.y_max = 1e6;
  return b;
}

// Target with a prescribed sign: -1, 0 or +1.
double signed_value(Rng& rng, int sign, double scale) {
  if (sign == 0) return 0.0;
  const double mag = rng.unit() < 0.1 ? 1e-6 * scale : rng.uniform(0.0, scale);
  return sign * std::max(mag, 1e-9);
}

}  // namespace

SuiteResult p3_flat_suite(const ValidationOptions& opts) {
  Recorder rec("p3 flat closed form vs grid", opts.max_messages);
  const P3FlatSolver solver = opts.p3_flat ? opts.p3_flat : P3FlatSolver(solve_p3_flat);
  Rng rng(opts.seed ^ 0x13);
  for (std::size_t i = 0; i < opts.n_random_states; ++i) {
    const BatteryConfig b = random_rates(rng);
    const double w_max = rng.uniform(1.0, 100.0);
    const double p_peak = w_max + std::max(b.r_max, b.d_max) + (rng.unit() < 0.5 ? 0.0 : rng.uniform(0.0, 10.0));
    const auto prices = distinct_prices(rng, 3, rng.uniform(0.1, 10.0), rng.uniform(10.5, 100.0));
    const CostModel cm = CostModel::flat(prices, p_peak);
    const std::size_t s = rng.pick(prices.size());
    const double v = rng.uniform(0.01, 20.0);
    const double w = draw(rng, 0.0, w_max);
    const int sign = static_cast<int>(i % 3) - 1;
    const double x = signed_value(rng, sign, 500.0) - v * prices[s];

    const auto mine = solver(x, v, w, prices[s], b, p_peak);
    const auto ref = solve_p3_grid(x, v, w, s, b, cm);
    const double a = p3_objective(mine.p, x, v, w, s, b, cm);
    const double g = p3_objective(ref.p, x, v, w, s, b, cm);
    const auto state = fmt({{"x", x}, {"v", v}, {"w", w}, {"price", prices[s]}, {"r_max", b.r_max},
                            {"d_max", b.d_max}, {"c_rc", b.c_rc}, {"c_dc", b.c_dc}, {"p_peak", p_peak}});
    try {
      check_decision(mine, {0.0, w}, b, p_peak, false);
    } catch (const InfeasibleDecision& e) {
      rec.fail(std::string("infeasible: ") + e.what() + " at " + state);
      continue;
    }
    if (!close(a, g)) {
      rec.fail("objective " + fmt({{"closed", a}, {"grid", g}}) + " at " + state);
      continue;
    }
    const double tol = kFeasTol * std::max(1.0, std::abs(x));
    if (mine.r > 0.0 && x > -v * cm.c_min() + tol) {
      rec.fail("recharge with x > -V c_min at " + state);
      continue;
    }
    if (mine.d > 0.0 && x < -v * cm.chi_min() - tol) {
      rec.fail("discharge with x < -V chi_min at " + state);
      continue;
    }
    rec.pass();
  }
  return rec.finish();
}

SuiteResult p3_convex_suite(const ValidationOptions& opts) {
  Recorder rec("p3 convex closed form vs grid", opts.max_messages);
  Rng rng(opts.seed ^ 0x23);
  for (std::size_t i = 0; i < opts.n_random_states; ++i) {
    const BatteryConfig b = random_rates(rng);
    const double w_max = rng.uniform(1.0, 60.0);
    const double p_peak = w_max + std::max(b.r_max, b.d_max);
    std::vector<std::array<double, 3>> coeffs(2);
    for (auto& c : coeffs) c = {rng.uniform(0.0, 30.0), rng.uniform(0.0, 3.0), rng.uniform(0.0, 0.3)};
    coeffs[1][2] = std::max(coeffs[1][2], 0.01);
    const CostModel cm = CostModel::quadratic(coeffs, p_peak);
    const std::size_t s = rng.pick(coeffs.size());
    const double v = rng.uniform(0.01, 10.0);
    const double w = draw(rng, 0.0, w_max);
    const int sign = static_cast<int>(i % 3) - 1;
    const double x = signed_value(rng, sign, 500.0) - v * cm.price(s, w);

    const auto mine = solve_p3_convex(x, v, w, s, b, cm);
    const auto ref = solve_p3_grid(x, v, w, s, b, cm, {4096, true});
    const double a = p3_objective(mine.p, x, v, w, s, b, cm);
    const double g = p3_objective(ref.p, x, v, w, s, b, cm);
    const auto state = fmt({{"x", x}, {"v", v}, {"w", w}, {"a", coeffs[s][0]}, {"b", coeffs[s][1]},
                            {"c", coeffs[s][2]}, {"r_max", b.r_max}, {"d_max", b.d_max}, {"c_rc", b.c_rc},
                            {"c_dc", b.c_dc}, {"p_peak", p_peak}});
    try {
      check_decision(mine, {0.0, w}, b, p_peak, false);
    } catch (const InfeasibleDecision& e) {
      rec.fail(std::string("infeasible: ") + e.what() + " at " + state);
      continue;
    }
    rec.check(close(a, g), "objective " + fmt({{"closed", a}, {"grid", g}}) + " at " + state);
  }
  return rec.finish();
}

SuiteResult p3_flat_slope_suite(const ValidationOptions& opts) {
  Recorder rec("p3 convex solver on constant prices vs flat", opts.max_messages);
  Rng rng(opts.seed ^ 0x33);
  const std::size_t n = std::min<std::size_t>(opts.n_random_states, 1000);
  for (std::size_t i = 0; i < n; ++i) {
    const BatteryConfig b = random_rates(rng);
    const double w_max = rng.uniform(1.0, 60.0);
    const double p_peak = w_max + std::max(b.r_max, b.d_max);
    const std::vector<double> prices{rng.uniform(0.1, 10.0), rng.uniform(10.5, 100.0)};
    const CostModel cm = CostModel::quadratic({{prices[0], 0.0, 0.0}, {prices[1], 0.0, 0.0}}, p_peak);
    const std::size_t s = rng.pick(2);
    const double v = rng.uniform(0.01, 10.0);
    const double w = draw(rng, 0.0, w_max);
    const double x = signed_value(rng, static_cast<int>(i % 3) - 1, 500.0) - v * prices[s];
    const auto flat = solve_p3_flat(x, v, w, prices[s], b, p_peak);
    const auto conv = solve_p3_convex(x, v, w, s, b, cm);
    const double a = p3_objective(flat.p, x, v, w, s, b, cm);
    const double c = p3_objective(conv.p, x, v, w, s, b, cm);
    rec.check(close(a, c), "objective " + fmt({{"flat", a}, {"convex", c}, {"x", x}, {"v", v}, {"w", w},
                                                {"price", prices[s]}}));
  }
  return rec.finish();
}

SuiteResult p6_flat_suite(const ValidationOptions& opts) {
  Recorder rec("p6 flat closed form vs grid", opts.max_messages);
  Rng rng(opts.seed ^ 0x43);
  for (std::size_t i = 0; i < opts.n_random_states; ++i) {
    BatteryConfig b = random_rates(rng);
    if (rng.unit() < 0.05) b = BatteryConfig::none();
    const double w_max = rng.uniform(1.0, 60.0);
    const double w2_max = rng.uniform(0.2, 0.9) * w_max;
    const double p_peak = w_max + std::max(b.r_max, b.d_max);
    const auto prices = distinct_prices(rng, 3, rng.uniform(0.1, 10.0), rng.uniform(10.5, 100.0));
    const CostModel cm = CostModel::flat(prices, p_peak);
    const std::size_t s = rng.pick(prices.size());
    const double v = rng.uniform(0.01, 10.0);
    const double w2 = draw(rng, 0.0, w2_max);

    // Cycle through every sign pair of (Q1, Q2), zeros included.
    const int s1 = static_cast<int>(i % 3) - 1;
    const int s2 = static_cast<int>((i / 3) % 3) - 1;
    const double q1 = signed_value(rng, s1, 200.0);
    const double uz = std::max(0.0, q1 + v * prices[s]);
    const double q1_used = uz - v * prices[s];
    const double split = rng.unit() < 0.1 ? 0.0 : rng.unit();
    QueueState q{0.0, uz * split, uz * (1.0 - split), v};
    q.x = signed_value(rng, s2, 300.0) - uz;

    const auto mine = solve_p6_flat(q, w2, prices[s], b, p_peak);
    const auto ref = solve_p6_grid(q, w2, s, b, cm, {1000, 8});
    const double a = p6_objective(mine, q, s, b, cm);
    const double g = p6_objective(ref, q, s, b, cm);
    const auto state = fmt({{"x", q.x}, {"u", q.u}, {"z", q.z}, {"v", v}, {"q1", q1_used}, {"q2", q.x + uz},
                            {"w2", w2}, {"price", prices[s]}, {"r_max", b.r_max}, {"d_max", b.d_max},
                            {"c_rc", b.c_rc}, {"c_dc", b.c_dc}, {"p_peak", p_peak}});
    try {
      check_decision(mine, {0.0, w2}, b, p_peak, true);
    } catch (const InfeasibleDecision& e) {
      rec.fail(std::string("infeasible: ") + e.what() + " at " + state);
      continue;
    }
    // Maximization: the grid can only lose to the closed form, never beat it.
    rec.check(close(a, g), "objective " + fmt({{"closed", a}, {"grid", g}}) + " at " + state);
  }
  return rec.finish();
}

namespace {

struct RandomRun {
  BatteryConfig battery;
  CostModel cm;
  WorkloadLimits limits;
  Trace trace;
};

CostModel random_cost(Rng& rng, double p_peak, bool allow_convex) {
  if (allow_convex && rng.unit() < 0.2) {
    std::vector<std::array<double, 3>> coeffs(1 + rng.pick(3));
    for (auto& c : coeffs) c = {rng.uniform(0.5, 30.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 0.2)};
    coeffs[0][2] = std::max(coeffs[0][2], 0.01);
    return CostModel::quadratic(coeffs, p_peak);
  }
  return CostModel::flat(distinct_prices(rng, 2 + rng.pick(3), rng.uniform(0.1, 10.0), rng.uniform(10.5, 100.0)),
                         p_peak);
}

RandomRun random_run(Rng& rng, std::size_t slots, bool extended, bool allow_convex) {
  BatteryConfig b;
  b.r_max = rng.uniform(0.5, 15.0);
  b.d_max = rng.unit() < 0.2 ? b.r_max : rng.uniform(0.5, 15.0);
  b.c_rc = fixed_cost(rng);
  b.c_dc = fixed_cost(rng);
  b.y_min = rng.unit() < 0.5 ? 0.0 : rng.uniform(0.0, 20.0);

  const double w_max = rng.uniform(2.0, 50.0);
  const double f = extended ? rng.uniform(0.2, 0.8) : 0.0;
  const WorkloadLimits limits{w_max, f * w_max, (1.0 - f) * w_max};
  const double eps = extended ? rng.uniform(0.1, 1.0) * limits.w1_max : 0.0;
  const double need = b.r_max + b.d_max + (extended ? limits.w1_max + eps : 0.0);
  b.y_max = b.y_min + need + rng.uniform(0.5, 150.0);
  b.y_init = rng.unit() < 0.5 ? b.y_min : rng.uniform(b.y_min, b.y_max);

  const double p_peak = w_max + std::max(b.r_max, b.d_max) + (rng.unit() < 0.5 ? 0.0 : rng.uniform(0.0, 5.0));
  RandomRun run{b, random_cost(rng, p_peak, allow_convex), limits, {}};
  auto& tr = run.trace;
  tr.samples.resize(slots);
  tr.aux.resize(slots);
  for (std::size_t t = 0; t < slots; ++t) {
    if (extended) {
      tr.samples[t] = {draw(rng, 0.0, run.limits.w1_max), draw(rng, 0.0, run.limits.w2_max)};
    } else {
      tr.samples[t] = {0.0, draw(rng, 0.0, w_max)};
    }
    tr.aux[t] = rng.pick(run.cm.num_states());
  }
  return run;
}

std::string describe(const RandomRun& run, double v, double eps) {
  const auto& b = run.battery;
  return fmt({{"y_min", b.y_min}, {"y_max", b.y_max}, {"y_init", b.y_init}, {"r_max", b.r_max},
              {"d_max", b.d_max}, {"c_rc", b.c_rc}, {"c_dc", b.c_dc}, {"p_peak", run.cm.p_peak()},
              {"w_max", run.limits.w_max}, {"w1_max", run.limits.w1_max}, {"v", v}, {"eps", eps}});
}

constexpr std::size_t kRunSlots = 1000;

}  // namespace

SuiteResult basic_invariant_suite(const ValidationOptions& opts) {
  Recorder rec("basic controller invariants", opts.max_messages);
  Rng rng(opts.seed ^ 0x53);
  std::size_t done = 0;
  while (done < opts.invariant_slots) {
    const std::size_t slots = std::min(kRunSlots, opts.invariant_slots - done);
    done += slots;
    const RandomRun run = random_run(rng, slots, false, true);
    const auto& b = run.battery;
    const double v = v_max(b, run.cm) * (rng.unit() < 0.3 ? 1.0 : rng.uniform(0.05, 1.0));
    const std::string cfg = describe(run, v, 0.0);
    const double shift = v * run.cm.chi_min() + b.d_max + b.y_min;
    const double lo = -v * run.cm.chi_min() - b.d_max;
    const double hi = b.span() - b.d_max - v * run.cm.chi_min();
    const double big = drift_constant(b);
    BasicController ctl(b, run.cm, v);
    for (std::size_t t = 0; t < slots; ++t) {
      SlotRecord r;
      try {
        r = ctl.step(t, run.trace.samples[t], run.trace.aux[t]);
      } catch (const Error& e) {
        rec.fail(std::string(e.what()) + " with " + cfg);
        break;
      }
      const double tol = kFeasTol * std::max({1.0, b.y_max, std::abs(r.x)});
      const double x1 = r.y_after - shift;
      const double drift = (x1 * x1 - r.x * r.x) / 2.0 + r.x * (r.decision.d - r.decision.r);
      std::string bad;
      if (r.y_after < b.y_min - tol || r.y_after > b.y_max + tol) bad = "battery level out of range";
      else if (std::abs(r.x - (r.y_before - shift)) > tol) bad = "x does not track y";
      else if (x1 < lo - tol || x1 > hi + tol) bad = "x out of its bounds";
      else if (r.decision.r > 0.0 && r.x > -v * run.cm.c_min() + tol) bad = "recharge with x > -V c_min";
      else if (r.decision.d > 0.0 && r.x < -v * run.cm.chi_min() - tol) bad = "discharge with x < -V chi_min";
      else if (drift > big + kFeasTol * std::max(1.0, r.x * r.x)) bad = "drift above B";
      if (!bad.empty()) {
        rec.fail("slot " + std::to_string(t) + ": " + bad + " with " + cfg);
        break;
      }
      rec.pass();
    }
  }
  return rec.finish();
}

SuiteResult extended_invariant_suite(const ValidationOptions& opts) {
  Recorder rec("extended controller invariants", opts.max_messages);
  Rng rng(opts.seed ^ 0x63);
  std::size_t done = 0;
  while (done < opts.invariant_slots) {
    const bool convex = rng.unit() < 0.1;
    const std::size_t slots = std::min(convex ? kRunSlots / 5 : kRunSlots, opts.invariant_slots - done);
    done += slots;
    const RandomRun run = random_run(rng, slots, true, convex);
    const auto& b = run.battery;
    const double eps_hi = run.limits.w_max - run.limits.w2_max;
    const double eps = std::min(eps_hi, b.span() - b.r_max - b.d_max - run.limits.w1_max) * rng.uniform(0.1, 0.99);
    const double v = v_max_ext(b, run.cm, run.limits, eps) * (rng.unit() < 0.3 ? 1.0 : rng.uniform(0.05, 1.0));
    const std::string cfg = describe(run, v, eps);
    const double chi = run.cm.chi_min();
    const double u_max = v * chi + run.limits.w1_max, z_max = v * chi + eps, q_max = u_max + eps;
    const double shift = q_max + b.d_max + b.y_min;
    const double lo = -q_max - b.d_max, hi = b.span() - q_max - b.d_max;
    const long bound = static_cast<long>(std::ceil((u_max + z_max) / eps - 1e-12));
    ExtendedController ctl(b, run.cm, run.limits, v, eps, {1000, 8});
    for (std::size_t t = 0; t < slots; ++t) {
      SlotRecord r;
      try {
        r = ctl.step(t, run.trace.samples[t], run.trace.aux[t]);
      } catch (const Error& e) {
        rec.fail(std::string(e.what()) + " with " + cfg);
        break;
      }
      const double tol = kFeasTol * std::max({1.0, b.y_max, q_max, std::abs(r.x)});
      const double x1 = r.y_after - shift;
      std::string bad;
      if (r.y_after < b.y_min - tol || r.y_after > b.y_max + tol) bad = "battery level out of range";
      else if (std::abs(r.x - (r.y_before - shift)) > tol) bad = "x does not track y";
      else if (x1 < lo - tol || x1 > hi + tol) bad = "x out of its bounds";
      else if (ctl.u() > u_max + tol || ctl.z() > z_max + tol || ctl.u() + ctl.z() > q_max + tol)
        bad = "queue above its bound";
      else if (r.decision.r > 0.0 && r.x > -v * run.cm.c_min() + tol) bad = "recharge with x > -V c_min";
      else if (r.decision.d > 0.0 && r.x < -q_max - tol) bad = "discharge with x < -Q_max";
      else if (r.max_delay > bound) bad = "job delay " + std::to_string(r.max_delay) + " above " + std::to_string(bound);
      else if (std::abs(ctl.ledger().backlog() - ctl.u()) > tol) bad = "ledger differs from U";
      if (!bad.empty()) {
        rec.fail("slot " + std::to_string(t) + ": " + bad + " with " + cfg);
        break;
      }
      rec.pass();
    }
  }
  return rec.finish();
}

SuiteResult worked_examples_suite(const ValidationOptions& opts) {
  Recorder rec("worked examples", opts.max_messages);
  auto guard = [&](const std::string& name, auto&& fn) {
    try {
      rec.check(fn(), name);
    } catch (const std::exception& e) {
      rec.fail(name + ": " + e.what());
    }
  };
  const P3FlatSolver solver = opts.p3_flat ? opts.p3_flat : P3FlatSolver(solve_p3_flat);
  BatteryConfig b;
  b.y_max = 100.0;
  b.r_max = 10.0;
  b.d_max = 10.0;
  b.c_rc = 5.0;
  b.c_dc = 5.0;

  guard("p3 flat: cheap slot with low x recharges fully", [&] {
    const auto d = solver(-40.0, 10.0, 10.0, 2.0, b, 20.0);
    return d.p == 20.0 && d.r == 10.0 && d.d == 0.0;
  });
  guard("p3 flat: dear slot with high x discharges fully", [&] {
    const auto d = solver(-30.0, 10.0, 20.0, 10.0, b, 20.0);
    return d.p == 10.0 && d.d == 10.0 && d.r == 0.0;
  });
  guard("p3 flat: zero workload with x + V c > 0 stays idle", [&] {
    const auto d = solver(5.0, 1.0, 0.0, 3.0, b, 20.0);
    return d.p == 0.0 && d.r == 0.0 && d.d == 0.0;
  });
  guard("p6 flat: discharge beats idle when Q2 D exceeds V C_dc", [&] {
    BatteryConfig e = b;
    e.c_dc = 20.0;
    const QueueState q{-20.0, 25.0, 0.0, 1.0};  // Q1 = 25 - 5 = 20, Q2 = 5
    const auto d = solve_p6_flat(q, 5.0, 5.0, e, 20.0);
    return d.p == 20.0 && d.d == 10.0 && d.r == 0.0;
  });
  guard("p6 flat: empty queues and no work stay idle at p = 0", [&] {
    const QueueState q{-3.0, 0.0, 0.0, 1.0};
    const auto d = solve_p6_flat(q, 0.0, 4.0, b, 20.0);
    return d.p == 0.0 && d.r == 0.0 && d.d == 0.0;
  });
  guard("V_max_ext for the worked battery is 6.25", [&] {
    const CostModel cm = CostModel::flat({2.0, 10.0}, 40.0);
    return std::abs(v_max_ext(b, cm, {40.0, 20.0, 20.0}, 10.0) - 6.25) < 1e-12;
  });
  guard("delay bound rounds up and is exact on multiples", [&] {
    return delay_bound(110.0, 110.0, 10.0) == 22 && delay_bound(110.0, 105.0, 10.0) == 22 &&
           delay_bound(100.0, 100.0, 10.0) == 20;
  });
  guard("queue updates", [&] {
    return update_u(5.0, 3.0, 4.0) == 6.0 && update_u(0.0, 10.0, 0.0) == 0.0 && update_z(5.0, 3.0, true, 2.0) == 4.0 &&
           update_z(5.0, 3.0, false, 2.0) == 2.0 && update_z(0.0, 10.0, false, 2.0) == 0.0;
  });

  // Frame example: fixed trace, known grid-only and offline costs.
  const Trace frame = gen_frame_periodic(5, {10.0, 15.0, 20.0}, {2.0, 6.0, 10.0}, 1000);
  const CostModel fcm = CostModel::flat(frame.state_prices, 20.0);
  BatteryConfig fb = b;
  fb.y_max = 100.0;
  guard("frame example: grid-only cost is 94", [&] {
    double total = 0.0;
    for (const auto& r : run_no_battery(frame, fcm)) total += r.cost;
    return std::abs(total / 1000.0 - 94.0) < 1e-12;
  });
  guard("frame example: offline optimum is 87", [&] {
    return std::abs(offline_oracle({0.5, false}, fb, fcm, frame).avg_cost - 87.0) < 1e-9;
  });
  guard("frame example: dynamic cost within B/V of the optimum", [&] {
    const double v = v_max(fb, fcm);
    BasicController ctl(fb, fcm, v);
    double total = 0.0;
    for (std::size_t t = 0; t < frame.size(); ++t) total += ctl.step(t, frame.samples[t], frame.aux[t]).cost;
    return total / 1000.0 <= 87.0 + drift_constant(fb) / v + 1e-9;
  });
  return rec.finish();
}

ValidationReport run_validation(const ValidationOptions& opts) {
  ValidationReport report;
  report.suites.push_back(worked_examples_suite(opts));
  if (opts.n_random_states == 0) return report;
  report.suites.push_back(p3_flat_suite(opts));
  report.suites.push_back(p3_convex_suite(opts));
  report.suites.push_back(p3_flat_slope_suite(opts));
  report.suites.push_back(p6_flat_suite(opts));
  report.suites.push_back(basic_invariant_suite(opts));
  report.suites.push_back(extended_invariant_suite(opts));
  return report;
}

void write_report(std::ostream& out, const ValidationReport& report) {
  for (const auto& s : report.suites) {
    out << (s.passed() ? "PASS " : "FAIL ") << s.name << ": " << s.cases - s.failures << '/' << s.cases
        << " ok (" << std::fixed << std::setprecision(2) << s.seconds << " s)\n";
    out.unsetf(std::ios::floatfield);
    for (const auto& m : s.messages) out << "    " << m << '\n';
  }
  out << (report.passed() ? "all suites passed" : "validation FAILED") << '\n';
}

}  // namespace upscost
