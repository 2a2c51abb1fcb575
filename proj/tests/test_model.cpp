#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "upscost/model.hpp"

using namespace upscost;

namespace {

BatteryConfig frame_battery(double y_max = 100.0) {
  BatteryConfig b;
  b.y_max = y_max;
  b.r_max = 10.0;
  b.d_max = 10.0;
  b.c_rc = 5.0;
  b.c_dc = 5.0;
  return b;
}

ControlDecision dec(double p, double r, double d, double gamma = 0.0) {
  ControlDecision c;
  c.p = p;
  c.r = r;
  c.d = d;
  c.gamma = gamma;
  return c;
}

}  // namespace

TEST_CASE("battery_apply moves the level by r - d") {
  const auto b = frame_battery();
  CHECK(battery_apply({50.0}, dec(20, 10, 0), b).y == 60.0);
  CHECK(battery_apply({50.0}, dec(15, 0, 0), b).y == 50.0);
  CHECK(battery_apply({50.0}, dec(5, 0, 10), b).y == 40.0);
  CHECK(battery_apply({90.0}, dec(20, 10, 0), b).y == 100.0);
}

TEST_CASE("battery_apply faults instead of clamping") {
  const auto b = frame_battery();
  CHECK_THROWS_AS(battery_apply({0.0}, dec(10, 0, 5), b), InfeasibleDecision);
  CHECK_THROWS_AS(battery_apply({95.0}, dec(20, 10, 0), b), InfeasibleDecision);
  CHECK_THROWS_AS(battery_apply({50.0}, dec(20, 10.5, 0), b), InfeasibleDecision);
  CHECK_THROWS_AS(battery_apply({50.0}, dec(20, 5, 5), b), InfeasibleDecision);
  CHECK_THROWS_AS(battery_apply({50.0}, dec(20, -1, 0), b), InfeasibleDecision);
  CHECK_THROWS_WITH(battery_apply({0.0}, dec(10, 0, 5), b), doctest::Contains("infeasible decision"));
}

TEST_CASE("slot_cost for the frame example's optimal moves") {
  const auto b = frame_battery();
  const auto cm = CostModel::flat({2.0, 6.0, 10.0}, 20.0);
  CHECK(slot_cost(dec(20, 10, 0), cm, 0, b) == doctest::Approx(45.0));
  CHECK(slot_cost(dec(0, 0, 0), cm, 0, b) == 0.0);
  CHECK(slot_cost(dec(10, 0, 10), cm, 2, b) == doctest::Approx(105.0));
  CHECK(slot_cost(dec(15, 0, 0), cm, 1, b) == doctest::Approx(90.0));
}

TEST_CASE("slot_cost is non-decreasing in p") {
  const auto b = frame_battery();
  const auto cm = CostModel::quadratic({{1.0, 0.5, 0.05}, {3.0, 0.0, 0.2}}, 40.0);
  for (std::size_t s = 0; s < 2; ++s) {
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
      const double c = slot_cost(dec(0.1 * i, 0, 0), cm, s, b);
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("chi_min for flat prices is the largest price") {
  std::vector<double> prices;
  for (int p = 50; p <= 100; p += 5) prices.push_back(p);
  const auto cm = CostModel::flat(prices, 10.0);
  CHECK(cm.chi_min() == 100.0);
  CHECK(cm.c_min() == 50.0);
  CHECK(cm.c_max() == 100.0);
  CHECK(chi_condition_violation(cm, cm.chi_min()) <= 1e-9);
}

TEST_CASE("chi_min for C(P) = P^2 with P_peak = 2 is 12") {
  const auto cm = CostModel::quadratic({{0.0, 0.0, 1.0}}, 2.0);
  CHECK(cm.chi_min() == doctest::Approx(12.0));
  CHECK(chi_condition_violation(cm, cm.chi_min()) <= 1e-9);
}

TEST_CASE("chi_min without a derivative uses a safe finite difference") {
  PriceCurve curve{[](double p) { return p * p; }, {}};
  const auto cm = CostModel::convex({curve}, 2.0);
  CHECK(cm.chi_min() >= 12.0);
  CHECK(cm.chi_min() == doctest::Approx(12.0).epsilon(1e-5));
}

TEST_CASE("a constant price is a degenerate cost model") {
  CHECK_THROWS_WITH_AS(CostModel::flat({7.0, 7.0, 7.0}, 10.0), doctest::Contains("degenerate cost model"),
                       ConfigError);
  CHECK_THROWS_AS(CostModel::flat({}, 10.0), ConfigError);
  CHECK_THROWS_AS(CostModel::flat({-1.0, 2.0}, 10.0), ConfigError);
  CHECK_THROWS_AS(CostModel::flat({1.0, 2.0}, 0.0), ConfigError);
}

TEST_CASE("generic cost models need a verified chi_min") {
  // Concave price 1 + sqrt(p) on [0, 4]: d/dp p (C - chi) = 1 + 1.5 sqrt(p) - chi <= 0 iff chi >= 4.
  std::vector<std::function<double(double)>> curves{[](double p) { return 1.0 + std::sqrt(p); }};
  const auto cm = CostModel::generic(curves, 4.0, 4.5);
  CHECK(cm.chi_min() == 4.5);
  CHECK_THROWS_AS(CostModel::generic(curves, 4.0, 2.0), ConfigError);
  CHECK_THROWS_AS(compute_chi_min(cm), ConfigError);
}

TEST_CASE("chi condition on a brute-force grid") {
  // Independent check of p (C(p) - chi) being non-increasing for random quadratics.
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double a = 10 * u(gen), b = 2 * u(gen), c = 0.3 * u(gen) + 0.01, pk = 1.0 + 30 * u(gen);
    const auto cm = CostModel::quadratic({{a, b, c}}, pk);
    const double chi = cm.chi_min();
    CHECK(chi == doctest::Approx(a + 2 * b * pk + 3 * c * pk * pk));
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double p = pk * i / 100.0;
      const double g = p * (a + b * p + c * p * p - chi);
      CHECK(g <= prev + 1e-9 * std::max(1.0, std::abs(prev)));
      prev = g;
    }
  }
}

TEST_CASE("battery config validation") {
  auto b = frame_battery(30.0);
  CHECK_NOTHROW(b.validate());
  b.y_max = 20.0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
  CHECK_NOTHROW(b.validate_physical());
  b = frame_battery();
  b.y_init = 101.0;
  CHECK_THROWS_AS(b.validate_physical(), ConfigError);
  b = frame_battery();
  b.c_rc = -1.0;
  CHECK_THROWS_AS(b.validate_physical(), ConfigError);
  b = frame_battery();
  b.d_max = 0.0;
  CHECK_THROWS_AS(b.validate_physical(), ConfigError);
  b = frame_battery();
  b.y_min = -1.0;
  CHECK_THROWS_AS(b.validate_physical(), ConfigError);
  CHECK_NOTHROW(BatteryConfig::none().validate());
  CHECK(BatteryConfig::none().is_degenerate());
}

TEST_CASE("workload limits") {
  CHECK_NOTHROW((WorkloadLimits{1.5, 0.75, 0.75}.validate(true)));
  CHECK_THROWS_AS((WorkloadLimits{1.5, 1.5, 0.75}.validate(true)), ConfigError);
  CHECK_THROWS_AS((WorkloadLimits{0.0, 0.0, 0.0}.validate(false)), ConfigError);
  CHECK_NOTHROW((WorkloadLimits{20.0, 0.0, 20.0}.validate(false)));
  const WorkloadLimits l{10.0, 4.0, 8.0};
  CHECK(l.admits({4.0, 6.0}));
  CHECK_FALSE(l.admits({4.5, 5.0}));
  CHECK_FALSE(l.admits({3.0, 8.5}));
  CHECK_FALSE(l.admits({-0.1, 1.0}));
}

TEST_CASE("check_decision enforces the per-slot constraints") {
  const auto b = frame_battery();
  const WorkloadSample w{0.0, 15.0};
  CHECK_NOTHROW(check_decision(dec(20, 5, 0), w, b, 20.0, false));
  CHECK_NOTHROW(check_decision(dec(5, 0, 10), w, b, 20.0, false));
  CHECK_THROWS_AS(check_decision(dec(20, 5, 1), w, b, 20.0, false), InfeasibleDecision);
  CHECK_THROWS_AS(check_decision(dec(19, 5, 0), w, b, 20.0, false), InfeasibleDecision);
  CHECK_THROWS_AS(check_decision(dec(26, 11, 0), w, b, 30.0, false), InfeasibleDecision);
  CHECK_THROWS_AS(check_decision(dec(25, 10, 0), w, b, 20.0, false), InfeasibleDecision);

  // Extended balance: (1 - gamma)(p - r + d) = w2.
  const WorkloadSample w2{5.0, 10.0};
  CHECK_NOTHROW(check_decision(dec(20, 0, 0, 0.5), w2, b, 20.0, true));
  CHECK_THROWS_AS(check_decision(dec(20, 0, 0, 0.6), w2, b, 20.0, true), InfeasibleDecision);
  CHECK_THROWS_AS(check_decision(dec(20, 0, 0, 1.5), w2, b, 20.0, true), InfeasibleDecision);
}

TEST_CASE("decision_from_draw") {
  auto d = decision_from_draw(20.0, 15.0);
  CHECK(d.r == 5.0);
  CHECK(d.d == 0.0);
  d = decision_from_draw(10.0, 15.0);
  CHECK(d.d == 5.0);
  CHECK(d.r == 0.0);
  d = decision_from_draw(15.0, 15.0);
  CHECK_FALSE(d.ind_r());
  CHECK_FALSE(d.ind_d());
}

TEST_CASE("time averages over the frame example's optimal ten slots") {
  // Frames of 5: mid x4 then low; mid x4 then high. Optimal: fill 10 at low, drain 10 at high.
  const auto b = frame_battery();
  const auto cm = CostModel::flat({2.0, 6.0, 10.0}, 20.0);
  std::vector<SlotRecord> recs;
  double y = 0.0;
  for (int t = 0; t < 10; ++t) {
    SlotRecord r;
    r.slot = t;
    if (t == 4) {
      r.aux = 0;
      r.sample = {0.0, 10.0};
      r.decision = dec(20, 10, 0);
    } else if (t == 9) {
      r.aux = 2;
      r.sample = {0.0, 20.0};
      r.decision = dec(10, 0, 10);
    } else {
      r.aux = 1;
      r.sample = {0.0, 15.0};
      r.decision = dec(15, 0, 0);
    }
    r.cost = slot_cost(r.decision, cm, r.aux, b);
    r.y_before = y;
    y = battery_apply({y}, r.decision, b).y;
    r.y_after = y;
    recs.push_back(r);
  }
  const auto s = time_average_metrics(recs, 1.0);
  CHECK(s.avg_cost == doctest::Approx(87.0));
  CHECK(s.total_cost == doctest::Approx(870.0));
  CHECK(s.avg_cost_per_hour == doctest::Approx(87.0 * 60));
  CHECK(s.r_bar == doctest::Approx(1.0));
  CHECK(s.d_bar == doctest::Approx(1.0));
  CHECK(s.max_y == 10.0);
  CHECK(s.slots == 10);
}

TEST_CASE("time averages of idle records and empty input") {
  std::vector<SlotRecord> recs(5);
  const auto s = time_average_metrics(recs, 5.0);
  CHECK(s.avg_cost == 0.0);
  CHECK(s.avg_cost_per_hour == 0.0);
  CHECK_THROWS_AS(time_average_metrics({}, 1.0), ConfigError);
}

TEST_CASE("telescoping: sum of r - d equals the level change, and |R - D| <= span / T") {
  const auto b = frame_battery();
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int run = 0; run < 20; ++run) {
    std::vector<SlotRecord> recs;
    double y = b.y_max * u(gen);
    const double y0 = y;
    double net = 0.0;
    for (int t = 0; t < 200; ++t) {
      SlotRecord r;
      r.y_before = y;
      const double up = std::min(b.r_max, b.y_max - y) * u(gen);
      const double down = std::min(b.d_max, y - b.y_min) * u(gen);
      r.decision = u(gen) < 0.5 ? dec(10 + up, up, 0) : dec(10 - down, 0, down);
      r.sample = {0.0, 10.0};
      y = battery_apply({y}, r.decision, b).y;
      r.y_after = y;
      net += r.decision.r - r.decision.d;
      recs.push_back(r);
    }
    CHECK(net == doctest::Approx(y - y0).epsilon(1e-12));
    const auto s = time_average_metrics(recs, 1.0);
    CHECK(std::abs(s.r_bar - s.d_bar) <= b.span() / 200.0 + 1e-12);
    CHECK(s.y_final == y);
    CHECK(s.y_init == y0);
  }
}
