#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <utility>
#include <vector>

#include "upscost/extended_controller.hpp"

using namespace upscost;

namespace {

BatteryConfig battery(double y_max, double r = 10.0, double d = 10.0, double crc = 5.0, double cdc = 5.0) {
  BatteryConfig b;
  b.y_max = y_max;
  b.r_max = r;
  b.d_max = d;
  b.c_rc = crc;
  b.c_dc = cdc;
  return b;
}

struct Objective {
  double x, u, z, v, price;
  BatteryConfig b;

  double operator()(double p, double r, double d) const {
    double pen = p * price;
    if (r > 0.0) pen += b.c_rc;
    if (d > 0.0) pen += b.c_dc;
    return (u + z) * p - v * pen + (x + u + z) * (d - r);
  }
};

// Best attainable value over the feasible set, scanned on a grid plus the
// corners of each mode's polygon.
double brute_max(const Objective& f, double w2, double p_peak) {
  const auto& b = f.b;
  double best = -1e300;
  auto take = [&](double p, double r, double d) {
    if (p < -1e-12 || p > p_peak + 1e-12 || r > b.r_max + 1e-12 || d > b.d_max + 1e-12) return;
    if (p - r + d < w2 - 1e-9) return;
    best = std::max(best, f(p, r, d));
  };
  const int n = 200;
  for (int i = 0; i <= n; ++i) {
    const double p = p_peak * i / n;
    take(p, 0.0, 0.0);
    for (int k = 1; k <= 20; ++k) {
      if (b.r_max > 0.0) take(p, b.r_max * k / 20.0, 0.0);
      if (b.d_max > 0.0) take(p, 0.0, b.d_max * k / 20.0);
    }
  }
  take(w2, 0.0, 0.0);
  take(p_peak, 0.0, 0.0);
  if (b.r_max > 0.0) {
    take(w2 + b.r_max, b.r_max, 0.0);
    take(p_peak, b.r_max, 0.0);
  }
  if (b.d_max > 0.0) {
    take(std::max(0.0, w2 - b.d_max), 0.0, b.d_max);
    take(p_peak, 0.0, b.d_max);
    if (w2 > 0.0 && w2 <= b.d_max) take(0.0, 0.0, w2);
  }
  return best;
}

}  // namespace

TEST_CASE("V_max_ext and its limits") {
  const auto b = battery(100.0);
  const auto cm = CostModel::flat({2.0, 10.0}, 40.0);
  const WorkloadLimits lim{40.0, 20.0, 20.0};
  CHECK(v_max_ext(b, cm, lim, 10.0) == doctest::Approx(6.25));
  CHECK(v_max_ext(b, cm, lim, 0.0) == doctest::Approx(7.5));
  CHECK_THROWS_AS(v_max_ext(battery(50.0), cm, lim, 10.0), ConfigError);
  CHECK_THROWS_AS(v_max_ext(b, CostModel::flat({5.0}, 40.0), lim, 10.0), ConfigError);
}

TEST_CASE("queue updates") {
  CHECK(update_u(5.0, 3.0, 4.0) == 6.0);
  CHECK(update_u(2.0, 10.0, 1.5) == 1.5);
  CHECK(update_z(5.0, 3.0, true, 2.0) == 4.0);
  CHECK(update_z(5.0, 3.0, false, 2.0) == 2.0);
  CHECK(update_z(1.0, 10.0, true, 2.0) == 0.0);
}

TEST_CASE("worst-case delay") {
  CHECK(delay_bound(110.0, 110.0, 10.0) == 22);
  CHECK(delay_bound(100.0, 100.0, 10.0) == 20);
  CHECK(delay_bound(0.3, 0.3, 0.2) == 3);
  CHECK(delay_bound(100.0, 101.0, 10.0) == 21);
  CHECK_THROWS_AS(delay_bound(1.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("flat closed form: worked states") {
  const auto b = battery(100.0);
  SUBCASE("discharge beats idle when Q2 D exceeds V C_dc") {
    BatteryConfig e = b;
    e.c_dc = 20.0;
    const auto d = solve_p6_flat({-20.0, 25.0, 0.0, 1.0}, 5.0, 5.0, e, 20.0);
    CHECK(d.p == 20.0);
    CHECK(d.d == 10.0);
    CHECK(d.r == 0.0);
    CHECK(d.gamma == doctest::Approx(1.0 - 5.0 / 30.0));
  }
  SUBCASE("empty queues and no work draw nothing") {
    const auto d = solve_p6_flat({-3.0, 0.0, 0.0, 1.0}, 0.0, 4.0, b, 20.0);
    CHECK(d.p == 0.0);
    CHECK(d.r == 0.0);
    CHECK(d.d == 0.0);
    CHECK(d.gamma == 0.0);
  }
  SUBCASE("empty queues and dear fees meet w2 exactly") {
    BatteryConfig e = b;
    e.c_dc = 50.0;
    const auto d = solve_p6_flat({-3.0, 0.0, 0.0, 1.0}, 7.0, 4.0, e, 20.0);
    CHECK(d.delivered() == doctest::Approx(7.0));
    CHECK(d.gamma == 0.0);
  }
  SUBCASE("low battery queue and cheap price recharge") {
    const auto d = solve_p6_flat({-200.0, 0.0, 0.0, 1.0}, 5.0, 1.0, b, 20.0);
    CHECK(d.r == 10.0);
    CHECK(d.p == 15.0);
    CHECK(d.gamma == 0.0);
  }
}

TEST_CASE("flat closed form matches brute force on random states") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    BatteryConfig b = battery(1000.0, 1.0 + 20.0 * u01(gen), 1.0 + 20.0 * u01(gen), 30.0 * u01(gen),
                              30.0 * u01(gen));
    if (i % 20 == 0) b = BatteryConfig::none();
    const double w_max = 1.0 + 50.0 * u01(gen);
    const double p_peak = w_max + std::max(b.r_max, b.d_max);
    const double w2 = (i % 7 == 0) ? 0.0 : w_max * u01(gen);
    const double v = 0.1 + 5.0 * u01(gen);
    const double price = 0.5 + 20.0 * u01(gen);
    const double uz = (i % 5 == 0) ? 0.0 : 200.0 * u01(gen);
    const double split = u01(gen);
    const QueueState q{400.0 * u01(gen) - 250.0, uz * split, uz * (1.0 - split), v};

    const auto dec = solve_p6_flat(q, w2, price, b, p_peak);
    CAPTURE(i);
    REQUIRE_NOTHROW(check_decision(dec, {0.0, w2}, b, p_peak, true));
    const Objective f{q.x, q.u, q.z, v, price, b};
    const double best = brute_max(f, w2, p_peak);
    const double mine = f(dec.p, dec.r, dec.d);
    CHECK(mine >= best - 1e-9 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("no battery: w2 at the peak is served from the grid") {
  BatteryConfig b = battery(100.0, 10.0, 0.0);
  const auto dec = solve_p6_flat({0.0, 50.0, 0.0, 1.0}, 20.0, 3.0, b, 20.0);
  CHECK(dec.p == 20.0);
  CHECK(dec.d == 0.0);
  CHECK(dec.r == 0.0);
  CHECK(dec.gamma == 0.0);

  const auto none = solve_p6_flat({-5.0, 50.0, 0.0, 1.0}, 4.0, 3.0, BatteryConfig::none(), 20.0);
  CHECK(none.r == 0.0);
  CHECK(none.d == 0.0);
  CHECK(none.p == 20.0);
}

TEST_CASE("job ledger serves oldest first") {
  JobLedger l;
  l.push(0, 2.0);
  l.push(1, 3.0);
  l.push(2, 0.0);
  CHECK(l.size() == 2);
  CHECK(l.backlog() == doctest::Approx(5.0));
  CHECK(l.serve(3, 1.0) == 0);
  CHECK(*l.oldest_arrival() == 0);
  CHECK(l.serve(4, 2.0) == 4);
  CHECK(*l.oldest_arrival() == 1);
  CHECK(l.backlog() == doctest::Approx(2.0));
  CHECK(l.serve(9, 10.0) == 8);
  CHECK(l.empty());
  CHECK(!l.oldest_arrival());
}

TEST_CASE("controller rejects bad V and eps") {
  const auto b = battery(100.0);
  const auto cm = CostModel::flat({2.0, 10.0}, 40.0);
  const WorkloadLimits lim{30.0, 15.0, 15.0};
  CHECK_THROWS_AS(ExtendedController(b, cm, lim, 0.0, 5.0), ConfigError);
  CHECK_THROWS_AS(ExtendedController(b, cm, lim, 1.0, -1.0), ConfigError);
  CHECK_THROWS_AS(ExtendedController(b, cm, lim, 1.0, 16.0), ConfigError);
  const double vm = v_max_ext(b, cm, lim, 5.0);
  CHECK_NOTHROW(ExtendedController(b, cm, lim, vm, 5.0));
  CHECK_THROWS_AS(ExtendedController(b, cm, lim, vm * 1.01, 5.0), ConfigError);
  CHECK_THROWS_AS(ExtendedController(b, CostModel::flat({2.0, 10.0}, 35.0), lim, 1.0, 5.0), ConfigError);
  CHECK_NOTHROW(ExtendedController(BatteryConfig::none(), cm, lim, 1000.0, 5.0));

  const ExtendedController none(b, cm, lim, 1.0, 0.0);
  CHECK(!none.delta_max());
  const ExtendedController ctl(b, cm, lim, 1.0, 5.0);
  CHECK(ctl.delta_max() == delay_bound(10.0 + 15.0, 10.0 + 5.0, 5.0));
}

TEST_CASE("random runs: bounds, ledger and delay") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int run = 0; run < 20; ++run) {
    const auto b = battery(200.0 + 200.0 * u01(gen), 5.0, 5.0, 3.0 * u01(gen), 3.0 * u01(gen));
    const std::vector<double> prices{1.0 + u01(gen), 4.0 + 4.0 * u01(gen), 10.0 + 10.0 * u01(gen)};
    const double w_max = 20.0;
    const WorkloadLimits lim{w_max, 10.0, 10.0};
    const auto cm = CostModel::flat(prices, w_max + 5.0);
    const double eps = 1.0 + 9.0 * u01(gen);
    const double v = v_max_ext(b, cm, lim, eps) * (0.2 + 0.8 * u01(gen));
    ExtendedController ctl(b, cm, lim, v, eps);
    const long bound = *ctl.delta_max();

    std::deque<std::pair<std::size_t, double>> fifo;
    long worst = 0;
    double u = 0.0, z = 0.0;
    for (std::size_t t = 0; t < 2000; ++t) {
      const WorkloadSample w{lim.w1_max * u01(gen), lim.w2_max * u01(gen)};
      const std::size_t s = std::min<std::size_t>(2, static_cast<std::size_t>(3.0 * u01(gen)));
      const auto rec = ctl.step(t, w, s);
      const double service = std::max(0.0, rec.decision.delivered() - w.w2);
      CHECK(rec.u == doctest::Approx(u));
      CHECK(rec.z == doctest::Approx(z));

      double left = service;
      while (left > 0.0 && !fifo.empty()) {
        const double take = std::min(left, fifo.front().second);
        fifo.front().second -= take;
        left -= take;
        if (fifo.front().second <= 1e-12) {
          worst = std::max(worst, static_cast<long>(t - fifo.front().first));
          fifo.pop_front();
        }
      }
      if (w.w1 > 0.0) fifo.emplace_back(t, w.w1);
      z = std::max(z - service + (u > 0.0 ? eps : 0.0), 0.0);
      u = std::max(u - service, 0.0) + w.w1;

      CHECK(rec.y_after >= b.y_min - 1e-9);
      CHECK(rec.y_after <= b.y_max + 1e-9);
      CHECK(rec.max_delay == worst);
      if (!fifo.empty()) CHECK(t - fifo.front().first < static_cast<std::size_t>(bound));
    }
    CHECK(worst <= bound);
    CHECK(ctl.u() == doctest::Approx(u));
  }
}

TEST_CASE("zero workload draws only to recharge") {
  const auto b = battery(100.0);
  const auto cm = CostModel::flat({2.0, 5.0}, 40.0);
  ExtendedController ctl(b, cm, {30.0, 15.0, 15.0}, 1.0, 5.0);
  for (std::size_t t = 0; t < 100; ++t) {
    const auto rec = ctl.step(t, {0.0, 0.0}, t % 2);
    CHECK(rec.decision.p == doctest::Approx(rec.decision.r));
  }
  CHECK(ctl.u() == 0.0);
  CHECK(ctl.z() == 0.0);
}
