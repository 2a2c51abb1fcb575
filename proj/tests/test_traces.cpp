#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "upscost/traces.hpp"

using namespace upscost;

namespace {

std::string hour_stamp(std::chrono::sys_days day, int hour) {
  const std::chrono::year_month_day ymd{day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour);
  return buf;
}

std::string error_of(const std::string& csv) {
  std::istringstream in(csv);
  try {
    parse_price_csv(in, 5.0);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("frame trace: one low and one high per pair of frames") {
  const auto tr = gen_frame_periodic(5, {10, 15, 20}, {2, 6, 10}, 1000);
  REQUIRE(tr.size() == 1000);
  CHECK(tr.state_prices == std::vector<double>{2, 6, 10});
  for (std::size_t start = 0; start + 10 <= tr.size(); start += 10) {
    int low = 0, high = 0, mid = 0;
    for (std::size_t t = start; t < start + 10; ++t) {
      CHECK(tr.price_at(t) == (tr.samples[t].w2 == 10 ? 2 : tr.samples[t].w2 == 15 ? 6 : 10));
      low += tr.samples[t].w2 == 10;
      mid += tr.samples[t].w2 == 15;
      high += tr.samples[t].w2 == 20;
    }
    CHECK(low == 1);
    CHECK(high == 1);
    CHECK(mid == 8);
  }
  CHECK(tr.samples[4].w2 == 10);
  CHECK(tr.samples[9].w2 == 20);
  CHECK(tr.samples[0].w1 == 0.0);

  const auto one = gen_frame_periodic(5, {10, 15, 20}, {2, 6, 10}, 5);
  CHECK(one.samples.back().w2 == 10);
  CHECK_THROWS_AS(gen_frame_periodic(1, {10, 15, 20}, {2, 6, 10}, 5), ConfigError);
}

TEST_CASE("iid trace: determinism and moments") {
  IidSpec spec;
  spec.workload = UniformRange{10.0, 90.0};
  spec.price = std::vector<double>{2.0, 6.0, 10.0};
  spec.n_slots = 1000000;
  spec.seed = 42;
  const auto a = gen_iid_uniform(spec);
  const auto b = gen_iid_uniform(spec);
  REQUIRE(a.size() == spec.n_slots);
  CHECK(a.aux == b.aux);
  bool same = true, in_range = true;
  double sum = 0.0;
  std::map<double, std::size_t> freq;
  for (std::size_t t = 0; t < a.size(); ++t) {
    same = same && a.samples[t].w2 == b.samples[t].w2;
    const double w = a.samples[t].w2;
    in_range = in_range && w >= 10.0 && w < 90.0;
    sum += w;
    ++freq[a.price_at(t)];
  }
  CHECK(same);
  CHECK(in_range);
  CHECK(sum / a.size() == doctest::Approx(50.0).epsilon(0.004));
  REQUIRE(freq.size() == 3);
  for (const auto& [price, n] : freq) CHECK(std::abs(n / 1e6 - 1.0 / 3.0) < 0.01);

  spec.seed = 43;
  spec.n_slots = 100;
  spec.tolerant_fraction = 0.25;
  const auto c = gen_iid_uniform(spec);
  CHECK(c.samples[0].w2 != a.samples[0].w2);
  for (const auto& s : c.samples) CHECK(s.w1 == doctest::Approx(s.total() / 4.0));
}

TEST_CASE("daily trace tiles the hourly profile") {
  const auto& w = standin_daily_workload();
  const auto& c = standin_daily_prices();
  const auto hourly = gen_daily_periodic(w, c, 60.0, 1);
  REQUIRE(hourly.size() == 24);
  for (std::size_t h = 0; h < 24; ++h) {
    CHECK(hourly.price_at(h) == c[h]);
    CHECK(hourly.samples[h].w2 == w[h]);
  }
  const auto fine = gen_daily_periodic(w, c, 5.0, 3, 0.5);
  REQUIRE(fine.size() == 3 * 288);
  for (std::size_t t = 0; t + 288 < fine.size(); ++t) {
    CHECK(fine.price_at(t) == fine.price_at(t + 288));
    CHECK(fine.samples[t].w1 == fine.samples[t + 288].w1);
  }
  CHECK(fine.price_at(14 * 12 + 7) == 100.0);
  CHECK(*std::max_element(c.begin(), c.end()) == 100.0);
  CHECK(*std::min_element(c.begin(), c.end()) == 50.0);
  CHECK(CostModel::flat(fine.state_prices, 2.0).chi_min() == 100.0);
  CHECK_THROWS_AS(gen_daily_periodic(w, c, 7.0, 1), ConfigError);
}

TEST_CASE("price csv: hourly rows expand to priced slots") {
  std::istringstream in("timestamp,price_per_mwh\n2024-03-01T00:00,60\n2024-03-01T01:00,60\n");
  const auto ps = parse_price_csv(in, 5.0);
  REQUIRE(ps.slot_prices.size() == 24);
  for (double p : ps.slot_prices) CHECK(p == doctest::Approx(5.0));
  CHECK(ps.rows.size() == 2);

  std::istringstream across("timestamp,price_per_mwh\n2024-02-28T23:00,30\n2024-02-29T00:00,90\n");
  const auto leap = parse_price_csv(across, 30.0);
  CHECK(leap.slot_prices == std::vector<double>{15, 15, 45, 45});
}

TEST_CASE("price csv: errors name the offending line") {
  CHECK(error_of("timestamp,price_per_mwh\n2024-03-01T00:00,60\n2024-03-01T02:00,60\n") ==
        "line 3: missing hour");
  CHECK(error_of("timestamp,price_per_mwh\n2024-03-01T05:00,60\n2024-03-01T04:00,60\n") ==
        "line 3: timestamps not strictly increasing");
  CHECK(error_of("timestamp,price_per_mwh\n2024-03-01T00:00,abc\n").rfind("line 2:", 0) == 0);
  CHECK(error_of("timestamp,price_per_mwh\n2024-03-01T00:30,10\n").rfind("line 2:", 0) == 0);
  CHECK(error_of("timestamp,price_per_mwh\n2024-03-01T00:00,-1\n") == "line 2: negative price");
  CHECK(error_of("time,price\n").rfind("line 1:", 0) == 0);
  CHECK(error_of("timestamp,price_per_mwh\n") == "price file has no data rows");
  CHECK(error_of("timestamp,price_per_mwh\n2024-03-01T00:00,60\n\n2024-03-01T01:00,60\n").rfind("line 3:", 0) == 0);
}

TEST_CASE("price csv: half a year of hours round-trips") {
  std::vector<PriceCsvRow> rows;
  const std::chrono::sys_days first = std::chrono::year{2023} / 1 / 1;
  for (int d = 0; d < 181; ++d)
    for (int h = 0; h < 24; ++h) rows.push_back({hour_stamp(first + std::chrono::days{d}, h), 20.0 + (d * 24 + h) % 97 + 0.25});
  std::stringstream buf;
  write_price_csv(buf, rows);
  const auto ps = parse_price_csv(buf, 5.0);
  REQUIRE(ps.rows.size() == rows.size());
  CHECK(ps.slot_prices.size() == 181 * 288);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(ps.rows[i].timestamp == rows[i].timestamp);
    CHECK(ps.rows[i].price_per_mwh == rows[i].price_per_mwh);
  }
  CHECK(ps.slot_prices[12] == doctest::Approx(rows[1].price_per_mwh / 12.0));

  const auto path = std::filesystem::temp_directory_path() / "upscost_prices_test.csv";
  {
    std::ofstream f(path);
    write_price_csv(f, rows);
  }
  CHECK(ingest_price_csv(path, 5.0).slot_prices == ps.slot_prices);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ingest_price_csv(path, 5.0), ConfigError);
}

TEST_CASE("trace csv round-trips exactly") {
  IidSpec spec;
  spec.workload = UniformRange{0.1, 1.5};
  spec.price = UniformRange{1.0, 3.0};
  spec.n_slots = 500;
  spec.seed = 9;
  spec.tolerant_fraction = 0.3;
  const auto tr = gen_iid_uniform(spec);
  std::stringstream buf;
  write_trace_csv(buf, tr);
  const auto back = read_trace_csv(buf, 1.0);
  REQUIRE(back.size() == tr.size());
  for (std::size_t t = 0; t < tr.size(); ++t) {
    CHECK(back.samples[t].w1 == tr.samples[t].w1);
    CHECK(back.samples[t].w2 == tr.samples[t].w2);
    CHECK(back.price_at(t) == tr.price_at(t));
  }

  std::istringstream bad("slot,w1,w2,aux_state,price_per_mw_slot\n0,1,1,0,2\n1,1,1,0,3\n");
  CHECK_THROWS_WITH_AS(read_trace_csv(bad, 1.0), "line 3: aux state has two different prices", ConfigError);
  std::istringstream gap("slot,w1,w2,aux_state,price_per_mw_slot\n0,1,1,1,2\n");
  CHECK_THROWS_AS(read_trace_csv(gap, 1.0), ConfigError);
}

TEST_CASE("observed limits and validation") {
  Trace tr = gen_frame_periodic(5, {10, 15, 20}, {2, 6, 10}, 20);
  split_workload(tr, 0.4);
  const auto lim = tr.observed_limits();
  CHECK(lim.w_max == doctest::Approx(20.0));
  CHECK(lim.w1_max == doctest::Approx(8.0));
  CHECK(lim.w2_max == doctest::Approx(12.0));
  CHECK_NOTHROW(tr.validate(lim));
  CHECK_THROWS_AS(tr.validate({19.0, 8.0, 12.0}), ConfigError);
}
