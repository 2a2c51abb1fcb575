#include "upscost/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <ostream>
#include <set>
#include <sstream>

#include "upscost/baselines.hpp"
#include "upscost/basic_controller.hpp"
#include "upscost/extended_controller.hpp"

namespace upscost {

using nlohmann::json;

std::string to_string(ModelKind m) { return m == ModelKind::basic ? "basic" : "extended"; }

std::string to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::dynamic: return "dynamic";
    case PolicyKind::no_battery: return "no_battery";
    case PolicyKind::threshold: return "threshold";
    case PolicyKind::scheme_c: return "scheme_c";
    case PolicyKind::oracle: return "oracle";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where,
                std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back(where + ": expected an object");
    return;
  }
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) errors.push_back(where + ": unknown key '" + key + "'");
}

Distribution parse_distribution(const json& j) {
  if (!j.is_object() || j.size() != 1) throw ConfigError("expected {\"uniform\": [lo, hi]} or {\"set\": [...]}");
  if (j.contains("uniform")) {
    const auto v = j.at("uniform").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("uniform needs [lo, hi]");
    return UniformRange{v[0], v[1]};
  }
  if (j.contains("set")) return j.at("set").get<std::vector<double>>();
  throw ConfigError("expected {\"uniform\": [lo, hi]} or {\"set\": [...]}");
}

json distribution_json(const Distribution& d) {
  if (const auto* r = std::get_if<UniformRange>(&d)) return {{"uniform", {r->lo, r->hi}}};
  return {{"set", std::get<std::vector<double>>(d)}};
}

double max_of(const Distribution& d) {
  if (const auto* r = std::get_if<UniformRange>(&d)) return r->hi;
  const auto& set = std::get<std::vector<double>>(d);
  return set.empty() ? 0.0 : *std::max_element(set.begin(), set.end());
}

bool divides_hour(double minutes) { return minutes > 0.0 && std::fmod(60.0, minutes) == 0.0; }

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string(key) + ": missing");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string(key) + ": expected a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

std::uint64_t count_or(const json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(std::string(key) + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  auto section = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const json::exception& e) {
      errors.push_back(name + ": " + e.what());
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      errors.push_back(msg.starts_with(name + ":") ? msg : name + ": " + msg);
    }
  };

  check_keys(j,
             {"model", "policy", "battery", "p_peak", "cost", "trace", "limits", "v", "eps", "threshold",
              "oracle_step", "delta_target", "n_slots", "seed", "check_invariants", "sweep", "scheme_y_max"},
             "config", errors);
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");

  section("model", [&] {
    const auto m = j.value("model", std::string("basic"));
    if (m == "basic") cfg.model = ModelKind::basic;
    else if (m == "extended") cfg.model = ModelKind::extended;
    else throw ConfigError("expected basic or extended, got '" + m + "'");
  });
  section("policy", [&] {
    const auto p = j.value("policy", std::string("dynamic"));
    if (p == "dynamic") cfg.policy = PolicyKind::dynamic;
    else if (p == "no_battery") cfg.policy = PolicyKind::no_battery;
    else if (p == "threshold") cfg.policy = PolicyKind::threshold;
    else if (p == "scheme_c") cfg.policy = PolicyKind::scheme_c;
    else if (p == "oracle") cfg.policy = PolicyKind::oracle;
    else throw ConfigError("unknown policy '" + p + "'");
  });
  section("battery", [&] {
    if (!j.contains("battery")) throw ConfigError("missing");
    const auto& b = j.at("battery");
    check_keys(b, {"y_min", "y_max", "y_init", "r_max", "d_max", "c_rc", "c_dc"}, "battery", errors);
    auto& c = cfg.battery;
    c.y_min = number_or(b, "y_min", 0.0);
    c.y_max = number(b, "y_max");
    c.y_init = number_or(b, "y_init", c.y_min);
    c.r_max = number(b, "r_max");
    c.d_max = number(b, "d_max");
    c.c_rc = number_or(b, "c_rc", 0.0);
    c.c_dc = number_or(b, "c_dc", 0.0);
    c.validate_physical();
  });
  section("p_peak", [&] {
    if (j.contains("p_peak")) {
      cfg.p_peak = number(j, "p_peak");
      if (!(*cfg.p_peak > 0.0)) throw ConfigError("must be positive");
    }
  });
  section("cost", [&] {
    if (!j.contains("cost")) return;
    const auto& c = j.at("cost");
    check_keys(c, {"kind", "coeffs"}, "cost", errors);
    const auto kind = c.value("kind", std::string("flat"));
    if (kind == "flat") {
      cfg.cost.kind = CostSpec::Kind::flat;
    } else if (kind == "quadratic") {
      cfg.cost.kind = CostSpec::Kind::quadratic;
      cfg.cost.coeffs = c.at("coeffs").get<std::vector<std::array<double, 3>>>();
      if (cfg.cost.coeffs.empty()) throw ConfigError("quadratic cost needs coeffs");
    } else {
      throw ConfigError("unknown cost kind '" + kind + "'");
    }
  });
  section("trace", [&] {
    if (!j.contains("trace")) throw ConfigError("missing");
    const auto& t = j.at("trace");
    check_keys(t,
               {"kind", "frame_len", "w", "c", "workload", "price", "hourly_w", "hourly_c", "path", "slot_minutes",
                "tolerant_fraction"},
               "trace", errors);
    auto& ts = cfg.trace;
    const auto kind = t.at("kind").get<std::string>();
    ts.slot_minutes = number_or(t, "slot_minutes", kind == "prices" ? 5.0 : 1.0);
    ts.tolerant_fraction = number_or(t, "tolerant_fraction", 0.0);
    if (!divides_hour(ts.slot_minutes)) throw ConfigError("slot_minutes must divide 60");
    if (ts.tolerant_fraction < 0.0 || ts.tolerant_fraction >= 1.0)
      throw ConfigError("tolerant_fraction must lie in [0, 1)");
    if (kind == "frame") {
      ts.kind = TraceSpec::Kind::frame;
      ts.frame_len = count_or(t, "frame_len", 5);
      if (t.contains("w")) ts.w_levels = t.at("w").get<std::array<double, 3>>();
      if (t.contains("c")) ts.c_levels = t.at("c").get<std::array<double, 3>>();
      if (ts.frame_len < 2) throw ConfigError("frame_len must be at least 2");
    } else if (kind == "iid") {
      ts.kind = TraceSpec::Kind::iid;
      ts.workload = parse_distribution(t.at("workload"));
      ts.price = parse_distribution(t.at("price"));
    } else if (kind == "daily") {
      ts.kind = TraceSpec::Kind::daily;
      if (t.contains("hourly_w")) ts.hourly_w = t.at("hourly_w").get<std::vector<double>>();
      if (t.contains("hourly_c")) ts.hourly_c = t.at("hourly_c").get<std::vector<double>>();
      if (t.contains("workload")) {
        ts.workload = parse_distribution(t.at("workload"));
        ts.workload_iid = true;
      }
      if ((!ts.hourly_w.empty() && ts.hourly_w.size() != 24) || (!ts.hourly_c.empty() && ts.hourly_c.size() != 24))
        throw ConfigError("hourly profiles need 24 entries");
    } else if (kind == "file") {
      ts.kind = TraceSpec::Kind::file;
      ts.path = t.at("path").get<std::string>();
    } else if (kind == "prices") {
      ts.kind = TraceSpec::Kind::prices;
      ts.path = t.at("path").get<std::string>();
      ts.workload = parse_distribution(t.at("workload"));
    } else {
      throw ConfigError("unknown trace kind '" + kind + "'");
    }
  });
  section("limits", [&] {
    if (!j.contains("limits")) return;
    const auto& l = j.at("limits");
    check_keys(l, {"w_max", "w1_max", "w2_max"}, "limits", errors);
    cfg.limits = WorkloadLimits{number(l, "w_max"), number_or(l, "w1_max", 0.0), number_or(l, "w2_max", 0.0)};
  });
  section("v", [&] {
    if (!j.contains("v")) return;
    const auto& v = j.at("v");
    if (v.is_string()) {
      if (v.get<std::string>() != "max") throw ConfigError("expected a number or \"max\"");
    } else {
      cfg.v = number(j, "v");
      if (!(*cfg.v > 0.0)) throw ConfigError("must be positive");
    }
  });
  section("eps", [&] {
    if (j.contains("eps")) {
      cfg.eps = number(j, "eps");
      if (*cfg.eps < 0.0) throw ConfigError("must be non-negative");
    }
  });
  section("threshold", [&] { cfg.threshold = number_or(j, "threshold", 0.0); });
  section("oracle_step", [&] {
    cfg.oracle_step = number_or(j, "oracle_step", 0.5);
    if (!(cfg.oracle_step > 0.0)) throw ConfigError("must be positive");
  });
  section("delta_target", [&] {
    if (j.contains("delta_target")) cfg.delta_target = static_cast<long>(count_or(j, "delta_target", 0));
  });
  section("n_slots", [&] { cfg.n_slots = count_or(j, "n_slots", 1000); });
  section("seed", [&] { cfg.seed = count_or(j, "seed", 1); });
  section("check_invariants", [&] { cfg.check_invariants = j.value("check_invariants", false); });
  section("sweep", [&] {
    if (!j.contains("sweep")) return;
    const auto& s = j.at("sweep");
    check_keys(s, {"axis", "values"}, "sweep", errors);
    cfg.sweep_axis = s.value("axis", std::string("y_max"));
    cfg.sweep_values = s.at("values").get<std::vector<double>>();
    if (cfg.sweep_axis != "y_max" && cfg.sweep_axis != "v") throw ConfigError("axis must be y_max or v");
  });
  section("scheme_y_max", [&] {
    if (j.contains("scheme_y_max")) cfg.scheme_y_max = j.at("scheme_y_max").get<std::vector<double>>();
  });

  if (cfg.policy == PolicyKind::threshold && !(cfg.threshold > 0.0))
    errors.push_back("threshold: the threshold policy needs a positive threshold");
  if (cfg.model == ModelKind::extended && (cfg.policy == PolicyKind::threshold || cfg.policy == PolicyKind::oracle))
    errors.push_back("policy: " + to_string(cfg.policy) + " runs on the basic model only");
  if (cfg.model == ModelKind::basic && cfg.policy == PolicyKind::scheme_c)
    errors.push_back("policy: scheme_c needs the extended model");
  if (cfg.n_slots == 0 && cfg.trace.kind != TraceSpec::Kind::file && cfg.trace.kind != TraceSpec::Kind::prices)
    errors.push_back("n_slots: must be positive for generated traces");

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["model"] = to_string(cfg.model);
  j["policy"] = to_string(cfg.policy);
  const auto& b = cfg.battery;
  j["battery"] = {{"y_min", b.y_min}, {"y_max", b.y_max}, {"y_init", b.y_init}, {"r_max", b.r_max},
                  {"d_max", b.d_max}, {"c_rc", b.c_rc},   {"c_dc", b.c_dc}};
  if (cfg.p_peak) j["p_peak"] = *cfg.p_peak;
  if (cfg.cost.kind == CostSpec::Kind::quadratic) j["cost"] = {{"kind", "quadratic"}, {"coeffs", cfg.cost.coeffs}};
  json t;
  const auto& ts = cfg.trace;
  t["slot_minutes"] = ts.slot_minutes;
  t["tolerant_fraction"] = ts.tolerant_fraction;
  switch (ts.kind) {
    case TraceSpec::Kind::frame:
      t["kind"] = "frame";
      t["frame_len"] = ts.frame_len;
      t["w"] = ts.w_levels;
      t["c"] = ts.c_levels;
      break;
    case TraceSpec::Kind::iid:
      t["kind"] = "iid";
      t["workload"] = distribution_json(ts.workload);
      t["price"] = distribution_json(ts.price);
      break;
    case TraceSpec::Kind::daily:
      t["kind"] = "daily";
      if (!ts.hourly_w.empty()) t["hourly_w"] = ts.hourly_w;
      if (!ts.hourly_c.empty()) t["hourly_c"] = ts.hourly_c;
      if (ts.workload_iid) t["workload"] = distribution_json(ts.workload);
      break;
    case TraceSpec::Kind::file:
      t["kind"] = "file";
      t["path"] = ts.path.string();
      break;
    case TraceSpec::Kind::prices:
      t["kind"] = "prices";
      t["path"] = ts.path.string();
      t["workload"] = distribution_json(ts.workload);
      break;
  }
  j["trace"] = t;
  if (cfg.limits) j["limits"] = {{"w_max", cfg.limits->w_max}, {"w1_max", cfg.limits->w1_max}, {"w2_max", cfg.limits->w2_max}};
  if (cfg.v) j["v"] = *cfg.v;
  else j["v"] = "max";
  if (cfg.eps) j["eps"] = *cfg.eps;
  if (cfg.policy == PolicyKind::threshold) j["threshold"] = cfg.threshold;
  j["oracle_step"] = cfg.oracle_step;
  if (cfg.delta_target) j["delta_target"] = *cfg.delta_target;
  j["n_slots"] = cfg.n_slots;
  j["seed"] = cfg.seed;
  j["check_invariants"] = cfg.check_invariants;
  if (!cfg.sweep_values.empty()) j["sweep"] = {{"axis", cfg.sweep_axis}, {"values", cfg.sweep_values}};
  if (!cfg.scheme_y_max.empty()) j["scheme_y_max"] = cfg.scheme_y_max;
  return j;
}

// ---------------------------------------------------------------------------
// Trace and model construction

namespace {

Trace truncate(Trace tr, std::size_t n) {
  if (n == 0 || n == tr.size()) return tr;
  if (n > tr.size())
    throw ConfigError("n_slots = " + std::to_string(n) + " exceeds the " + std::to_string(tr.size()) + "-slot trace");
  tr.samples.resize(n);
  tr.aux.resize(n);
  return tr;
}

WorkloadLimits default_limits(const ExperimentConfig& cfg, const Trace& trace) {
  const auto& ts = cfg.trace;
  double w_max = 0.0;
  switch (ts.kind) {
    case TraceSpec::Kind::frame: w_max = *std::max_element(ts.w_levels.begin(), ts.w_levels.end()); break;
    case TraceSpec::Kind::iid:
    case TraceSpec::Kind::prices: w_max = max_of(ts.workload); break;
    case TraceSpec::Kind::daily:
      if (ts.workload_iid) {
        w_max = max_of(ts.workload);
      } else {
        const auto& prof = ts.hourly_w.empty() ? std::vector<double>(standin_daily_workload().begin(),
                                                                     standin_daily_workload().end())
                                               : ts.hourly_w;
        w_max = *std::max_element(prof.begin(), prof.end());
      }
      break;
    case TraceSpec::Kind::file: return trace.observed_limits();
  }
  return {w_max, ts.tolerant_fraction * w_max, (1.0 - ts.tolerant_fraction) * w_max};
}

}  // namespace

Trace build_trace(const ExperimentConfig& cfg) {
  const auto& ts = cfg.trace;
  Trace tr;
  switch (ts.kind) {
    case TraceSpec::Kind::frame:
      tr = gen_frame_periodic(ts.frame_len, ts.w_levels, ts.c_levels, cfg.n_slots);
      tr.slot_minutes = ts.slot_minutes;
      if (ts.tolerant_fraction > 0.0) split_workload(tr, ts.tolerant_fraction);
      break;
    case TraceSpec::Kind::iid:
      tr = gen_iid_uniform({ts.workload, ts.price, cfg.n_slots, cfg.seed, ts.slot_minutes, ts.tolerant_fraction});
      break;
    case TraceSpec::Kind::daily: {
      const std::vector<double> w = ts.hourly_w.empty()
                                        ? std::vector<double>(standin_daily_workload().begin(), standin_daily_workload().end())
                                        : ts.hourly_w;
      const std::vector<double> c = ts.hourly_c.empty()
                                        ? std::vector<double>(standin_daily_prices().begin(), standin_daily_prices().end())
                                        : ts.hourly_c;
      const auto per_day = static_cast<std::size_t>(24.0 * 60.0 / ts.slot_minutes);
      const std::size_t days = (cfg.n_slots + per_day - 1) / per_day;
      tr = truncate(gen_daily_periodic(w, c, ts.slot_minutes, days, ts.tolerant_fraction), cfg.n_slots);
      if (ts.workload_iid) {
        std::vector<double> prices(tr.size());
        for (std::size_t t = 0; t < tr.size(); ++t) prices[t] = tr.price_at(t);
        tr = trace_from_prices(prices, iid_workload(ts.workload, tr.size(), cfg.seed, ts.tolerant_fraction),
                               ts.slot_minutes);
      }
      break;
    }
    case TraceSpec::Kind::file:
      tr = truncate(read_trace_csv(ts.path, ts.slot_minutes), cfg.n_slots);
      break;
    case TraceSpec::Kind::prices: {
      const auto series = ingest_price_csv(ts.path, ts.slot_minutes);
      std::size_t n = cfg.n_slots == 0 ? series.slot_prices.size() : cfg.n_slots;
      if (n > series.slot_prices.size())
        throw ConfigError("n_slots = " + std::to_string(n) + " exceeds the " +
                          std::to_string(series.slot_prices.size()) + "-slot price series");
      std::span<const double> prices(series.slot_prices.data(), n);
      tr = trace_from_prices(prices, iid_workload(ts.workload, n, cfg.seed, ts.tolerant_fraction), ts.slot_minutes);
      break;
    }
  }
  return tr;
}

Prepared prepare(const ExperimentConfig& cfg) {
  Trace trace = build_trace(cfg);
  const WorkloadLimits limits = cfg.limits ? *cfg.limits : default_limits(cfg, trace);
  limits.validate(cfg.model == ModelKind::extended);
  trace.validate(limits);
  const double p_peak = cfg.p_peak ? *cfg.p_peak : limits.w_max + std::max(cfg.battery.r_max, cfg.battery.d_max);
  if (limits.w_max > p_peak + kFeasTol) throw ConfigError("p_peak is below w_max");

  auto cm = [&] {
    if (cfg.cost.kind == CostSpec::Kind::quadratic) {
      if (cfg.cost.coeffs.size() != trace.state_prices.size())
        throw ConfigError("quadratic cost needs one coefficient triple per auxiliary state (" +
                          std::to_string(trace.state_prices.size()) + ")");
      return CostModel::quadratic(cfg.cost.coeffs, p_peak);
    }
    return CostModel::flat(trace.state_prices, p_peak);
  }();

  double eps = 0.0;
  if (cfg.model == ModelKind::extended) {
    eps = cfg.eps ? *cfg.eps : limits.w_max / 2.0;
    if (eps > limits.w_max - limits.w2_max + kFeasTol) throw ConfigError("eps exceeds w_max - w2_max");
  }
  return Prepared{std::move(trace), std::move(cm), limits, eps};
}

// ---------------------------------------------------------------------------
// Policies

namespace {

class BasicPolicy : public Policy {
 public:
  BasicPolicy(const BatteryConfig& b, const CostModel& cm, double v) : ctl_(b, cm, v) {}
  SlotRecord step(std::size_t slot, const WorkloadSample& sample, std::size_t s) override {
    return ctl_.step(slot, sample, s);
  }
  double v() const override { return ctl_.v(); }
  BatteryConfig battery() const override { return ctl_.battery_config(); }

 private:
  BasicController ctl_;
};

class ExtendedPolicy : public Policy {
 public:
  explicit ExtendedPolicy(ExtendedController ctl) : ctl_(std::move(ctl)) {}
  SlotRecord step(std::size_t slot, const WorkloadSample& sample, std::size_t s) override {
    return ctl_.step(slot, sample, s);
  }
  bool extended() const override { return true; }
  std::optional<long> delay_bound() const override { return ctl_.delta_max(); }
  double v() const override { return ctl_.v(); }
  BatteryConfig battery() const override { return ctl_.battery_config(); }
  double eps() const { return ctl_.eps(); }

 private:
  ExtendedController ctl_;
};

class NoBatteryPolicy : public Policy {
 public:
  NoBatteryPolicy(const CostModel& cm, bool extended) : cm_(cm), extended_(extended) {}
  SlotRecord step(std::size_t slot, const WorkloadSample& sample, std::size_t s) override {
    SlotRecord rec;
    rec.slot = slot;
    rec.sample = sample;
    rec.aux = s;
    rec.decision = no_battery_policy(sample, s, cm_);
    rec.price = cm_.price(s, rec.decision.p);
    rec.cost = slot_cost(rec.decision, cm_, s, BatteryConfig::none());
    return rec;
  }
  bool extended() const override { return extended_; }

 private:
  CostModel cm_;
  bool extended_;
};

class ThresholdRunner : public Policy {
 public:
  ThresholdRunner(ThresholdPolicyConfig t, const BatteryConfig& b, const CostModel& cm)
      : t_(t), b_(b), cm_(cm), state_{b.y_init} {
    t_.validate();
    b_.validate_physical();
  }
  SlotRecord step(std::size_t slot, const WorkloadSample& sample, std::size_t s) override {
    SlotRecord rec;
    rec.slot = slot;
    rec.sample = sample;
    rec.aux = s;
    rec.decision = threshold_policy(t_, state_.y, sample, cm_.price(s, sample.total()), b_, cm_.p_peak());
    rec.y_before = state_.y;
    state_ = battery_apply(state_, rec.decision, b_);
    rec.y_after = state_.y;
    rec.price = cm_.price(s, rec.decision.p);
    rec.cost = slot_cost(rec.decision, cm_, s, b_);
    return rec;
  }
  BatteryConfig battery() const override { return b_; }

 private:
  ThresholdPolicyConfig t_;
  BatteryConfig b_;
  CostModel cm_;
  BatteryState state_;
};

class ReplayPolicy : public Policy {
 public:
  ReplayPolicy(std::vector<SlotRecord> records, const BatteryConfig& b) : records_(std::move(records)), b_(b) {}
  SlotRecord step(std::size_t slot, const WorkloadSample&, std::size_t) override { return records_.at(slot); }
  BatteryConfig battery() const override { return b_; }

 private:
  std::vector<SlotRecord> records_;
  BatteryConfig b_;
};

// V for the dynamic extended controller and the scheme C delay target.
double extended_v(const ExperimentConfig& cfg, const Prepared& prep) {
  return cfg.v ? *cfg.v : v_max_ext(cfg.battery, prep.cm, prep.limits, prep.eps);
}

constexpr P6GridOptions kHarnessP6Grid{1000, 8};

}  // namespace

std::unique_ptr<Policy> make_policy(const ExperimentConfig& cfg, const Prepared& prep) {
  const bool extended = cfg.model == ModelKind::extended;
  switch (cfg.policy) {
    case PolicyKind::dynamic:
      if (!extended) {
        const auto& b = cfg.battery;
        if (!cfg.v && !(b.y_max - b.y_min > b.r_max + b.d_max)) return std::make_unique<NoBatteryPolicy>(prep.cm, false);
        return std::make_unique<BasicPolicy>(b, prep.cm, cfg.v ? *cfg.v : v_max(b, prep.cm));
      }
      return std::make_unique<ExtendedPolicy>(
          ExtendedController(cfg.battery, prep.cm, prep.limits, extended_v(cfg, prep), prep.eps, kHarnessP6Grid));
    case PolicyKind::no_battery:
      return std::make_unique<NoBatteryPolicy>(prep.cm, extended);
    case PolicyKind::threshold:
      return std::make_unique<ThresholdRunner>(ThresholdPolicyConfig{cfg.threshold}, cfg.battery, prep.cm);
    case PolicyKind::scheme_c: {
      const double v = extended_v(cfg, prep);
      long delta = 0;
      if (cfg.delta_target) {
        delta = *cfg.delta_target;
      } else {
        if (!(prep.eps > 0.0)) throw ConfigError("scheme_c: eps = 0 gives no delay target; set delta_target");
        const double vc = v * prep.cm.chi_min();
        delta = delay_bound(vc + prep.limits.w1_max, vc + prep.eps, prep.eps);
      }
      const auto params = scheme_c_params(v, prep.cm, prep.limits, delta);
      return std::make_unique<ExtendedPolicy>(
          ExtendedController(BatteryConfig::none(), prep.cm, prep.limits, params.v, params.eps, kHarnessP6Grid));
    }
    case PolicyKind::oracle: {
      auto res = offline_oracle({cfg.oracle_step}, cfg.battery, prep.cm, prep.trace);
      return std::make_unique<ReplayPolicy>(std::move(res.records), cfg.battery);
    }
  }
  throw ConfigError("unknown policy");
}

// ---------------------------------------------------------------------------
// Simulation loop

namespace {

void audit_record(const SlotRecord& rec, const SlotRecord* prev, const Policy& policy, const BatteryConfig& b,
                  const CostModel& cm) {
  auto fail = [&](const std::string& what) {
    throw InvariantViolation("slot " + std::to_string(rec.slot) + ": audit: " + what);
  };
  check_decision(rec.decision, rec.sample, b, cm.p_peak(), policy.extended());
  const double tol = kFeasTol * std::max(1.0, b.y_max);
  if (prev && std::abs(rec.y_before - prev->y_after) > tol) fail("battery level jumped between slots");
  if (std::abs(rec.y_after - (rec.y_before - rec.decision.d + rec.decision.r)) > tol) fail("battery update broken");
  if (!b.is_degenerate() && (rec.y_after < b.y_min - tol || rec.y_after > b.y_max + tol))
    fail("battery level outside [y_min, y_max]");
  const double expect = slot_cost(rec.decision, cm, rec.aux, b);
  if (std::abs(rec.cost - expect) > 1e-9 * std::max(1.0, std::abs(expect))) fail("reported cost does not match model");
  if (auto bound = policy.delay_bound(); bound && rec.max_delay > *bound) fail("job delay above bound");
}

}  // namespace

RunResult run_policy(Policy& policy, const Trace& trace, const CostModel& cm, bool audit) {
  RunResult out;
  out.records.reserve(trace.size());
  const BatteryConfig b = policy.battery();
  std::size_t violations = 0;
  std::vector<std::string> messages;
  try {
    for (std::size_t t = 0; t < trace.size(); ++t) {
      SlotRecord rec = policy.step(t, trace.samples[t], trace.aux[t]);
      if (audit) audit_record(rec, out.records.empty() ? nullptr : &out.records.back(), policy, b, cm);
      out.records.push_back(rec);
    }
  } catch (const InvariantViolation& e) {
    ++violations;
    messages.emplace_back(e.what());
  } catch (const InfeasibleDecision& e) {
    ++violations;
    messages.emplace_back(e.what());
  }
  if (!out.records.empty()) {
    out.summary = time_average_metrics(out.records, trace.slot_minutes);
  } else {
    out.summary.slot_minutes = trace.slot_minutes;
  }
  out.summary.delay_bound = policy.delay_bound();
  out.summary.violations = violations;
  out.summary.violation_messages = std::move(messages);
  out.v = policy.v();
  return out;
}

RunResult simulate(const ExperimentConfig& cfg) {
  const Prepared prep = prepare(cfg);
  auto policy = make_policy(cfg, prep);
  RunResult res = run_policy(*policy, prep.trace, prep.cm, cfg.check_invariants);
  res.policy = to_string(cfg.policy);
  if (dynamic_cast<NoBatteryPolicy*>(policy.get()) && cfg.policy == PolicyKind::dynamic)
    res.policy = "no_battery (V_max <= 0)";
  if (auto* ext = dynamic_cast<ExtendedPolicy*>(policy.get())) res.eps = ext->eps();
  return res;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_values.empty()) throw ConfigError("sweep: no values");
  const Prepared prep = prepare(cfg);

  // Validate every point before running any of them.
  std::vector<ExperimentConfig> points;
  for (double value : cfg.sweep_values) {
    ExperimentConfig pc = cfg;
    if (cfg.sweep_axis == "y_max") pc.battery.y_max = value;
    else pc.v = value;
    points.push_back(pc);
  }

  auto run_point = [&](const ExperimentConfig& pc, double value) {
    SweepPoint pt;
    pt.value = value;
    pt.y_max = pc.battery.y_max;
    try {
      pc.battery.validate_physical();
      Prepared local{prep.trace, prep.cm, prep.limits, prep.eps};
      auto policy = make_policy(pc, local);
      auto res = run_policy(*policy, local.trace, local.cm, pc.check_invariants);
      pt.v = res.v;
      pt.policy = to_string(pc.policy);
      if (dynamic_cast<NoBatteryPolicy*>(policy.get()) && pc.policy == PolicyKind::dynamic)
        pt.policy = "no_battery (V_max <= 0)";
      pt.summary = std::move(res.summary);
    } catch (const Error& e) {
      pt.error = e.what();
    }
    return pt;
  };

  std::vector<std::future<SweepPoint>> futures;
  for (std::size_t i = 0; i < points.size(); ++i)
    futures.push_back(std::async(std::launch::async, run_point, std::cref(points[i]), cfg.sweep_values[i]));
  std::vector<SweepPoint> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::vector<SchemeRow> compare_schemes(const ExperimentConfig& cfg) {
  if (cfg.model != ModelKind::extended) throw ConfigError("compare-schemes needs an extended-model config");
  const Prepared prep = prepare(cfg);
  const std::vector<double> sizes = cfg.scheme_y_max.empty() ? std::vector<double>{cfg.battery.y_max} : cfg.scheme_y_max;

  auto check = [](const RunResult& r, const char* scheme) {
    if (r.summary.violations)
      throw InvariantViolation(std::string("scheme ") + scheme + ": " + r.summary.violation_messages.front());
    return r.summary.total_cost;
  };

  auto run_size = [&](double y_max) {
    BatteryConfig b = cfg.battery;
    b.y_max = y_max;
    b.validate();
    SchemeRow row;
    row.y_max = y_max;

    NoBatteryPolicy a(prep.cm, true);
    row.cost_a = check(run_policy(a, prep.trace, prep.cm, cfg.check_invariants), "A");

    row.v_b = cfg.v ? *cfg.v : v_max(b, prep.cm);
    BasicPolicy pb(b, prep.cm, row.v_b);
    row.cost_b = check(run_policy(pb, prep.trace, prep.cm, cfg.check_invariants), "B");

    row.v_d = cfg.v ? *cfg.v : v_max_ext(b, prep.cm, prep.limits, prep.eps);
    row.eps_d = prep.eps;
    ExtendedPolicy pd(ExtendedController(b, prep.cm, prep.limits, row.v_d, prep.eps, kHarnessP6Grid));
    row.delta_max = pd.delay_bound().value_or(0);
    row.cost_d = check(run_policy(pd, prep.trace, prep.cm, cfg.check_invariants), "D");

    const long target = cfg.delta_target ? *cfg.delta_target : row.delta_max;
    const auto params = scheme_c_params(row.v_d, prep.cm, prep.limits, target);
    row.eps_c = params.eps;
    ExtendedPolicy pc(ExtendedController(BatteryConfig::none(), prep.cm, prep.limits, params.v, params.eps, kHarnessP6Grid));
    row.cost_c = check(run_policy(pc, prep.trace, prep.cm, cfg.check_invariants), "C");

    if (row.cost_a > 0.0) {
      row.ratio_b = row.cost_b / row.cost_a;
      row.ratio_c = row.cost_c / row.cost_a;
      row.ratio_d = row.cost_d / row.cost_a;
    }
    return row;
  };

  std::vector<std::future<SchemeRow>> futures;
  for (double y : sizes) futures.push_back(std::async(std::launch::async, run_size, y));
  std::vector<SchemeRow> rows;
  for (auto& f : futures) rows.push_back(f.get());
  return rows;
}

// ---------------------------------------------------------------------------
// Output

void write_slots_csv(std::ostream& out, const std::vector<SlotRecord>& records) {
  out << "slot,w1,w2,aux_state,price,p,r,d,gamma,cost,y_before,y_after,x,u,z,max_delay\n";
  for (const auto& r : records) {
    out << r.slot << ',' << format_double(r.sample.w1) << ',' << format_double(r.sample.w2) << ',' << r.aux << ','
        << format_double(r.price) << ',' << format_double(r.decision.p) << ',' << format_double(r.decision.r) << ','
        << format_double(r.decision.d) << ',' << format_double(r.decision.gamma) << ',' << format_double(r.cost)
        << ',' << format_double(r.y_before) << ',' << format_double(r.y_after) << ',' << format_double(r.x) << ','
        << format_double(r.u) << ',' << format_double(r.z) << ',' << r.max_delay << '\n';
  }
}

json summary_json(const RunResult& result) {
  const auto& s = result.summary;
  json j = {{"policy", result.policy},
            {"v", result.v},
            {"slots", s.slots},
            {"slot_minutes", s.slot_minutes},
            {"total_cost", s.total_cost},
            {"avg_cost", s.avg_cost},
            {"avg_cost_per_hour", s.avg_cost_per_hour},
            {"r_bar", s.r_bar},
            {"d_bar", s.d_bar},
            {"avg_y", s.avg_y},
            {"max_y", s.max_y},
            {"y_init", s.y_init},
            {"y_final", s.y_final},
            {"max_u", s.max_u},
            {"max_z", s.max_z},
            {"max_abs_x", s.max_abs_x},
            {"u_bar", s.u_bar},
            {"max_delay", s.max_delay},
            {"violations", s.violations},
            {"violation_messages", s.violation_messages}};
  j["delay_bound"] = s.delay_bound ? json(*s.delay_bound) : json(nullptr);
  j["eps"] = result.eps ? json(*result.eps) : json(nullptr);
  return j;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "y_max,v,policy,avg_cost,avg_cost_per_hour,total_cost,r_bar,d_bar,max_u,max_z,max_abs_x,max_delay,"
                 "delay_bound,violations,error\n";
  for (const auto& p : points) {
    out << format_double(p.y_max) << ',' << format_double(p.v) << ',' << p.policy;
    if (p.summary) {
      const auto& s = *p.summary;
      out << ',' << format_double(s.avg_cost) << ',' << format_double(s.avg_cost_per_hour) << ','
          << format_double(s.total_cost) << ',' << format_double(s.r_bar) << ',' << format_double(s.d_bar) << ','
          << format_double(s.max_u) << ',' << format_double(s.max_z) << ',' << format_double(s.max_abs_x) << ','
          << s.max_delay << ',' << (s.delay_bound ? std::to_string(*s.delay_bound) : "") << ',' << s.violations
          << ",\n";
    } else {
      std::string msg = p.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",,,,,,,,,,," << msg << '\n';
    }
  }
}

void write_schemes_csv(std::ostream& out, const std::vector<SchemeRow>& rows) {
  auto ratio = [](const std::optional<double>& r) { return r ? format_double(*r) : std::string("n/a"); };
  out << "y_max,cost_a,cost_b,cost_c,cost_d,ratio_b,ratio_c,ratio_d,v_b,v_d,eps_c,eps_d,delta_max\n";
  for (const auto& r : rows) {
    out << format_double(r.y_max) << ',' << format_double(r.cost_a) << ',' << format_double(r.cost_b) << ','
        << format_double(r.cost_c) << ',' << format_double(r.cost_d) << ',' << ratio(r.ratio_b) << ','
        << ratio(r.ratio_c) << ',' << ratio(r.ratio_d) << ',' << format_double(r.v_b) << ',' << format_double(r.v_d)
        << ',' << format_double(r.eps_c) << ',' << format_double(r.eps_d) << ',' << r.delta_max << '\n';
  }
}

int exit_code(const RunSummary& summary) { return summary.violations ? 2 : 0; }

}  // namespace upscost
