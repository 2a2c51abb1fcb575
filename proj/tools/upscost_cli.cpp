#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "upscost/harness.hpp"
#include "upscost/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace upscost;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool check_invariants = false;
  std::optional<std::size_t> slots;
  std::string v;
  std::optional<double> ymax;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_flag("--check-invariants", o.check_invariants, "audit every slot record");
  cmd->add_option("--slots", o.slots, "number of slots (0: whole input file)");
  cmd->add_option("--v", o.v, "control parameter V, a number or \"max\"");
  cmd->add_option("--ymax", o.ymax, "battery capacity y_max");
}

ExperimentConfig load(const Overrides& o) {
  std::ifstream in(o.config);
  if (!in) throw ConfigError("cannot open config " + o.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + o.config + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + o.config + ": expected a JSON object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.check_invariants) j["check_invariants"] = true;
  if (o.slots) j["n_slots"] = *o.slots;
  if (!o.v.empty()) {
    if (o.v == "max") {
      j["v"] = "max";
    } else {
      try {
        std::size_t used = 0;
        j["v"] = std::stod(o.v, &used);
        if (used != o.v.size()) throw std::invalid_argument(o.v);
      } catch (const std::logic_error&) {
        throw ConfigError("--v: expected a number or \"max\", got '" + o.v + "'");
      }
    }
  }
  if (o.ymax) {
    if (!j.contains("battery") || !j["battery"].is_object()) throw ConfigError("--ymax: config has no battery section");
    j["battery"]["y_max"] = *o.ymax;
  }
  return parse_config(j);
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw ConfigError("cannot write " + (dir / name).string());
  return f;
}

std::string money(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

int finish_run(const RunResult& res, const fs::path& out) {
  {
    auto f = open_out(out, "slots.csv");
    write_slots_csv(f, res.records);
  }
  {
    auto f = open_out(out, "summary.json");
    f << summary_json(res).dump(2) << '\n';
  }
  const auto& s = res.summary;
  std::cout << res.policy << ": " << s.slots << " slots, avg cost " << money(s.avg_cost) << "/slot, "
            << money(s.avg_cost_per_hour) << "/hour, total " << money(s.total_cost) << '\n';
  for (const auto& m : s.violation_messages) std::cerr << "violation: " << m << '\n';
  return exit_code(s);
}

int cmd_simulate(const Overrides& o) { return finish_run(simulate(load(o)), o.out); }

int cmd_oracle(const Overrides& o) {
  auto cfg = load(o);
  if (cfg.model != ModelKind::basic) throw ConfigError("oracle runs on the basic model only");
  cfg.policy = PolicyKind::oracle;
  return finish_run(simulate(cfg), o.out);
}

int cmd_sweep(const Overrides& o) {
  const auto cfg = load(o);
  const auto points = sweep(cfg);
  {
    auto f = open_out(o.out, "sweep.csv");
    write_sweep_csv(f, points);
  }
  int code = 0;
  std::cout << std::setw(10) << cfg.sweep_axis << std::setw(10) << "V" << std::setw(12) << "avg cost"
            << "  policy\n";
  for (const auto& p : points) {
    std::cout << std::setw(10) << p.value << std::setw(10) << money(p.v);
    if (p.summary) {
      std::cout << std::setw(12) << money(p.summary->avg_cost) << "  " << p.policy << '\n';
      if (p.summary->violations) {
        code = 2;
        for (const auto& m : p.summary->violation_messages) std::cerr << "violation: " << m << '\n';
      }
    } else {
      std::cout << std::setw(12) << "error" << "  " << p.error << '\n';
      if (code == 0) code = 1;
    }
  }
  return code;
}

int cmd_compare(const Overrides& o) {
  const auto rows = compare_schemes(load(o));
  {
    auto f = open_out(o.out, "schemes.csv");
    write_schemes_csv(f, rows);
  }
  auto pct = [](const std::optional<double>& r) { return r ? money(100.0 * *r) + "%" : std::string("n/a"); };
  std::cout << std::setw(8) << "y_max" << std::setw(10) << "B" << std::setw(10) << "C" << std::setw(10) << "D"
            << '\n';
  for (const auto& r : rows)
    std::cout << std::setw(8) << r.y_max << std::setw(10) << pct(r.ratio_b) << std::setw(10) << pct(r.ratio_c)
              << std::setw(10) << pct(r.ratio_d) << '\n';
  return 0;
}

int cmd_gen_trace(const Overrides& o) {
  const auto cfg = load(o);
  const auto prep = prepare(cfg);
  auto f = open_out(o.out, "trace.csv");
  write_trace_csv(f, prep.trace);
  std::cout << "wrote " << prep.trace.size() << " slots to " << (fs::path(o.out) / "trace.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery and workload-postponement cost controller toolkit"};
  app.require_subcommand(1);

  Overrides o;
  auto* sim = app.add_subcommand("simulate", "run one policy and write slots.csv and summary.json");
  add_common(sim, o);
  auto* swp = app.add_subcommand("sweep", "one run per y_max or V value, written to sweep.csv");
  add_common(swp, o);
  auto* cmp = app.add_subcommand("compare-schemes", "grid only, battery, postponement and both, written to schemes.csv");
  add_common(cmp, o);
  auto* orc = app.add_subcommand("oracle", "offline optimum for the configured trace");
  add_common(orc, o);
  auto* gen = app.add_subcommand("gen-trace", "write the configured trace to trace.csv");
  add_common(gen, o);

  ValidationOptions vopts;
  auto* val = app.add_subcommand("validate", "solver equivalence and invariant suites");
  val->add_option("--states", vopts.n_random_states, "random states per solver suite (0: worked examples only)")
      ->capture_default_str();
  val->add_option("--invariant-slots", vopts.invariant_slots, "randomized slots per controller")->capture_default_str();
  val->add_option("--seed", vopts.seed, "random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*swp) return cmd_sweep(o);
    if (*cmp) return cmd_compare(o);
    if (*orc) return cmd_oracle(o);
    if (*gen) return cmd_gen_trace(o);
    if (*val) {
      const auto report = run_validation(vopts);
      write_report(std::cout, report);
      return report.passed() ? 0 : 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleDecision& e) {
    std::cerr << "infeasible decision: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
