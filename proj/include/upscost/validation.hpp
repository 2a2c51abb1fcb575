#pragma once

// Self-check suites: closed-form solvers against brute force, controller
// invariants over randomized runs, and fixed worked examples.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "upscost/model.hpp"

namespace upscost {

using P3FlatSolver = std::function<ControlDecision(double x, double v, double w, double price,
                                                   const BatteryConfig& cfg, double p_peak)>;

struct ValidationOptions {
  std::size_t n_random_states = 10000;  // per solver suite; 0 runs the deterministic suites only
  std::size_t invariant_slots = 100000; // per controller
  std::uint64_t seed = 1;
  P3FlatSolver p3_flat;                 // empty: solve_p3_flat
  std::size_t max_messages = 5;         // offending states kept per suite
};

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::vector<std::string> messages;
  double seconds = 0.0;

  bool passed() const { return failures == 0; }
};

struct ValidationReport {
  std::vector<SuiteResult> suites;

  bool passed() const;
};

ValidationReport run_validation(const ValidationOptions& opts);

SuiteResult p3_flat_suite(const ValidationOptions& opts);
SuiteResult p3_convex_suite(const ValidationOptions& opts);
SuiteResult p3_flat_slope_suite(const ValidationOptions& opts);
SuiteResult p6_flat_suite(const ValidationOptions& opts);
SuiteResult basic_invariant_suite(const ValidationOptions& opts);
SuiteResult extended_invariant_suite(const ValidationOptions& opts);
SuiteResult worked_examples_suite(const ValidationOptions& opts);

void write_report(std::ostream& out, const ValidationReport& report);

}  // namespace upscost
