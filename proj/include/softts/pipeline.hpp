#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "softts/plan.hpp"

namespace softts {

enum class Command { encode, labels, train, report, all };

std::string_view to_string(Command c);
Command command_from_string(std::string_view s);

struct RunOptions {
  bool resume = false;
  int workers = 0;                 // 0 uses the plan's train.workers
  std::ostream* log = nullptr;     // progress and notices; null is silent
};

struct RunSummary {
  std::size_t cells_total = 0;
  std::size_t cells_run = 0;
  std::size_t cells_skipped = 0;
  std::vector<std::string> failures;  // one line per failed cell or step
  std::vector<std::string> notices;

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

/// Runs one pipeline stage (or all of them) for a validated plan. Dataset names
/// are checked before any work starts; per-cell errors are collected rather
/// than thrown.
RunSummary run_pipeline(Command command, const ExperimentPlan& plan, const RunOptions& options = {});

}  // namespace softts
