#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "autosmart/errors.hpp"

namespace autosmart {

struct ColumnData;
struct Table;

struct PhaseRecord {
  std::string name;
  double start_s = 0;
  double end_s = -1;  // -1 while the phase is open
  int64_t est_peak_bytes = 0;
};

/// Data-structure-arithmetic memory estimate for one flat frame. Widths are
/// fixed per kind: 4 bytes for reals and codes, avg list length x 4 + 8 for
/// multi-categorical, 8 for temporal, 1/8 for the missing mask.
struct MemoryEstimate {
  double bytes_per_row = 0;
  int64_t current_bytes = 0;
  int64_t headroom_bytes = 0;
};

MemoryEstimate estimate_table_memory(const Table& table, int64_t mem_budget_bytes);

/// Estimated bytes for one column of `n_rows` rows (same width rules).
double column_bytes_per_row(const ColumnData& column);

/// Largest row count that fits the headroom when each resident row may
/// transiently cost `multiplier` times its steady-state footprint.
int64_t max_rows_for_memory(const MemoryEstimate& est, double multiplier = 3.0);

/// Central wall-clock and memory ledger. All phase transitions and
/// affordability queries go through one tracker instance; callers may be
/// concurrent but every query is serialized by the caller design (the
/// pipeline is phase-sequential).
class BudgetTracker {
 public:
  using Clock = std::function<double()>;  // monotonic seconds

  BudgetTracker(double time_budget_s, int64_t mem_budget_bytes,
                Clock clock = {});

  double time_budget_s() const { return time_budget_s_; }
  int64_t mem_budget_bytes() const { return mem_budget_bytes_; }

  double elapsed_s() const;
  double remaining_s() const { return time_budget_s_ - elapsed_s(); }

  /// Closes the open phase, opens `phase`, and returns the remaining budget.
  /// Throws BudgetExhausted once the budget is used up; the caller is
  /// expected to jump to its fallback prediction path.
  double checkpoint(const std::string& phase);

  /// True when `estimated_cost_s` fits into the remaining time after holding
  /// back `reserve` as a fraction. Every decision is logged for audit.
  bool can_afford(double estimated_cost_s, double reserve);

  void note_memory(int64_t estimated_bytes);

  /// Closes the open phase (end of run).
  void finish();

  const std::vector<PhaseRecord>& phases() const { return phases_; }
  const std::vector<std::pair<std::string, bool>>& affordability_log() const {
    return afford_log_;
  }

  std::string phase_log_tsv() const;

 private:
  double time_budget_s_;
  int64_t mem_budget_bytes_;
  Clock clock_;
  double start_;
  std::vector<PhaseRecord> phases_;
  std::vector<std::pair<std::string, bool>> afford_log_;
};

}  // namespace autosmart
