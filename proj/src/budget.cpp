#include "autosmart/budget.hpp"

#include <cmath>
#include <sstream>

#include "autosmart/column.hpp"

namespace autosmart {

double column_bytes_per_row(const ColumnData& column) {
  double payload = 0;
  switch (column.kind) {
    case FeatureKind::categorical:
    case FeatureKind::numerical:
      payload = 4.0;
      break;
    case FeatureKind::multi_categorical: {
      double avg_len = 0;
      if (column.rows > 0 && column.offsets.size() == column.rows + 1)
        avg_len = static_cast<double>(column.offsets.back()) /
                  static_cast<double>(column.rows);
      payload = avg_len * 4.0 + 8.0;
      break;
    }
    case FeatureKind::temporal:
      payload = 8.0;
      break;
  }
  return payload + 0.125;  // missing mask
}

MemoryEstimate estimate_table_memory(const Table& table,
                                     int64_t mem_budget_bytes) {
  MemoryEstimate est;
  for (const auto& col : table.columns) est.bytes_per_row += column_bytes_per_row(col);
  est.current_bytes = static_cast<int64_t>(
      std::llround(est.bytes_per_row * static_cast<double>(table.n_rows)));
  est.headroom_bytes = mem_budget_bytes - est.current_bytes;
  if (est.headroom_bytes < 0) est.headroom_bytes = 0;
  return est;
}

int64_t max_rows_for_memory(const MemoryEstimate& est, double multiplier) {
  if (est.bytes_per_row <= 0) return 0;
  return static_cast<int64_t>(
      std::floor(static_cast<double>(est.headroom_bytes) /
                 (est.bytes_per_row * multiplier)));
}

namespace {

double steady_now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

BudgetTracker::BudgetTracker(double time_budget_s, int64_t mem_budget_bytes,
                             Clock clock)
    : time_budget_s_(time_budget_s),
      mem_budget_bytes_(mem_budget_bytes),
      clock_(clock ? std::move(clock) : Clock(steady_now)),
      start_(clock_()) {}

double BudgetTracker::elapsed_s() const { return clock_() - start_; }

double BudgetTracker::checkpoint(const std::string& phase) {
  const double t = elapsed_s();
  if (!phases_.empty() && phases_.back().end_s < 0) phases_.back().end_s = t;
  phases_.push_back(PhaseRecord{phase, t, -1, 0});
  const double remaining = time_budget_s_ - t;
  if (remaining <= 0)
    raise(ErrorCode::budget_exhausted,
          "phase '" + phase + "' reached with " + std::to_string(t) +
              "s elapsed of " + std::to_string(time_budget_s_) + "s");
  return remaining;
}

bool BudgetTracker::can_afford(double estimated_cost_s, double reserve) {
  const bool yes = estimated_cost_s <= remaining_s() * (1.0 - reserve);
  afford_log_.emplace_back(phases_.empty() ? std::string("-") : phases_.back().name,
                           yes);
  return yes;
}

void BudgetTracker::note_memory(int64_t estimated_bytes) {
  if (!phases_.empty() && estimated_bytes > phases_.back().est_peak_bytes)
    phases_.back().est_peak_bytes = estimated_bytes;
}

void BudgetTracker::finish() {
  if (!phases_.empty() && phases_.back().end_s < 0)
    phases_.back().end_s = elapsed_s();
}

std::string BudgetTracker::phase_log_tsv() const {
  std::ostringstream out;
  out << "phase\tstart_s\tend_s\test_peak_bytes\n";
  for (const auto& p : phases_) {
    out << p.name << '\t' << p.start_s << '\t'
        << (p.end_s < 0 ? elapsed_s() : p.end_s) << '\t' << p.est_peak_bytes
        << '\n';
  }
  return out.str();
}

}  // namespace autosmart
