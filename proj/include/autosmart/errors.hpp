#pragma once

#include <stdexcept>
#include <string>

namespace autosmart {

enum class ErrorCode {
  // bundle validation
  missing_table,
  missing_column,
  kind_mismatch,
  label_length_mismatch,
  column_length_mismatch,
  // ingest
  parse_error,
  unknown_feature_kind,
  duplicate_table_name,
  io_error,
  row_arity_error,
  value_parse_error,
  invalid_spec,
  // preprocess
  no_key_found,
  // merge
  cyclic_relation_graph,
  duplicate_right_key,
  // feateng / gbdt
  missing_labels,
  degenerate_labels,
  column_mismatch,
  // tuner / evaluation
  single_class,
  non_positive_slope,
  degenerate_denominator,
  empty_list,
  // controller
  budget_exhausted,
};

const char* error_code_name(ErrorCode code);

/// All recoverable failures carry a code so callers can branch on the
/// category without string matching; the message names the offending element.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace autosmart
