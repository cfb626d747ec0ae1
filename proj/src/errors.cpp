#include "autosmart/errors.hpp"

namespace autosmart {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_table: return "MissingTable";
    case ErrorCode::missing_column: return "MissingColumn";
    case ErrorCode::kind_mismatch: return "KindMismatch";
    case ErrorCode::label_length_mismatch: return "LabelLengthMismatch";
    case ErrorCode::column_length_mismatch: return "ColumnLengthMismatch";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::unknown_feature_kind: return "UnknownFeatureKind";
    case ErrorCode::duplicate_table_name: return "DuplicateTableName";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::row_arity_error: return "RowArityError";
    case ErrorCode::value_parse_error: return "ValueParseError";
    case ErrorCode::invalid_spec: return "InvalidSpec";
    case ErrorCode::no_key_found: return "NoKeyFound";
    case ErrorCode::cyclic_relation_graph: return "CyclicRelationGraph";
    case ErrorCode::duplicate_right_key: return "DuplicateRightKey";
    case ErrorCode::missing_labels: return "MissingLabels";
    case ErrorCode::degenerate_labels: return "DegenerateLabels";
    case ErrorCode::column_mismatch: return "ColumnMismatch";
    case ErrorCode::single_class: return "SingleClass";
    case ErrorCode::non_positive_slope: return "NonPositiveSlope";
    case ErrorCode::degenerate_denominator: return "DegenerateDenominator";
    case ErrorCode::empty_list: return "EmptyList";
    case ErrorCode::budget_exhausted: return "BudgetExhausted";
  }
  return "UnknownError";
}

}  // namespace autosmart
