#ifndef TREELIFT_DATA_HPP
#define TREELIFT_DATA_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treelift/errors.hpp"

namespace treelift {

/// Feature space and treatment arms of an experiment log. All features are
/// categorical; codes run 0..cardinality-1. Arm 0 is the control/baseline.
struct Schema {
  std::vector<int32_t> feature_cardinalities;
  int32_t arm_count = 0;

  int feature_count() const { return static_cast<int>(feature_cardinalities.size()); }
  bool conforms(std::span<const int32_t> x) const;
  uint64_t hash() const;
  bool operator==(const Schema&) const = default;
};

struct Observation {
  std::vector<int32_t> features;
  int32_t treatment = 0;
  double outcome = 0.0;
  double propensity = 1.0;
};

/// Columnar log of a randomized experiment. Propensities are design
/// constants per arm: every row's propensity is propensity_table[t].
/// Immutable after construction by convention; all operations on it are
/// pure given their inputs.
struct Dataset {
  Schema schema;
  std::vector<std::vector<int32_t>> features;  // [feature][row]
  std::vector<int32_t> treatment;              // [row]
  std::vector<double> outcome;                 // [row]
  std::vector<double> propensity_table;        // [arm]

  size_t row_count() const { return treatment.size(); }
  double propensity(size_t row) const { return propensity_table[treatment[row]]; }
  Observation observation(size_t row) const;
  void gather_row(size_t row, std::span<int32_t> out) const;

  /// Content hash over schema, propensity table and all columns. Identical
  /// for CSV and binary round-trips of the same data.
  uint64_t content_hash() const;

  static Dataset from_observations(const Schema& schema,
                                   const std::vector<double>& propensity_table,
                                   const std::vector<Observation>& rows);
};

/// Copy of the selected rows, in the order given.
Dataset subset(const Dataset& d, std::span<const int32_t> rows);

struct Violation {
  std::optional<int64_t> row;  // absent for dataset-level rules
  std::string rule;
};

/// Checks every Dataset invariant. Violations are data, not failures: the
/// list is empty iff the dataset is well formed.
std::vector<Violation> validate_dataset(const Dataset& d);

struct BalanceCell {
  int32_t feature = 0;
  int32_t arm = 0;
  double l1_distance = 0.0;  // sum_c |p_arm(c) - p_pooled(c)|
  bool flagged = false;
};

struct BalanceReport {
  std::vector<BalanceCell> cells;  // feature-major, arm-minor
  double threshold = 0.0;
  bool any_flagged() const;
};

/// Randomization diagnostic: L1 distance between each arm's per-feature
/// category distribution and the pooled distribution.
BalanceReport balance_check(const Dataset& d, double threshold = 0.02);

/// Partition of rows into folds, stratified by treatment arm.
struct FoldPlan {
  int32_t fold_count = 0;
  std::vector<int32_t> assignment;  // [row] -> fold index
  uint64_t seed = 0;

  std::vector<int32_t> rows_in_fold(int32_t fold) const;
  std::vector<int32_t> rows_not_in_fold(int32_t fold) const;
};

/// Deterministic stratified folds: per (fold, arm), counts differ from
/// exact proportionality by at most 1. Requires every arm to have at least
/// fold_count rows.
FoldPlan make_folds(const Dataset& d, int fold_count, uint64_t seed);

}  // namespace treelift

#endif  // TREELIFT_DATA_HPP
