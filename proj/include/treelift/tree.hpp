#ifndef TREELIFT_TREE_HPP
#define TREELIFT_TREE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treelift/data.hpp"

namespace treelift {

struct Hyperparams {
  int32_t max_depth = 4;
  int64_t min_samples_leaf = 1;
  double min_loss_reduction = 0.0;

  bool operator==(const Hyperparams&) const = default;
  std::string to_string() const;
};

enum class TreeTask { Outcome, Effect, Assignment };

std::string to_string(TreeTask t);
TreeTask tree_task_from_string(const std::string& s);

/// Per-arm sufficient statistics of the training rows that reached a leaf.
/// Carrying all of them (not just the fitted task's prediction) is what
/// makes leaf-function swapping possible after the fact.
struct LeafStats {
  std::vector<int64_t> count;          // [arm]
  std::vector<double> outcome_sum;     // [arm]
  std::vector<double> outcome_sq_sum;  // [arm]
  std::vector<double> weight_sum;      // [arm], weight = y / P(t)
  double transformed_sum = 0.0;        // causal trees only
  int64_t transformed_count = 0;

  int64_t rows() const;
};

struct TreeNode {
  int32_t feature = -1;   // -1 marks a leaf
  int32_t category = -1;  // rows with x[feature] == category go left
  int32_t left = -1;
  int32_t right = -1;
  int32_t leaf = -1;  // index into leaves when feature == -1
};

/// Binary decision tree over categorical features with one-vs-rest splits.
/// Outcome trees extend the feature set with treatment-as-a-feature (the
/// pseudo-feature index equals the schema's feature count).
///
/// All three prediction queries are answerable from any tree because every
/// leaf stores full LeafStats; the task tag records what the tree was fit
/// (or swapped) to, and policy constructors enforce it.
struct DecisionTree {
  static constexpr int32_t kFormatVersion = 1;

  Schema schema;
  uint64_t schema_hash = 0;
  TreeTask task = TreeTask::Outcome;
  int32_t effect_arm = -1;       // task == Effect: the arm this tree is presented as
  int32_t transformed_arm = -1;  // >= 0 iff fit as a causal tree on that arm's transform
  bool uses_treatment_feature = false;
  Hyperparams hp;
  std::vector<TreeNode> nodes;
  std::vector<LeafStats> leaves;
  std::vector<double> fallback_mean;  // per-arm training means over the full fit input
  double fallback_transformed_mean = 0.0;

  int leaf_count() const { return static_cast<int>(leaves.size()); }
  int depth() const;

  /// Leaf index reached by x (treat_code fills the treatment pseudo-feature
  /// when the tree has one; ignored otherwise).
  int32_t route(std::span<const int32_t> x, int32_t treat_code) const;

  /// Mean training outcome of `arm` at x's leaf; falls back to the global
  /// per-arm training mean when the leaf saw no rows of that arm.
  double predict_outcome(std::span<const int32_t> x, int arm) const;

  /// Predicted treatment effect of `arm` vs control. A causal tree queried
  /// for its own arm returns its leaf's mean transformed outcome; any other
  /// tree/arm uses the difference of predicted outcomes.
  double predict_effect(std::span<const int32_t> x, int arm) const;

  /// Arm with the largest leaf importance-weight sum, ties to lowest index.
  int32_t predict_assignment(std::span<const int32_t> x) const;

  double leaf_outcome(int32_t leaf, int arm) const;
};

/// Same structure, different leaf prediction function. Swapping to the
/// tree's own task is the identity on predictions.
DecisionTree swap_leaf_function(const DecisionTree& tree, TreeTask new_task,
                                int32_t effect_arm = -1);

/// Athey-Imbens transformed outcome for arm j vs control: rows restricted
/// to t in {0, j}; renormalized propensity p* = P(j)/(P(j)+P(0)); target
/// y/p* for treated rows and -y/(1-p*) for control rows. Its conditional
/// mean given x is the true CATE of arm j.
struct TransformedOutcome {
  int32_t arm = 0;
  double p_star = 0.0;
  std::vector<int32_t> rows;   // indices into the source dataset, in order
  std::vector<double> target;  // aligned with rows
};

TransformedOutcome transform_outcome(const Dataset& d, int arm);

/// Regression tree for E[Y | x, t] on features extended with the treatment;
/// split score is the reduction in sum of squared deviations of y.
DecisionTree fit_outcome_tree(const Dataset& d, const Hyperparams& hp);

/// Regression tree for the arm-j transformed outcome (a causal tree).
DecisionTree fit_causal_tree(const Dataset& d, int arm, const Hyperparams& hp);

/// Importance-weighted classification tree: class t, weight y/P(t); node
/// cost is total weight minus the best single arm's weight.
DecisionTree fit_assignment_tree(const Dataset& d, const Hyperparams& hp);

std::string tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const std::string& text);

}  // namespace treelift

#endif  // TREELIFT_TREE_HPP
