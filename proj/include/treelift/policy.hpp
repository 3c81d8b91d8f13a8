#ifndef TREELIFT_POLICY_HPP
#define TREELIFT_POLICY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treelift/synth.hpp"
#include "treelift/tree.hpp"

namespace treelift {

/// Shared argmax convention: highest value wins, ties go to the lowest index.
int32_t argmax_lowest_tie(std::span<const double> scores);

enum class PolicyKind { Outcome, CausalEffect, Assignment, BestOnAverage, Constant };

std::string to_string(PolicyKind k);
PolicyKind policy_kind_from_string(const std::string& s);

struct Provenance {
  uint64_t data_hash = 0;
  uint64_t seed = 0;
  Hyperparams hp;
};

/// A total, deterministic map from feature vectors to treatment arms.
/// Immutable after construction; apply() is pure.
class Policy {
 public:
  static Policy outcome(DecisionTree tree, Provenance prov = {});
  static Policy causal_effect(std::vector<DecisionTree> trees_by_arm, Provenance prov = {});
  static Policy assignment(DecisionTree tree, Provenance prov = {});
  static Policy constant(Schema schema, int32_t arm, Provenance prov = {});

  int32_t apply(std::span<const int32_t> x) const;

  PolicyKind kind() const { return kind_; }
  const Schema& schema() const { return schema_; }
  uint64_t schema_hash() const { return schema_.hash(); }
  const Provenance& provenance() const { return prov_; }
  int32_t constant_arm() const { return constant_arm_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  std::string to_json() const;
  static Policy from_json(const std::string& text);

 private:
  Policy() = default;
  friend Policy best_on_average(const Dataset& d, Provenance prov);
  PolicyKind kind_ = PolicyKind::Constant;
  Schema schema_;
  std::vector<DecisionTree> trees_;
  int32_t constant_arm_ = 0;
  Provenance prov_;
};

/// Constant policy at the arm with the highest sample mean outcome
/// (the standard A/B test winner). Errors if any arm is empty.
Policy best_on_average(const Dataset& d, Provenance prov = {});

std::vector<int32_t> assignment_vector(const Policy& policy, const Dataset& d);

inline double true_policy_value(const Policy& policy, const Dataset& d,
                                const SyntheticTruth& truth) {
  return true_policy_value(assignment_vector(policy, d), d, truth);
}

inline double true_regret(const Policy& policy, const Dataset& d, const SyntheticTruth& truth) {
  return true_regret(assignment_vector(policy, d), d, truth);
}

}  // namespace treelift

#endif  // TREELIFT_POLICY_HPP
