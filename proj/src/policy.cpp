#include "treelift/policy.hpp"

#include <limits>

#include <json.hpp>

namespace treelift {

using json = nlohmann::ordered_json;

int32_t argmax_lowest_tie(std::span<const double> scores) {
  int32_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > best_v) {
      best_v = scores[j];
      best = static_cast<int32_t>(j);
    }
  }
  return best;
}

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Outcome: return "outcome";
    case PolicyKind::CausalEffect: return "causal-effect";
    case PolicyKind::Assignment: return "assignment";
    case PolicyKind::BestOnAverage: return "best-on-average";
    case PolicyKind::Constant: return "constant";
  }
  return "constant";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "outcome") return PolicyKind::Outcome;
  if (s == "causal-effect") return PolicyKind::CausalEffect;
  if (s == "assignment") return PolicyKind::Assignment;
  if (s == "best-on-average") return PolicyKind::BestOnAverage;
  if (s == "constant") return PolicyKind::Constant;
  throw data_error("unknown policy kind: " + s);
}

Policy Policy::outcome(DecisionTree tree, Provenance prov) {
  if (tree.task != TreeTask::Outcome)
    throw data_error("outcome policy requires an outcome-task tree");
  Policy p;
  p.kind_ = PolicyKind::Outcome;
  p.schema_ = tree.schema;
  p.trees_.push_back(std::move(tree));
  p.prov_ = prov;
  return p;
}

Policy Policy::causal_effect(std::vector<DecisionTree> trees_by_arm, Provenance prov) {
  if (trees_by_arm.empty()) throw data_error("causal-effect policy requires arm models");
  const Schema& schema = trees_by_arm.front().schema;
  if (static_cast<int32_t>(trees_by_arm.size()) != schema.arm_count - 1)
    throw data_error("causal-effect policy requires one model per non-control arm");
  for (size_t i = 0; i < trees_by_arm.size(); ++i) {
    const auto& t = trees_by_arm[i];
    if (t.task != TreeTask::Effect || t.effect_arm != static_cast<int32_t>(i + 1))
      throw data_error("causal-effect policy requires effect-task trees ordered by arm");
    if (!(t.schema == schema)) throw data_error("arm models disagree on schema");
  }
  Policy p;
  p.kind_ = PolicyKind::CausalEffect;
  p.schema_ = schema;
  p.trees_ = std::move(trees_by_arm);
  p.prov_ = prov;
  return p;
}

Policy Policy::assignment(DecisionTree tree, Provenance prov) {
  if (tree.task != TreeTask::Assignment)
    throw data_error("assignment policy requires an assignment-task tree");
  Policy p;
  p.kind_ = PolicyKind::Assignment;
  p.schema_ = tree.schema;
  p.trees_.push_back(std::move(tree));
  p.prov_ = prov;
  return p;
}

Policy Policy::constant(Schema schema, int32_t arm, Provenance prov) {
  if (arm < 0 || arm >= schema.arm_count) throw data_error("constant policy arm out of range");
  Policy p;
  p.kind_ = PolicyKind::Constant;
  p.schema_ = std::move(schema);
  p.constant_arm_ = arm;
  p.prov_ = prov;
  return p;
}

int32_t Policy::apply(std::span<const int32_t> x) const {
  if (!schema_.conforms(x)) throw data_error("query does not conform to the policy's schema");
  switch (kind_) {
    case PolicyKind::Constant:
    case PolicyKind::BestOnAverage:
      return constant_arm_;
    case PolicyKind::Outcome: {
      const DecisionTree& t = trees_.front();
      int32_t best = 0;
      double best_v = -std::numeric_limits<double>::infinity();
      for (int32_t j = 0; j < schema_.arm_count; ++j) {
        const double v = t.predict_outcome(x, j);
        if (v > best_v) {
          best_v = v;
          best = j;
        }
      }
      return best;
    }
    case PolicyKind::CausalEffect: {
      // Control enters as an explicit zero-effect candidate, so control is
      // chosen exactly when no arm has a positive predicted effect.
      int32_t best = 0;
      double best_v = 0.0;
      for (int32_t j = 1; j < schema_.arm_count; ++j) {
        const double v = trees_[j - 1].predict_effect(x, j);
        if (v > best_v) {
          best_v = v;
          best = j;
        }
      }
      return best;
    }
    case PolicyKind::Assignment:
      return trees_.front().predict_assignment(x);
  }
  return 0;
}

Policy best_on_average(const Dataset& d, Provenance prov) {
  const int k = d.schema.arm_count;
  std::vector<double> sum(k, 0.0);
  std::vector<int64_t> cnt(k, 0);
  for (size_t i = 0; i < d.row_count(); ++i) {
    sum[d.treatment[i]] += d.outcome[i];
    cnt[d.treatment[i]]++;
  }
  std::vector<double> mean(k);
  for (int j = 0; j < k; ++j) {
    if (cnt[j] == 0) throw data_error("arm " + std::to_string(j) + " has no observations");
    mean[j] = sum[j] / static_cast<double>(cnt[j]);
  }
  Policy p = Policy::constant(d.schema, argmax_lowest_tie(mean), prov);
  p.kind_ = PolicyKind::BestOnAverage;
  return p;
}

std::vector<int32_t> assignment_vector(const Policy& policy, const Dataset& d) {
  if (policy.schema_hash() != d.schema.hash())
    throw data_error("policy schema does not match dataset schema");
  std::vector<int32_t> out(d.row_count());
  const int m = d.schema.feature_count();
  std::vector<int32_t> x(m);
  for (size_t i = 0; i < d.row_count(); ++i) {
    d.gather_row(i, x);
    out[i] = policy.apply(x);
  }
  return out;
}

// declared in tree.cpp
json tree_to_json_obj(const DecisionTree& t);
DecisionTree tree_from_json_obj(const json& j);

std::string Policy::to_json() const {
  json j;
  j["format_version"] = 1;
  j["kind"] = treelift::to_string(kind_);
  j["schema"] = {{"feature_cardinalities", schema_.feature_cardinalities},
                 {"arm_count", schema_.arm_count}};
  j["schema_hash"] = schema_.hash();
  j["constant_arm"] = constant_arm_;
  j["provenance"] = {{"data_hash", prov_.data_hash},
                     {"seed", prov_.seed},
                     {"hyperparams",
                      {{"max_depth", prov_.hp.max_depth},
                       {"min_samples_leaf", prov_.hp.min_samples_leaf},
                       {"min_loss_reduction", prov_.hp.min_loss_reduction}}}};
  json trees = json::array();
  for (const DecisionTree& t : trees_) trees.push_back(tree_to_json_obj(t));
  j["trees"] = std::move(trees);
  return j.dump(2);
}

Policy Policy::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.contains("format_version") || j.at("format_version").get<int>() != 1)
    throw data_error("unsupported policy format_version");
  Policy p;
  p.kind_ = policy_kind_from_string(j.at("kind").get<std::string>());
  p.schema_.feature_cardinalities =
      j.at("schema").at("feature_cardinalities").get<std::vector<int32_t>>();
  p.schema_.arm_count = j.at("schema").at("arm_count").get<int32_t>();
  p.constant_arm_ = j.at("constant_arm").get<int32_t>();
  const auto& prov = j.at("provenance");
  p.prov_.data_hash = prov.at("data_hash").get<uint64_t>();
  p.prov_.seed = prov.at("seed").get<uint64_t>();
  p.prov_.hp.max_depth = prov.at("hyperparams").at("max_depth").get<int32_t>();
  p.prov_.hp.min_samples_leaf = prov.at("hyperparams").at("min_samples_leaf").get<int64_t>();
  p.prov_.hp.min_loss_reduction = prov.at("hyperparams").at("min_loss_reduction").get<double>();
  for (const auto& t : j.at("trees")) p.trees_.push_back(tree_from_json_obj(t));

  // re-run the constructor validations
  switch (p.kind_) {
    case PolicyKind::Outcome:
      if (p.trees_.size() != 1 || p.trees_.front().task != TreeTask::Outcome)
        throw data_error("outcome policy document requires one outcome-task tree");
      break;
    case PolicyKind::CausalEffect:
      if (static_cast<int32_t>(p.trees_.size()) != p.schema_.arm_count - 1)
        throw data_error("causal-effect policy document requires one tree per non-control arm");
      break;
    case PolicyKind::Assignment:
      if (p.trees_.size() != 1 || p.trees_.front().task != TreeTask::Assignment)
        throw data_error("assignment policy document requires one assignment-task tree");
      break;
    default:
      break;
  }
  return p;
}

}  // namespace treelift
