#include "treelift/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

namespace treelift {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// split criteria
// ---------------------------------------------------------------------------

// Sum-of-squared-deviations criterion for regression targets.
struct RegressionCriterion {
  const double* target = nullptr;

  struct Agg {
    int64_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;
  };

  std::vector<int64_t> cell_n;
  std::vector<double> cell_sum;
  std::vector<double> cell_sumsq;

  void init(size_t total_cells) {
    cell_n.assign(total_cells, 0);
    cell_sum.assign(total_cells, 0.0);
    cell_sumsq.assign(total_cells, 0.0);
  }
  void reset() {
    std::fill(cell_n.begin(), cell_n.end(), 0);
    std::fill(cell_sum.begin(), cell_sum.end(), 0.0);
    std::fill(cell_sumsq.begin(), cell_sumsq.end(), 0.0);
  }
  inline void add(size_t cell, int32_t row) {
    const double z = target[row];
    cell_n[cell]++;
    cell_sum[cell] += z;
    cell_sumsq[cell] += z * z;
  }
  Agg node_agg(std::span<const int32_t> rows) const {
    Agg a;
    for (int32_t r : rows) {
      const double z = target[r];
      a.n++;
      a.sum += z;
      a.sumsq += z * z;
    }
    return a;
  }
  Agg cell_agg(size_t cell) const { return {cell_n[cell], cell_sum[cell], cell_sumsq[cell]}; }
  static Agg remainder(const Agg& node, const Agg& left) {
    return {node.n - left.n, node.sum - left.sum, node.sumsq - left.sumsq};
  }
  static double loss(const Agg& a) {
    return a.n > 0 ? a.sumsq - a.sum * a.sum / static_cast<double>(a.n) : 0.0;
  }
};

// Importance-weighted misclassification criterion: node cost is the total
// weight minus the best single arm's weight.
struct AssignmentCriterion {
  const int32_t* cls = nullptr;
  const double* weight = nullptr;
  int k = 0;

  struct Agg {
    int64_t n = 0;
    double total = 0.0;
    std::vector<double> per_arm;
  };

  std::vector<int64_t> cell_n;
  std::vector<double> cell_w;  // [cell * k + arm]

  void init(size_t total_cells) {
    cell_n.assign(total_cells, 0);
    cell_w.assign(total_cells * k, 0.0);
  }
  void reset() {
    std::fill(cell_n.begin(), cell_n.end(), 0);
    std::fill(cell_w.begin(), cell_w.end(), 0.0);
  }
  inline void add(size_t cell, int32_t row) {
    cell_n[cell]++;
    cell_w[cell * k + cls[row]] += weight[row];
  }
  Agg node_agg(std::span<const int32_t> rows) const {
    Agg a;
    a.per_arm.assign(k, 0.0);
    for (int32_t r : rows) {
      a.n++;
      a.total += weight[r];
      a.per_arm[cls[r]] += weight[r];
    }
    return a;
  }
  Agg cell_agg(size_t cell) const {
    Agg a;
    a.n = cell_n[cell];
    a.per_arm.assign(cell_w.begin() + cell * k, cell_w.begin() + (cell + 1) * k);
    a.total = 0.0;
    for (double w : a.per_arm) a.total += w;
    return a;
  }
  static Agg remainder(const Agg& node, const Agg& left) {
    Agg a;
    a.n = node.n - left.n;
    a.total = node.total - left.total;
    a.per_arm.resize(node.per_arm.size());
    for (size_t j = 0; j < node.per_arm.size(); ++j)
      a.per_arm[j] = node.per_arm[j] - left.per_arm[j];
    return a;
  }
  static double loss(const Agg& a) {
    double best = 0.0;
    for (double w : a.per_arm) best = std::max(best, w);
    return a.total - best;
  }
};

// ---------------------------------------------------------------------------
// generic grower
// ---------------------------------------------------------------------------

struct LeafContext {
  const int32_t* treatment = nullptr;
  const double* outcome = nullptr;
  const double* weight = nullptr;       // y / P(t)
  const double* transformed = nullptr;  // causal trees only
  int k = 0;
};

LeafStats build_leaf_stats(std::span<const int32_t> rows, const LeafContext& lc) {
  LeafStats s;
  s.count.assign(lc.k, 0);
  s.outcome_sum.assign(lc.k, 0.0);
  s.outcome_sq_sum.assign(lc.k, 0.0);
  s.weight_sum.assign(lc.k, 0.0);
  for (int32_t r : rows) {
    const int32_t t = lc.treatment[r];
    const double y = lc.outcome[r];
    s.count[t]++;
    s.outcome_sum[t] += y;
    s.outcome_sq_sum[t] += y * y;
    s.weight_sum[t] += lc.weight[r];
    if (lc.transformed) {
      s.transformed_sum += lc.transformed[r];
      s.transformed_count++;
    }
  }
  return s;
}

template <class Crit>
class Grower {
 public:
  Grower(std::vector<const int32_t*> cols, std::vector<int32_t> cards, const Hyperparams& hp,
         Crit crit, LeafContext lc)
      : cols_(std::move(cols)), cards_(std::move(cards)), hp_(hp), crit_(std::move(crit)), lc_(lc) {
    cell_offset_.resize(cols_.size());
    size_t total = 0;
    for (size_t f = 0; f < cols_.size(); ++f) {
      cell_offset_[f] = total;
      total += static_cast<size_t>(cards_[f]);
    }
    crit_.init(total);
  }

  void grow(DecisionTree& tree, std::vector<int32_t>& rows) {
    tree_ = &tree;
    build(std::span<int32_t>(rows), 0);
  }

 private:
  int32_t build(std::span<int32_t> rows, int depth) {
    const auto node = crit_.node_agg(rows);
    const double node_loss = Crit::loss(node);

    int32_t best_f = -1, best_v = -1;
    int64_t best_left_n = 0;
    if (depth < hp_.max_depth && node.n >= 2 * hp_.min_samples_leaf) {
      crit_.reset();
      for (int32_t r : rows) {
        for (size_t f = 0; f < cols_.size(); ++f) {
          crit_.add(cell_offset_[f] + static_cast<size_t>(cols_[f][r]), r);
        }
      }
      // Ascending (feature, category) scan with a strict improvement test
      // gives the documented lowest-(feature, category) tie rule.
      double best_score = hp_.min_loss_reduction;
      for (size_t f = 0; f < cols_.size(); ++f) {
        for (int32_t v = 0; v < cards_[f]; ++v) {
          const auto left = crit_.cell_agg(cell_offset_[f] + static_cast<size_t>(v));
          if (left.n < hp_.min_samples_leaf || node.n - left.n < hp_.min_samples_leaf) continue;
          const auto right = Crit::remainder(node, left);
          const double score = node_loss - Crit::loss(left) - Crit::loss(right);
          if (score > best_score && score > 0.0) {
            best_score = score;
            best_f = static_cast<int32_t>(f);
            best_v = v;
            best_left_n = left.n;
          }
        }
      }
    }

    if (best_f < 0) {
      const int32_t idx = static_cast<int32_t>(tree_->nodes.size());
      tree_->nodes.push_back(TreeNode{});
      tree_->nodes[idx].leaf = static_cast<int32_t>(tree_->leaves.size());
      tree_->leaves.push_back(build_leaf_stats(rows, lc_));
      return idx;
    }

    // stable partition: matching rows first, original order kept on both sides
    left_buf_.clear();
    right_buf_.clear();
    const int32_t* col = cols_[best_f];
    for (int32_t r : rows) {
      if (col[r] == best_v)
        left_buf_.push_back(r);
      else
        right_buf_.push_back(r);
    }
    std::copy(left_buf_.begin(), left_buf_.end(), rows.begin());
    std::copy(right_buf_.begin(), right_buf_.end(), rows.begin() + best_left_n);

    const int32_t idx = static_cast<int32_t>(tree_->nodes.size());
    tree_->nodes.push_back(TreeNode{});
    tree_->nodes[idx].feature = best_f;
    tree_->nodes[idx].category = best_v;
    const int32_t left_idx = build(rows.first(best_left_n), depth + 1);
    tree_->nodes[idx].left = left_idx;
    const int32_t right_idx = build(rows.subspan(best_left_n), depth + 1);
    tree_->nodes[idx].right = right_idx;
    return idx;
  }

  std::vector<const int32_t*> cols_;
  std::vector<int32_t> cards_;
  std::vector<size_t> cell_offset_;
  Hyperparams hp_;
  Crit crit_;
  LeafContext lc_;
  DecisionTree* tree_ = nullptr;
  std::vector<int32_t> left_buf_;
  std::vector<int32_t> right_buf_;
};

void check_hyperparams(const Hyperparams& hp) {
  if (hp.max_depth < 0) throw data_error("max_depth must be >= 0");
  if (hp.min_samples_leaf < 1) throw data_error("min_samples_leaf must be >= 1");
  if (hp.min_loss_reduction < 0.0) throw data_error("min_loss_reduction must be >= 0");
}

std::vector<double> per_arm_means(const Dataset& d) {
  const int k = d.schema.arm_count;
  std::vector<double> sum(k, 0.0);
  std::vector<int64_t> cnt(k, 0);
  double total = 0.0;
  for (size_t i = 0; i < d.row_count(); ++i) {
    sum[d.treatment[i]] += d.outcome[i];
    cnt[d.treatment[i]]++;
    total += d.outcome[i];
  }
  const double overall = d.row_count() > 0 ? total / static_cast<double>(d.row_count()) : 0.0;
  std::vector<double> mean(k);
  for (int j = 0; j < k; ++j)
    mean[j] = cnt[j] > 0 ? sum[j] / static_cast<double>(cnt[j]) : overall;
  return mean;
}

std::vector<double> row_weights(const Dataset& d) {
  std::vector<double> w(d.row_count());
  for (size_t i = 0; i < d.row_count(); ++i) w[i] = d.outcome[i] / d.propensity(i);
  return w;
}

std::vector<int32_t> all_rows(size_t n) {
  std::vector<int32_t> rows(n);
  for (size_t i = 0; i < n; ++i) rows[i] = static_cast<int32_t>(i);
  return rows;
}

DecisionTree make_tree_shell(const Dataset& d, TreeTask task, const Hyperparams& hp) {
  DecisionTree tree;
  tree.schema = d.schema;
  tree.schema_hash = d.schema.hash();
  tree.task = task;
  tree.hp = hp;
  tree.fallback_mean = per_arm_means(d);
  return tree;
}

}  // namespace

// ---------------------------------------------------------------------------

int64_t LeafStats::rows() const {
  int64_t n = 0;
  for (int64_t c : count) n += c;
  return n;
}

std::string Hyperparams::to_string() const {
  return "depth=" + std::to_string(max_depth) + ",min_leaf=" + std::to_string(min_samples_leaf) +
         ",min_gain=" + std::to_string(min_loss_reduction);
}

std::string to_string(TreeTask t) {
  switch (t) {
    case TreeTask::Outcome: return "outcome";
    case TreeTask::Effect: return "effect";
    case TreeTask::Assignment: return "assignment";
  }
  return "outcome";
}

TreeTask tree_task_from_string(const std::string& s) {
  if (s == "outcome") return TreeTask::Outcome;
  if (s == "effect") return TreeTask::Effect;
  if (s == "assignment") return TreeTask::Assignment;
  throw data_error("unknown tree task: " + s);
}

TransformedOutcome transform_outcome(const Dataset& d, int arm) {
  if (arm < 1 || arm >= d.schema.arm_count)
    throw data_error("transform_outcome requires a non-control arm");
  int64_t n_arm = 0, n_control = 0;
  for (int32_t t : d.treatment) {
    if (t == arm) ++n_arm;
    if (t == 0) ++n_control;
  }
  if (n_arm == 0) throw data_error("arm " + std::to_string(arm) + " has no observations");
  if (n_control == 0) throw data_error("control arm has no observations");

  TransformedOutcome out;
  out.arm = arm;
  const double p_arm = d.propensity_table[arm];
  const double p0 = d.propensity_table[0];
  out.p_star = p_arm / (p_arm + p0);
  out.rows.reserve(n_arm + n_control);
  out.target.reserve(n_arm + n_control);
  for (size_t i = 0; i < d.row_count(); ++i) {
    const int32_t t = d.treatment[i];
    if (t != 0 && t != arm) continue;
    out.rows.push_back(static_cast<int32_t>(i));
    const double y = d.outcome[i];
    out.target.push_back(t == arm ? y / out.p_star : -y / (1.0 - out.p_star));
  }
  return out;
}

DecisionTree fit_outcome_tree(const Dataset& d, const Hyperparams& hp) {
  check_hyperparams(hp);
  if (d.row_count() == 0) throw data_error("cannot fit on an empty dataset");

  DecisionTree tree = make_tree_shell(d, TreeTask::Outcome, hp);
  tree.uses_treatment_feature = true;

  std::vector<const int32_t*> cols;
  std::vector<int32_t> cards;
  for (int f = 0; f < d.schema.feature_count(); ++f) {
    cols.push_back(d.features[f].data());
    cards.push_back(d.schema.feature_cardinalities[f]);
  }
  cols.push_back(d.treatment.data());  // treatment-as-a-feature
  cards.push_back(d.schema.arm_count);

  RegressionCriterion crit;
  crit.target = d.outcome.data();
  const std::vector<double> weights = row_weights(d);
  LeafContext lc{d.treatment.data(), d.outcome.data(), weights.data(), nullptr,
                 d.schema.arm_count};

  auto rows = all_rows(d.row_count());
  Grower<RegressionCriterion> grower(std::move(cols), std::move(cards), hp, std::move(crit), lc);
  grower.grow(tree, rows);
  return tree;
}

DecisionTree fit_causal_tree(const Dataset& d, int arm, const Hyperparams& hp) {
  check_hyperparams(hp);
  const TransformedOutcome tr = transform_outcome(d, arm);

  // Restricted copy so the grower sees a dense 0..n-1 row space. Leaf stats
  // cover only arms {0, arm}; fallbacks come from the full input.
  const Dataset restricted = subset(d, tr.rows);

  DecisionTree tree = make_tree_shell(d, TreeTask::Effect, hp);
  tree.effect_arm = arm;
  tree.transformed_arm = arm;
  {
    double s = 0.0;
    for (double z : tr.target) s += z;
    tree.fallback_transformed_mean = tr.target.empty() ? 0.0 : s / tr.target.size();
  }

  std::vector<const int32_t*> cols;
  std::vector<int32_t> cards;
  for (int f = 0; f < restricted.schema.feature_count(); ++f) {
    cols.push_back(restricted.features[f].data());
    cards.push_back(restricted.schema.feature_cardinalities[f]);
  }

  RegressionCriterion crit;
  crit.target = tr.target.data();
  const std::vector<double> weights = row_weights(restricted);
  LeafContext lc{restricted.treatment.data(), restricted.outcome.data(), weights.data(),
                 tr.target.data(), restricted.schema.arm_count};

  auto rows = all_rows(restricted.row_count());
  Grower<RegressionCriterion> grower(std::move(cols), std::move(cards), hp, std::move(crit), lc);
  grower.grow(tree, rows);
  return tree;
}

DecisionTree fit_assignment_tree(const Dataset& d, const Hyperparams& hp) {
  check_hyperparams(hp);
  if (d.row_count() == 0) throw data_error("cannot fit on an empty dataset");
  for (size_t i = 0; i < d.row_count(); ++i) {
    if (d.outcome[i] < 0.0)
      throw data_error("assignment weights require non-negative outcomes (row " +
                       std::to_string(i) + ")");
  }

  DecisionTree tree = make_tree_shell(d, TreeTask::Assignment, hp);

  std::vector<const int32_t*> cols;
  std::vector<int32_t> cards;
  for (int f = 0; f < d.schema.feature_count(); ++f) {
    cols.push_back(d.features[f].data());
    cards.push_back(d.schema.feature_cardinalities[f]);
  }

  const std::vector<double> weights = row_weights(d);
  AssignmentCriterion crit;
  crit.cls = d.treatment.data();
  crit.weight = weights.data();
  crit.k = d.schema.arm_count;
  LeafContext lc{d.treatment.data(), d.outcome.data(), weights.data(), nullptr,
                 d.schema.arm_count};

  auto rows = all_rows(d.row_count());
  Grower<AssignmentCriterion> grower(std::move(cols), std::move(cards), hp, std::move(crit), lc);
  grower.grow(tree, rows);
  return tree;
}

int DecisionTree::depth() const {
  std::function<int(int32_t)> walk = [&](int32_t idx) -> int {
    const TreeNode& n = nodes[idx];
    if (n.feature < 0) return 0;
    return 1 + std::max(walk(n.left), walk(n.right));
  };
  return nodes.empty() ? 0 : walk(0);
}

int32_t DecisionTree::route(std::span<const int32_t> x, int32_t treat_code) const {
  const int m = schema.feature_count();
  int32_t idx = 0;
  for (;;) {
    const TreeNode& n = nodes[idx];
    if (n.feature < 0) return n.leaf;
    const int32_t v = n.feature < m ? x[n.feature] : treat_code;
    idx = (v == n.category) ? n.left : n.right;
  }
}

double DecisionTree::leaf_outcome(int32_t leaf, int arm) const {
  const LeafStats& s = leaves[leaf];
  return s.count[arm] > 0 ? s.outcome_sum[arm] / static_cast<double>(s.count[arm])
                          : fallback_mean[arm];
}

double DecisionTree::predict_outcome(std::span<const int32_t> x, int arm) const {
  if (!schema.conforms(x)) throw data_error("query does not conform to the tree's schema");
  if (arm < 0 || arm >= schema.arm_count) throw data_error("arm out of range");
  return leaf_outcome(route(x, arm), arm);
}

double DecisionTree::predict_effect(std::span<const int32_t> x, int arm) const {
  if (!schema.conforms(x)) throw data_error("query does not conform to the tree's schema");
  if (arm < 1 || arm >= schema.arm_count) throw data_error("effect arm must be a non-control arm");
  if (arm == transformed_arm) {
    const LeafStats& s = leaves[route(x, arm)];
    return s.transformed_count > 0 ? s.transformed_sum / static_cast<double>(s.transformed_count)
                                   : fallback_transformed_mean;
  }
  return predict_outcome(x, arm) - predict_outcome(x, 0);
}

int32_t DecisionTree::predict_assignment(std::span<const int32_t> x) const {
  if (!schema.conforms(x)) throw data_error("query does not conform to the tree's schema");
  int32_t best_arm = 0;
  double best_w = -1.0;
  for (int32_t j = 0; j < schema.arm_count; ++j) {
    const LeafStats& s = leaves[route(x, j)];
    const double w = s.weight_sum[j];
    if (w > best_w) {
      best_w = w;
      best_arm = j;
    }
  }
  return best_arm;
}

DecisionTree swap_leaf_function(const DecisionTree& tree, TreeTask new_task, int32_t effect_arm) {
  if (new_task == TreeTask::Effect) {
    if (effect_arm < 1 || effect_arm >= tree.schema.arm_count)
      throw data_error("swap to effect task requires a non-control arm");
  }
  DecisionTree out = tree;
  out.task = new_task;
  out.effect_arm = new_task == TreeTask::Effect ? effect_arm : -1;
  return out;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

json leaf_to_json(const LeafStats& s) {
  json j;
  j["count"] = s.count;
  j["outcome_sum"] = s.outcome_sum;
  j["outcome_sq_sum"] = s.outcome_sq_sum;
  j["weight_sum"] = s.weight_sum;
  j["transformed_sum"] = s.transformed_sum;
  j["transformed_count"] = s.transformed_count;
  return j;
}

LeafStats leaf_from_json(const json& j) {
  LeafStats s;
  s.count = j.at("count").get<std::vector<int64_t>>();
  s.outcome_sum = j.at("outcome_sum").get<std::vector<double>>();
  s.outcome_sq_sum = j.at("outcome_sq_sum").get<std::vector<double>>();
  s.weight_sum = j.at("weight_sum").get<std::vector<double>>();
  s.transformed_sum = j.at("transformed_sum").get<double>();
  s.transformed_count = j.at("transformed_count").get<int64_t>();
  return s;
}

}  // namespace

json tree_to_json_obj(const DecisionTree& t);
DecisionTree tree_from_json_obj(const json& j);

json tree_to_json_obj(const DecisionTree& t) {
  json j;
  j["format_version"] = DecisionTree::kFormatVersion;
  j["schema"] = {{"feature_cardinalities", t.schema.feature_cardinalities},
                 {"arm_count", t.schema.arm_count}};
  j["schema_hash"] = t.schema_hash;
  j["task"] = to_string(t.task);
  j["effect_arm"] = t.effect_arm;
  j["transformed_arm"] = t.transformed_arm;
  j["uses_treatment_feature"] = t.uses_treatment_feature;
  j["hyperparams"] = {{"max_depth", t.hp.max_depth},
                      {"min_samples_leaf", t.hp.min_samples_leaf},
                      {"min_loss_reduction", t.hp.min_loss_reduction}};
  j["fallback_mean"] = t.fallback_mean;
  j["fallback_transformed_mean"] = t.fallback_transformed_mean;
  json nodes = json::array();
  for (const TreeNode& n : t.nodes)
    nodes.push_back({n.feature, n.category, n.left, n.right, n.leaf});
  j["nodes"] = std::move(nodes);
  json leaves = json::array();
  for (const LeafStats& s : t.leaves) leaves.push_back(leaf_to_json(s));
  j["leaves"] = std::move(leaves);
  return j;
}

DecisionTree tree_from_json_obj(const json& j) {
  if (!j.contains("format_version"))
    throw data_error("tree document is missing format_version");
  if (j.at("format_version").get<int32_t>() != DecisionTree::kFormatVersion)
    throw data_error("unsupported tree format_version");
  DecisionTree t;
  t.schema.feature_cardinalities =
      j.at("schema").at("feature_cardinalities").get<std::vector<int32_t>>();
  t.schema.arm_count = j.at("schema").at("arm_count").get<int32_t>();
  t.schema_hash = j.at("schema_hash").get<uint64_t>();
  t.task = tree_task_from_string(j.at("task").get<std::string>());
  t.effect_arm = j.at("effect_arm").get<int32_t>();
  t.transformed_arm = j.at("transformed_arm").get<int32_t>();
  t.uses_treatment_feature = j.at("uses_treatment_feature").get<bool>();
  const auto& hp = j.at("hyperparams");
  t.hp.max_depth = hp.at("max_depth").get<int32_t>();
  t.hp.min_samples_leaf = hp.at("min_samples_leaf").get<int64_t>();
  t.hp.min_loss_reduction = hp.at("min_loss_reduction").get<double>();
  t.fallback_mean = j.at("fallback_mean").get<std::vector<double>>();
  t.fallback_transformed_mean = j.at("fallback_transformed_mean").get<double>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at(0).get<int32_t>();
    node.category = n.at(1).get<int32_t>();
    node.left = n.at(2).get<int32_t>();
    node.right = n.at(3).get<int32_t>();
    node.leaf = n.at(4).get<int32_t>();
    t.nodes.push_back(node);
  }
  for (const auto& l : j.at("leaves")) t.leaves.push_back(leaf_from_json(l));
  if (t.nodes.empty()) throw data_error("tree document has no nodes");
  return t;
}

std::string tree_to_json(const DecisionTree& tree) { return tree_to_json_obj(tree).dump(2); }

DecisionTree tree_from_json(const std::string& text) {
  return tree_from_json_obj(json::parse(text));
}

}  // namespace treelift
