#ifndef TREELIFT_EVAL_HPP
#define TREELIFT_EVAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "treelift/policy.hpp"

namespace treelift {

enum class Approach { OP, CP, TP, BestOnAverage };

std::string to_string(Approach a);
std::string display_name(Approach a);
Approach approach_from_string(const std::string& s);

/// The fitted model(s) behind one approach: a single tree for OP and TP,
/// one causal tree per non-control arm for CP, a constant arm for the
/// best-on-average baseline.
struct ModelSet {
  Approach approach = Approach::OP;
  Schema schema;
  std::vector<DecisionTree> trees;
  int32_t constant_arm = -1;
};

ModelSet fit_approach(const Dataset& d, Approach a, const Hyperparams& hp);
Policy make_policy(const ModelSet& ms, Provenance prov = {});

/// Outcome prediction of the model set. CP predicts non-control arms with
/// that arm's tree and averages the per-arm trees' control predictions for
/// arm 0 (causal trees cannot predict outcomes directly; this is the
/// leaf-stat adaptation).
double model_outcome(const ModelSet& ms, std::span<const int32_t> x, int arm);

/// Effect prediction vs control: native transformed-outcome mean for CP,
/// difference of predicted outcomes for OP/TP.
double model_effect(const ModelSet& ms, std::span<const int32_t> x, int arm);

// --- offline estimators and losses ---

/// (1/N) sum of y_i / P(t_i): the assignment-independent total that splits
/// exactly into ips_value + wmr for any policy.
double mean_ips_weight(const Dataset& d);

double ips_value(std::span<const int32_t> assignments, const Dataset& d);
double ips_value(const Policy& policy, const Dataset& d);

double wmr(std::span<const int32_t> assignments, const Dataset& d);
double wmr(const Policy& policy, const Dataset& d);

double lift_vs_control(const Policy& policy, const Dataset& d);

double mse_outcome(const ModelSet& ms, const Dataset& d);
double mse_effect_proxy(const ModelSet& ms, const Dataset& d);

/// Exact MSE of the model's effect predictions against the true CATEs;
/// synthetic data only. Reported next to the proxy so the proxy's fidelity
/// is itself observable.
double mse_effect_true(const ModelSet& ms, const Dataset& d, const SyntheticTruth& truth);

std::vector<double> assignment_shares(std::span<const int32_t> assignments, int arm_count);
double entropy_bits(std::span<const double> shares);
double assignment_entropy(const Policy& policy, const Dataset& d);

// --- cross-validated evaluation ---

struct CVConfig {
  int32_t outer_folds = 10;
  int32_t inner_folds = 3;
  std::vector<int32_t> max_depth_grid = {2, 4, 6, 8};
  std::vector<int64_t> min_samples_leaf_grid = {100};
  std::vector<double> min_loss_reduction_grid = {0.0};
  uint64_t seed = 0;
  int32_t threads = 1;

  std::vector<Hyperparams> grid() const;  // row-major over the three lists
  void validate() const;
};

struct FoldMetrics {
  int32_t fold = 0;
  double ips = 0.0;
  double lift = 0.0;
  double mse_outcome = 0.0;        // NaN when the policy has no outcome model
  double mse_effect_proxy = 0.0;   // NaN likewise
  double wmr = 0.0;
  double entropy_bits = 0.0;
  std::optional<double> regret;
  std::optional<double> mse_effect_true;
  std::vector<double> arm_shares;
  Hyperparams chosen_hp;
};

struct MetricSummary {
  double mean = 0.0;
  double ci_half = 0.0;  // 1.96 * sample std / sqrt(folds)
};

MetricSummary summarize(std::span<const double> values);

struct EvalReport {
  std::string label;
  int32_t fold_count = 0;
  std::vector<FoldMetrics> per_fold;
  MetricSummary ips, lift, mse_outcome, mse_effect_proxy, wmr, entropy_bits;
  std::optional<MetricSummary> regret;
  std::optional<MetricSummary> mse_effect_true;
  std::vector<double> mean_arm_shares;

  void aggregate();  // fills the summaries from per_fold
};

/// Inner cross-validation over the hyperparameter grid, minimizing the
/// approach's own loss (MSE_mu for OP, transformed-outcome MSE for CP,
/// WMR for TP). Ties go to the earlier grid point.
Hyperparams select_hyperparams(const Dataset& train, Approach a, const CVConfig& cfg,
                               uint64_t seed);

/// Nested cross-validation: inner selection on each outer-train split,
/// refit, full metric battery on the outer-test split. Deterministic given
/// (data, config) for any thread count.
EvalReport nested_cv(const Dataset& d, Approach a, const CVConfig& cfg,
                     const SyntheticTruth* truth = nullptr);

/// Fold-based evaluation of an already-fitted policy (no refitting): the
/// metric battery per fold plus fold-derived confidence intervals.
EvalReport evaluate_policy(const Policy& policy, const Dataset& d, int folds, uint64_t seed,
                           const SyntheticTruth* truth = nullptr);

struct CurveCell {
  Approach approach = Approach::OP;
  int64_t size = 0;
  EvalReport report;
};

/// Learning curves: for each training size, a seeded arm-stratified
/// subsample evaluated with nested_cv per approach; the best-on-average
/// baseline is always included.
std::vector<CurveCell> learning_curve(const Dataset& d, std::vector<Approach> approaches,
                                      std::vector<int64_t> sizes, const CVConfig& cfg,
                                      const SyntheticTruth* truth = nullptr);

struct CrossTaskRow {
  Approach approach = Approach::OP;
  double mse_outcome = 0.0;
  double mse_effect_proxy = 0.0;
  double lift = 0.0;
  EvalReport report;
};

struct CrossTaskTable {
  std::vector<CrossTaskRow> rows;
  bool has_flags = false;  // set when exactly {OP, CP, TP} were compared
  bool op_best_mse_outcome = false;
  bool cp_best_mse_effect = false;
  bool tp_best_lift = false;
};

CrossTaskTable cross_task_table(const Dataset& d, const CVConfig& cfg,
                                const SyntheticTruth* truth = nullptr,
                                std::vector<Approach> approaches = {Approach::OP, Approach::CP,
                                                                    Approach::TP});

/// Seeded arm-stratified subsample of `size` rows, returned in ascending
/// row order (the full size is the identity).
std::vector<int32_t> stratified_subsample(const Dataset& d, int64_t size, uint64_t seed);

// --- report serialization ---

std::string report_to_json(const EvalReport& report);
std::string report_per_fold_csv(const EvalReport& report);
std::string curve_to_csv(const std::vector<CurveCell>& cells);  // long format
std::string crosstask_to_json(const CrossTaskTable& table);
std::string crosstask_to_text(const CrossTaskTable& table);

}  // namespace treelift

#endif  // TREELIFT_EVAL_HPP
