#ifndef TREELIFT_SYNTH_HPP
#define TREELIFT_SYNTH_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treelift/data.hpp"

namespace treelift {

enum class NoiseModel { PoissonLogLink, TruncatedGaussian };

std::string to_string(NoiseModel m);
NoiseModel noise_model_from_string(const std::string& s);

/// Data-generating process for randomized-experiment logs with known
/// potential outcomes. The paper this mimics does not describe its outcome
/// distribution or effect structure; everything here is an artifact choice,
/// built so that true conditional means (and hence true CATEs, optimal arms,
/// policy values and regret) are exactly computable.
///
/// Score construction: per-(feature,category) standard-normal effects are
/// derived by hashing (seed, role, arm, feature, category). A row's base
/// score b(x) sums the base effects of its categories (scaled by base_scale);
/// its per-arm effect score e_j(x) sums the effect-mask categories' effects
/// for arm j (scaled by effect_scale). Arm 0 has e_0 = 0.
///
///   poisson-log-link:    E[Y^j|x] = exp(log(outcome_level) + b(x) + e_j(x)),
///                        Y ~ Poisson(E[Y^j|x])
///   truncated-gaussian:  pre-clamp mean m_j(x) = outcome_level + b(x) + e_j(x),
///                        Y = max(N(m_j(x), noise_sd), 0); E[Y^j|x] uses the
///                        exact clamped-normal mean.
///
/// With center_effects, each (arm, feature) effect column is recentred so
/// that the population average treatment effect is exactly zero under the
/// uniform feature distribution (multiplicative centring for the log link,
/// additive for the gaussian).
struct ScenarioConfig {
  Schema schema;
  std::vector<double> propensity_table;
  double base_scale = 1.0;
  double effect_scale = 0.0;
  NoiseModel noise_model = NoiseModel::PoissonLogLink;
  std::vector<int32_t> effect_feature_mask;
  bool center_effects = false;
  double outcome_level = 10.0;
  double noise_sd = 1.0;  // truncated-gaussian only
  int64_t row_count = 100000;
  uint64_t seed = 0;
};

/// Throws data_error naming the offending field if the config is invalid.
void validate_config(const ScenarioConfig& cfg);

/// Per-row ground truth, bound to the dataset it was generated with.
struct SyntheticTruth {
  int32_t arm_count = 0;
  std::vector<double> potential_outcomes;  // [row * arm_count + j] = E[Y^j|x_row]
  std::vector<int32_t> optimal_arm;        // argmax_j, ties to lowest arm
  uint64_t dataset_hash = 0;

  size_t row_count() const { return optimal_arm.size(); }
  double mean(size_t row, int arm) const { return potential_outcomes[row * arm_count + arm]; }
  double true_cate(size_t row, int arm) const { return mean(row, arm) - mean(row, 0); }
};

/// Exact conditional-mean structure of a scenario, independent of sampling.
class ScenarioModel {
 public:
  explicit ScenarioModel(const ScenarioConfig& cfg);

  /// Additive score b(x) + e_arm(x), before the link/clamp is applied.
  double raw_score(std::span<const int32_t> x, int arm) const;
  double conditional_mean(std::span<const int32_t> x, int arm) const;
  const ScenarioConfig& config() const { return cfg_; }

 private:
  ScenarioConfig cfg_;
  std::vector<std::vector<double>> base_;                 // [feature][category]
  std::vector<std::vector<std::vector<double>>> effect_;  // [arm-1][feature][category]
};

std::pair<Dataset, SyntheticTruth> generate(const ScenarioConfig& cfg);

/// Truth rows for a subset of a dataset's rows, rebound to the subset's hash.
SyntheticTruth truth_subset(const SyntheticTruth& truth, std::span<const int32_t> rows,
                            uint64_t subset_dataset_hash);

void check_truth_alignment(const Dataset& d, const SyntheticTruth& truth);

/// Exact value of deploying the given per-row assignments: the mean over
/// rows of the assigned arm's true conditional mean.
double true_policy_value(std::span<const int32_t> assignments, const Dataset& d,
                         const SyntheticTruth& truth);

/// Exact expected regret of the assignments: mean over rows of the gap to
/// the row's best arm. Non-negative by construction.
double true_regret(std::span<const int32_t> assignments, const Dataset& d,
                   const SyntheticTruth& truth);

/// Named scenario presets on the paper-shaped schema (five categorical
/// features with cardinalities 19,6,3,4,8; four arms with propensities
/// 86.68% / 4.44% / 4.44% / 4.44%). Constants were frozen from the Monte
/// Carlo calibration study in tools/calibrate_presets.cpp.
///   level-dominant:  strong outcome-level heterogeneity, zero average
///                    treatment effects, individualized assignment helps
///   effect-dominant: effect heterogeneity dominates, arms differ on average
///   null-effects:    no treatment effects at all
ScenarioConfig scenario_preset(const std::string& name);

}  // namespace treelift

#endif  // TREELIFT_SYNTH_HPP
