#include "treelift/synth.hpp"

#include <algorithm>
#include <cmath>

#include "treelift/rng.hpp"

namespace treelift {

namespace {

constexpr uint64_t kRoleBase = 0x62617365ULL;    // "base"
constexpr uint64_t kRoleEffect = 0x65666665ULL;  // "effe"
constexpr uint64_t kRoleRow = 0x726f7773ULL;     // "rows"

double clamped_normal_mean(double mu, double sigma) {
  // E[max(Z, 0)] for Z ~ N(mu, sigma^2)
  const double z = mu / sigma;
  const double phi = std::exp(-0.5 * z * z) * 0.3989422804014326779399461;
  const double cdf = 0.5 * std::erfc(-z * 0.7071067811865475244008444);
  return mu * cdf + sigma * phi;
}

}  // namespace

std::string to_string(NoiseModel m) {
  return m == NoiseModel::PoissonLogLink ? "poisson-log-link" : "truncated-gaussian";
}

NoiseModel noise_model_from_string(const std::string& s) {
  if (s == "poisson-log-link") return NoiseModel::PoissonLogLink;
  if (s == "truncated-gaussian") return NoiseModel::TruncatedGaussian;
  throw data_error("unknown noise model: " + s);
}

void validate_config(const ScenarioConfig& cfg) {
  const auto& s = cfg.schema;
  if (s.arm_count < 2) throw data_error("invalid config field schema.arm_count: need at least 2 arms");
  if (s.feature_count() == 0)
    throw data_error("invalid config field schema.feature_cardinalities: need at least one feature");
  for (int f = 0; f < s.feature_count(); ++f) {
    if (s.feature_cardinalities[f] < 1)
      throw data_error("invalid config field schema.feature_cardinalities: cardinality must be >= 1");
  }
  if (static_cast<int32_t>(cfg.propensity_table.size()) != s.arm_count)
    throw data_error("invalid config field propensity_table: need one entry per arm");
  double sum = 0.0;
  for (double p : cfg.propensity_table) {
    if (!(p > 0.0) || p > 1.0)
      throw data_error("invalid config field propensity_table: entries must lie in (0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw data_error("invalid config field propensity_table: entries must sum to 1");
  if (cfg.base_scale < 0.0) throw data_error("invalid config field base_scale: must be >= 0");
  if (cfg.effect_scale < 0.0) throw data_error("invalid config field effect_scale: must be >= 0");
  if (cfg.base_scale == 0.0 && cfg.effect_scale == 0.0)
    throw data_error("invalid config field base_scale/effect_scale: must not both be zero");
  if (cfg.effect_scale > 0.0 && cfg.effect_feature_mask.empty())
    throw data_error("invalid config field effect_feature_mask: must be non-empty when effect_scale > 0");
  std::vector<int32_t> mask = cfg.effect_feature_mask;
  std::sort(mask.begin(), mask.end());
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] < 0 || mask[i] >= s.feature_count())
      throw data_error("invalid config field effect_feature_mask: feature index out of range");
    if (i > 0 && mask[i] == mask[i - 1])
      throw data_error("invalid config field effect_feature_mask: duplicate feature index");
  }
  if (!(cfg.outcome_level > 0.0))
    throw data_error("invalid config field outcome_level: must be > 0");
  if (cfg.noise_model == NoiseModel::TruncatedGaussian && !(cfg.noise_sd > 0.0))
    throw data_error("invalid config field noise_sd: must be > 0");
  if (cfg.row_count < 1) throw data_error("invalid config field row_count: must be >= 1");
}

ScenarioModel::ScenarioModel(const ScenarioConfig& cfg) : cfg_(cfg) {
  validate_config(cfg);
  const auto& s = cfg.schema;
  const int m = s.feature_count();

  base_.assign(m, {});
  const double base_unit = cfg.base_scale / std::sqrt(static_cast<double>(m));
  for (int f = 0; f < m; ++f) {
    base_[f].resize(s.feature_cardinalities[f]);
    for (int32_t c = 0; c < s.feature_cardinalities[f]; ++c) {
      base_[f][c] = base_unit * hashed_normal(hash_u64(cfg.seed, kRoleBase, f, c));
    }
  }

  effect_.assign(s.arm_count - 1, std::vector<std::vector<double>>(m));
  if (cfg.effect_scale > 0.0) {
    const double eff_unit =
        cfg.effect_scale / std::sqrt(static_cast<double>(cfg.effect_feature_mask.size()));
    for (int32_t j = 1; j < s.arm_count; ++j) {
      for (int32_t f : cfg.effect_feature_mask) {
        auto& col = effect_[j - 1][f];
        col.resize(s.feature_cardinalities[f]);
        for (int32_t c = 0; c < s.feature_cardinalities[f]; ++c) {
          col[c] = eff_unit *
                   hashed_normal(hash_u64(hash_u64(cfg.seed, kRoleEffect, j), f, c));
        }
        if (cfg.center_effects) {
          // Recentre so the column contributes zero average effect under the
          // uniform category distribution: additively for the gaussian mean,
          // multiplicatively (unit mean of exp) for the log link.
          if (cfg.noise_model == NoiseModel::PoissonLogLink) {
            double mean_exp = 0.0;
            for (double v : col) mean_exp += std::exp(v);
            mean_exp /= static_cast<double>(col.size());
            const double shift = std::log(mean_exp);
            for (double& v : col) v -= shift;
          } else {
            double mean = 0.0;
            for (double v : col) mean += v;
            mean /= static_cast<double>(col.size());
            for (double& v : col) v -= mean;
          }
        }
      }
    }
  }
}

double ScenarioModel::raw_score(std::span<const int32_t> x, int arm) const {
  double score = 0.0;
  for (size_t f = 0; f < x.size(); ++f) score += base_[f][x[f]];
  if (arm > 0 && cfg_.effect_scale > 0.0) {
    const auto& eff = effect_[arm - 1];
    for (int32_t f : cfg_.effect_feature_mask) score += eff[f][x[f]];
  }
  return score;
}

double ScenarioModel::conditional_mean(std::span<const int32_t> x, int arm) const {
  const double score = raw_score(x, arm);
  if (cfg_.noise_model == NoiseModel::PoissonLogLink)
    return cfg_.outcome_level * std::exp(score);
  return clamped_normal_mean(cfg_.outcome_level + score, cfg_.noise_sd);
}

std::pair<Dataset, SyntheticTruth> generate(const ScenarioConfig& cfg) {
  const ScenarioModel model(cfg);
  const auto& s = cfg.schema;
  const int m = s.feature_count();
  const int32_t k = s.arm_count;
  const int64_t n = cfg.row_count;

  Dataset d;
  d.schema = s;
  d.propensity_table = cfg.propensity_table;
  d.features.assign(m, std::vector<int32_t>(n));
  d.treatment.resize(n);
  d.outcome.resize(n);

  SyntheticTruth truth;
  truth.arm_count = k;
  truth.potential_outcomes.resize(static_cast<size_t>(n) * k);
  truth.optimal_arm.resize(n);

  std::vector<double> cum(k);
  double acc = 0.0;
  for (int32_t j = 0; j < k; ++j) {
    acc += cfg.propensity_table[j];
    cum[j] = acc;
  }
  cum[k - 1] = 1.0;  // guard against rounding in the table sum

  std::vector<int32_t> x(m);
  for (int64_t i = 0; i < n; ++i) {
    // Each row has its own stream derived from (seed, row), so generation
    // order (and any future parallel blocking) cannot change the output.
    Rng rng(hash_u64(cfg.seed, kRoleRow, static_cast<uint64_t>(i)));
    for (int f = 0; f < m; ++f) {
      x[f] = static_cast<int32_t>(rng.below(static_cast<uint64_t>(s.feature_cardinalities[f])));
      d.features[f][i] = x[f];
    }
    const double u = rng.unit();
    int32_t t = 0;
    while (t < k - 1 && u >= cum[t]) ++t;
    d.treatment[i] = t;

    double best = -1.0;
    int32_t best_arm = 0;
    for (int32_t j = 0; j < k; ++j) {
      const double mu = model.conditional_mean(x, j);
      truth.potential_outcomes[static_cast<size_t>(i) * k + j] = mu;
      if (mu > best) {
        best = mu;
        best_arm = j;
      }
    }
    truth.optimal_arm[i] = best_arm;

    if (cfg.noise_model == NoiseModel::PoissonLogLink) {
      const double mu_t = truth.potential_outcomes[static_cast<size_t>(i) * k + t];
      d.outcome[i] = static_cast<double>(rng.poisson(mu_t));
    } else {
      const double pre_clamp = cfg.outcome_level + model.raw_score(x, t);
      d.outcome[i] = std::max(0.0, pre_clamp + cfg.noise_sd * rng.normal());
    }
  }

  truth.dataset_hash = d.content_hash();
  return {std::move(d), std::move(truth)};
}

SyntheticTruth truth_subset(const SyntheticTruth& truth, std::span<const int32_t> rows,
                            uint64_t subset_dataset_hash) {
  SyntheticTruth out;
  out.arm_count = truth.arm_count;
  out.dataset_hash = subset_dataset_hash;
  out.potential_outcomes.resize(rows.size() * truth.arm_count);
  out.optimal_arm.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int32_t j = 0; j < truth.arm_count; ++j)
      out.potential_outcomes[i * truth.arm_count + j] = truth.mean(rows[i], j);
    out.optimal_arm[i] = truth.optimal_arm[rows[i]];
  }
  return out;
}

void check_truth_alignment(const Dataset& d, const SyntheticTruth& truth) {
  if (truth.row_count() != d.row_count() || truth.arm_count != d.schema.arm_count ||
      truth.dataset_hash != d.content_hash())
    throw data_error("truth is not aligned with this dataset");
}

double true_policy_value(std::span<const int32_t> assignments, const Dataset& d,
                         const SyntheticTruth& truth) {
  check_truth_alignment(d, truth);
  if (assignments.size() != d.row_count())
    throw data_error("assignment vector length does not match dataset");
  double sum = 0.0;
  for (size_t i = 0; i < assignments.size(); ++i) sum += truth.mean(i, assignments[i]);
  return sum / static_cast<double>(assignments.size());
}

double true_regret(std::span<const int32_t> assignments, const Dataset& d,
                   const SyntheticTruth& truth) {
  check_truth_alignment(d, truth);
  if (assignments.size() != d.row_count())
    throw data_error("assignment vector length does not match dataset");
  double sum = 0.0;
  for (size_t i = 0; i < assignments.size(); ++i)
    sum += truth.mean(i, truth.optimal_arm[i]) - truth.mean(i, assignments[i]);
  return sum / static_cast<double>(assignments.size());
}

ScenarioConfig scenario_preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.schema.feature_cardinalities = {19, 6, 3, 4, 8};
  cfg.schema.arm_count = 4;
  cfg.propensity_table = {0.8668, 0.0444, 0.0444, 0.0444};
  cfg.noise_model = NoiseModel::PoissonLogLink;
  cfg.outcome_level = 10.0;
  cfg.row_count = 100000;
  cfg.seed = 0;

  if (name == "level-dominant") {
    cfg.base_scale = 0.8;
    cfg.effect_scale = 0.12;
    cfg.effect_feature_mask = {0, 2, 3};
    cfg.center_effects = true;
  } else if (name == "effect-dominant") {
    cfg.base_scale = 0.05;
    cfg.effect_scale = 0.5;
    cfg.effect_feature_mask = {1, 2};
    cfg.center_effects = false;
  } else if (name == "null-effects") {
    cfg.base_scale = 0.5;
    cfg.effect_scale = 0.0;
    cfg.effect_feature_mask = {};
    cfg.center_effects = false;
  } else {
    throw data_error("unknown scenario preset: " + name);
  }
  return cfg;
}

}  // namespace treelift
