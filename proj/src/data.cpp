#include "treelift/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treelift/rng.hpp"

namespace treelift {

bool Schema::conforms(std::span<const int32_t> x) const {
  if (x.size() != feature_cardinalities.size()) return false;
  for (size_t f = 0; f < x.size(); ++f) {
    if (x[f] < 0 || x[f] >= feature_cardinalities[f]) return false;
  }
  return true;
}

uint64_t Schema::hash() const {
  Fnv1a h;
  h.update_value<int32_t>(static_cast<int32_t>(feature_cardinalities.size()));
  h.update_span<int32_t>(feature_cardinalities);
  h.update_value(arm_count);
  return h.digest();
}

Observation Dataset::observation(size_t row) const {
  Observation o;
  o.features.resize(features.size());
  for (size_t f = 0; f < features.size(); ++f) o.features[f] = features[f][row];
  o.treatment = treatment[row];
  o.outcome = outcome[row];
  o.propensity = (o.treatment >= 0 && o.treatment < static_cast<int32_t>(propensity_table.size()))
                     ? propensity_table[o.treatment]
                     : 0.0;
  return o;
}

void Dataset::gather_row(size_t row, std::span<int32_t> out) const {
  for (size_t f = 0; f < features.size(); ++f) out[f] = features[f][row];
}

uint64_t Dataset::content_hash() const {
  Fnv1a h;
  h.update_value(schema.hash());
  h.update_span<double>(propensity_table);
  h.update_value<int64_t>(static_cast<int64_t>(row_count()));
  for (const auto& col : features) h.update_span<int32_t>(col);
  h.update_span<int32_t>(treatment);
  h.update_span<double>(outcome);
  return h.digest();
}

Dataset Dataset::from_observations(const Schema& schema,
                                   const std::vector<double>& propensity_table,
                                   const std::vector<Observation>& rows) {
  Dataset d;
  d.schema = schema;
  d.propensity_table = propensity_table;
  d.features.assign(schema.feature_count(), {});
  for (auto& col : d.features) col.reserve(rows.size());
  d.treatment.reserve(rows.size());
  d.outcome.reserve(rows.size());
  for (const auto& o : rows) {
    if (static_cast<int>(o.features.size()) != schema.feature_count())
      throw data_error("observation feature count does not match schema");
    for (int f = 0; f < schema.feature_count(); ++f) d.features[f].push_back(o.features[f]);
    d.treatment.push_back(o.treatment);
    d.outcome.push_back(o.outcome);
  }
  return d;
}

Dataset subset(const Dataset& d, std::span<const int32_t> rows) {
  Dataset out;
  out.schema = d.schema;
  out.propensity_table = d.propensity_table;
  out.features.assign(d.features.size(), {});
  for (size_t f = 0; f < d.features.size(); ++f) {
    out.features[f].resize(rows.size());
    const auto& src = d.features[f];
    for (size_t i = 0; i < rows.size(); ++i) out.features[f][i] = src[rows[i]];
  }
  out.treatment.resize(rows.size());
  out.outcome.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.treatment[i] = d.treatment[rows[i]];
    out.outcome[i] = d.outcome[rows[i]];
  }
  return out;
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  const auto& s = d.schema;

  if (s.arm_count < 2) out.push_back({std::nullopt, "schema requires at least 2 arms"});
  for (int f = 0; f < s.feature_count(); ++f) {
    if (s.feature_cardinalities[f] < 1)
      out.push_back({std::nullopt, "feature " + std::to_string(f) + " cardinality must be >= 1"});
  }

  if (d.row_count() == 0) out.push_back({std::nullopt, "dataset must have at least one row"});
  if (static_cast<int32_t>(d.features.size()) != s.feature_count())
    out.push_back({std::nullopt, "column count does not match schema"});

  if (static_cast<int32_t>(d.propensity_table.size()) != s.arm_count) {
    out.push_back({std::nullopt, "propensity table must have one entry per arm"});
  } else {
    double sum = 0.0;
    bool all_positive = true;
    for (double p : d.propensity_table) {
      sum += p;
      if (!(p > 0.0)) all_positive = false;
    }
    if (!all_positive) out.push_back({std::nullopt, "propensity must be positive"});
    if (std::abs(sum - 1.0) > 1e-9)
      out.push_back({std::nullopt, "propensities must sum to 1"});
    for (double p : d.propensity_table) {
      if (p > 1.0) {
        out.push_back({std::nullopt, "propensity must be at most 1"});
        break;
      }
    }
  }

  const int64_t n = static_cast<int64_t>(d.row_count());
  for (size_t f = 0; f < d.features.size(); ++f) {
    if (static_cast<int64_t>(d.features[f].size()) != n) {
      out.push_back({std::nullopt, "feature column " + std::to_string(f) + " has wrong length"});
      continue;
    }
    const int32_t card = s.feature_cardinalities[f];
    for (int64_t i = 0; i < n; ++i) {
      int32_t v = d.features[f][i];
      if (v < 0 || v >= card) {
        out.push_back({i, "feature " + std::to_string(f) + " code out of range"});
        break;  // one violation per column is enough to locate the problem
      }
    }
  }
  if (static_cast<int64_t>(d.outcome.size()) != n)
    out.push_back({std::nullopt, "outcome column has wrong length"});

  for (int64_t i = 0; i < n; ++i) {
    int32_t t = d.treatment[i];
    if (t < 0 || t >= s.arm_count) {
      out.push_back({i, "treatment arm out of range"});
      break;
    }
  }
  for (int64_t i = 0; i < std::min<int64_t>(n, static_cast<int64_t>(d.outcome.size())); ++i) {
    if (!(d.outcome[i] >= 0.0) || !std::isfinite(d.outcome[i])) {
      out.push_back({i, "outcome must be non-negative and finite"});
      break;
    }
  }
  return out;
}

bool BalanceReport::any_flagged() const {
  return std::any_of(cells.begin(), cells.end(), [](const BalanceCell& c) { return c.flagged; });
}

BalanceReport balance_check(const Dataset& d, double threshold) {
  const auto& s = d.schema;
  const int64_t n = static_cast<int64_t>(d.row_count());

  std::vector<int64_t> arm_counts(s.arm_count, 0);
  for (int64_t i = 0; i < n; ++i) arm_counts[d.treatment[i]]++;
  for (int32_t a = 0; a < s.arm_count; ++a) {
    if (arm_counts[a] == 0)
      throw data_error("arm " + std::to_string(a) + " has no observations");
  }

  BalanceReport report;
  report.threshold = threshold;
  for (int f = 0; f < s.feature_count(); ++f) {
    const int32_t card = s.feature_cardinalities[f];
    // counts[arm][category], plus pooled
    std::vector<std::vector<int64_t>> counts(s.arm_count, std::vector<int64_t>(card, 0));
    std::vector<int64_t> pooled(card, 0);
    const auto& col = d.features[f];
    for (int64_t i = 0; i < n; ++i) {
      counts[d.treatment[i]][col[i]]++;
      pooled[col[i]]++;
    }
    for (int32_t a = 0; a < s.arm_count; ++a) {
      double l1 = 0.0;
      for (int32_t c = 0; c < card; ++c) {
        double pa = static_cast<double>(counts[a][c]) / static_cast<double>(arm_counts[a]);
        double pp = static_cast<double>(pooled[c]) / static_cast<double>(n);
        l1 += std::abs(pa - pp);
      }
      report.cells.push_back({f, a, l1, l1 > threshold});
    }
  }
  return report;
}

std::vector<int32_t> FoldPlan::rows_in_fold(int32_t fold) const {
  std::vector<int32_t> out;
  for (size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(static_cast<int32_t>(i));
  return out;
}

std::vector<int32_t> FoldPlan::rows_not_in_fold(int32_t fold) const {
  std::vector<int32_t> out;
  for (size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(static_cast<int32_t>(i));
  return out;
}

FoldPlan make_folds(const Dataset& d, int fold_count, uint64_t seed) {
  if (fold_count < 2) throw data_error("fold_count must be at least 2");
  const auto& s = d.schema;
  const int64_t n = static_cast<int64_t>(d.row_count());

  std::vector<std::vector<int32_t>> per_arm(s.arm_count);
  for (int64_t i = 0; i < n; ++i) {
    int32_t t = d.treatment[i];
    if (t < 0 || t >= s.arm_count) throw data_error("treatment arm out of range");
    per_arm[t].push_back(static_cast<int32_t>(i));
  }
  for (int32_t a = 0; a < s.arm_count; ++a) {
    if (static_cast<int>(per_arm[a].size()) < fold_count)
      throw data_error("arm " + std::to_string(a) + " has fewer rows than fold_count");
  }

  FoldPlan plan;
  plan.fold_count = fold_count;
  plan.seed = seed;
  plan.assignment.assign(n, -1);

  // Shuffle within each arm, then deal the arms' rows round-robin with a
  // cursor that carries across arms. Per-arm deals are consecutive, so each
  // (fold, arm) count lands within 1 of exact proportionality, and the
  // carried cursor keeps total fold sizes balanced as well.
  int32_t cursor = 0;
  for (int32_t a = 0; a < s.arm_count; ++a) {
    Rng rng(hash_u64(seed, 0x666f6c64ULL, static_cast<uint64_t>(a)));
    rng.shuffle(per_arm[a]);
    for (int32_t row : per_arm[a]) {
      plan.assignment[row] = cursor;
      cursor = (cursor + 1) % fold_count;
    }
  }
  return plan;
}

}  // namespace treelift
