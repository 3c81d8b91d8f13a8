#include "treelift/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace treelift {

using json = nlohmann::ordered_json;

namespace {

constexpr char kDatasetMagic[4] = {'T', 'L', 'D', 'S'};
constexpr char kTruthMagic[4] = {'T', 'L', 'T', 'R'};
constexpr uint32_t kBinaryVersion = 1;

void format_double(char* buf, size_t n, double v) { std::snprintf(buf, n, "%.17g", v); }

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_raw_array(std::ostream& os, const std::vector<T>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T read_raw(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw data_error("unexpected end of file");
  return v;
}

template <typename T>
void read_raw_array(std::istream& is, std::vector<T>& v, size_t n) {
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw data_error("unexpected end of file");
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path);
  out << content;
  if (!out) throw data_error("write failed: " + path);
}

void save_dataset_csv(const Dataset& d, const std::string& csv_path,
                      const std::string& meta_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + csv_path);
  const int m = d.schema.feature_count();
  for (int f = 0; f < m; ++f) out << 'f' << f << ',';
  out << "t,y\n";
  char buf[40];
  for (size_t i = 0; i < d.row_count(); ++i) {
    for (int f = 0; f < m; ++f) out << d.features[f][i] << ',';
    format_double(buf, sizeof(buf), d.outcome[i]);
    out << d.treatment[i] << ',' << buf << '\n';
  }
  if (!out) throw data_error("write failed: " + csv_path);
  out.close();

  json meta;
  meta["format_version"] = 1;
  meta["feature_cardinalities"] = d.schema.feature_cardinalities;
  meta["arm_count"] = d.schema.arm_count;
  meta["propensity_table"] = d.propensity_table;
  meta["row_count"] = d.row_count();
  meta["content_hash"] = d.content_hash();
  write_text_file(meta_path, meta.dump(2) + "\n");
}

Dataset load_dataset_csv(const std::string& csv_path, const std::string& meta_path) {
  const json meta = json::parse(read_text_file(meta_path));
  Dataset d;
  d.schema.feature_cardinalities =
      meta.at("feature_cardinalities").get<std::vector<int32_t>>();
  d.schema.arm_count = meta.at("arm_count").get<int32_t>();
  d.propensity_table = meta.at("propensity_table").get<std::vector<double>>();
  const size_t expect_rows = meta.at("row_count").get<size_t>();

  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + csv_path);
  const int m = d.schema.feature_count();
  d.features.assign(m, {});
  for (auto& col : d.features) col.reserve(expect_rows);
  d.treatment.reserve(expect_rows);
  d.outcome.reserve(expect_rows);

  std::string line;
  if (!std::getline(in, line)) throw data_error("empty CSV: " + csv_path);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    for (int f = 0; f < m; ++f) {
      const long v = std::strtol(p, &end, 10);
      if (end == p || *end != ',')
        throw data_error(csv_path + ":" + std::to_string(lineno) + ": malformed row");
      d.features[f].push_back(static_cast<int32_t>(v));
      p = end + 1;
    }
    const long t = std::strtol(p, &end, 10);
    if (end == p || *end != ',')
      throw data_error(csv_path + ":" + std::to_string(lineno) + ": malformed row");
    p = end + 1;
    const double y = std::strtod(p, &end);
    if (end == p) throw data_error(csv_path + ":" + std::to_string(lineno) + ": malformed row");
    d.treatment.push_back(static_cast<int32_t>(t));
    d.outcome.push_back(y);
  }
  if (d.row_count() != expect_rows)
    throw data_error(csv_path + ": row count does not match metadata");
  if (meta.contains("content_hash") &&
      meta.at("content_hash").get<uint64_t>() != d.content_hash())
    throw data_error(csv_path + ": content hash does not match metadata");
  return d;
}

void save_dataset_binary(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path);
  out.write(kDatasetMagic, 4);
  write_raw(out, kBinaryVersion);
  write_raw(out, static_cast<int32_t>(d.schema.feature_count()));
  write_raw_array(out, d.schema.feature_cardinalities);
  write_raw(out, d.schema.arm_count);
  write_raw_array(out, d.propensity_table);
  write_raw(out, static_cast<uint64_t>(d.row_count()));
  for (const auto& col : d.features) write_raw_array(out, col);
  write_raw_array(out, d.treatment);
  write_raw_array(out, d.outcome);
  if (!out) throw data_error("write failed: " + path);
}

Dataset load_dataset_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0)
    throw data_error(path + ": not a dataset file");
  if (read_raw<uint32_t>(in) != kBinaryVersion)
    throw data_error(path + ": unsupported format version");
  Dataset d;
  const int32_t m = read_raw<int32_t>(in);
  if (m < 0 || m > 1 << 16) throw data_error(path + ": corrupt header");
  read_raw_array(in, d.schema.feature_cardinalities, m);
  d.schema.arm_count = read_raw<int32_t>(in);
  if (d.schema.arm_count < 0 || d.schema.arm_count > 1 << 16)
    throw data_error(path + ": corrupt header");
  read_raw_array(in, d.propensity_table, d.schema.arm_count);
  const uint64_t n = read_raw<uint64_t>(in);
  d.features.assign(m, {});
  for (auto& col : d.features) read_raw_array(in, col, n);
  read_raw_array(in, d.treatment, n);
  read_raw_array(in, d.outcome, n);
  return d;
}

std::string csv_meta_path(const std::string& csv_path) {
  const auto pos = csv_path.rfind(".csv");
  if (pos == csv_path.size() - 4) return csv_path.substr(0, pos) + ".meta.json";
  return csv_path + ".meta.json";
}

Dataset load_dataset(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0)
    return load_dataset_binary(path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    return load_dataset_csv(path, csv_meta_path(path));
  throw data_error("unrecognized dataset extension (expect .bin or .csv): " + path);
}

void save_truth_binary(const SyntheticTruth& truth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path);
  out.write(kTruthMagic, 4);
  write_raw(out, kBinaryVersion);
  write_raw(out, static_cast<uint64_t>(truth.row_count()));
  write_raw(out, truth.arm_count);
  write_raw(out, truth.dataset_hash);
  write_raw_array(out, truth.potential_outcomes);
  if (!out) throw data_error("write failed: " + path);
}

SyntheticTruth load_truth_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTruthMagic, 4) != 0)
    throw data_error(path + ": not a truth file");
  if (read_raw<uint32_t>(in) != kBinaryVersion)
    throw data_error(path + ": unsupported format version");
  SyntheticTruth truth;
  const uint64_t n = read_raw<uint64_t>(in);
  truth.arm_count = read_raw<int32_t>(in);
  if (truth.arm_count < 1 || truth.arm_count > 1 << 16)
    throw data_error(path + ": corrupt header");
  truth.dataset_hash = read_raw<uint64_t>(in);
  read_raw_array(in, truth.potential_outcomes, n * truth.arm_count);

  truth.optimal_arm.resize(n);
  for (uint64_t i = 0; i < n; ++i) {
    int32_t best = 0;
    double best_v = truth.potential_outcomes[i * truth.arm_count];
    for (int32_t j = 1; j < truth.arm_count; ++j) {
      const double v = truth.potential_outcomes[i * truth.arm_count + j];
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    truth.optimal_arm[i] = best;
  }
  return truth;
}

std::string foldplan_to_json(const FoldPlan& plan) {
  json j;
  j["format_version"] = 1;
  j["fold_count"] = plan.fold_count;
  j["seed"] = plan.seed;
  j["assignment"] = plan.assignment;
  return j.dump();
}

FoldPlan foldplan_from_json(const std::string& text) {
  const json j = json::parse(text);
  FoldPlan plan;
  plan.fold_count = j.at("fold_count").get<int32_t>();
  plan.seed = j.at("seed").get<uint64_t>();
  plan.assignment = j.at("assignment").get<std::vector<int32_t>>();
  return plan;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["format_version"] = 1;
  j["schema"] = {{"feature_cardinalities", cfg.schema.feature_cardinalities},
                 {"arm_count", cfg.schema.arm_count}};
  j["propensity_table"] = cfg.propensity_table;
  j["base_scale"] = cfg.base_scale;
  j["effect_scale"] = cfg.effect_scale;
  j["noise_model"] = to_string(cfg.noise_model);
  j["effect_feature_mask"] = cfg.effect_feature_mask;
  j["center_effects"] = cfg.center_effects;
  j["outcome_level"] = cfg.outcome_level;
  j["noise_sd"] = cfg.noise_sd;
  j["row_count"] = cfg.row_count;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

ScenarioConfig scenario_from_json(const std::string& text) {
  const json j = json::parse(text);
  ScenarioConfig cfg;
  cfg.schema.feature_cardinalities =
      j.at("schema").at("feature_cardinalities").get<std::vector<int32_t>>();
  cfg.schema.arm_count = j.at("schema").at("arm_count").get<int32_t>();
  cfg.propensity_table = j.at("propensity_table").get<std::vector<double>>();
  cfg.base_scale = j.at("base_scale").get<double>();
  cfg.effect_scale = j.at("effect_scale").get<double>();
  cfg.noise_model = noise_model_from_string(j.at("noise_model").get<std::string>());
  cfg.effect_feature_mask = j.at("effect_feature_mask").get<std::vector<int32_t>>();
  if (j.contains("center_effects")) cfg.center_effects = j.at("center_effects").get<bool>();
  if (j.contains("outcome_level")) cfg.outcome_level = j.at("outcome_level").get<double>();
  if (j.contains("noise_sd")) cfg.noise_sd = j.at("noise_sd").get<double>();
  if (j.contains("row_count")) cfg.row_count = j.at("row_count").get<int64_t>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

}  // namespace treelift
