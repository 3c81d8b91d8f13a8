#ifndef TREELIFT_IO_HPP
#define TREELIFT_IO_HPP

#include <string>

#include "treelift/data.hpp"
#include "treelift/synth.hpp"

namespace treelift {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// CSV interchange format: header f0..f{m-1},t,y plus a JSON metadata
/// sidecar carrying the schema, propensity table and content hash.
void save_dataset_csv(const Dataset& d, const std::string& csv_path,
                      const std::string& meta_path);
Dataset load_dataset_csv(const std::string& csv_path, const std::string& meta_path);

/// Compact binary columnar format (little-endian, 32-bit category codes,
/// 64-bit float outcomes); the performance format.
void save_dataset_binary(const Dataset& d, const std::string& path);
Dataset load_dataset_binary(const std::string& path);

/// Dispatch on extension: .bin loads binary, .csv loads CSV with the
/// conventional sidecar path (csv path with .meta.json appended to the stem).
Dataset load_dataset(const std::string& path);
std::string csv_meta_path(const std::string& csv_path);

/// Truth sidecar: the N x K conditional-mean matrix, bound to its dataset
/// by content hash.
void save_truth_binary(const SyntheticTruth& truth, const std::string& path);
SyntheticTruth load_truth_binary(const std::string& path);

std::string foldplan_to_json(const FoldPlan& plan);
FoldPlan foldplan_from_json(const std::string& text);

std::string scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const std::string& text);

}  // namespace treelift

#endif  // TREELIFT_IO_HPP
