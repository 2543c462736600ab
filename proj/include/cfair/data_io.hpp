#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cfair/audit.hpp"
#include "cfair/data_model.hpp"
#include "cfair/nonconformity.hpp"

namespace cfair {

// On-disk formats.
//
// CSV dataset = a directory holding
//   items.csv  id,label[,split],<attribute...>   (empty label = unlabeled)
//   probs.csv  id,p0,...,p{K-1}                    (any row order; K = column count - 1)
//   edges.csv  u,v                                 (optional, 0-indexed items.csv rows)
// JSON dataset = one document
//   {"num_classes": K, "attributes": [{"name", "levels"}],
//    "items": [{"id", "label", "split", "groups": {attr: level}, "probs": [...]}],
//    "edges": [[u, v], ...]}

enum class DataFormat { Csv, Json };

std::string_view to_string(DataFormat f);
DataFormat parse_data_format(std::string_view s);
/// Json for "*.json" paths, Csv otherwise.
DataFormat guess_data_format(const std::filesystem::path& path);

/// Throws ParseError (with the 1-based data row) on malformed input and ValidationError when
/// a dataset invariant fails.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path, DataFormat format);

Dataset parse_dataset_json(std::string_view text);
std::string dataset_to_json(const Dataset& data);

/// Score table CSV: id,s0,...,s{K-1}. Every dataset item needs exactly one row.
ScoreTable load_scores(const std::filesystem::path& path, const Dataset& data);
void save_scores(const ScoreTable& table, const Dataset& data, const std::filesystem::path& path);

/// Prediction-set CSV: item_id,labels with labels joined by ';' (empty = empty set).
PredictionSets load_prediction_sets(const std::filesystem::path& path, const Dataset& data);
void save_prediction_sets(const PredictionSets& sets, const Dataset& data,
                          const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace cfair
