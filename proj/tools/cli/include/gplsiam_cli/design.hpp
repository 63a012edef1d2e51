#pragma once

#include <map>
#include <string>
#include <vector>

#include "gplsiam/model.hpp"
#include "gplsiam_cli/config.hpp"
#include "gplsiam_cli/csv.hpp"
#include "json.hpp"

namespace gplsiam::cli {

// Level sets learned from the training data. The first level of every
// categorical column is the reference of its treatment contrasts.
struct Encoding {
  std::map<std::string, std::vector<std::string>> levels;     // categorical linear columns
  std::map<std::string, std::vector<std::string>> by_levels;  // grouping columns of smooths
};

struct Design {
  ModelSpec spec;
  Dataset data;
  std::vector<std::size_t> source_rows;  // data-row index (0-based) of each kept row
  std::size_t dropped = 0;               // rows with a missing value in a used column
};

// Numeric levels sort numerically, anything else lexicographically.
Encoding learn_encoding(const Table& table, const ModelConfig& cfg);

// require_response=false is the prediction path (y left empty when absent).
Design build_design(const Table& table, const ModelConfig& cfg, const Encoding& enc,
                    bool require_response);

// Linear coefficient names in column order of X.
std::vector<std::string> linear_names(const ModelConfig& cfg, const Encoding& enc);

nlohmann::json encoding_to_json(const Encoding& enc);
Encoding encoding_from_json(const nlohmann::json& j);

}  // namespace gplsiam::cli
