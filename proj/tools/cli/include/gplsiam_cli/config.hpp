#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gplsiam/model.hpp"
#include "json.hpp"

namespace gplsiam::cli {

struct SmoothConfig {
  std::string name;
  TermKind kind = TermKind::single_index;
  std::vector<std::string> columns;
  int q = 9;
  int order = 4;
  int dif = 2;
  std::string by;  // optional grouping column: one term per level
  int line = 0;
};

struct ModelConfig {
  std::string family = "gaussian";
  std::string link;  // empty = canonical
  std::string response;
  std::string offset;
  bool intercept = true;
  std::vector<std::string> linear;
  std::vector<std::string> categorical;  // subset of linear
  std::vector<SmoothConfig> smooths;
  FitConfig fit;

  Family make_family() const;
};

// INI-style text: [model], [smooth NAME] and [fit] sections of key = value
// lines; '#' and ';' start comments. Errors name source:line.
ModelConfig parse_config(std::istream& in, const std::string& source);
ModelConfig load_config(const std::string& path);

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

}  // namespace gplsiam::cli
