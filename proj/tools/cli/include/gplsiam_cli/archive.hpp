#pragma once

#include <string>

#include "gplsiam/fit.hpp"
#include "gplsiam_cli/config.hpp"
#include "gplsiam_cli/design.hpp"
#include "json.hpp"

namespace gplsiam::cli {

inline constexpr int kArchiveFormatVersion = 1;

struct Archive {
  ModelConfig config;
  Encoding encoding;
  FittedModel model;
};

nlohmann::json archive_to_json(const Archive& a);
// Throws CliError on a missing or newer format_version.
Archive archive_from_json(const nlohmann::json& j);

void save_archive(const Archive& a, const std::string& path);
Archive load_archive(const std::string& path);

}  // namespace gplsiam::cli
