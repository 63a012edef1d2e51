#include "gplsiam_cli/design.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace gplsiam::cli {

namespace {

bool numeric(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e;
}

std::vector<std::string> sorted_levels(const std::set<std::string>& raw) {
  std::vector<std::string> out(raw.begin(), raw.end());
  bool all_numeric = true;
  double tmp = 0.0;
  for (const auto& s : out) all_numeric = all_numeric && numeric(s, tmp);
  if (all_numeric) {
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      double x = 0, y = 0;
      numeric(a, x);
      numeric(b, y);
      return x < y;
    });
  }
  return out;
}

std::vector<std::size_t> used_columns(const Table& t, const ModelConfig& cfg, bool with_response) {
  std::vector<std::size_t> cols;
  if (with_response) cols.push_back(t.require(cfg.response));
  if (!cfg.offset.empty()) cols.push_back(t.require(cfg.offset));
  for (const auto& c : cfg.linear) cols.push_back(t.require(c));
  for (const auto& s : cfg.smooths) {
    for (const auto& c : s.columns) cols.push_back(t.require(c));
    if (!s.by.empty()) cols.push_back(t.require(s.by));
  }
  return cols;
}

bool complete(const std::vector<std::string>& row, const std::vector<std::size_t>& cols) {
  for (auto c : cols) {
    if (is_missing(row[c])) return false;
  }
  return true;
}

bool is_categorical(const ModelConfig& cfg, const std::string& col) {
  return std::find(cfg.categorical.begin(), cfg.categorical.end(), col) != cfg.categorical.end();
}

}  // namespace

Encoding learn_encoding(const Table& t, const ModelConfig& cfg) {
  const auto cols = used_columns(t, cfg, true);
  std::map<std::string, std::set<std::string>> raw, raw_by;
  for (const auto& row : t.rows) {
    if (!complete(row, cols)) continue;
    for (const auto& c : cfg.categorical) raw[c].insert(row[t.require(c)]);
    for (const auto& s : cfg.smooths) {
      if (!s.by.empty()) raw_by[s.by].insert(row[t.require(s.by)]);
    }
  }
  Encoding enc;
  for (const auto& c : cfg.categorical) {
    enc.levels[c] = sorted_levels(raw[c]);
    if (enc.levels[c].size() < 2) {
      throw CliError("categorical column '" + c + "' has fewer than two levels");
    }
  }
  for (const auto& [c, set] : raw_by) enc.by_levels[c] = sorted_levels(set);
  return enc;
}

std::vector<std::string> linear_names(const ModelConfig& cfg, const Encoding& enc) {
  std::vector<std::string> names;
  if (cfg.intercept) names.emplace_back("(Intercept)");
  for (const auto& c : cfg.linear) {
    if (is_categorical(cfg, c)) {
      const auto& lv = enc.levels.at(c);
      for (std::size_t k = 1; k < lv.size(); ++k) names.push_back(c + "=" + lv[k]);
    } else {
      names.push_back(c);
    }
  }
  return names;
}

Design build_design(const Table& t, const ModelConfig& cfg, const Encoding& enc,
                    bool require_response) {
  const bool has_response = require_response || t.column(cfg.response) >= 0;
  const auto cols = used_columns(t, cfg, require_response);
  Design d;
  d.spec.family = cfg.make_family();
  d.spec.linear_names = linear_names(cfg, enc);

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (complete(t.rows[r], cols)) {
      keep.push_back(r);
    } else {
      ++d.dropped;
    }
  }
  d.source_rows = keep;
  const auto n = static_cast<Index>(keep.size());
  if (n == 0) throw CliError(t.source + ": no complete rows");

  auto num = [&](std::size_t r, std::size_t c) { return parse_number(t.rows[r][c], t, r, c); };

  if (has_response) {
    const std::size_t yc = t.require(cfg.response);
    d.data.y.resize(n);
    for (Index i = 0; i < n; ++i) {
      const auto r = keep[static_cast<std::size_t>(i)];
      d.data.y[i] = is_missing(t.rows[r][yc]) ? std::numeric_limits<double>::quiet_NaN() : num(r, yc);
    }
  }
  if (!cfg.offset.empty()) {
    const std::size_t oc = t.require(cfg.offset);
    d.data.offset.resize(n);
    for (Index i = 0; i < n; ++i) d.data.offset[i] = num(keep[static_cast<std::size_t>(i)], oc);
  }

  d.data.X.resize(n, static_cast<Index>(d.spec.linear_names.size()));
  Index col = 0;
  if (cfg.intercept) d.data.X.col(col++).setOnes();
  for (const auto& c : cfg.linear) {
    const std::size_t tc = t.require(c);
    if (is_categorical(cfg, c)) {
      const auto& lv = enc.levels.at(c);
      const Index width = static_cast<Index>(lv.size()) - 1;
      d.data.X.middleCols(col, width).setZero();
      for (Index i = 0; i < n; ++i) {
        const auto r = keep[static_cast<std::size_t>(i)];
        const auto it = std::find(lv.begin(), lv.end(), t.rows[r][tc]);
        if (it == lv.end()) {
          throw CliError(t.source + ": data row " + std::to_string(r + 1) + ": level '" + t.rows[r][tc] +
                         "' of '" + c + "' was not seen in training");
        }
        const auto k = static_cast<Index>(it - lv.begin());
        if (k > 0) d.data.X(i, col + k - 1) = 1.0;
      }
      col += width;
    } else {
      for (Index i = 0; i < n; ++i) d.data.X(i, col) = num(keep[static_cast<std::size_t>(i)], tc);
      ++col;
    }
  }

  for (const auto& s : cfg.smooths) {
    Matrix Z(n, static_cast<Index>(s.columns.size()));
    for (std::size_t k = 0; k < s.columns.size(); ++k) {
      const std::size_t tc = t.require(s.columns[k]);
      for (Index i = 0; i < n; ++i) Z(i, static_cast<Index>(k)) = num(keep[static_cast<std::size_t>(i)], tc);
    }
    TermSpec ts{s.name, s.kind, s.columns, s.q, s.order, s.dif, s.by, ""};
    if (s.by.empty()) {
      d.spec.terms.push_back(ts);
      d.data.terms.push_back({Z, {}});
      continue;
    }
    const std::size_t bc = t.require(s.by);
    const auto& lv = enc.by_levels.at(s.by);
    for (Index i = 0; i < n; ++i) {
      const auto r = keep[static_cast<std::size_t>(i)];
      if (std::find(lv.begin(), lv.end(), t.rows[r][bc]) == lv.end()) {
        throw CliError(t.source + ": data row " + std::to_string(r + 1) + ": level '" + t.rows[r][bc] +
                       "' of '" + s.by + "' was not seen in training");
      }
    }
    for (const auto& level : lv) {
      TermSpec g = ts;
      g.name = s.name + ":" + s.by + "=" + level;
      g.group_level = level;
      std::vector<uint8_t> mask(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) mask[static_cast<std::size_t>(i)] = t.rows[keep[static_cast<std::size_t>(i)]][bc] == level;
      d.spec.terms.push_back(g);
      d.data.terms.push_back({Z, std::move(mask)});
    }
  }
  return d;
}

nlohmann::json encoding_to_json(const Encoding& enc) {
  return {{"levels", enc.levels}, {"by_levels", enc.by_levels}};
}

Encoding encoding_from_json(const nlohmann::json& j) {
  Encoding e;
  e.levels = j.at("levels").get<std::map<std::string, std::vector<std::string>>>();
  e.by_levels = j.at("by_levels").get<std::map<std::string, std::vector<std::string>>>();
  return e;
}

}  // namespace gplsiam::cli
