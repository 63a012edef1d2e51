#include "gplsiam_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>

#include "gplsiam_cli/csv.hpp"

namespace gplsiam::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v + ",") {
    if (c == ',') {
      const std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

struct Parser {
  std::string source;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw CliError(source + ":" + std::to_string(line) + ": " + msg);
  }

  int as_int(const std::string& key, const std::string& v) const {
    int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) fail("'" + key + "' expects an integer, got '" + v + "'");
    return x;
  }
  double as_double(const std::string& key, const std::string& v) const {
    double x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) fail("'" + key + "' expects a number, got '" + v + "'");
    return x;
  }
  bool as_bool(const std::string& key, std::string v) const {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail("'" + key + "' expects true or false, got '" + v + "'");
  }
  uint64_t as_u64(const std::string& key, const std::string& v) const {
    uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) fail("'" + key + "' expects a non-negative integer");
    return x;
  }
};

void set_fit_key(FitConfig& f, const Parser& ps, const std::string& key, const std::string& v) {
  const std::map<std::string, double*> reals{
      {"eps_knot", &f.eps_knot},           {"ridge", &f.ridge},
      {"tol_met", &f.tol_met},             {"met_explosion", &f.met_explosion},
      {"alpha1_floor", &f.alpha1_floor},   {"init_alpha_max", &f.init_alpha_max},
      {"init_alpha1_min", &f.init_alpha1_min}, {"init_lambda_lo", &f.init_lambda_lo},
      {"init_lambda_hi", &f.init_lambda_hi},   {"init_phi_lo", &f.init_phi_lo},
      {"init_phi_hi", &f.init_phi_hi},     {"start_lambda", &f.start_lambda},
      {"lambda_ceiling", &f.lambda_ceiling}, {"lambda_floor", &f.lambda_floor}};
  const std::map<std::string, int*> ints{{"max_model_iter", &f.max_model_iter},
                                         {"max_total_iter", &f.max_total_iter},
                                         {"init_alpha_attempts", &f.init_alpha_attempts}};
  if (auto it = reals.find(key); it != reals.end()) {
    *it->second = ps.as_double(key, v);
  } else if (auto jt = ints.find(key); jt != ints.end()) {
    *jt->second = ps.as_int(key, v);
  } else if (key == "seed") {
    f.seed = ps.as_u64(key, v);
  } else if (key == "alpha1_all_terms") {
    f.alpha1_all_terms = ps.as_bool(key, v);
  } else {
    ps.fail("unknown key '" + key + "' in [fit]");
  }
}

TermKind parse_kind(const Parser& ps, const std::string& v) {
  if (v == "index" || v == "single_index") return TermKind::single_index;
  if (v == "plain" || v == "smooth") return TermKind::plain_smooth;
  ps.fail("smooth type must be 'index' or 'plain', got '" + v + "'");
}

}  // namespace

Family ModelConfig::make_family() const {
  const FamilyKind k = parse_family(family);
  return link.empty() ? Family(k) : Family(k, parse_link(link));
}

ModelConfig parse_config(std::istream& in, const std::string& source) {
  ModelConfig cfg;
  Parser ps{source, 0};
  enum class Section { none, model, smooth, fit } sec = Section::none;
  std::set<std::string> seen_keys;
  int family_line = 0;
  std::string raw;
  while (std::getline(in, raw)) {
    ++ps.line;
    const auto hash = raw.find_first_of("#;");
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') ps.fail("malformed section header '" + text + "'");
      const std::string inner = trim(text.substr(1, text.size() - 2));
      seen_keys.clear();
      if (inner == "model") {
        sec = Section::model;
      } else if (inner == "fit") {
        sec = Section::fit;
      } else if (inner.rfind("smooth", 0) == 0) {
        const std::string name = trim(inner.substr(6));
        if (name.empty()) ps.fail("smooth section needs a name: [smooth NAME]");
        for (const auto& s : cfg.smooths) {
          if (s.name == name) ps.fail("duplicate smooth '" + name + "' (first at line " + std::to_string(s.line) + ")");
        }
        SmoothConfig s;
        s.name = name;
        s.line = ps.line;
        cfg.smooths.push_back(s);
        sec = Section::smooth;
      } else {
        ps.fail("unknown section [" + inner + "]");
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) ps.fail("expected 'key = value', got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) ps.fail("missing key before '='");
    if (!seen_keys.insert(key).second) ps.fail("duplicate key '" + key + "'");
    switch (sec) {
      case Section::none:
        ps.fail("key '" + key + "' outside any section");
      case Section::model:
        if (key == "family") {
          cfg.family = value;
          family_line = ps.line;
        } else if (key == "link") {
          cfg.link = value;
        } else if (key == "response") {
          cfg.response = value;
        } else if (key == "offset") {
          cfg.offset = value;
        } else if (key == "intercept") {
          cfg.intercept = ps.as_bool(key, value);
        } else if (key == "linear") {
          cfg.linear = split_list(value);
        } else if (key == "categorical") {
          cfg.categorical = split_list(value);
        } else {
          ps.fail("unknown key '" + key + "' in [model]");
        }
        break;
      case Section::smooth: {
        SmoothConfig& s = cfg.smooths.back();
        if (key == "type") {
          s.kind = parse_kind(ps, value);
        } else if (key == "columns") {
          s.columns = split_list(value);
        } else if (key == "q") {
          s.q = ps.as_int(key, value);
        } else if (key == "order" || key == "d") {
          s.order = ps.as_int(key, value);
        } else if (key == "dif") {
          s.dif = ps.as_int(key, value);
        } else if (key == "by") {
          s.by = value;
        } else {
          ps.fail("unknown key '" + key + "' in [smooth " + s.name + "]");
        }
        break;
      }
      case Section::fit:
        set_fit_key(cfg.fit, ps, key, value);
        break;
    }
  }

  ps.line = family_line;
  try {
    (void)cfg.make_family();
  } catch (const std::invalid_argument& e) {
    ps.fail(e.what());
  }
  ps.line = 0;
  if (cfg.response.empty()) ps.fail("[model] needs a 'response' key");
  for (const auto& c : cfg.categorical) {
    if (std::find(cfg.linear.begin(), cfg.linear.end(), c) == cfg.linear.end()) {
      ps.fail("categorical column '" + c + "' is not listed in 'linear'");
    }
  }
  if (!cfg.intercept && !cfg.categorical.empty()) {
    ps.fail("categorical columns use treatment contrasts and need intercept = true");
  }
  for (const auto& s : cfg.smooths) {
    ps.line = s.line;
    if (s.columns.empty()) ps.fail("smooth '" + s.name + "' has no columns");
    if (s.kind == TermKind::plain_smooth && s.columns.size() != 1) {
      ps.fail("plain smooth '" + s.name + "' takes exactly one column");
    }
    if (s.kind == TermKind::single_index && s.columns.size() < 2) {
      ps.fail("index smooth '" + s.name + "' needs at least two columns");
    }
    if (s.order < 1) ps.fail("smooth '" + s.name + "': order must be >= 1");
    if (s.q < s.order) ps.fail("smooth '" + s.name + "': q must be >= order");
    if (s.dif < 1 || s.dif >= s.q) ps.fail("smooth '" + s.name + "': dif must be in [1, q)");
  }
  ps.line = 0;
  try {
    cfg.fit.validate();
  } catch (const std::invalid_argument& e) {
    ps.fail(std::string("[fit] ") + e.what());
  }
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["family"] = c.family;
  j["link"] = c.link;
  j["response"] = c.response;
  j["offset"] = c.offset;
  j["intercept"] = c.intercept;
  j["linear"] = c.linear;
  j["categorical"] = c.categorical;
  j["smooths"] = nlohmann::json::array();
  for (const auto& s : c.smooths) {
    j["smooths"].push_back({{"name", s.name},
                            {"type", s.kind == TermKind::single_index ? "index" : "plain"},
                            {"columns", s.columns},
                            {"q", s.q},
                            {"order", s.order},
                            {"dif", s.dif},
                            {"by", s.by}});
  }
  const FitConfig& f = c.fit;
  j["fit"] = {{"eps_knot", f.eps_knot},
              {"ridge", f.ridge},
              {"tol_met", f.tol_met},
              {"max_model_iter", f.max_model_iter},
              {"max_total_iter", f.max_total_iter},
              {"met_explosion", f.met_explosion},
              {"alpha1_floor", f.alpha1_floor},
              {"alpha1_all_terms", f.alpha1_all_terms},
              {"init_alpha_max", f.init_alpha_max},
              {"init_alpha1_min", f.init_alpha1_min},
              {"init_alpha_attempts", f.init_alpha_attempts},
              {"init_lambda_lo", f.init_lambda_lo},
              {"init_lambda_hi", f.init_lambda_hi},
              {"init_phi_lo", f.init_phi_lo},
              {"init_phi_hi", f.init_phi_hi},
              {"start_lambda", f.start_lambda},
              {"lambda_ceiling", f.lambda_ceiling},
              {"lambda_floor", f.lambda_floor},
              {"seed", f.seed}};
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.family = j.at("family").get<std::string>();
  c.link = j.at("link").get<std::string>();
  c.response = j.at("response").get<std::string>();
  c.offset = j.at("offset").get<std::string>();
  c.intercept = j.at("intercept").get<bool>();
  c.linear = j.at("linear").get<std::vector<std::string>>();
  c.categorical = j.at("categorical").get<std::vector<std::string>>();
  for (const auto& s : j.at("smooths")) {
    SmoothConfig sc;
    sc.name = s.at("name").get<std::string>();
    sc.kind = s.at("type").get<std::string>() == "index" ? TermKind::single_index : TermKind::plain_smooth;
    sc.columns = s.at("columns").get<std::vector<std::string>>();
    sc.q = s.at("q").get<int>();
    sc.order = s.at("order").get<int>();
    sc.dif = s.at("dif").get<int>();
    sc.by = s.at("by").get<std::string>();
    c.smooths.push_back(sc);
  }
  const auto& f = j.at("fit");
  FitConfig& o = c.fit;
  o.eps_knot = f.at("eps_knot").get<double>();
  o.ridge = f.at("ridge").get<double>();
  o.tol_met = f.at("tol_met").get<double>();
  o.max_model_iter = f.at("max_model_iter").get<int>();
  o.max_total_iter = f.at("max_total_iter").get<int>();
  o.met_explosion = f.at("met_explosion").get<double>();
  o.alpha1_floor = f.at("alpha1_floor").get<double>();
  o.alpha1_all_terms = f.at("alpha1_all_terms").get<bool>();
  o.init_alpha_max = f.at("init_alpha_max").get<double>();
  o.init_alpha1_min = f.at("init_alpha1_min").get<double>();
  o.init_alpha_attempts = f.at("init_alpha_attempts").get<int>();
  o.init_lambda_lo = f.at("init_lambda_lo").get<double>();
  o.init_lambda_hi = f.at("init_lambda_hi").get<double>();
  o.init_phi_lo = f.at("init_phi_lo").get<double>();
  o.init_phi_hi = f.at("init_phi_hi").get<double>();
  o.start_lambda = f.at("start_lambda").get<double>();
  o.lambda_ceiling = f.at("lambda_ceiling").get<double>();
  o.lambda_floor = f.at("lambda_floor").get<double>();
  o.seed = f.at("seed").get<uint64_t>();
  return c;
}

}  // namespace gplsiam::cli
