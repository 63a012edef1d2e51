#include "gplsiam_cli/archive.hpp"

#include <fstream>
#include <map>

#include "gplsiam_cli/csv.hpp"

namespace gplsiam::cli {

using nlohmann::json;

namespace {

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

json archive_to_json(const Archive& a) {
  const FittedModel& m = a.model;
  json j;
  j["format_version"] = kArchiveFormatVersion;
  j["config"] = config_to_json(a.config);
  j["encoding"] = encoding_to_json(a.encoding);
  j["family"] = std::string(to_string(m.spec.family.kind()));
  j["link"] = std::string(to_string(m.spec.family.link()));
  j["linear_names"] = m.spec.linear_names;

  json layout;
  layout["p"] = m.layout.p();
  layout["dim"] = m.layout.dim();
  json terms = json::array();
  for (std::size_t k = 0; k < m.terms.size(); ++k) {
    const auto& t = m.terms[k];
    const auto& ts = m.spec.terms[k];
    const auto& slots = m.layout.term(static_cast<Index>(k));
    terms.push_back({{"name", t.name},
                     {"type", t.kind == TermKind::single_index ? "index" : "plain"},
                     {"covariates", ts.covariates},
                     {"group_column", ts.group_column},
                     {"group_level", ts.group_level},
                     {"q", t.q},
                     {"s", t.s},
                     {"order", t.order},
                     {"dif", t.dif},
                     {"gamma_offset", slots.gamma_offset},
                     {"alpha_offset", slots.alpha_offset},
                     {"knots", t.knots.knots},
                     {"degree", t.knots.degree},
                     {"col_means", vec(t.col_means)},
                     {"deriv_col_means", vec(t.deriv_col_means)},
                     {"alpha", vec(t.alpha)}});
  }
  layout["terms"] = terms;
  j["layout"] = layout;

  j["psi"] = vec(m.psi);
  j["lambda"] = vec(m.lambda);
  j["phi"] = m.phi;
  j["edf"] = {{"total", m.edf_total},
              {"beta", m.edf_beta},
              {"gamma", vec(m.edf_gamma)},
              {"alpha", vec(m.edf_alpha)},
              {"per_coef", vec(m.edf_coef)}};
  j["B"] = {{"rows", m.B.rows()},
            {"cols", m.B.cols()},
            {"ridge", m.B_ridge},
            {"row_major", [&] {
               std::vector<double> v;
               v.reserve(static_cast<std::size_t>(m.B.size()));
               for (Index r = 0; r < m.B.rows(); ++r) {
                 for (Index c = 0; c < m.B.cols(); ++c) v.push_back(m.B(r, c));
               }
               return v;
             }()}};

  std::map<std::string, int> reasons;
  for (const auto& r : m.trace.restart_reason) ++reasons[r];
  j["convergence"] = {{"converged", m.converged},
                      {"best_met", m.best_met},
                      {"restarts", m.restarts},
                      {"iterations", m.iterations},
                      {"final_met", m.trace.met.empty() ? 0.0 : m.trace.met.back()},
                      {"restart_reasons", reasons},
                      {"numerator_violations", m.numerator_violations},
                      {"lambda_caps", m.lambda_caps},
                      {"mean_clamps", m.mean_clamps},
                      {"loglik", m.loglik},
                      {"penalized_loglik", m.penalized_loglik}};
  j["seed"] = m.seed;
  return j;
}

Archive archive_from_json(const json& j) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw CliError("archive: missing format_version");
  }
  const int version = j["format_version"].get<int>();
  if (version > kArchiveFormatVersion || version < 1) {
    throw CliError("archive: format_version " + std::to_string(version) +
                   " is not supported (this build reads up to " + std::to_string(kArchiveFormatVersion) + ")");
  }
  try {
    Archive a;
    a.config = config_from_json(j.at("config"));
    a.encoding = encoding_from_json(j.at("encoding"));
    FittedModel& m = a.model;
    m.config = a.config.fit;
    m.spec.family = Family(parse_family(j.at("family").get<std::string>()),
                           parse_link(j.at("link").get<std::string>()));
    m.spec.linear_names = j.at("linear_names").get<std::vector<std::string>>();

    const json& lay = j.at("layout");
    std::vector<std::pair<Index, Index>> qs;
    for (const auto& t : lay.at("terms")) {
      FittedTerm ft;
      ft.name = t.at("name").get<std::string>();
      ft.kind = t.at("type").get<std::string>() == "index" ? TermKind::single_index : TermKind::plain_smooth;
      ft.q = t.at("q").get<int>();
      ft.s = t.at("s").get<int>();
      ft.order = t.at("order").get<int>();
      ft.dif = t.at("dif").get<int>();
      ft.knots.knots = t.at("knots").get<std::vector<double>>();
      ft.knots.degree = t.at("degree").get<int>();
      ft.col_means = to_vec(t.at("col_means"));
      ft.deriv_col_means = to_vec(t.at("deriv_col_means"));
      ft.alpha = to_vec(t.at("alpha"));
      TermSpec ts{ft.name, ft.kind, t.at("covariates").get<std::vector<std::string>>(), ft.q, ft.order, ft.dif,
                  t.at("group_column").get<std::string>(), t.at("group_level").get<std::string>()};
      m.spec.terms.push_back(ts);
      m.terms.push_back(ft);
      qs.emplace_back(ft.q, ft.s);
    }
    m.layout = CoefficientLayout(lay.at("p").get<Index>(), qs);
    if (m.layout.dim() != lay.at("dim").get<Index>()) throw CliError("archive: layout dimension mismatch");

    m.psi = to_vec(j.at("psi"));
    m.lambda = to_vec(j.at("lambda"));
    m.phi = j.at("phi").get<double>();
    if (m.psi.size() != m.layout.dim()) throw CliError("archive: psi length does not match the layout");
    const json& e = j.at("edf");
    m.edf_total = e.at("total").get<double>();
    m.edf_beta = e.at("beta").get<double>();
    m.edf_gamma = to_vec(e.at("gamma"));
    m.edf_alpha = to_vec(e.at("alpha"));
    m.edf_coef = to_vec(e.at("per_coef"));
    const json& b = j.at("B");
    const auto rows = b.at("rows").get<Index>();
    const auto cols = b.at("cols").get<Index>();
    const auto data = b.at("row_major").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != rows * cols) throw CliError("archive: B has the wrong size");
    m.B = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), rows, cols);
    m.B_ridge = b.at("ridge").get<double>();
    const json& c = j.at("convergence");
    m.converged = c.at("converged").get<bool>();
    m.best_met = c.at("best_met").get<double>();
    m.restarts = c.at("restarts").get<int>();
    m.iterations = c.at("iterations").get<int>();
    m.numerator_violations = c.at("numerator_violations").get<Index>();
    m.lambda_caps = c.at("lambda_caps").get<Index>();
    m.mean_clamps = c.at("mean_clamps").get<Index>();
    m.loglik = c.at("loglik").get<double>();
    m.penalized_loglik = c.at("penalized_loglik").get<double>();
    m.seed = j.at("seed").get<uint64_t>();
    return a;
  } catch (const json::exception& ex) {
    throw CliError(std::string("archive: malformed document: ") + ex.what());
  }
}

void save_archive(const Archive& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CliError("cannot write '" + path + "'");
  out << archive_to_json(a).dump(1) << '\n';
}

Archive load_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open archive '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CliError("archive '" + path + "': " + e.what());
  }
  return archive_from_json(j);
}

}  // namespace gplsiam::cli
