#include "gplsiam_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "gplsiam/errors.hpp"
#include "gplsiam/fit.hpp"
#include "gplsiam/inference.hpp"
#include "gplsiam/sim.hpp"
#include "gplsiam_cli/archive.hpp"
#include "gplsiam_cli/config.hpp"
#include "gplsiam_cli/csv.hpp"
#include "gplsiam_cli/design.hpp"

namespace gplsiam::cli {

namespace {

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string pvalue(double p) { return p < 0.001 ? "< 0.001" : fmt("%.3f", p); }

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw CliError("cannot write '" + path + "'");
  return f;
}

void write_report(std::ostream& os, const FittedModel& m, const Design& d) {
  const InferenceReport rep = coef_table(m);
  os << "Family: " << m.spec.family.name() << "   n = " << d.data.n() << " (" << d.dropped
     << " rows dropped for missing values)   dim(psi) = " << m.layout.dim() << "\n\n";
  os << "Coefficients:\n";
  std::size_t w = 12;
  for (const auto& r : rep.coefficients) w = std::max(w, r.name.size() + 2);
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %12s %12s %10s %10s\n", static_cast<int>(w), "", "Estimate", "Std.Error",
                "z", "Pr(>|z|)");
  os << line;
  for (const auto& r : rep.coefficients) {
    std::snprintf(line, sizeof line, "%-*s %12.5g %12.5g %10.3f %10s\n", static_cast<int>(w), r.name.c_str(),
                  r.estimate, r.se, r.z, pvalue(r.p).c_str());
    os << line;
  }
  if (!rep.terms.empty()) {
    os << "\nSmooth terms:\n";
    std::size_t tw = 8;
    for (const auto& t : rep.terms) tw = std::max(tw, t.name.size() + 2);
    std::snprintf(line, sizeof line, "%-*s %8s %10s %4s %12s  %s\n", static_cast<int>(tw), "", "edf", "edf(alpha)",
                  "q", "lambda", "alpha");
    os << line;
    for (const auto& t : rep.terms) {
      std::string a;
      for (Index k = 0; k < t.alpha.size(); ++k) a += (k ? " " : "") + fmt("%.4f", t.alpha[k]);
      std::snprintf(line, sizeof line, "%-*s %8.3f %10.3f %4d %12.5g  %s\n", static_cast<int>(tw), t.name.c_str(),
                    t.edf, t.edf_alpha, t.q, t.lambda, a.c_str());
      os << line;
    }
  }
  os << "\nConvergence: " << (m.converged ? "converged" : "NOT converged") << ", " << m.iterations
     << " iterations, " << m.restarts << " restarts, best met " << fmt("%.3g", m.best_met) << "\n";
  os << "phi = " << fmt("%.6g", m.phi) << ", edf = " << fmt("%.3f", m.edf_total)
     << ", log-likelihood = " << fmt("%.6g", m.loglik) << "\n";
  if (m.numerator_violations > 0 || m.lambda_caps > 0) {
    os << "lambda numerator violations = " << m.numerator_violations << ", lambda caps = " << m.lambda_caps << "\n";
  }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const CliError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitInput;
}

}  // namespace

double auc(const Vector& y, const Vector& score) {
  const Index n = y.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return score[a] < score[b]; });
  double rank_sum = 0.0;
  Index pos = 0;
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j + 1 < n && score[idx[static_cast<std::size_t>(j + 1)]] == score[idx[static_cast<std::size_t>(i)]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k) {
      if (y[idx[static_cast<std::size_t>(k)]] > 0.5) {
        rank_sum += mid;
        ++pos;
      }
    }
    i = j + 1;
  }
  const double np = static_cast<double>(pos);
  const double nn = static_cast<double>(n - pos);
  if (np == 0 || nn == 0) return 0.5;
  return (rank_sum - np * (np + 1) / 2) / (np * nn);
}

Confusion confusion(const Vector& y, const Vector& score, double threshold) {
  Confusion c;
  for (Index i = 0; i < y.size(); ++i) {
    const bool pred = score[i] >= threshold;
    const bool obs = y[i] > 0.5;
    if (pred && obs) ++c.tp;
    else if (pred) ++c.fp;
    else if (obs) ++c.fn;
    else ++c.tn;
  }
  return c;
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ModelConfig cfg = load_config(o.config);
    if (o.seed) cfg.fit.seed = *o.seed;
    const Table table = read_csv(o.data);
    const Encoding enc = learn_encoding(table, cfg);
    const Design d = build_design(table, cfg, enc, true);
    if (d.dropped > 0) err << "note: dropped " << d.dropped << " rows with missing values\n";
    const Problem pb(d.spec, d.data, cfg.fit);
    Archive a{cfg, enc, fit(pb)};
    save_archive(a, o.out);
    if (o.report.empty()) {
      write_report(out, a.model, d);
    } else {
      auto f = open_out(o.report);
      write_report(f, a.model, d);
    }
    if (!a.model.converged) {
      err << "warning: fit did not converge; archive holds the best-met iterate\n";
      return kExitNonConvergence;
    }
    return kExitOk;
  });
}

int cmd_predict(const PredictOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Archive a = load_archive(o.archive);
    const Table table = read_csv(o.data);
    const Design d = build_design(table, a.config, a.encoding, false);
    if (d.dropped > 0) err << "note: dropped " << d.dropped << " rows with missing values\n";
    const Prediction p = predict(a.model, d.data);
    auto f = open_out(o.out);
    std::vector<std::string> head{"row", "eta", "mu"};
    for (const auto& t : a.model.terms) head.push_back("f:" + t.name);
    write_row(f, head);
    for (Index i = 0; i < p.eta.size(); ++i) {
      std::vector<std::string> row{std::to_string(d.source_rows[static_cast<std::size_t>(i)] + 1),
                                   format_double(p.eta[i]), format_double(p.mu[i])};
      for (Index j = 0; j < p.smooth.cols(); ++j) row.push_back(format_double(p.smooth(i, j)));
      write_row(f, row);
    }
    if (p.clamped > 0) err << "note: " << p.clamped << " index values clamped onto the fitted knot span\n";
    const bool has_y = d.data.y.size() == p.mu.size() && d.data.y.allFinite();
    if (has_y && a.model.spec.family.kind() == FamilyKind::bernoulli) {
      out << "AUC = " << fmt("%.4f", auc(d.data.y, p.mu)) << "\n";
      if (o.threshold) {
        const Confusion c = confusion(d.data.y, p.mu, *o.threshold);
        out << "threshold " << *o.threshold << ": TP " << c.tp << " FP " << c.fp << " TN " << c.tn << " FN " << c.fn
            << "  sensitivity " << fmt("%.3f", c.sensitivity()) << " specificity "
            << fmt("%.3f", c.specificity()) << "\n";
      }
    }
    return kExitOk;
  });
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    sim::Scenario sc;
    try {
      sc = sim::make_scenario(o.scenario);
    } catch (const std::invalid_argument& e) {
      throw CliError(e.what());
    }
    if (o.replicates < 1) throw CliError("--reps must be >= 1");
    sim::StudyConfig cfg;
    cfg.n_list.assign(o.n_list.begin(), o.n_list.end());
    cfg.replicates = o.replicates;
    cfg.jobs = std::max(1, o.jobs);
    cfg.seed = o.seed;
    cfg.collect_grid = o.grid;
    const sim::StudyResult r = sim::run_study(sc, cfg);
    if (!o.out.empty()) sim::write_study(r, o.out);
    char line[256];
    out << "scenario " << sc.name << ", " << o.replicates << " replicates, seed " << o.seed << "\n";
    std::snprintf(line, sizeof line, "%7s %10s %10s %12s %12s %10s %10s\n", "n", "unstable", "rate", "mean_err",
                  "median_err", "phi_mean", "coverage");
    out << line;
    for (const auto& a : r.aggregate) {
      std::snprintf(line, sizeof line, "%7ld %10d %10.4f %12.5f %12.5f %10.4g %10.4f\n", static_cast<long>(a.n),
                    a.unstable, a.instability_rate, a.mean_rel_error, a.median_rel_error, a.phi_mean, a.coverage);
      out << line;
    }
    for (const auto& t : r.timing) {
      std::snprintf(line, sizeof line, "n=%ld fit seconds: mean %.4f median %.4f p90 %.4f max %.4f\n",
                    static_cast<long>(t.n), t.mean, t.median, t.p90, t.max);
      out << line;
    }
    return kExitOk;
  });
}

int cmd_diagnose(const DiagnoseOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.replicates < 1) throw CliError("--reps must be >= 1");
    const Archive a = load_archive(o.archive);
    const Table table = read_csv(o.data);
    const Design d = build_design(table, a.config, a.encoding, true);
    const Prediction p = predict(a.model, d.data);
    std::mt19937_64 rng(o.seed);
    const Matrix r = quantile_residuals(d.data.y, p.mu, a.model.phi, a.model.spec.family, rng, o.replicates);
    auto f = open_out(o.out);
    write_row(f, {"row", "replicate", "residual", "fitted", "index"});
    for (Index rep = 0; rep < r.cols(); ++rep) {
      for (Index i = 0; i < r.rows(); ++i) {
        write_row(f, {std::to_string(d.source_rows[static_cast<std::size_t>(i)] + 1), std::to_string(rep + 1),
                      format_double(r(i, rep)), format_double(p.mu[i]), std::to_string(i + 1)});
      }
    }
    out << "wrote " << r.size() << " residuals (" << r.rows() << " observations x " << r.cols()
        << " replicates)\n";
    return kExitOk;
  });
}

int cmd_band(const BandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.points < 2) throw CliError("--points must be >= 2");
    const Archive a = load_archive(o.archive);
    const Table table = read_csv(o.data);
    const Design d = build_design(table, a.config, a.encoding, true);
    const Problem pb(d.spec, d.data, a.config.fit);
    if (pb.dim() != a.model.layout.dim()) throw CliError("band: data do not match the archived model");
    auto f = open_out(o.out);
    write_row(f, {"term", "u", "fhat", "lower", "upper"});
    bool found = false;
    for (Index j = 0; j < a.model.layout.num_terms(); ++j) {
      const auto& name = a.model.terms[static_cast<std::size_t>(j)].name;
      if (!o.term.empty() && name != o.term) continue;
      found = true;
      Band b = observed_band(a.model, pb, j);
      if (!o.observed) {
        const double lo = b.u.minCoeff(), hi = b.u.maxCoeff();
        b = confidence_band(a.model, pb, j, Vector::LinSpaced(o.points, lo, hi));
      }
      const Vector lower = b.lower(), upper = b.upper();
      for (Index i = 0; i < b.u.size(); ++i) {
        write_row(f, {name, format_double(b.u[i]), format_double(b.fhat[i]), format_double(lower[i]),
                      format_double(upper[i])});
      }
    }
    if (!found) throw CliError("no term named '" + o.term + "'");
    out << "wrote bands to " << o.out << "\n";
    return kExitOk;
  });
}

int cmd_prep_bike(const PrepBikeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Table t = read_csv(o.in);
    const std::size_t c_date = t.require("dteday"), c_yr = t.require("yr"), c_hol = t.require("holiday"),
                      c_wd = t.require("weekday"), c_hr = t.require("hr"), c_hum = t.require("hum"),
                      c_ws = t.require("windspeed"), c_cnt = t.require("cnt");
    auto f = open_out(o.out);
    write_row(f, {"hdemand", "yr", "holiday", "weekday", "hr", "yday", "hum", "windspeed", "cnt"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      int y = 0;
      unsigned m = 0, dd = 0;
      if (std::sscanf(row[c_date].c_str(), "%d-%u-%u", &y, &m, &dd) != 3) {
        throw CliError(t.source + ": data row " + std::to_string(r + 1) + ": bad date '" + row[c_date] + "'");
      }
      using namespace std::chrono;
      const year_month_day ymd{year{y}, month{m}, day{dd}};
      if (!ymd.ok()) throw CliError(t.source + ": data row " + std::to_string(r + 1) + ": invalid date");
      const auto yday = (sys_days{ymd} - sys_days{year{y} / January / 1}).count() + 1;
      const double cnt = parse_number(row[c_cnt], t, r, c_cnt);
      write_row(f, {cnt > o.threshold ? "1" : "0", row[c_yr], row[c_hol], row[c_wd], row[c_hr],
                    std::to_string(yday), row[c_hum], row[c_ws], row[c_cnt]});
    }
    out << "wrote " << t.rows.size() << " rows to " << o.out << "\n";
    return kExitOk;
  });
}

}  // namespace gplsiam::cli
