#include "gplsiam/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "gplsiam/errors.hpp"
#include "gplsiam/inference.hpp"

namespace gplsiam::sim {

namespace {

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vector make_vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return 0.0;
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return std::lerp(v[lo], v[hi], pos - static_cast<double>(lo));
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

}  // namespace

Index Scenario::dim() const {
  Index d = beta.size();
  for (const auto& a : alpha) d += q + a.size() - 1;
  return d;
}

std::vector<std::string> scenario_names() { return {"poisson1", "gamma1", "poisson2"}; }

Scenario make_scenario(std::string_view name) {
  Scenario sc;
  sc.name = std::string(name);
  const double r12 = std::sqrt(12.0);
  if (name == "poisson1") {
    sc.kind = ScenarioKind::poisson1;
    sc.family = Family(FamilyKind::poisson, LinkKind::log);
    sc.beta = make_vec({2.0, 0.7});
    sc.direction = {make_vec({1.0, -1.4}), make_vec({1.0, 1.7, -0.8})};
    sc.f = {[r12](double u) { return std::sin(4.0 * (u / r12 - 0.11)); },
            [r12](double u) {
              const double t = u / r12 + 0.45;
              return std::sin(4.0 * t) - std::cos(4.0 * t);
            }};
    sc.standardize_z = true;
  } else if (name == "gamma1") {
    sc.kind = ScenarioKind::gamma1;
    sc.family = Family(FamilyKind::gamma, LinkKind::log);
    sc.beta = make_vec({2.0, -1.8});
    sc.direction = {make_vec({1.0, -1.4}), make_vec({1.0, 1.7, -0.8}),
                    make_vec({1.0, 3.4, -0.5, -1.6})};
    sc.f = {[](double u) { return std::pow(1.8 * u, 3) - std::sin(u); },
            [](double u) { return std::exp(u) - 3.0 * u * u * u; },
            [](double u) { return u * u / 6.0 - std::cos(std::numbers::pi * u); }};
    sc.standardize_z = false;
    sc.phi = 9.0;
  } else if (name == "poisson2") {
    sc.kind = ScenarioKind::poisson2;
    sc.family = Family(FamilyKind::poisson, LinkKind::log);
    sc.beta = make_vec({2.0, 0.7});
    sc.direction = {make_vec({1.0, -1.4}), make_vec({1.0, -1.0, -0.5})};
    sc.f = {[r12](double u) {
              const double t = u / r12 - 0.11;
              return std::pow(1.8 * t, 3) - std::sin(t);
            },
            [r12](double u) {
              const double t = (u / r12 + 0.57) / 1.4;
              return (0.2 * std::pow(t, 11) * std::pow(10.0 * (1.0 - t), 6) +
                      10.0 * std::pow(10.0 * t, 3) * std::pow(1.0 - t, 10)) /
                     8.0;
            }};
    sc.standardize_z = true;
  } else {
    std::string names;
    for (const auto& s : scenario_names()) names += (names.empty() ? "" : ", ") + s;
    throw std::invalid_argument("unknown scenario '" + std::string(name) + "' (valid: " + names + ")");
  }
  for (const auto& d : sc.direction) sc.alpha.push_back(d.normalized());
  return sc;
}

uint64_t stream_seed(uint64_t master, std::string_view scenario, Index n, int replicate,
                     std::string_view tag) {
  uint64_t h = splitmix(master);
  h = splitmix(h ^ fnv1a(scenario));
  h = splitmix(h ^ static_cast<uint64_t>(n));
  h = splitmix(h ^ static_cast<uint64_t>(static_cast<int64_t>(replicate)));
  return splitmix(h ^ fnv1a(tag));
}

Design make_design(const Scenario& sc, Index n, uint64_t master_seed) {
  if (n < 2) throw std::invalid_argument("make_design: n must be >= 2");
  std::mt19937_64 rng(stream_seed(master_seed, sc.name, n, -1, "covariates"));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Design d;
  d.n = n;
  d.x.resize(n);
  for (Index i = 0; i < n; ++i) d.x[i] = unif(rng);
  d.eta = Vector::Constant(n, sc.beta[0]) + sc.beta[1] * d.x;
  for (Index j = 0; j < sc.num_terms(); ++j) {
    const auto& a = sc.alpha[static_cast<std::size_t>(j)];
    Matrix Z(n, a.size());
    for (Index c = 0; c < Z.cols(); ++c) {
      for (Index i = 0; i < n; ++i) Z(i, c) = unif(rng);
    }
    if (sc.standardize_z) {
      for (Index c = 0; c < Z.cols(); ++c) {
        const double mean = Z.col(c).mean();
        const double sd =
            std::sqrt((Z.col(c).array() - mean).square().sum() / static_cast<double>(n - 1));
        Z.col(c) = (Z.col(c).array() - mean) / sd;
      }
    }
    Vector u = Z * a;
    Vector f(n);
    for (Index i = 0; i < n; ++i) f[i] = sc.f[static_cast<std::size_t>(j)](u[i]);
    f.array() -= f.mean();
    d.eta += f;
    d.Z.push_back(std::move(Z));
    d.u.push_back(std::move(u));
    d.f.push_back(std::move(f));
  }
  return d;
}

Dataset generate(const Scenario& sc, const Design& design, uint64_t master_seed, int replicate) {
  std::mt19937_64 rng(stream_seed(master_seed, sc.name, design.n, replicate, "response"));
  Dataset data;
  data.y.resize(design.n);
  for (Index i = 0; i < design.n; ++i) {
    const double mu = std::exp(design.eta[i]);
    if (sc.family.kind() == FamilyKind::gamma) {
      std::gamma_distribution<double> g(sc.phi, mu / sc.phi);
      data.y[i] = g(rng);
    } else {
      std::poisson_distribution<long long> p(mu);
      data.y[i] = static_cast<double>(p(rng));
    }
  }
  data.X.resize(design.n, 2);
  data.X.col(0).setOnes();
  data.X.col(1) = design.x;
  for (const auto& Z : design.Z) data.terms.push_back({Z, {}});
  return data;
}

ModelSpec scenario_spec(const Scenario& sc) {
  ModelSpec spec;
  spec.family = sc.family;
  spec.linear_names = {"(Intercept)", "x"};
  for (Index j = 0; j < sc.num_terms(); ++j) {
    TermSpec t;
    t.name = "f" + std::to_string(j + 1);
    t.kind = TermKind::single_index;
    for (Index c = 0; c < sc.alpha[static_cast<std::size_t>(j)].size(); ++c) {
      t.covariates.push_back("z" + std::to_string(j + 1) + "_" + std::to_string(c + 1));
    }
    t.q = sc.q;
    t.order = sc.order;
    t.dif = sc.dif;
    spec.terms.push_back(std::move(t));
  }
  return spec;
}

Classification classify(const std::vector<Vector>& alpha_hat, const std::vector<Vector>& truth) {
  if (alpha_hat.size() != truth.size()) throw std::invalid_argument("classify: term count mismatch");
  Classification c;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (alpha_hat[j].size() != truth[j].size()) throw std::invalid_argument("classify: length mismatch");
    const double e = (alpha_hat[j] - truth[j]).norm() / truth[j].norm();
    c.rel_error.push_back(e);
    c.max_rel_error = std::max(c.max_rel_error, e);
  }
  c.unstable = c.max_rel_error > 0.5;
  return c;
}

Vector true_smooth(const Scenario& sc, const Design& design, int term, const Vector& grid) {
  const auto& fj = sc.f.at(static_cast<std::size_t>(term));
  const auto& u = design.u.at(static_cast<std::size_t>(term));
  double mean = 0.0;
  for (Index i = 0; i < u.size(); ++i) mean += fj(u[i]);
  mean /= static_cast<double>(u.size());
  Vector out(grid.size());
  for (Index i = 0; i < grid.size(); ++i) out[i] = fj(grid[i]) - mean;
  return out;
}

ReplicateRecord run_replicate(const Scenario& sc, const Design& design, const StudyConfig& cfg,
                              int replicate, std::vector<GridRecord>* grid) {
  ReplicateRecord rec;
  rec.scenario = sc.name;
  rec.n = design.n;
  rec.replicate = replicate;
  const Dataset data = generate(sc, design, cfg.seed, replicate);
  FitConfig fc = cfg.fit;
  fc.seed = stream_seed(cfg.seed, sc.name, design.n, replicate, "fit");
  const auto start = std::chrono::steady_clock::now();
  try {
    const Problem pb(scenario_spec(sc), data, fc);
    const FittedModel model = fit(pb);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& t : model.terms) rec.alpha_hat.push_back(t.alpha);
    const Classification c = classify(rec.alpha_hat, sc.alpha);
    rec.rel_error = c.rel_error;
    rec.unstable = c.unstable;
    rec.converged = model.converged;
    rec.restarts = model.restarts;
    rec.iterations = model.iterations;
    rec.phi = model.phi;
    rec.numerator_violations = model.numerator_violations;
    rec.lambda_caps = model.lambda_caps;
    for (std::size_t j = 0; j < model.terms.size(); ++j) {
      rec.edf_alpha_gap.push_back(
          std::abs(model.edf_alpha[static_cast<Index>(j)] - model.terms[j].s));
    }
    if (grid && cfg.collect_grid && cfg.grid_points > 1) {
      for (int j = 0; j < static_cast<int>(model.terms.size()); ++j) {
        const auto& u = design.u[static_cast<std::size_t>(j)];
        std::vector<double> us(u.data(), u.data() + u.size());
        std::sort(us.begin(), us.end());
        const double lo = quantile_sorted(us, 0.1);
        const double hi = quantile_sorted(us, 0.9);
        const Vector g = Vector::LinSpaced(cfg.grid_points, lo, hi);
        try {
          const Band b = confidence_band(model, pb, j, g);
          GridRecord gr;
          gr.term = j;
          gr.n = design.n;
          gr.replicate = replicate;
          gr.u = g;
          gr.fhat = b.fhat;
          gr.lower = b.lower();
          gr.upper = b.upper();
          gr.truth = true_smooth(sc, design, j, g);
          grid->push_back(std::move(gr));
        } catch (const std::out_of_range&) {
          // grid not covered by this fit's index range
        }
      }
    }
  } catch (const std::exception& e) {
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.failed = true;
    rec.unstable = true;
    rec.error = e.what();
  }
  return rec;
}

StudyResult run_study(const Scenario& sc, const StudyConfig& cfg) {
  if (cfg.replicates < 1) throw std::invalid_argument("run_study: replicates must be >= 1");
  StudyResult res;
  res.scenario = sc.name;
  for (Index n : cfg.n_list) {
    const Design design = make_design(sc, n, cfg.seed);
    const auto reps = static_cast<std::size_t>(cfg.replicates);
    std::vector<ReplicateRecord> records(reps);
    std::vector<std::vector<GridRecord>> grids(reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t r = next++; r < reps; r = next++) {
        records[r] = run_replicate(sc, design, cfg, static_cast<int>(r), &grids[r]);
      }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, cfg.replicates));
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    AggregateRow agg;
    agg.n = n;
    agg.replicates = cfg.replicates;
    std::vector<double> errs, secs;
    double phi_sum = 0.0;
    int stable = 0;
    Index covered = 0, points = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& rec = records[r];
      secs.push_back(rec.seconds);
      agg.failed += rec.failed ? 1 : 0;
      agg.numerator_violations += rec.numerator_violations;
      if (rec.unstable) {
        ++agg.unstable;
        continue;
      }
      ++stable;
      double e = 0.0;
      for (double x : rec.rel_error) e += x;
      errs.push_back(e / static_cast<double>(rec.rel_error.size()));
      phi_sum += rec.phi;
      for (const auto& g : grids[r]) {
        for (Index i = 0; i < g.u.size(); ++i) {
          ++points;
          covered += (g.truth[i] >= g.lower[i] && g.truth[i] <= g.upper[i]) ? 1 : 0;
        }
      }
    }
    agg.instability_rate = static_cast<double>(agg.unstable) / cfg.replicates;
    if (!errs.empty()) {
      double s = 0.0;
      for (double e : errs) s += e;
      agg.mean_rel_error = s / static_cast<double>(errs.size());
      agg.median_rel_error = quantile(errs, 0.5);
    }
    agg.phi_mean = stable > 0 ? phi_sum / stable : 0.0;
    agg.coverage = points > 0 ? static_cast<double>(covered) / static_cast<double>(points) : 0.0;
    res.aggregate.push_back(agg);

    TimingRow tr;
    tr.n = n;
    double s = 0.0;
    for (double x : secs) s += x;
    tr.mean = s / static_cast<double>(secs.size());
    tr.median = quantile(secs, 0.5);
    tr.p90 = quantile(secs, 0.9);
    tr.max = *std::max_element(secs.begin(), secs.end());
    res.timing.push_back(tr);

    for (std::size_t r = 0; r < reps; ++r) {
      res.replicates.push_back(std::move(records[r]));
      for (auto& g : grids[r]) res.grid.push_back(std::move(g));
    }
  }
  return res;
}

void write_study(const StudyResult& result, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  auto open = [&](const char* name) {
    std::ofstream out(fs::path(directory) / name);
    if (!out) throw std::runtime_error(std::string("cannot write ") + name + " in " + directory);
    out << std::setprecision(10);
    return out;
  };

  std::size_t terms = 0;
  for (const auto& r : result.replicates) terms = std::max(terms, r.rel_error.size());

  {
    auto out = open("replicates.csv");
    out << "scenario,n,replicate";
    for (std::size_t j = 0; j < terms; ++j) out << ",rel_error_" << j + 1;
    out << ",unstable,failed,converged,restarts,iterations,phi,numerator_violations,lambda_caps,"
           "seconds,error\n";
    for (const auto& r : result.replicates) {
      out << r.scenario << ',' << r.n << ',' << r.replicate;
      for (std::size_t j = 0; j < terms; ++j) {
        out << ',';
        if (j < r.rel_error.size()) out << r.rel_error[j];
      }
      std::string err = r.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      out << ',' << r.unstable << ',' << r.failed << ',' << r.converged << ',' << r.restarts << ','
          << r.iterations << ',' << r.phi << ',' << r.numerator_violations << ',' << r.lambda_caps
          << ',' << r.seconds << ",\"" << err << "\"\n";
    }
  }
  {
    auto out = open("aggregate.csv");
    out << "scenario,n,replicates,unstable,failed,instability_rate,mean_rel_error,"
           "median_rel_error,phi_mean,numerator_violations,coverage\n";
    for (const auto& a : result.aggregate) {
      out << result.scenario << ',' << a.n << ',' << a.replicates << ',' << a.unstable << ','
          << a.failed << ',' << a.instability_rate << ',' << a.mean_rel_error << ','
          << a.median_rel_error << ',' << a.phi_mean << ',' << a.numerator_violations << ','
          << a.coverage << '\n';
    }
  }
  {
    auto out = open("timing.csv");
    out << "scenario,n,mean_seconds,median_seconds,p90_seconds,max_seconds\n";
    for (const auto& t : result.timing) {
      out << result.scenario << ',' << t.n << ',' << t.mean << ',' << t.median << ',' << t.p90
          << ',' << t.max << '\n';
    }
  }
  {
    auto out = open("grid.csv");
    out << "scenario,term,n,replicate,u,fhat,lower,upper,truth\n";
    for (const auto& g : result.grid) {
      for (Index i = 0; i < g.u.size(); ++i) {
        out << result.scenario << ',' << g.term + 1 << ',' << g.n << ',' << g.replicate << ','
            << g.u[i] << ',' << g.fhat[i] << ',' << g.lower[i] << ',' << g.upper[i] << ','
            << g.truth[i] << '\n';
      }
    }
  }
}

}  // namespace gplsiam::sim
