#include <iostream>

#include "CLI11.hpp"
#include "gplsiam_cli/commands.hpp"

using namespace gplsiam::cli;

int main(int argc, char** argv) {
  CLI::App app{"gplsiam: partially linear single-index additive models"};
  app.require_subcommand(1);

  FitOptions fo;
  std::optional<uint64_t> seed;
  auto* fit = app.add_subcommand("fit", "fit a model described by a config file");
  fit->add_option("--config", fo.config, "model config file")->required();
  fit->add_option("--data", fo.data, "training CSV")->required();
  fit->add_option("--out", fo.out, "archive (JSON) to write")->required();
  fit->add_option("--report", fo.report, "write the report here instead of stdout");
  fit->add_option("--seed", seed, "override the config seed");

  PredictOptions po;
  std::optional<double> threshold;
  auto* pred = app.add_subcommand("predict", "evaluate an archived model on new data");
  pred->add_option("--model", po.archive, "archive from 'fit'")->required();
  pred->add_option("--data", po.data, "CSV with the model's columns")->required();
  pred->add_option("--out", po.out, "predictions CSV")->required();
  pred->add_option("--threshold", threshold, "bernoulli: report the confusion table at this cutoff");

  SimulateOptions so;
  auto* simc = app.add_subcommand("simulate", "run a simulation study");
  simc->add_option("scenario", so.scenario, "poisson1, gamma1 or poisson2")->required();
  simc->add_option("--n", so.n_list, "sample sizes")->delimiter(',');
  simc->add_option("--reps", so.replicates, "replicates per sample size");
  simc->add_option("--jobs", so.jobs, "worker threads");
  simc->add_option("--seed", so.seed, "master seed");
  simc->add_option("--out", so.out, "output directory for the CSVs");
  bool no_grid = false;
  simc->add_flag("--no-grid", no_grid, "skip fitted-function grids");

  DiagnoseOptions dgo;
  auto* diag = app.add_subcommand("diagnose", "quantile residuals for an archived model");
  diag->add_option("--model", dgo.archive, "archive from 'fit'")->required();
  diag->add_option("--data", dgo.data, "CSV including the response")->required();
  diag->add_option("--out", dgo.out, "long-format residual CSV")->required();
  diag->add_option("--reps", dgo.replicates, "randomized replicates");
  diag->add_option("--seed", dgo.seed, "seed for the randomization");

  BandOptions bo;
  auto* band = app.add_subcommand("band", "pointwise 95% bands for fitted smooths");
  band->add_option("--model", bo.archive, "archive from 'fit'")->required();
  band->add_option("--data", bo.data, "the training CSV")->required();
  band->add_option("--out", bo.out, "band CSV")->required();
  band->add_option("--term", bo.term, "single term (default: all)");
  band->add_option("--points", bo.points, "grid size");
  band->add_flag("--observed", bo.observed, "report at the observed index values instead of a grid");

  PrepBikeOptions bk;
  auto* prep = app.add_subcommand("prep-bike", "derive the high-demand dataset from the hourly bike-sharing CSV");
  prep->add_option("--in", bk.in, "hour.csv")->required();
  prep->add_option("--out", bk.out, "output CSV")->required();
  prep->add_option("--threshold", bk.threshold, "high demand when cnt exceeds this");

  CLI11_PARSE(app, argc, argv);

  if (*fit) {
    fo.seed = seed;
    return cmd_fit(fo, std::cout, std::cerr);
  }
  if (*pred) {
    po.threshold = threshold;
    return cmd_predict(po, std::cout, std::cerr);
  }
  if (*simc) {
    so.grid = !no_grid;
    return cmd_simulate(so, std::cout, std::cerr);
  }
  if (*diag) return cmd_diagnose(dgo, std::cout, std::cerr);
  if (*band) return cmd_band(bo, std::cout, std::cerr);
  if (*prep) return cmd_prep_bike(bk, std::cout, std::cerr);
  return 1;
}
