#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gplsiam/types.hpp"

namespace gplsiam::cli {

// Exit codes: 0 success, 1 input error, 2 fit did not converge.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNonConvergence = 2;

struct FitOptions {
  std::string config;
  std::string data;
  std::string out;
  std::string report;  // empty = stdout
  std::optional<uint64_t> seed;
};

struct PredictOptions {
  std::string archive;
  std::string data;
  std::string out;
  std::optional<double> threshold;
};

struct SimulateOptions {
  std::string scenario;
  std::vector<long> n_list{200};
  int replicates = 50;
  int jobs = 1;
  uint64_t seed = 1;
  std::string out;
  bool grid = true;
};

struct DiagnoseOptions {
  std::string archive;
  std::string data;
  std::string out;
  int replicates = 40;
  uint64_t seed = 1;
};

struct BandOptions {
  std::string archive;
  std::string data;
  std::string out;
  std::string term;  // empty = every term
  int points = 100;
  bool observed = false;
};

struct PrepBikeOptions {
  std::string in;
  std::string out;
  double threshold = 150.0;
};

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err);
int cmd_diagnose(const DiagnoseOptions& o, std::ostream& out, std::ostream& err);
int cmd_band(const BandOptions& o, std::ostream& out, std::ostream& err);
int cmd_prep_bike(const PrepBikeOptions& o, std::ostream& out, std::ostream& err);

// Area under the ROC curve by the rank-sum statistic (ties averaged).
double auc(const Vector& y, const Vector& score);

struct Confusion {
  Index tp = 0, fp = 0, tn = 0, fn = 0;
  double sensitivity() const { return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double specificity() const { return tn + fp > 0 ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0; }
};

// Predicted positive when score >= threshold.
Confusion confusion(const Vector& y, const Vector& score, double threshold);

}  // namespace gplsiam::cli
