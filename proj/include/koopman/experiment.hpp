#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/edmd.hpp"
#include "koopman/optimizer.hpp"
#include "koopman/prediction.hpp"

namespace koopman {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  std::string name;
  VectorXd lo, hi;
  int resolution = 81;
};

struct ExperimentConfig {
  std::string system = "duffing";  // "duffing" or "linear"
  double dt = 0.1;
  VectorXd domain_lo, domain_hi;  // training/test sampling box
  int max_degree = 7;
  int s = -1;  // protected head size; < 0 means n
  int L = 5000;
  int J = 100;
  int N = 20;
  int r = 3;
  std::uint64_t train_seed = 1;
  std::uint64_t test_seed = 2;
  std::uint64_t init_seed = 3;
  TrustRegionConfig optimizer;
  std::vector<GridSpec> grids;
  std::string out_dir = "out";
  int threads = 0;

  void validate() const;  // throws ConfigError
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// The paper's Duffing setup: full scale (L=5000, J=100, 81x81 grids) or
/// desk scale (L=2000, J=50, 41x41 grids).
ExperimentConfig duffing_config(bool desk_scale);

SampledMap make_system(const ExperimentConfig& cfg);

struct TrainedModel {
  Dictionary dict;
  TransformedModel tm;
  double gram_residual = 0.0;
  bool underdetermined = false;  // L < M
};

/// Steps 1-3: data collection, data matrices, QR change of basis.
/// Persists <out_dir>/model.kmdl.
TrainedModel cmd_train(const ExperimentConfig& cfg);

TrainedModel load_trained_model(const std::string& path);

struct OptimizeResult {
  MatrixXd U;
  OptimizationTrace trace;
  double objective_initial = 0.0;
  double objective_final = 0.0;
};

/// Step 4: solves the subspace problem; persists <out_dir>/subspace.kmdl
/// and <out_dir>/trace.csv.
OptimizeResult cmd_optimize(const ExperimentConfig& cfg, const TrainedModel& model);

MatrixXd load_subspace(const std::string& path);

/// Builds the lifted linear systems for the full basis and the reduced one.
KoopmanLinearSystem full_koopman_system(const TrainedModel& model);
KoopmanLinearSystem reduced_koopman_system(const TrainedModel& model, const MatrixXd& U);

struct EvaluateResult {
  std::vector<ErrorGridResult> grids;
  nlohmann::json summary;
};

/// Steps 5-6: error grids per configured box; persists grid_<name>.csv and
/// summary.json under out_dir.
EvaluateResult cmd_evaluate(const ExperimentConfig& cfg, const TrainedModel& model,
                            const MatrixXd& U);

struct ExperimentResult {
  TrainedModel model;
  OptimizeResult opt;
  EvaluateResult eval;
};

ExperimentResult cmd_replicate_duffing(const std::string& out_dir, bool desk_scale,
                                       int threads = 0);

}  // namespace koopman
