#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "koopman/experiment.hpp"
#include "koopman/manifold.hpp"
#include "koopman/model_io.hpp"
#include "koopman/objective.hpp"

using namespace koopman;
namespace fs = std::filesystem;

namespace {

// Small linear-system pipeline config that runs in well under a second.
ExperimentConfig tiny_linear_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.system = "linear";
  cfg.dt = 0.1;
  cfg.domain_lo = VectorXd::Constant(2, -1.0);
  cfg.domain_hi = VectorXd::Constant(2, 1.0);
  cfg.max_degree = 2;  // M = 6, d = 4
  cfg.L = 80;
  cfg.J = 5;
  cfg.N = 5;
  cfg.r = 2;
  GridSpec g{"box", VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0), 5};
  cfg.grids = {g};
  cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("config json round-trip preserves every field") {
  ExperimentConfig cfg = tiny_linear_config("roundtrip_out");
  cfg.s = 2;
  cfg.train_seed = 10;
  cfg.test_seed = 11;
  cfg.init_seed = 12;
  cfg.optimizer.grad_tol = 1e-7;
  cfg.threads = 3;
  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.system == cfg.system);
  CHECK(back.dt == cfg.dt);
  CHECK(back.domain_lo == cfg.domain_lo);
  CHECK(back.domain_hi == cfg.domain_hi);
  CHECK(back.max_degree == cfg.max_degree);
  CHECK(back.s == cfg.s);
  CHECK(back.L == cfg.L);
  CHECK(back.J == cfg.J);
  CHECK(back.N == cfg.N);
  CHECK(back.r == cfg.r);
  CHECK(back.train_seed == cfg.train_seed);
  CHECK(back.test_seed == cfg.test_seed);
  CHECK(back.init_seed == cfg.init_seed);
  CHECK(back.optimizer.grad_tol == cfg.optimizer.grad_tol);
  REQUIRE(back.grids.size() == 1);
  CHECK(back.grids[0].name == "box");
  CHECK(back.grids[0].resolution == 5);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.threads == cfg.threads);
}

TEST_CASE("config validation rejects inconsistent setups") {
  ExperimentConfig cfg = tiny_linear_config("x");
  cfg.system = "lorenz";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_linear_config("x");
  cfg.r = 100;  // r > M - s
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_linear_config("x");
  cfg.s = 1;  // s < n
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_linear_config("x");
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("duffing_config matches the published setup") {
  const ExperimentConfig full = duffing_config(false);
  CHECK(full.system == "duffing");
  CHECK(full.dt == 0.1);
  CHECK(full.max_degree == 7);
  CHECK(full.L == 5000);
  CHECK(full.J == 100);
  CHECK(full.N == 20);
  CHECK(full.r == 3);
  REQUIRE(full.grids.size() == 2);
  CHECK(full.grids[0].resolution == 81);
  const ExperimentConfig desk = duffing_config(true);
  CHECK(desk.L == 2000);
  CHECK(desk.J == 50);
  CHECK(desk.grids[0].resolution == 41);
  full.validate();
  desk.validate();
}

TEST_CASE("train/optimize/evaluate pipeline on a tiny linear system") {
  const auto out = fs::temp_directory_path() / "koopman_test_pipeline";
  fs::remove_all(out);
  const ExperimentConfig cfg = tiny_linear_config(out.string());

  const TrainedModel model = cmd_train(cfg);
  CHECK(model.dict.size() == 6);
  CHECK(model.gram_residual <= 1e-10);
  CHECK(!model.underdetermined);
  REQUIRE(fs::exists(out / "model.kmdl"));

  // Persisted model reloads to the same transformed matrices.
  const TrainedModel back = load_trained_model((out / "model.kmdl").string());
  CHECK((back.tm.P_inv - model.tm.P_inv).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.tm.A_E - model.tm.A_E).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((back.tm.P * back.tm.P_inv - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <=
        1e-10);

  // Re-training with identical seeds is byte-identical.
  const auto out2 = fs::temp_directory_path() / "koopman_test_pipeline2";
  fs::remove_all(out2);
  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = out2.string();
  cmd_train(cfg2);
  std::ifstream f1(out / "model.kmdl", std::ios::binary);
  std::ifstream f2(out2 / "model.kmdl", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);

  const OptimizeResult opt = cmd_optimize(cfg, model);
  CHECK(opt.trace.status != OptStatus::NumericalFailure);
  CHECK(opt.objective_final <= opt.objective_initial);
  CHECK(manifold::stiefel_residual(opt.U) <= 1e-8);
  REQUIRE(fs::exists(out / "subspace.kmdl"));
  REQUIRE(fs::exists(out / "trace.csv"));
  const MatrixXd U = load_subspace((out / "subspace.kmdl").string());
  CHECK((U - opt.U).cwiseAbs().maxCoeff() == 0.0);

  const EvaluateResult ev = cmd_evaluate(cfg, model, opt.U);
  REQUIRE(ev.grids.size() == 1);
  CHECK(ev.grids[0].cell_errors.empty());
  CHECK(ev.summary["grids"].contains("box"));
  REQUIRE(fs::exists(out / "grid_box.csv"));
  REQUIRE(fs::exists(out / "summary.json"));

  fs::remove_all(out);
  fs::remove_all(out2);
}

TEST_CASE("full-subspace optimisation matches the full model objective") {
  const auto out = fs::temp_directory_path() / "koopman_test_fullsub";
  fs::remove_all(out);
  ExperimentConfig cfg = tiny_linear_config(out.string());
  cfg.r = 4;  // r = M - s: the reduction is a change of basis only
  const TrainedModel model = cmd_train(cfg);

  const SampledMap map = make_system(cfg);
  const auto tests = sample_states(cfg.domain_lo, cfg.domain_hi, cfg.J, cfg.test_seed);
  const ObjectiveContext ctx =
      make_objective_context(model.tm, model.dict, map, tests, cfg.N, cfg.r);
  const double g_id = evaluate(ctx, MatrixXd::Identity(4, 4));
  const double g_rand = evaluate(ctx, manifold::random_stiefel(4, 4, 99));
  CHECK(g_id == doctest::Approx(g_rand).epsilon(1e-9));
  fs::remove_all(out);
}
