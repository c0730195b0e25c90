#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "koopman/experiment.hpp"
#include "koopman/manifold.hpp"
#include "koopman/model_io.hpp"
#include "koopman/objective.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalFailure = 3;

koopman::ExperimentConfig load_config(const std::string& path, int threads,
                                      const std::string& out_dir,
                                      std::uint64_t seed, bool seed_set) {
  std::ifstream in(path);
  if (!in) throw koopman::ConfigError("cannot open config " + path);
  nlohmann::json j;
  in >> j;
  auto cfg = koopman::config_from_json(j);
  if (threads > 0) cfg.threads = threads;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed_set) {
    cfg.train_seed = seed;
    cfg.test_seed = seed + 1;
    cfg.init_seed = seed + 2;
  }
  return cfg;
}

// Quick self-check of the library's key identities on random instances.
int run_check() {
  using namespace koopman;
  int failures = 0;
  auto report = [&failures](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
    if (!ok) ++failures;
  };

  SampledMap map;
  map.field = duffing_field();
  map.dt = 0.1;
  const Dictionary dict = monomial_dictionary(2, 3);
  const auto states = sample_states(VectorXd::Constant(2, -1.0),
                                    VectorXd::Constant(2, 1.0), 120, 7);
  const TrainingSet ts = generate_pairs(map, states);
  const DataMatrices dm = build_data_matrices(dict, ts);
  const TransformedModel tm = qr_transform(dm, dict.s, dict.n);
  const int M = dict.size();

  report("Gram orthonormality",
         (tm.G_E * tm.G_E.transpose() - MatrixXd::Identity(M, M)).cwiseAbs().maxCoeff() <
             1e-10);

  const auto [H, A] = bilinear_matrices_from_data(dm);
  report("EDMD bilinear oracle",
         (full_edmd(dm) - bilinear_compression(H, A)).cwiseAbs().maxCoeff() < 1e-8);

  const int d = M - tm.s;
  const MatrixXd U = manifold::random_stiefel(d, 2, 11);
  MatrixXd Ubar = MatrixXd::Zero(M, tm.s + 2);
  Ubar.topLeftCorner(tm.s, tm.s).setIdentity();
  Ubar.bottomRightCorner(d, 2) = U;
  const MatrixXd HE = tm.G_E * tm.G_E.transpose();
  const MatrixXd AE = tm.A_E;
  report("subspace compression oracle",
         (subspace_compression(tm, U) - subspace_bilinear_compression(HE, AE, Ubar))
                 .cwiseAbs()
                 .maxCoeff() < 1e-10);

  const auto test_states = sample_states(VectorXd::Constant(2, -1.0),
                                         VectorXd::Constant(2, 1.0), 5, 21);
  const ObjectiveContext ctx = make_objective_context(tm, dict, map, test_states, 5, 2);
  const double g1 = evaluate(ctx, U);
  MatrixXd R(2, 2);
  const double th = 0.7;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  report("objective O(r)-invariance", std::abs(g1 - evaluate(ctx, U * R)) < 1e-10);

  const MatrixXd rg = riemannian_gradient(ctx, U);
  report("Riemannian gradient horizontal",
         (U.transpose() * rg).cwiseAbs().maxCoeff() < 1e-10);

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EDMD Koopman surrogates with Grassmann dictionary optimisation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, model_path, subspace_path, scale = "desk";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "JSON experiment config");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--threads", threads, "worker pool cap");
    cmd->add_option("--seed", seed, "base seed override")
        ->each([&seed_set](const std::string&) { seed_set = true; });
  };

  auto* train = app.add_subcommand("train", "collect data, build the EDMD model");
  add_common(train, true);
  auto* optimize = app.add_subcommand("optimize", "solve the subspace problem");
  add_common(optimize, true);
  optimize->add_option("--model", model_path, "trained model file")->required();
  auto* evaluate_cmd = app.add_subcommand("evaluate", "error grids for full vs reduced model");
  add_common(evaluate_cmd, true);
  evaluate_cmd->add_option("--model", model_path, "trained model file")->required();
  evaluate_cmd->add_option("--subspace", subspace_path, "optimised subspace file")->required();
  auto* replicate = app.add_subcommand("replicate-duffing", "end-to-end Duffing experiment");
  replicate->add_option("--out", out_dir, "output directory")->required();
  replicate->add_option("--scale", scale, "full|desk")->check(CLI::IsMember({"full", "desk"}));
  replicate->add_option("--threads", threads, "worker pool cap");
  auto* check = app.add_subcommand("check", "run the built-in property suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      const auto cfg = load_config(config_path, threads, out_dir, seed, seed_set);
      const auto model = koopman::cmd_train(cfg);
      std::cout << "M = " << model.dict.size()
                << ", Gram residual = " << model.gram_residual << "\n";
      if (model.underdetermined)
        std::cout << "warning: L < M, model is underdetermined\n";
      std::cout << "model written to " << cfg.out_dir << "/model.kmdl\n";
    } else if (app.got_subcommand(optimize)) {
      const auto cfg = load_config(config_path, threads, out_dir, seed, seed_set);
      const auto model = koopman::load_trained_model(model_path);
      const auto res = koopman::cmd_optimize(cfg, model);
      if (res.trace.status == koopman::OptStatus::NumericalFailure) {
        std::cerr << "optimizer numerical failure: " << res.trace.message << "\n";
        return kExitNumericalFailure;
      }
      std::cout << "g_N(U0) = " << res.objective_initial
                << ", g_N(U*) = " << res.objective_final << "\n";
      std::cout << "subspace written to " << cfg.out_dir << "/subspace.kmdl\n";
    } else if (app.got_subcommand(evaluate_cmd)) {
      const auto cfg = load_config(config_path, threads, out_dir, seed, seed_set);
      const auto model = koopman::load_trained_model(model_path);
      const auto U = koopman::load_subspace(subspace_path);
      const auto res = koopman::cmd_evaluate(cfg, model, U);
      std::cout << res.summary["grids"].dump(2) << "\n";
    } else if (app.got_subcommand(replicate)) {
      koopman::cmd_replicate_duffing(out_dir, scale == "desk", threads);
    } else if (app.got_subcommand(check)) {
      return run_check();
    }
  } catch (const koopman::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const koopman::IntegratorError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const koopman::RankError& e) {
    std::cerr << "numerical failure: " << e.what()
              << " (increase L or lower the dictionary degree)\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
