#include "koopman/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "koopman/manifold.hpp"
#include "koopman/model_io.hpp"
#include "koopman/objective.hpp"

namespace koopman {

namespace fs = std::filesystem;

namespace {

VectorXd json_to_vec(const nlohmann::json& j) {
  VectorXd v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<int>(k)) = j[k].get<double>();
  return v;
}

nlohmann::json vec_to_json(const VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (int k = 0; k < v.size(); ++k) j.push_back(v(k));
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (system != "duffing" && system != "linear")
    throw ConfigError("unknown system '" + system + "'");
  if (dt <= 0.0) throw ConfigError("dt must be positive");
  if (domain_lo.size() == 0 || domain_lo.size() != domain_hi.size())
    throw ConfigError("domain box is missing or inconsistent");
  if (max_degree < 1) throw ConfigError("max_degree must be >= 1");
  if (L < 1 || J < 1 || N < 1) throw ConfigError("L, J, N must be positive");
  if (r < 1) throw ConfigError("r must be positive");
  const int n = static_cast<int>(domain_lo.size());
  const int head = s < 0 ? n : s;
  if (head < n) throw ConfigError("s must be >= n");
  const Dictionary probe = monomial_dictionary(n, max_degree, head);
  if (r > probe.size() - head) throw ConfigError("r must satisfy r <= M - s");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("system")) cfg.system = j["system"].get<std::string>();
    if (j.contains("dt")) cfg.dt = j["dt"].get<double>();
    cfg.domain_lo = json_to_vec(j.at("domain").at("lo"));
    cfg.domain_hi = json_to_vec(j.at("domain").at("hi"));
    if (j.contains("dictionary")) {
      const auto& d = j["dictionary"];
      if (d.contains("max_degree")) cfg.max_degree = d["max_degree"].get<int>();
      if (d.contains("s")) cfg.s = d["s"].get<int>();
    }
    if (j.contains("data")) {
      const auto& d = j["data"];
      if (d.contains("L")) cfg.L = d["L"].get<int>();
      if (d.contains("J")) cfg.J = d["J"].get<int>();
      if (d.contains("N")) cfg.N = d["N"].get<int>();
      if (d.contains("train_seed")) cfg.train_seed = d["train_seed"].get<std::uint64_t>();
      if (d.contains("test_seed")) cfg.test_seed = d["test_seed"].get<std::uint64_t>();
      if (d.contains("init_seed")) cfg.init_seed = d["init_seed"].get<std::uint64_t>();
    }
    if (j.contains("reduction") && j["reduction"].contains("r"))
      cfg.r = j["reduction"]["r"].get<int>();
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      if (o.contains("delta0")) cfg.optimizer.delta0 = o["delta0"].get<double>();
      if (o.contains("delta_max")) cfg.optimizer.delta_max = o["delta_max"].get<double>();
      if (o.contains("grad_tol")) cfg.optimizer.grad_tol = o["grad_tol"].get<double>();
      if (o.contains("max_outer_iters"))
        cfg.optimizer.max_outer_iters = o["max_outer_iters"].get<int>();
    }
    if (j.contains("grids")) {
      for (const auto& g : j["grids"]) {
        GridSpec spec;
        spec.name = g.at("name").get<std::string>();
        spec.lo = json_to_vec(g.at("lo"));
        spec.hi = json_to_vec(g.at("hi"));
        if (g.contains("resolution")) spec.resolution = g["resolution"].get<int>();
        cfg.grids.push_back(std::move(spec));
      }
    }
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["system"] = cfg.system;
  j["dt"] = cfg.dt;
  j["domain"] = {{"lo", vec_to_json(cfg.domain_lo)}, {"hi", vec_to_json(cfg.domain_hi)}};
  j["dictionary"] = {{"max_degree", cfg.max_degree}, {"s", cfg.s}};
  j["data"] = {{"L", cfg.L},           {"J", cfg.J},
               {"N", cfg.N},           {"train_seed", cfg.train_seed},
               {"test_seed", cfg.test_seed}, {"init_seed", cfg.init_seed}};
  j["reduction"] = {{"r", cfg.r}};
  j["optimizer"] = {{"delta0", cfg.optimizer.delta0},
                    {"delta_max", cfg.optimizer.delta_max},
                    {"grad_tol", cfg.optimizer.grad_tol},
                    {"max_outer_iters", cfg.optimizer.max_outer_iters}};
  j["grids"] = nlohmann::json::array();
  for (const auto& g : cfg.grids)
    j["grids"].push_back({{"name", g.name},
                          {"lo", vec_to_json(g.lo)},
                          {"hi", vec_to_json(g.hi)},
                          {"resolution", g.resolution}});
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  return j;
}

ExperimentConfig duffing_config(bool desk_scale) {
  ExperimentConfig cfg;
  cfg.system = "duffing";
  cfg.dt = 0.1;
  cfg.domain_lo = VectorXd::Constant(2, -1.0);
  cfg.domain_hi = VectorXd::Constant(2, 1.0);
  cfg.max_degree = 7;
  cfg.N = 20;
  cfg.r = 3;
  if (desk_scale) {
    cfg.L = 2000;
    cfg.J = 50;
  } else {
    cfg.L = 5000;
    cfg.J = 100;
  }
  const int res = desk_scale ? 41 : 81;
  GridSpec inner{"inner", VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0), res};
  GridSpec outer{"outer", VectorXd::Constant(2, -2.0), VectorXd::Constant(2, 2.0), res};
  cfg.grids = {inner, outer};
  return cfg;
}

SampledMap make_system(const ExperimentConfig& cfg) {
  SampledMap map;
  map.dt = cfg.dt;
  if (cfg.system == "duffing") {
    map.field = duffing_field();
  } else {
    // Gently damped rotation: a stable linear benchmark.
    MatrixXd C(2, 2);
    C << -0.1, 1.0, -1.0, -0.1;
    map.field = linear_field(C);
  }
  return map;
}

TrainedModel cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const SampledMap map = make_system(cfg);
  const int n = map.field.dim;

  TrainedModel out;
  out.dict = monomial_dictionary(n, cfg.max_degree, cfg.s < 0 ? n : cfg.s);
  const auto states = sample_states(cfg.domain_lo, cfg.domain_hi, cfg.L, cfg.train_seed);
  const TrainingSet ts = generate_pairs(map, states);
  const DataMatrices dm = build_data_matrices(out.dict, ts);
  out.underdetermined = cfg.L < out.dict.size();
  out.tm = qr_transform(dm, out.dict.s, n);
  out.gram_residual = (out.tm.G_E * out.tm.G_E.transpose() -
                       MatrixXd::Identity(out.dict.size(), out.dict.size()))
                          .cwiseAbs()
                          .maxCoeff();

  fs::create_directories(cfg.out_dir);
  ModelFile mf;
  mf.header["kind"] = "edmd_model";
  mf.header["dictionary"] = dictionary_to_json(out.dict);
  mf.header["s"] = out.tm.s;
  mf.header["n"] = out.tm.n;
  mf.header["gram_residual"] = out.gram_residual;
  mf.header["underdetermined"] = out.underdetermined;
  mf.header["provenance"] = {{"system", cfg.system},
                             {"L", cfg.L},
                             {"dt", cfg.dt},
                             {"train_seed", cfg.train_seed},
                             {"domain_lo", vec_to_json(cfg.domain_lo)},
                             {"domain_hi", vec_to_json(cfg.domain_hi)},
                             {"max_degree", cfg.max_degree}};
  mf.set("P_inv", out.tm.P_inv);
  mf.set("G_E", out.tm.G_E);
  mf.set("S_E", out.tm.S_E);
  mf.set("Q11", out.tm.Q11);
  save_model_file(mf, (fs::path(cfg.out_dir) / "model.kmdl").string());
  return out;
}

TrainedModel load_trained_model(const std::string& path) {
  const ModelFile mf = load_model_file(path);
  if (mf.header.value("kind", "") != "edmd_model")
    throw std::runtime_error(path + " is not an EDMD model file");
  TrainedModel out;
  out.dict = dictionary_from_json(mf.header.at("dictionary"));
  out.tm.s = mf.header.at("s").get<int>();
  out.tm.n = mf.header.at("n").get<int>();
  out.tm.P_inv = mf.get("P_inv");
  out.tm.G_E = mf.get("G_E");
  out.tm.S_E = mf.get("S_E");
  out.tm.Q11 = mf.get("Q11");
  const int M = static_cast<int>(out.tm.P_inv.rows());
  out.tm.P = MatrixXd::Identity(M, M);
  out.tm.P_inv.triangularView<Eigen::Lower>().solveInPlace(out.tm.P);
  out.tm.A_E = out.tm.G_E * out.tm.S_E.transpose();
  out.gram_residual = mf.header.value("gram_residual", 0.0);
  out.underdetermined = mf.header.value("underdetermined", false);
  return out;
}

OptimizeResult cmd_optimize(const ExperimentConfig& cfg, const TrainedModel& model) {
  cfg.validate();
  const SampledMap map = make_system(cfg);
  const auto test_states =
      sample_states(cfg.domain_lo, cfg.domain_hi, cfg.J, cfg.test_seed);
  const ObjectiveContext ctx =
      make_objective_context(model.tm, model.dict, map, test_states, cfg.N, cfg.r);

  const int d = model.dict.size() - model.tm.s;
  const MatrixXd U0 = manifold::random_stiefel(d, cfg.r, cfg.init_seed);

  auto value_fn = [&ctx](const MatrixXd& U) {
    return evaluate(ctx, manifold::stiefel_residual(U) > 1e-12
                             ? manifold::reorthonormalize(U)
                             : U);
  };
  auto grad_fn = [&ctx](const MatrixXd& U) { return riemannian_gradient(ctx, U); };
  auto hvp_at = [&ctx](const MatrixXd& U) {
    return [&ctx, U](const MatrixXd& V) { return hessian_vector(ctx, U, V); };
  };

  OptimizeResult out;
  out.objective_initial = evaluate(ctx, U0);
  auto [U_star, trace] = trust_region(value_fn, grad_fn, hvp_at, U0, cfg.optimizer);
  out.U = U_star;
  out.trace = std::move(trace);
  out.objective_final = evaluate(ctx, out.U);

  fs::create_directories(cfg.out_dir);
  ModelFile mf;
  mf.header["kind"] = "subspace";
  mf.header["r"] = cfg.r;
  mf.header["init_seed"] = cfg.init_seed;
  mf.header["objective_initial"] = out.objective_initial;
  mf.header["objective_final"] = out.objective_final;
  mf.set("U", out.U);
  save_model_file(mf, (fs::path(cfg.out_dir) / "subspace.kmdl").string());
  write_trace_csv(out.trace, (fs::path(cfg.out_dir) / "trace.csv").string());
  return out;
}

MatrixXd load_subspace(const std::string& path) {
  const ModelFile mf = load_model_file(path);
  if (mf.header.value("kind", "") != "subspace")
    throw std::runtime_error(path + " is not a subspace file");
  return mf.get("U");
}

KoopmanLinearSystem full_koopman_system(const TrainedModel& model) {
  KoopmanLinearSystem kls;
  kls.K = model.tm.A_E;  // K_E = G_E S_E^T since the Gram matrix is identity
  const Dictionary dict = model.dict;
  const MatrixXd P_inv = model.tm.P_inv;
  kls.lift = [dict, P_inv](const VectorXd& x) {
    VectorXd w = dict.lift(x);
    P_inv.triangularView<Eigen::Lower>().solveInPlace(w);
    return w;
  };
  // Pi_E = Pi_B P^{-1} = first n rows of P_inv.
  kls.Pi = model.tm.P_inv.topRows(model.tm.n);
  return kls;
}

KoopmanLinearSystem reduced_koopman_system(const TrainedModel& model,
                                           const MatrixXd& U) {
  KoopmanLinearSystem kls;
  kls.K = subspace_compression(model.tm, U);
  const Dictionary dict = model.dict;
  const MatrixXd P_inv = model.tm.P_inv;
  const MatrixXd Ut = U.transpose();
  const int s = model.tm.s;
  kls.lift = [dict, P_inv, Ut, s](const VectorXd& x) {
    VectorXd w = dict.lift(x);
    P_inv.triangularView<Eigen::Lower>().solveInPlace(w);
    VectorXd z(s + Ut.rows());
    z.head(s) = w.head(s);
    z.tail(Ut.rows()) = Ut * w.tail(w.size() - s);
    return z;
  };
  kls.Pi = reduced_coordinate_matrix(model.tm, static_cast<int>(U.cols()));
  return kls;
}

EvaluateResult cmd_evaluate(const ExperimentConfig& cfg, const TrainedModel& model,
                            const MatrixXd& U) {
  cfg.validate();
  const SampledMap map = make_system(cfg);
  const KoopmanLinearSystem full = full_koopman_system(model);
  const KoopmanLinearSystem reduced = reduced_koopman_system(model, U);

  fs::create_directories(cfg.out_dir);
  EvaluateResult out;
  out.summary["config"] = config_to_json(cfg);
  out.summary["grids"] = nlohmann::json::object();
  for (const auto& spec : cfg.grids) {
    ErrorGridResult grid = error_grid(full, reduced, map, spec.lo, spec.hi,
                                      spec.resolution, cfg.N, cfg.threads);
    write_error_grid_csv(grid,
                         (fs::path(cfg.out_dir) / ("grid_" + spec.name + ".csv")).string());
    const auto f = grid.full_stats();
    const auto r = grid.reduced_stats();
    const auto d = grid.diff_stats();
    out.summary["grids"][spec.name] = {
        {"eps_full", {{"mean", f.mean}, {"median", f.median}, {"max", f.max}}},
        {"eps_reduced", {{"mean", r.mean}, {"median", r.median}, {"max", r.max}}},
        {"diff", {{"mean", d.mean}, {"median", d.median}, {"max", d.max}}},
        {"failed_cells", grid.cell_errors.size()}};
    for (const auto& err : grid.cell_errors)
      std::cerr << "grid " << spec.name << " cell failed: " << err << "\n";
    out.grids.push_back(std::move(grid));
  }
  std::ofstream sum((fs::path(cfg.out_dir) / "summary.json").string());
  sum << out.summary.dump(2) << "\n";
  return out;
}

ExperimentResult cmd_replicate_duffing(const std::string& out_dir, bool desk_scale,
                                       int threads) {
  ExperimentConfig cfg = duffing_config(desk_scale);
  cfg.out_dir = out_dir;
  cfg.threads = threads;

  ExperimentResult res;
  res.model = cmd_train(cfg);
  std::cout << "trained: M = " << res.model.dict.size()
            << ", Gram residual = " << res.model.gram_residual << "\n";
  res.opt = cmd_optimize(cfg, res.model);
  std::cout << "optimized: g_N(U0) = " << res.opt.objective_initial
            << " -> g_N(U*) = " << res.opt.objective_final << "\n";
  res.eval = cmd_evaluate(cfg, res.model, res.opt.U);
  std::cout << "summary written to " << out_dir << "/summary.json\n";

  // Config echo alongside the artifacts.
  std::ofstream echo((fs::path(out_dir) / "config.json").string());
  echo << config_to_json(cfg).dump(2) << "\n";
  return res;
}

}  // namespace koopman
