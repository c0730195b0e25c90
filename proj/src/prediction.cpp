#include "koopman/prediction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace koopman {

MatrixXd rollout_lifted(const KoopmanLinearSystem& kls, const VectorXd& x0, int N) {
  if (N < 0) throw std::invalid_argument("rollout_lifted: N must be >= 0");
  VectorXd z = kls.lift(x0);
  const int l = static_cast<int>(z.size());
  MatrixXd traj(N + 1, l);
  traj.row(0) = z.transpose();
  for (int t = 0; t < N; ++t) {
    z = kls.K.transpose() * z;
    traj.row(t + 1) = z.transpose();
  }
  return traj;
}

Trajectory predict_states(const KoopmanLinearSystem& kls, const VectorXd& x0, int N) {
  const MatrixXd z = rollout_lifted(kls, x0, N);
  Trajectory traj;
  traj.x0 = x0;
  traj.states = z * kls.Pi.transpose();  // row t becomes (Pi z(t))^T
  return traj;
}

double trajectory_distance(const MatrixXd& xi, const MatrixXd& zeta, int N) {
  if (xi.rows() < N + 1 || zeta.rows() < N + 1 || xi.cols() != zeta.cols())
    throw std::invalid_argument("trajectory_distance: shape mismatch");
  double d = 0.0;
  for (int t = 0; t <= N; ++t) d += (xi.row(t) - zeta.row(t)).norm();
  return d;
}

double mean_prediction_error(const MatrixXd& truth, const MatrixXd& pred, int N) {
  return trajectory_distance(truth, pred, N) / static_cast<double>(N);
}

double invariance_estimate(const KoopmanLinearSystem& kls, const SampledMap& map,
                           const std::vector<VectorXd>& test_states, int N) {
  if (test_states.empty())
    throw std::invalid_argument("invariance_estimate: empty test set");
  double worst = 0.0;
  for (const VectorXd& x0 : test_states) {
    const Trajectory truth = rollout_truth(map, x0, N);
    const Trajectory pred = predict_states(kls, x0, N);
    worst = std::max(worst, trajectory_distance(truth.states, pred.states, N));
  }
  return worst;
}

static ErrorGridResult::Stats grid_stats(const MatrixXd& field) {
  std::vector<double> vals;
  vals.reserve(field.size());
  for (int i = 0; i < field.rows(); ++i)
    for (int j = 0; j < field.cols(); ++j)
      if (!std::isnan(field(i, j))) vals.push_back(field(i, j));
  ErrorGridResult::Stats st{0.0, 0.0, 0.0};
  if (vals.empty()) return st;
  std::sort(vals.begin(), vals.end());
  double sum = 0.0;
  for (double v : vals) sum += v;
  st.mean = sum / static_cast<double>(vals.size());
  const std::size_t m = vals.size() / 2;
  st.median = (vals.size() % 2 == 1) ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
  st.max = vals.back();
  return st;
}

ErrorGridResult::Stats ErrorGridResult::full_stats() const { return grid_stats(eps_full); }
ErrorGridResult::Stats ErrorGridResult::reduced_stats() const { return grid_stats(eps_reduced); }
ErrorGridResult::Stats ErrorGridResult::diff_stats() const { return grid_stats(diff); }

ErrorGridResult error_grid(const KoopmanLinearSystem& full,
                           const KoopmanLinearSystem& reduced,
                           const SampledMap& map, const VectorXd& lo,
                           const VectorXd& hi, int resolution, int N,
                           int threads) {
  if (resolution < 2) throw std::invalid_argument("error_grid: resolution must be >= 2");
  if (lo.size() != 2 || hi.size() != 2)
    throw std::invalid_argument("error_grid: grid is defined for 2-D state spaces");

  ErrorGridResult out;
  out.x1 = VectorXd::LinSpaced(resolution, lo(0), hi(0));
  out.x2 = VectorXd::LinSpaced(resolution, lo(1), hi(1));
  out.eps_full.setConstant(resolution, resolution, std::nan(""));
  out.eps_reduced.setConstant(resolution, resolution, std::nan(""));
  out.diff.setConstant(resolution, resolution, std::nan(""));

  if (threads <= 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<int>(threads, resolution);

  std::mutex err_mutex;
  std::atomic<int> next_row{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next_row.fetch_add(1);
      if (i >= resolution) return;
      for (int j = 0; j < resolution; ++j) {
        VectorXd x0(2);
        x0 << out.x1(j), out.x2(i);
        try {
          const Trajectory truth = rollout_truth(map, x0, N);
          const Trajectory pf = predict_states(full, x0, N);
          const Trajectory pr = predict_states(reduced, x0, N);
          out.eps_full(i, j) = mean_prediction_error(truth.states, pf.states, N);
          out.eps_reduced(i, j) = mean_prediction_error(truth.states, pr.states, N);
          out.diff(i, j) = out.eps_full(i, j) - out.eps_reduced(i, j);
        } catch (const IntegratorError& e) {
          std::lock_guard<std::mutex> lock(err_mutex);
          out.cell_errors.push_back(std::to_string(i) + "," + std::to_string(j) +
                                    ": " + e.what());
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

void write_error_grid_csv(const ErrorGridResult& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "x1,x2,eps_full,eps_reduced,diff\n";
  for (int i = 0; i < grid.eps_full.rows(); ++i)
    for (int j = 0; j < grid.eps_full.cols(); ++j)
      out << grid.x1(j) << "," << grid.x2(i) << "," << grid.eps_full(i, j) << ","
          << grid.eps_reduced(i, j) << "," << grid.diff(i, j) << "\n";
}

}  // namespace koopman
