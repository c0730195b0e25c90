#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"

namespace koopman {

using Eigen::MatrixXd;

/// Container file: 8-byte magic "KMDL0001", little-endian uint64 header
/// length, UTF-8 JSON header, then one raw block per matrix listed under
/// header["matrices"] (name/rows/cols, in order) as column-major
/// little-endian float64.
struct ModelFile {
  nlohmann::json header;
  std::vector<std::pair<std::string, MatrixXd>> matrices;

  void set(const std::string& name, const MatrixXd& m);
  const MatrixXd& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_model_file(const ModelFile& mf, const std::string& path);
ModelFile load_model_file(const std::string& path);

}  // namespace koopman
