#include "koopman/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace koopman {

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts need a byte swap");

namespace {
constexpr char kMagic[8] = {'K', 'M', 'D', 'L', '0', '0', '0', '1'};
}

void ModelFile::set(const std::string& name, const MatrixXd& m) {
  for (auto& [n, mat] : matrices) {
    if (n == name) {
      mat = m;
      return;
    }
  }
  matrices.emplace_back(name, m);
}

const MatrixXd& ModelFile::get(const std::string& name) const {
  for (const auto& [n, mat] : matrices)
    if (n == name) return mat;
  throw std::out_of_range("model file has no matrix named " + name);
}

bool ModelFile::has(const std::string& name) const {
  for (const auto& [n, mat] : matrices)
    if (n == name) return true;
  return false;
}

void save_model_file(const ModelFile& mf, const std::string& path) {
  nlohmann::json header = mf.header;
  header["matrices"] = nlohmann::json::array();
  for (const auto& [name, mat] : mf.matrices)
    header["matrices"].push_back(
        {{"name", name}, {"rows", mat.rows()}, {"cols", mat.cols()}});

  const std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(len));
  for (const auto& [name, mat] : mf.matrices)
    out.write(reinterpret_cast<const char*>(mat.data()),
              static_cast<std::streamsize>(sizeof(double) * mat.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path + " is not a model file");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated model file " + path);

  ModelFile mf;
  mf.header = nlohmann::json::parse(header_str);
  for (const auto& entry : mf.header.at("matrices")) {
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    MatrixXd mat(rows, cols);
    in.read(reinterpret_cast<char*>(mat.data()),
            static_cast<std::streamsize>(sizeof(double) * mat.size()));
    if (!in) throw std::runtime_error("truncated matrix block in " + path);
    mf.matrices.emplace_back(name, std::move(mat));
  }
  return mf;
}

}  // namespace koopman
