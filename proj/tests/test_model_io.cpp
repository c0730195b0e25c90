#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "koopman/model_io.hpp"

using namespace koopman;
namespace fs = std::filesystem;

TEST_CASE("model file round-trip is bitwise exact") {
  ModelFile mf;
  mf.header["kind"] = "test";
  mf.header["note"] = 42;
  mf.set("A", MatrixXd::Random(7, 3));
  mf.set("B", MatrixXd::Random(1, 9));
  mf.set("A", mf.get("A") * 2.0);  // overwrite keeps a single entry

  const auto path = fs::temp_directory_path() / "koopman_test_model.kmdl";
  save_model_file(mf, path.string());
  const ModelFile back = load_model_file(path.string());

  CHECK(back.header.at("kind") == "test");
  CHECK(back.header.at("note") == 42);
  REQUIRE(back.matrices.size() == 2);
  CHECK(back.has("A"));
  CHECK(back.has("B"));
  CHECK(!back.has("C"));
  CHECK((back.get("A") - mf.get("A")).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.get("B") - mf.get("B")).cwiseAbs().maxCoeff() == 0.0);

  // Re-saving yields byte-identical files (determinism contract).
  const auto path2 = fs::temp_directory_path() / "koopman_test_model2.kmdl";
  save_model_file(back, path2.string());
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("model file rejects wrong magic and truncation") {
  const auto path = fs::temp_directory_path() / "koopman_test_bad.kmdl";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTAMODL" << std::string(64, '\0');
  }
  CHECK_THROWS((void)load_model_file(path.string()));

  ModelFile mf;
  mf.set("A", MatrixXd::Random(4, 4));
  save_model_file(mf, path.string());
  // Truncate the matrix payload.
  fs::resize_file(path, fs::file_size(path) - 16);
  CHECK_THROWS((void)load_model_file(path.string()));
  fs::remove(path);
  CHECK_THROWS((void)load_model_file((fs::temp_directory_path() / "nope.kmdl").string()));
}
