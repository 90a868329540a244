#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddl/matrix_io.hpp"
#include "ddl/types.hpp"

namespace ddl {

// A model directory holds manifest.json plus the matrix files it names:
//   D.txt      d x K class dictionaries
//   D0.txt     d x k0 shared dictionary
//   means.txt  (K + k0) x C, column c = [m_c; m0]
inline void save_model(const DictionaryModel& model, const std::string& dir) {
  model.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory: " + dir);

  const int K = model.layout.total_atoms();
  const int k0 = model.layout.k0;
  Matrix means(K + k0, model.layout.C);
  means.topRows(K) = model.class_means;
  if (k0 > 0)
    means.bottomRows(k0) = model.shared_mean.replicate(1, model.layout.C);

  write_matrix(dir + "/D.txt", model.D);
  write_matrix(dir + "/D0.txt", model.D0);
  write_matrix(dir + "/means.txt", means);

  nlohmann::json manifest;
  manifest["version"] = "1";
  manifest["method"] = model.method;
  manifest["C"] = model.layout.C;
  manifest["d"] = model.D.rows();
  manifest["k"] = model.layout.k;
  manifest["k0"] = k0;
  manifest["n"] = model.layout.n;
  manifest["params"] = {
      {"lambda1", model.params.lambda1},
      {"lambda2", model.params.lambda2},
      {"eta", model.params.eta},
      {"w", model.params.w},
      {"k", model.params.k},
      {"k0", model.params.k0},
      {"max_outer_iters", model.params.max_outer_iters},
      {"fista_max_iters", model.params.fista_max_iters},
      {"admm_rho", model.params.admm_rho},
      {"seed", model.params.seed},
  };
  manifest["files"] = {
      {"D", "D.txt"}, {"D0", "D0.txt"}, {"means", "means.txt"}};

  std::ofstream out(dir + "/manifest.json");
  if (!out) throw IoError("cannot write manifest: " + dir + "/manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest: " + dir + "/manifest.json");
}

inline DictionaryModel load_model(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("cannot open manifest: " + dir + "/manifest.json");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }

  try {
    const std::string version = manifest.at("version").get<std::string>();
    if (version != "1")
      throw ValidationError("unsupported model version '" + version + "'");

    const int C = manifest.at("C").get<int>();
    const long d = manifest.at("d").get<long>();
    const std::vector<int> k = manifest.at("k").get<std::vector<int>>();
    const int k0 = manifest.at("k0").get<int>();
    std::vector<int> n;
    if (manifest.contains("n"))
      n = manifest.at("n").get<std::vector<int>>();
    else
      n.assign(static_cast<size_t>(C), 1);
    if (static_cast<int>(k.size()) != C || static_cast<int>(n.size()) != C)
      throw ValidationError("manifest k/n length differs from C");

    DictionaryModel model;
    model.layout = BlockLayout(n, k, k0);
    model.method = manifest.value("method", "lrsdl");

    const auto& files = manifest.at("files");
    model.D = read_matrix(dir + "/" + files.at("D").get<std::string>());
    model.D0 = read_matrix(dir + "/" + files.at("D0").get<std::string>());
    Matrix means = read_matrix(dir + "/" + files.at("means").get<std::string>());

    if (model.D.rows() != d || model.D.cols() != model.layout.total_atoms())
      throw ValidationError("D.txt shape does not match manifest");
    if ((model.D0.cols() > 0 && model.D0.rows() != d) || model.D0.cols() != k0)
      throw ValidationError("D0.txt shape does not match manifest");
    const int K = model.layout.total_atoms();
    if (means.rows() != K + k0 || means.cols() != C)
      throw ValidationError("means.txt shape does not match manifest");
    model.class_means = means.topRows(K);
    model.shared_mean = k0 > 0 ? Vector(means.bottomRows(k0).col(0)) : Vector(0);

    const auto& p = manifest.at("params");
    model.params.lambda1 = p.at("lambda1").get<double>();
    model.params.lambda2 = p.at("lambda2").get<double>();
    model.params.eta = p.at("eta").get<double>();
    model.params.w = p.at("w").get<double>();
    model.params.k = p.at("k").get<int>();
    model.params.k0 = p.at("k0").get<int>();
    model.params.max_outer_iters = p.at("max_outer_iters").get<int>();
    model.params.fista_max_iters = p.at("fista_max_iters").get<int>();
    model.params.admm_rho = p.at("admm_rho").get<double>();
    model.params.seed = p.at("seed").get<unsigned long long>();

    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest.json: ") + e.what());
  }
}

}  // namespace ddl
