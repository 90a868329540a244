#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ddl/block_layout.hpp"
#include "ddl/blockmat.hpp"
#include "ddl/errors.hpp"

namespace ddl {

// Iteration budgets and tolerances shared across the solver family.
namespace defaults {
inline constexpr double fista_tol = 1e-5;
// Coding accuracy drives everything downstream: under-converged codes leave
// class structure in the shared-dictionary residual. A few hundred
// accelerated iterations (with the tol early exit) is the working range.
inline constexpr int fista_max_iters = 300;
// Dictionary column passes are warm-started inside an alternating outer
// loop, so a handful of sweeps per call is enough; the outer loop supplies
// convergence. Large caps waste time in the slowly-decaying sweep tail.
inline constexpr int odl_sweeps = 5;
inline constexpr double odl_tol = 1e-8;
inline constexpr int admm_max_iters = 100;
inline constexpr double admm_tol = 1e-6;
inline constexpr double admm_rho = 1.0;
inline constexpr int max_outer_iters = 25;
inline constexpr double outer_tol = 1e-5;
}  // namespace defaults

struct HyperParams {
  double lambda1 = 0.01;  // l1 weight
  double lambda2 = 0.003; // code-similarity weight
  double eta = 0.003;     // low-rank / incoherence weight
  double w = 0.5;         // classification blend between residual and mean fit
  int k = 4;              // atoms per class dictionary
  int k0 = 2;             // shared atoms
  int max_outer_iters = defaults::max_outer_iters;
  int fista_max_iters = defaults::fista_max_iters;
  double admm_rho = defaults::admm_rho;
  unsigned long long seed = 0;

  void validate() const {
    if (lambda1 < 0) throw ArgumentError("lambda1 must be >= 0");
    if (lambda2 < 0) throw ArgumentError("lambda2 must be >= 0");
    if (eta < 0) throw ArgumentError("eta must be >= 0");
    if (w < 0 || w > 1) throw ArgumentError("w must lie in [0, 1]");
    if (k < 1) throw ArgumentError("k must be >= 1");
    if (k0 < 0) throw ArgumentError("k0 must be >= 0");
    if (max_outer_iters < 1) throw ArgumentError("max_outer_iters must be >= 1");
    if (fista_max_iters < 1) throw ArgumentError("fista_max_iters must be >= 1");
    if (admm_rho <= 0) throw ArgumentError("admm_rho must be > 0");
  }
};

// Samples grouped so each class occupies one contiguous column block.
struct LabeledDataset {
  Matrix Y;                 // d x N
  std::vector<int> labels;  // N entries in 1..C, nondecreasing after grouping
  BlockLayout layout;       // column blocks; dictionary blocks default to n

  // Reorders columns (stable) so labels become contiguous 1..C blocks.
  static LabeledDataset from_data(const Matrix& Y, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != Y.cols())
      throw ValidationError("dataset has " + std::to_string(Y.cols()) +
                            " columns but " + std::to_string(labels.size()) +
                            " labels");
    if (labels.empty()) throw ValidationError("dataset is empty");
    int C = 0;
    for (int v : labels) {
      if (v < 1) throw ValidationError("label " + std::to_string(v) +
                                       " is not a positive class index");
      C = std::max(C, v);
    }
    std::vector<int> counts(C, 0);
    for (int v : labels) ++counts[v - 1];
    for (int c = 0; c < C; ++c)
      if (counts[c] == 0)
        throw ValidationError("class " + std::to_string(c + 1) +
                              " has no samples");

    std::vector<int> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return labels[a] < labels[b]; });

    LabeledDataset ds;
    ds.Y.resize(Y.rows(), Y.cols());
    ds.labels.resize(labels.size());
    for (size_t i = 0; i < order.size(); ++i) {
      ds.Y.col(static_cast<Eigen::Index>(i)) = Y.col(order[i]);
      ds.labels[i] = labels[order[i]];
    }
    ds.layout = BlockLayout(counts, counts, 0);
    return ds;
  }

  int num_classes() const { return layout.C; }

  Eigen::Ref<const Matrix> class_cols(int c) const {
    return Y.middleCols(layout.sample_offset(c), layout.n[c]);
  }
};

// Sparse codes partitioned by dictionary block (rows) and class (columns).
struct CoefficientMatrix {
  Matrix X;   // K x N, row blocks follow layout.k
  Matrix X0;  // k0 x N, codes on the shared dictionary
  BlockLayout layout;

  CoefficientMatrix() = default;
  CoefficientMatrix(Matrix x, Matrix x0, BlockLayout lay)
      : X(std::move(x)), X0(std::move(x0)), layout(std::move(lay)) {
    if (X.rows() != layout.total_atoms() || X.cols() != layout.total_samples())
      throw PartitionError("CoefficientMatrix: X does not match layout");
    if (X0.rows() != layout.k0 || (layout.k0 > 0 && X0.cols() != X.cols()))
      throw PartitionError("CoefficientMatrix: X0 does not match layout");
  }

  // Rows of dictionary block i restricted to class-c columns: X_c^i.
  Eigen::Block<const Matrix> block(int i, int c) const {
    return X.block(layout.atom_offset(i), layout.sample_offset(c),
                   layout.k[i], layout.n[c]);
  }
  auto class_cols(int c) const {
    return X.middleCols(layout.sample_offset(c), layout.n[c]);
  }
  auto shared_class_cols(int c) const {
    return X0.middleCols(layout.sample_offset(c), layout.n[c]);
  }
};

// Trained dictionaries plus the per-class / shared mean codes used by the
// classifier.
struct DictionaryModel {
  Matrix D;            // d x K
  Matrix D0;           // d x k0
  Matrix class_means;  // K x C, column c = m_c
  Vector shared_mean;  // k0, m0
  HyperParams params;
  BlockLayout layout;
  std::string method = "lrsdl";  // which trainer produced this model

  bool trained() const { return D.cols() > 0; }

  Eigen::Block<const Matrix> class_dict(int c) const {
    return D.block(0, layout.atom_offset(c), D.rows(), layout.k[c]);
  }

  void validate() const {
    params.validate();
    if (layout.total_atoms() != D.cols() || layout.k0 != D0.cols())
      throw ValidationError("model dictionaries do not match layout");
    if (D0.cols() > 0 && D0.rows() != D.rows())
      throw ValidationError("shared dictionary row count differs from D");
    if (class_means.rows() != D.cols() || class_means.cols() != layout.C)
      throw ValidationError("class means do not match layout");
    if (shared_mean.size() != layout.k0)
      throw ValidationError("shared mean does not match k0");
    for (Eigen::Index j = 0; j < D.cols(); ++j)
      if (D.col(j).norm() > 1.0 + 1e-6)
        throw ValidationError("dictionary atom " + std::to_string(j) +
                              " has norm > 1");
    for (Eigen::Index j = 0; j < D0.cols(); ++j)
      if (D0.col(j).norm() > 1.0 + 1e-6)
        throw ValidationError("shared atom " + std::to_string(j) +
                              " has norm > 1");
  }
};

struct BenchRecord {
  int iter = 0;
  double cost = 0.0;
  double elapsed_sec = 0.0;
  double dict_sec = 0.0;  // seconds inside this iteration's dictionary updates
};

using TrainCallback = std::function<void(const BenchRecord&)>;

enum class DictUpdateVariant { original, efficient };

// Warm-start dictionaries and codes, as produced by initialize_dictionaries.
struct InitResult {
  Matrix D;
  Matrix X;
  Matrix D0;
  Matrix X0;
};

struct TrainOptions {
  DictUpdateVariant variant = DictUpdateVariant::efficient;
  double outer_tol = defaults::outer_tol;
  TrainCallback callback;
  std::optional<InitResult> init;  // overrides the built-in initialization
};

struct TrainState {
  DictionaryModel model;
  CoefficientMatrix coeffs;
  std::vector<BenchRecord> history;
};

struct ClassifyResult {
  std::vector<int> predicted;          // 1-based class indices
  std::vector<std::vector<double>> scores;  // per sample, per class
};

}  // namespace ddl
