#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "ddl/blockmat.hpp"
#include "ddl/solvers.hpp"
#include "ddl/types.hpp"

namespace ddl {
namespace fddl {

// Fidelity: for every class c,
//   r_c = ||Y_c - D X_c||^2 + ||Y_c - D_c X_c^c||^2 + sum_{j != c} ||D_j X_c^j||^2.
inline double fidelity(const Matrix& Y, const Matrix& D, const Matrix& X,
                       const BlockLayout& layout) {
  double f = 0.0;
  for (int c = 0; c < layout.C; ++c) {
    const auto Yc = Y.middleCols(layout.sample_offset(c), layout.n[c]);
    const auto Xc = X.middleCols(layout.sample_offset(c), layout.n[c]);
    f += (Yc - D * Xc).squaredNorm();
    for (int j = 0; j < layout.C; ++j) {
      const auto Dj = D.middleCols(layout.atom_offset(j), layout.k[j]);
      const auto Xcj = X.block(layout.atom_offset(j), layout.sample_offset(c),
                               layout.k[j], layout.n[c]);
      if (j == c)
        f += (Yc - Dj * Xcj).squaredNorm();
      else
        f += (Dj * Xcj).squaredNorm();
    }
  }
  return f;
}

// Discriminative code penalty:
//   g(X) = sum_c (||X_c - M_c||^2 - ||M_c - M||^2) + ||X||^2.
inline double code_penalty(const Matrix& X, const BlockLayout& layout) {
  const Vector m = X.rowwise().mean();
  double g = X.squaredNorm();
  for (int c = 0; c < layout.C; ++c) {
    const auto Xc = X.middleCols(layout.sample_offset(c), layout.n[c]);
    const Vector mc = Xc.rowwise().mean();
    g += (Xc - mc.replicate(1, layout.n[c])).squaredNorm();
    g -= layout.n[c] * (mc - m).squaredNorm();
  }
  return g;
}

inline double cost(const Matrix& Y, const Matrix& D, const Matrix& X,
                   const BlockLayout& layout, double lambda1, double lambda2) {
  return 0.5 * fidelity(Y, D, X, layout) + lambda1 * l1_norm(X) +
         0.5 * lambda2 * code_penalty(X, layout);
}

// Gradient of the smooth part 1/2 f + lambda2/2 g with respect to X:
//   (M(D^T D) + 2 lambda2 I) X - M(D^T Y) + lambda2 (M - 2 Mhat).
inline Matrix x_gradient(const Matrix& Y, const Matrix& D, const Matrix& X,
                         const BlockLayout& layout, double lambda2) {
  const Matrix M_DtD = double_block_diagonal(D.transpose() * D, layout.k, layout.k);
  const Matrix M_DtY = double_block_diagonal(D.transpose() * Y, layout.k, layout.n);
  Matrix g = M_DtD * X + 2.0 * lambda2 * X - M_DtY;
  if (lambda2 != 0.0)
    g += lambda2 * (column_mean_matrix(X, X.cols()) - 2.0 * per_class_mean_matrix(X, layout));
  return g;
}

// Sparse code update: FISTA on the smooth part above with
//   L = spectral_bound(M(D^T D)) + 4 lambda2 + 1.
inline FistaResult x_update(const Matrix& Y, const Matrix& D, const Matrix& X_init,
                            const BlockLayout& layout, const HyperParams& params) {
  const Matrix M_DtD = double_block_diagonal(D.transpose() * D, layout.k, layout.k);
  const Matrix M_DtY = double_block_diagonal(D.transpose() * Y, layout.k, layout.n);
  const double L = spectral_bound(M_DtD) + 4.0 * params.lambda2 + 1.0;
  const double lambda2 = params.lambda2;
  auto grad = [&](const Matrix& X) {
    Matrix g = M_DtD * X + 2.0 * lambda2 * X - M_DtY;
    if (lambda2 != 0.0)
      g += lambda2 *
           (column_mean_matrix(X, X.cols()) - 2.0 * per_class_mean_matrix(X, layout));
    return g;
  };
  return fista(grad, L, params.lambda1, X_init,
               {params.fista_max_iters, defaults::fista_tol});
}

// Joint dictionary update: the fidelity is quadratic in D with
//   E = Y M(X)^T,  F = M(X X^T),
// solved by cyclic ODL column updates.
inline Matrix d_update(const Matrix& Y, const Matrix& X, Matrix D,
                       const BlockLayout& layout) {
  const Matrix MX = double_block_diagonal(X, layout.k, layout.n);
  const Matrix E = Y * MX.transpose();
  const Matrix F = double_block_diagonal(X * X.transpose(), layout.k, layout.k);
  return odl_dictionary_update(E, F, std::move(D));
}

// Baseline dictionary update: per-class ODL subproblems in sequence, each
// rebuilding the complement residual
//   Yhat = Y - sum_{i != c} D_i X^i,
//   E_c = Yhat (X^c)^T + Y_c (X_c^c)^T,  F_c = 2 X^c (X^c)^T.
inline Matrix d_update_per_class(const Matrix& Y, const Matrix& X, Matrix D,
                                 const BlockLayout& layout) {
  for (int c = 0; c < layout.C; ++c) {
    const auto Xc_rows = X.middleRows(layout.atom_offset(c), layout.k[c]);
    Matrix Dc = D.middleCols(layout.atom_offset(c), layout.k[c]);
    const Matrix Yhat = Y - D * X + Dc * Xc_rows;
    const auto Yc = Y.middleCols(layout.sample_offset(c), layout.n[c]);
    const auto Xcc = X.block(layout.atom_offset(c), layout.sample_offset(c),
                             layout.k[c], layout.n[c]);
    const Matrix E = Yhat * Xc_rows.transpose() + Yc * Xcc.transpose();
    const Matrix F = 2.0 * (Xc_rows * Xc_rows.transpose());
    D.middleCols(layout.atom_offset(c), layout.k[c]) =
        odl_dictionary_update(E, F, std::move(Dc));
  }
  return D;
}

// Alternating trainer. LRSDL with an empty shared dictionary delegates here,
// so a k0 = 0 run of either entry point follows the identical path.
inline TrainState train(const LabeledDataset& ds, const HyperParams& params,
                        const TrainOptions& opts = {}) {
  params.validate();
  const auto t0 = std::chrono::steady_clock::now();
  BlockLayout layout = BlockLayout::uniform(ds.layout.n, params.k, 0);
  InitResult init =
      opts.init ? detail::checked_init(*opts.init, ds.Y, layout)
                : initialize_dictionaries(ds.Y, layout, params.lambda1,
                                          params.seed, params.fista_max_iters);
  Matrix D = std::move(init.D);
  Matrix X = std::move(init.X);

  TrainState state;
  double prev = cost(ds.Y, D, X, layout, params.lambda1, params.lambda2);
  state.history.push_back({0, prev, detail::seconds_since(t0)});
  if (opts.callback) opts.callback(state.history.back());

  for (int it = 1; it <= params.max_outer_iters; ++it) {
    X = x_update(ds.Y, D, X, layout, params).solution;
    const auto td = std::chrono::steady_clock::now();
    D = opts.variant == DictUpdateVariant::efficient
            ? d_update(ds.Y, X, std::move(D), layout)
            : d_update_per_class(ds.Y, X, std::move(D), layout);
    const double dict_sec = detail::seconds_since(td);
    const double c = cost(ds.Y, D, X, layout, params.lambda1, params.lambda2);
    state.history.push_back({it, c, detail::seconds_since(t0), dict_sec});
    if (opts.callback) opts.callback(state.history.back());
    if (std::abs(prev - c) < opts.outer_tol * std::max(1.0, std::abs(prev))) break;
    prev = c;
  }

  state.model.D = std::move(D);
  state.model.D0 = Matrix(ds.Y.rows(), 0);
  state.model.class_means = class_mean_vectors(X, layout);
  state.model.shared_mean = Vector(0);
  state.model.params = params;
  state.model.params.k0 = 0;
  state.model.layout = layout;
  state.model.method = "fddl";
  state.coeffs = CoefficientMatrix(std::move(X), Matrix(0, ds.Y.cols()), layout);
  return state;
}

}  // namespace fddl
}  // namespace ddl
