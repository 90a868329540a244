#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>

#include "ddl/solvers.hpp"
#include "ddl/types.hpp"

namespace ddl {
namespace copar {

// Pairwise incoherence over all C+1 blocks (class dictionaries plus the
// shared one): sum_{c != i} ||D_i^T D_c||_F^2.
inline double incoherence(const Matrix& D, const Matrix& D0,
                          const BlockLayout& layout) {
  const int B = layout.C + 1;
  auto block_of = [&](int b) -> Matrix {
    if (b < layout.C)
      return D.middleCols(layout.atom_offset(b), layout.k[b]);
    return D0;
  };
  double s = 0.0;
  for (int c = 0; c < B; ++c) {
    const Matrix Dc = block_of(c);
    if (Dc.cols() == 0) continue;
    for (int i = 0; i < B; ++i) {
      if (i == c) continue;
      const Matrix Di = block_of(i);
      if (Di.cols() == 0) continue;
      s += (Di.transpose() * Dc).squaredNorm();
    }
  }
  return s;
}

// COPAR objective:
//   1/2 sum_c [ ||Y_c - Dbar Xbar_c||^2 + ||Y_c - D0 X0_c - D_c X_c^c||^2
//               + sum_{j != c} ||X_c^j||^2 ]
//   + lambda ||Xbar||_1 + eta * incoherence(D, D0).
inline double cost(const Matrix& Y, const Matrix& D, const Matrix& D0,
                   const Matrix& X, const Matrix& X0, const BlockLayout& layout,
                   double lambda, double eta) {
  double f = 0.0;
  for (int c = 0; c < layout.C; ++c) {
    const auto Yc = Y.middleCols(layout.sample_offset(c), layout.n[c]);
    const auto Xc = X.middleCols(layout.sample_offset(c), layout.n[c]);
    Matrix shared_part = Matrix::Zero(Y.rows(), layout.n[c]);
    if (layout.k0 > 0)
      shared_part = D0 * X0.middleCols(layout.sample_offset(c), layout.n[c]);
    f += (Yc - D * Xc - shared_part).squaredNorm();
    const auto Dc = D.middleCols(layout.atom_offset(c), layout.k[c]);
    const auto Xcc = X.block(layout.atom_offset(c), layout.sample_offset(c),
                             layout.k[c], layout.n[c]);
    f += (Yc - shared_part - Dc * Xcc).squaredNorm();
    for (int j = 0; j < layout.C; ++j) {
      if (j == c) continue;
      f += X.block(layout.atom_offset(j), layout.sample_offset(c), layout.k[j],
                   layout.n[c])
               .squaredNorm();
    }
  }
  return 0.5 * f + lambda * (l1_norm(X) + l1_norm(X0)) +
         eta * incoherence(D, D0, layout);
}

namespace detail_copar {

// Stacked data matrix for the class-c code subproblem: reconstruction by the
// full dictionary, reconstruction by (D_c, D0) alone, and identity rows that
// penalize foreign-class coefficient blocks.
inline void build_stacked(const Matrix& D, const Matrix& D0,
                          const BlockLayout& layout, int c, Matrix& Dt) {
  const int K = layout.total_atoms();
  const int k0 = layout.k0;
  const Eigen::Index d = D.rows();
  const Eigen::Index height = 2 * d + (K - layout.k[c]);
  Dt = Matrix::Zero(height, K + k0);
  Dt.block(0, 0, d, K) = D;
  if (k0 > 0) Dt.block(0, K, d, k0) = D0;
  Dt.block(d, layout.atom_offset(c), d, layout.k[c]) =
      D.middleCols(layout.atom_offset(c), layout.k[c]);
  if (k0 > 0) Dt.block(d, K, d, k0) = D0;
  Eigen::Index r = 2 * d;
  for (int j = 0; j < layout.C; ++j) {
    if (j == c) continue;
    Dt.block(r, layout.atom_offset(j), layout.k[j], layout.k[j]) =
        Matrix::Identity(layout.k[j], layout.k[j]);
    r += layout.k[j];
  }
}

// Rows of every dictionary block except `b` (shared block = index C),
// transposed, for the incoherence term of block b's update.
inline Matrix complement_rows(const Matrix& D, const Matrix& D0,
                              const BlockLayout& layout, int b) {
  const int K = layout.total_atoms();
  const int k0 = layout.k0;
  const int kb = b < layout.C ? layout.k[b] : k0;
  Matrix A(K + k0 - kb, D.rows());
  Eigen::Index r = 0;
  for (int j = 0; j < layout.C; ++j) {
    if (j == b) continue;
    A.middleRows(r, layout.k[j]) =
        D.middleCols(layout.atom_offset(j), layout.k[j]).transpose();
    r += layout.k[j];
  }
  if (b != layout.C && k0 > 0) A.middleRows(r, k0) = D0.transpose();
  return A;
}

}  // namespace detail_copar

// Alternates per-class stacked coding with C+1 incoherent dictionary
// updates (classes first, shared block last). Every dictionary subproblem
// has the quadratic form tr(F D^T D) - 2 tr(E D^T) + 4 eta ||A D||_F^2.
inline TrainState train(const LabeledDataset& ds, const HyperParams& params,
                        const TrainOptions& opts = {}) {
  params.validate();
  const double lambda = params.lambda1;
  const double eta = params.eta;
  const auto t0 = std::chrono::steady_clock::now();
  BlockLayout layout = BlockLayout::uniform(ds.layout.n, params.k, params.k0);
  const int K = layout.total_atoms();
  const int k0 = layout.k0;

  InitResult init =
      opts.init ? detail::checked_init(*opts.init, ds.Y, layout)
                : initialize_dictionaries(ds.Y, layout, lambda, params.seed,
                                          params.fista_max_iters);
  Matrix D = std::move(init.D);
  Matrix X = std::move(init.X);
  Matrix D0 = std::move(init.D0);
  Matrix X0 = std::move(init.X0);

  TrainState state;
  double prev = cost(ds.Y, D, D0, X, X0, layout, lambda, eta);
  state.history.push_back({0, prev, detail::seconds_since(t0)});
  if (opts.callback) opts.callback(state.history.back());

  for (int it = 1; it <= params.max_outer_iters; ++it) {
    Matrix Dt;
    for (int c = 0; c < layout.C; ++c) {
      detail_copar::build_stacked(D, D0, layout, c, Dt);
      const Eigen::Index d = ds.Y.rows();
      Matrix Yt = Matrix::Zero(Dt.rows(), layout.n[c]);
      Yt.topRows(d) = ds.Y.middleCols(layout.sample_offset(c), layout.n[c]);
      Yt.middleRows(d, d) = Yt.topRows(d);
      const Matrix G = Dt.transpose() * Dt;
      const Matrix b = Dt.transpose() * Yt;
      const double L = spectral_bound(G) + 1.0;
      auto grad = [&](const Matrix& x) { return G * x - b; };
      Matrix warm(K + k0, layout.n[c]);
      warm.topRows(K) = X.middleCols(layout.sample_offset(c), layout.n[c]);
      if (k0 > 0)
        warm.bottomRows(k0) = X0.middleCols(layout.sample_offset(c), layout.n[c]);
      const Matrix sol =
          fista(grad, L, lambda, warm, {params.fista_max_iters, defaults::fista_tol})
              .solution;
      X.middleCols(layout.sample_offset(c), layout.n[c]) = sol.topRows(K);
      if (k0 > 0)
        X0.middleCols(layout.sample_offset(c), layout.n[c]) = sol.bottomRows(k0);
    }

    const auto td = std::chrono::steady_clock::now();
    for (int b = 0; b < layout.C + 1; ++b) {
      if (b == layout.C && k0 == 0) continue;
      Matrix E, F, Db;
      if (b < layout.C) {
        const auto Xb_rows = X.middleRows(layout.atom_offset(b), layout.k[b]);
        Db = D.middleCols(layout.atom_offset(b), layout.k[b]);
        Matrix R = ds.Y - D * X + Db * Xb_rows;
        if (k0 > 0) R -= D0 * X0;
        const auto Yb = ds.Y.middleCols(layout.sample_offset(b), layout.n[b]);
        const auto Xbb = X.block(layout.atom_offset(b), layout.sample_offset(b),
                                 layout.k[b], layout.n[b]);
        Matrix Yhat2 = Yb;
        if (k0 > 0)
          Yhat2 -= D0 * X0.middleCols(layout.sample_offset(b), layout.n[b]);
        E = R * Xb_rows.transpose() + Yhat2 * Xbb.transpose();
        F = Xb_rows * Xb_rows.transpose() + Xbb * Xbb.transpose();
      } else {
        Db = D0;
        const Matrix MX = double_block_diagonal(X, layout.k, layout.n);
        E = (2.0 * ds.Y - D * MX) * X0.transpose();
        F = 2.0 * (X0 * X0.transpose());
      }
      const Matrix A = detail_copar::complement_rows(D, D0, layout, b);
      if (opts.variant == DictUpdateVariant::efficient) {
        Db = admm_incoherent_dictionary(E, F, A, 4.0 * eta, params.admm_rho,
                                        std::move(Db));
      } else {
        Db = colwise_incoherent_dictionary(E, F, A, 4.0 * eta, std::move(Db));
      }
      if (b < layout.C)
        D.middleCols(layout.atom_offset(b), layout.k[b]) = Db;
      else
        D0 = Db;
    }

    const double dict_sec = detail::seconds_since(td);

    const double c = cost(ds.Y, D, D0, X, X0, layout, lambda, eta);
    state.history.push_back({it, c, detail::seconds_since(t0), dict_sec});
    if (opts.callback) opts.callback(state.history.back());
    if (std::abs(prev - c) < opts.outer_tol * std::max(1.0, std::abs(prev))) break;
    prev = c;
  }

  state.model.D = std::move(D);
  state.model.D0 = std::move(D0);
  state.model.class_means = class_mean_vectors(X, layout);
  state.model.shared_mean = k0 > 0 ? Vector(X0.rowwise().mean()) : Vector(0);
  state.model.params = params;
  state.model.layout = layout;
  state.model.method = "copar";
  state.coeffs = CoefficientMatrix(std::move(X), std::move(X0), layout);
  return state;
}

// Codes the sample on [D D0] by plain lasso, strips the shared
// contribution, and picks the class with the smallest residual.
inline ClassifyResult classify(const DictionaryModel& model, const Matrix& Ytest) {
  if (!model.trained()) throw StateError("copar::classify: model has no dictionary");
  model.validate();
  if (Ytest.rows() != model.D.rows())
    throw ValidationError("copar::classify: sample dimension mismatch");
  const BlockLayout& layout = model.layout;
  const int K = layout.total_atoms();
  const int k0 = layout.k0;

  Matrix Dbar(model.D.rows(), K + k0);
  Dbar.leftCols(K) = model.D;
  if (k0 > 0) Dbar.rightCols(k0) = model.D0;
  const Matrix DbtDb = Dbar.transpose() * Dbar;
  const double L = spectral_bound(DbtDb) + 1.0;

  ClassifyResult res;
  res.predicted.resize(Ytest.cols());
  res.scores.assign(Ytest.cols(), std::vector<double>(layout.C, 0.0));
  for (Eigen::Index s = 0; s < Ytest.cols(); ++s) {
    const Vector y = Ytest.col(s);
    const Vector Dbt_y = Dbar.transpose() * y;
    auto grad = [&](const Matrix& x) { return DbtDb * x - Dbt_y; };
    Matrix x_init = Matrix::Zero(K + k0, 1);
    const Matrix xbar =
        fista(grad, L, model.params.lambda1, x_init,
              {model.params.fista_max_iters, defaults::fista_tol})
            .solution;
    Vector ybar = y;
    if (k0 > 0) ybar -= model.D0 * xbar.bottomRows(k0);
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int c = 0; c < layout.C; ++c) {
      const auto Dc = model.class_dict(c);
      const auto xc = xbar.col(0).segment(layout.atom_offset(c), layout.k[c]);
      const double score = (ybar - Dc * xc).squaredNorm();
      res.scores[s][c] = score;
      if (score < best_score) {
        best_score = score;
        best = c;
      }
    }
    res.predicted[s] = best + 1;
  }
  return res;
}

}  // namespace copar
}  // namespace ddl
