#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "ddl/solvers.hpp"
#include "ddl/types.hpp"

namespace ddl {
namespace dlsi {

// Stacks the transposes of every class dictionary except `c`:
// A = [D_1, ..., D_{c-1}, D_{c+1}, ..., D_C]^T, one row per foreign atom.
inline Matrix complement_rows(const Matrix& D, const BlockLayout& layout, int c) {
  const int K = layout.total_atoms();
  Matrix A(K - layout.k[c], D.rows());
  Eigen::Index r = 0;
  for (int j = 0; j < layout.C; ++j) {
    if (j == c) continue;
    A.middleRows(r, layout.k[j]) =
        D.middleCols(layout.atom_offset(j), layout.k[j]).transpose();
    r += layout.k[j];
  }
  return A;
}

inline double incoherence(const Matrix& D, const BlockLayout& layout) {
  double s = 0.0;
  for (int c = 0; c < layout.C; ++c)
    for (int j = 0; j < layout.C; ++j) {
      if (j == c) continue;
      s += (D.middleCols(layout.atom_offset(j), layout.k[j]).transpose() *
            D.middleCols(layout.atom_offset(c), layout.k[c]))
               .squaredNorm();
    }
  return s;
}

// Per-class sparse coding with pairwise-incoherent dictionaries:
//   J = sum_c ( ||Y_c - D_c X^c||^2 + lambda ||X^c||_1 )
//       + eta/2 sum_c sum_{j != c} ||D_j^T D_c||_F^2.
// X holds the class codes on its diagonal blocks; other blocks stay zero.
inline double cost(const Matrix& Y, const Matrix& D, const Matrix& X,
                   const BlockLayout& layout, double lambda, double eta) {
  double j = 0.0;
  for (int c = 0; c < layout.C; ++c) {
    const auto Yc = Y.middleCols(layout.sample_offset(c), layout.n[c]);
    const auto Dc = D.middleCols(layout.atom_offset(c), layout.k[c]);
    const auto Xcc = X.block(layout.atom_offset(c), layout.sample_offset(c),
                             layout.k[c], layout.n[c]);
    j += (Yc - Dc * Xcc).squaredNorm() + lambda * Xcc.cwiseAbs().sum();
  }
  return j + 0.5 * eta * incoherence(D, layout);
}

namespace detail_dlsi {

inline void code_class(const Matrix& Y, const Matrix& D, Matrix& X,
                       const BlockLayout& layout, int c, double lambda,
                       int fista_max_iters) {
  const auto Yc = Y.middleCols(layout.sample_offset(c), layout.n[c]);
  const auto Dc = D.middleCols(layout.atom_offset(c), layout.k[c]);
  const Matrix DtD = Dc.transpose() * Dc;
  const Matrix DtY = Dc.transpose() * Yc;
  const double L = 2.0 * spectral_bound(DtD) + 1.0;
  auto grad = [&](const Matrix& Xc) { return 2.0 * (DtD * Xc - DtY); };
  Matrix warm = X.block(layout.atom_offset(c), layout.sample_offset(c),
                        layout.k[c], layout.n[c]);
  X.block(layout.atom_offset(c), layout.sample_offset(c), layout.k[c],
          layout.n[c]) =
      fista(grad, L, lambda, warm, {fista_max_iters, defaults::fista_tol})
          .solution;
}

}  // namespace detail_dlsi

// Alternates per-class coding with per-class dictionary updates; the
// efficient variant replaces the column-wise baseline by incoherent ADMM.
// `threads` > 1 codes classes concurrently (they are independent, so the
// result matches a serial run).
inline TrainState train(const LabeledDataset& ds, const HyperParams& params,
                        const TrainOptions& opts = {}, int threads = 1) {
  params.validate();
  if (threads < 1) throw ArgumentError("dlsi::train: threads must be >= 1");
  const double lambda = params.lambda1;
  const double eta = params.eta;
  const auto t0 = std::chrono::steady_clock::now();
  BlockLayout layout = BlockLayout::uniform(ds.layout.n, params.k, 0);
  const int K = layout.total_atoms();

  Matrix D(ds.Y.rows(), K);
  Matrix X = Matrix::Zero(K, ds.Y.cols());
  if (opts.init) {
    InitResult init = detail::checked_init(*opts.init, ds.Y, layout);
    D = std::move(init.D);
    // Only the diagonal blocks participate in the cost; keep the rest zero.
    for (int c = 0; c < layout.C; ++c)
      X.block(layout.atom_offset(c), layout.sample_offset(c), layout.k[c],
              layout.n[c]) = init.X.block(layout.atom_offset(c),
                                          layout.sample_offset(c), layout.k[c],
                                          layout.n[c]);
  } else {
    std::mt19937_64 rng(params.seed);
    for (int c = 0; c < layout.C; ++c) {
      const auto Yc = ds.Y.middleCols(layout.sample_offset(c), layout.n[c]);
      Matrix D_init = sample_columns_init(Yc, layout.k[c], rng);
      OdlTrainResult odl =
          odl_train(Yc, D_init, lambda / 2.0, 30, params.fista_max_iters);
      D.middleCols(layout.atom_offset(c), layout.k[c]) = odl.D;
      X.block(layout.atom_offset(c), layout.sample_offset(c), layout.k[c],
              layout.n[c]) = odl.X;
    }
  }

  TrainState state;
  double prev = cost(ds.Y, D, X, layout, lambda, eta);
  state.history.push_back({0, prev, detail::seconds_since(t0)});
  if (opts.callback) opts.callback(state.history.back());

  for (int it = 1; it <= params.max_outer_iters; ++it) {
    if (threads <= 1 || layout.C == 1) {
      for (int c = 0; c < layout.C; ++c)
        detail_dlsi::code_class(ds.Y, D, X, layout, c, lambda,
                                params.fista_max_iters);
    } else {
      std::vector<std::thread> pool;
      std::atomic<int> next{0};
      const int nw = std::min(threads, layout.C);
      for (int t = 0; t < nw; ++t)
        pool.emplace_back([&] {
          for (int c = next.fetch_add(1); c < layout.C; c = next.fetch_add(1))
            detail_dlsi::code_class(ds.Y, D, X, layout, c, lambda,
                                    params.fista_max_iters);
        });
      for (auto& th : pool) th.join();
    }

    const auto td = std::chrono::steady_clock::now();
    for (int c = 0; c < layout.C; ++c) {
      const auto Yc = ds.Y.middleCols(layout.sample_offset(c), layout.n[c]);
      const auto Xcc = X.block(layout.atom_offset(c), layout.sample_offset(c),
                               layout.k[c], layout.n[c]);
      const Matrix A = complement_rows(D, layout, c);
      Matrix Dc = D.middleCols(layout.atom_offset(c), layout.k[c]);
      if (opts.variant == DictUpdateVariant::efficient) {
        Dc = admm_incoherent_dictionary(Yc * Xcc.transpose(),
                                        Xcc * Xcc.transpose(), A, eta,
                                        params.admm_rho, std::move(Dc));
      } else {
        Dc = odlsi_dictionary_update(Yc, Xcc, A, eta, std::move(Dc));
      }
      D.middleCols(layout.atom_offset(c), layout.k[c]) = Dc;
    }
    const double dict_sec = detail::seconds_since(td);

    const double c = cost(ds.Y, D, X, layout, lambda, eta);
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
  state.model.method = "dlsi";
  state.coeffs = CoefficientMatrix(std::move(X), Matrix(0, ds.Y.cols()), layout);
  return state;
}

// Local coding: each class codes the sample on its own dictionary and the
// smallest reconstruction residual wins.
inline ClassifyResult classify(const DictionaryModel& model, const Matrix& Ytest) {
  if (!model.trained()) throw StateError("dlsi::classify: model has no dictionary");
  model.validate();
  if (Ytest.rows() != model.D.rows())
    throw ValidationError("dlsi::classify: sample dimension mismatch");
  const BlockLayout& layout = model.layout;
  const double lambda = model.params.lambda1;

  std::vector<Matrix> DtD(layout.C), Dt(layout.C);
  std::vector<double> L(layout.C);
  for (int c = 0; c < layout.C; ++c) {
    const auto Dc = model.class_dict(c);
    DtD[c] = Dc.transpose() * Dc;
    Dt[c] = Dc.transpose();
    L[c] = 2.0 * spectral_bound(DtD[c]) + 1.0;
  }

  ClassifyResult res;
  res.predicted.resize(Ytest.cols());
  res.scores.assign(Ytest.cols(), std::vector<double>(layout.C, 0.0));
  for (Eigen::Index s = 0; s < Ytest.cols(); ++s) {
    const Vector y = Ytest.col(s);
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int c = 0; c < layout.C; ++c) {
      const Vector Dty = Dt[c] * y;
      auto grad = [&](const Matrix& x) { return 2.0 * (DtD[c] * x - Dty); };
      Matrix x0 = Matrix::Zero(layout.k[c], 1);
      const Matrix xc =
          fista(grad, L[c], lambda, x0,
                {model.params.fista_max_iters, defaults::fista_tol})
              .solution;
      const double score = (y - model.class_dict(c) * xc).squaredNorm();
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

}  // namespace dlsi
}  // namespace ddl
