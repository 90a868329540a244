#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>

#include "ddl/fddl.hpp"
#include "ddl/solvers.hpp"
#include "ddl/types.hpp"

namespace ddl {
namespace lrsdl {

// Fidelity with the shared dictionary: for every class c,
//   r_c = ||Y_c - [D D0] [X_c; X0_c]||^2
//       + ||Y_c - D_c X_c^c - D0 X0_c||^2 + sum_{j != c} ||D_j X_c^j||^2.
inline double fidelity(const Matrix& Y, const Matrix& D, const Matrix& D0,
                       const Matrix& X, const Matrix& X0, const BlockLayout& layout) {
  double f = 0.0;
  for (int c = 0; c < layout.C; ++c) {
    const auto Yc = Y.middleCols(layout.sample_offset(c), layout.n[c]);
    const auto Xc = X.middleCols(layout.sample_offset(c), layout.n[c]);
    Matrix shared_part = Matrix::Zero(Y.rows(), layout.n[c]);
    if (layout.k0 > 0)
      shared_part = D0 * X0.middleCols(layout.sample_offset(c), layout.n[c]);
    f += (Yc - D * Xc - shared_part).squaredNorm();
    for (int j = 0; j < layout.C; ++j) {
      const auto Dj = D.middleCols(layout.atom_offset(j), layout.k[j]);
      const auto Xcj = X.block(layout.atom_offset(j), layout.sample_offset(c),
                               layout.k[j], layout.n[c]);
      if (j == c)
        f += (Yc - Dj * Xcj - shared_part).squaredNorm();
      else
        f += (Dj * Xcj).squaredNorm();
    }
  }
  return f;
}

inline double cost(const Matrix& Y, const Matrix& D, const Matrix& D0,
                   const Matrix& X, const Matrix& X0, const BlockLayout& layout,
                   const HyperParams& params) {
  double j = 0.5 * fidelity(Y, D, D0, X, X0, layout) +
             params.lambda1 * (l1_norm(X) + l1_norm(X0)) +
             0.5 * params.lambda2 * fddl::code_penalty(X, layout);
  if (layout.k0 > 0) {
    j += 0.5 * params.lambda2 *
         (X0 - column_mean_matrix(X0, X0.cols())).squaredNorm();
    j += params.eta * nuclear_norm(D0);
  }
  return j;
}

// The printed training algorithm states a slightly different code gradient
// than the one the objective's derivation yields; the derived form is the
// default and the printed form is kept for comparison only.
enum class XGradientForm { derived, printed };

struct XUpdateResult {
  Matrix X;
  Matrix X0;
  int iterations = 0;
  bool converged = false;
};

namespace detail_lrsdl {

// Fixed pieces of the stacked smooth gradient, computed once per X update
// and reused across FISTA steps.
struct XGradContext {
  const BlockLayout* layout = nullptr;
  double lambda2 = 0.0;
  XGradientForm form = XGradientForm::derived;
  int K = 0;
  int k0 = 0;
  Matrix M_DtD;  // M(D^T D)
  Matrix M_DtY;  // M(D^T Y)
  Matrix DtD0;   // K x k0
  Matrix D0tY;   // k0 x N
  Matrix B;      // 2 D0^T D0 + lambda2 I
  double L = 0.0;

  Matrix operator()(const Matrix& W) const {
    const auto X = W.topRows(K);
    const auto X0 = W.bottomRows(k0);
    Matrix G(K + k0, W.cols());
    G.topRows(K) = M_DtD * X + 2.0 * lambda2 * X - M_DtY +
                   double_block_diagonal(DtD0 * X0, layout->k, layout->n);
    const Matrix MX = double_block_diagonal(X, layout->k, layout->n);
    if (form == XGradientForm::derived) {
      if (lambda2 != 0.0)
        G.topRows(K) += lambda2 * (column_mean_matrix(X, X.cols()) -
                                   2.0 * per_class_mean_matrix(X, *layout));
      // lower block: B X0 - 2 D0^T V - lambda2 M0, 2 D0^T V = 2 D0^T Y - D0^T D M(X)
      G.bottomRows(k0) = B * X0 - 2.0 * D0tY + DtD0.transpose() * MX;
      if (lambda2 != 0.0)
        G.bottomRows(k0) -= lambda2 * column_mean_matrix(X0, X0.cols());
    } else {
      if (lambda2 != 0.0)
        G.topRows(K) += lambda2 * (column_mean_matrix(X, X.cols()) -
                                   per_class_mean_matrix(X, *layout));
      G.bottomRows(k0) = B * X0 - D0tY + 0.5 * (DtD0.transpose() * MX);
      if (lambda2 != 0.0)
        G.bottomRows(k0) -= lambda2 * column_mean_matrix(X0, X0.cols());
    }
    return G;
  }
};

inline XGradContext make_xgrad_context(const Matrix& Y, const Matrix& D,
                                       const Matrix& D0, const BlockLayout& layout,
                                       const HyperParams& params,
                                       XGradientForm form) {
  XGradContext ctx;
  ctx.layout = &layout;
  ctx.lambda2 = params.lambda2;
  ctx.form = form;
  ctx.K = layout.total_atoms();
  ctx.k0 = layout.k0;
  ctx.M_DtD = double_block_diagonal(D.transpose() * D, layout.k, layout.k);
  ctx.M_DtY = double_block_diagonal(D.transpose() * Y, layout.k, layout.n);
  ctx.DtD0 = D.transpose() * D0;
  ctx.D0tY = D0.transpose() * Y;
  ctx.B = 2.0 * (D0.transpose() * D0) +
          params.lambda2 * Matrix::Identity(layout.k0, layout.k0);
  ctx.L = spectral_bound(ctx.M_DtD) + 2.0 * params.lambda2 +
          spectral_bound(ctx.B) + 4.0 * params.lambda2 + 1.0;
  return ctx;
}

}  // namespace detail_lrsdl

// Gradient of the smooth cost part with respect to the stacked codes [X; X0]:
//   upper: (M(D^T D) + 2 lambda2 I) X - M(D^T (Y - D0 X0)) + lambda2 (M - 2 Mhat)
//   lower: (2 D0^T D0 + lambda2 I) X0 - 2 D0^T V - lambda2 M0,
//          V = Y - 1/2 D M(X)
inline Matrix x_gradient(const Matrix& Y, const Matrix& D, const Matrix& D0,
                         const Matrix& X, const Matrix& X0,
                         const BlockLayout& layout, const HyperParams& params,
                         XGradientForm form = XGradientForm::derived) {
  if (layout.k0 == 0) return fddl::x_gradient(Y, D, X, layout, params.lambda2);
  const auto ctx = detail_lrsdl::make_xgrad_context(Y, D, D0, layout, params, form);
  Matrix W(ctx.K + ctx.k0, Y.cols());
  W.topRows(ctx.K) = X;
  W.bottomRows(ctx.k0) = X0;
  return ctx(W);
}

// Joint sparse code update over the stacked variable [X; X0]: FISTA on the
// gradient above with step bound
//   L = lmax(M(D^T D)) + lmax(2 D0^T D0 + lambda2 I) + 6 lambda2 + 1.
inline XUpdateResult x_update(const Matrix& Y, const Matrix& D, const Matrix& D0,
                              const Matrix& X_init, const Matrix& X0_init,
                              const BlockLayout& layout, const HyperParams& params,
                              XGradientForm form = XGradientForm::derived) {
  const int K = layout.total_atoms();
  const int k0 = layout.k0;
  if (k0 == 0) {
    FistaResult r = fddl::x_update(Y, D, X_init, layout, params);
    return {std::move(r.solution), Matrix(0, Y.cols()), r.iterations, r.converged};
  }

  const auto ctx = detail_lrsdl::make_xgrad_context(Y, D, D0, layout, params, form);
  Matrix W(K + k0, Y.cols());
  W.topRows(K) = X_init;
  W.bottomRows(k0) = X0_init;
  FistaResult r = fista(ctx, ctx.L, params.lambda1, W,
                        {params.fista_max_iters, defaults::fista_tol});
  XUpdateResult out;
  out.X = r.solution.topRows(K);
  out.X0 = r.solution.bottomRows(k0);
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

// Class dictionary update with the shared contribution removed:
// the FDDL update applied to Ybar = Y - D0 X0.
inline Matrix d_update(const Matrix& Y, const Matrix& D0, const Matrix& X,
                       const Matrix& X0, Matrix D, const BlockLayout& layout) {
  if (layout.k0 == 0) return fddl::d_update(Y, X, std::move(D), layout);
  return fddl::d_update(Y - D0 * X0, X, std::move(D), layout);
}

// Shared dictionary update: with V = Y - 1/2 D M(X) the objective is
//   ||V - D0 X0||^2 + eta ||D0||_* + const,
// handled by the low-rank ADMM; the result is projected back onto the
// unit-ball atom constraint.
inline Matrix d0_update(const Matrix& Y, const Matrix& D, const Matrix& X,
                        const Matrix& X0, Matrix D0, const BlockLayout& layout,
                        const HyperParams& params,
                        int admm_max_iters = defaults::admm_max_iters,
                        double admm_tol = defaults::admm_tol) {
  const Matrix V =
      Y - 0.5 * (D * double_block_diagonal(X, layout.k, layout.n));
  const Matrix E = V * X0.transpose();
  const Matrix F = X0 * X0.transpose();
  Matrix Z = admm_lowrank_dictionary(E, F, params.eta, params.admm_rho,
                                     std::move(D0), admm_max_iters, admm_tol);
  return normalize_atoms(Z);
}

inline TrainState train(const LabeledDataset& ds, const HyperParams& params,
                        const TrainOptions& opts = {}) {
  params.validate();
  if (params.k0 == 0) return fddl::train(ds, params, opts);

  const auto t0 = std::chrono::steady_clock::now();
  BlockLayout layout = BlockLayout::uniform(ds.layout.n, params.k, params.k0);
  InitResult init =
      opts.init ? detail::checked_init(*opts.init, ds.Y, layout)
                : initialize_dictionaries(ds.Y, layout, params.lambda1,
                                          params.seed, params.fista_max_iters);
  Matrix D = std::move(init.D);
  Matrix X = std::move(init.X);
  Matrix D0 = std::move(init.D0);
  Matrix X0 = std::move(init.X0);

  TrainState state;
  double prev = cost(ds.Y, D, D0, X, X0, layout, params);
  state.history.push_back({0, prev, detail::seconds_since(t0)});
  if (opts.callback) opts.callback(state.history.back());

  for (int it = 1; it <= params.max_outer_iters; ++it) {
    XUpdateResult xu = x_update(ds.Y, D, D0, X, X0, layout, params);
    X = std::move(xu.X);
    X0 = std::move(xu.X0);
    const auto td = std::chrono::steady_clock::now();
    D = d_update(ds.Y, D0, X, X0, std::move(D), layout);
    D0 = d0_update(ds.Y, D, X, X0, std::move(D0), layout, params);
    const double dict_sec = detail::seconds_since(td);
    const double c = cost(ds.Y, D, D0, X, X0, layout, params);
    state.history.push_back({it, c, detail::seconds_since(t0), dict_sec});
    if (opts.callback) opts.callback(state.history.back());
    if (std::abs(prev - c) < opts.outer_tol * std::max(1.0, std::abs(prev))) break;
    prev = c;
  }

  state.model.D = std::move(D);
  state.model.D0 = std::move(D0);
  state.model.class_means = class_mean_vectors(X, layout);
  state.model.shared_mean = X0.rowwise().mean();
  state.model.params = params;
  state.model.layout = layout;
  state.model.method = "lrsdl";
  state.coeffs = CoefficientMatrix(std::move(X), std::move(X0), layout);
  return state;
}

// Codes one test sample on [D D0] with the mean-anchored shared penalty,
//   min 1/2 ||y - Dbar xbar||^2 + lambda2/2 ||x0 - m0||^2 + lambda1 ||xbar||_1,
// removes the shared contribution, and scores every class by
//   w ||ybar - D_c x^c||^2 + (1 - w) ||x - m_c||^2.
inline ClassifyResult classify(const DictionaryModel& model, const Matrix& Ytest,
                               double w_override = -1.0) {
  if (!model.trained()) throw StateError("classify: model has no dictionary");
  model.validate();
  const double w = w_override >= 0.0 ? w_override : model.params.w;
  if (w < 0 || w > 1) throw ArgumentError("classify: w must lie in [0, 1]");
  if (Ytest.rows() != model.D.rows())
    throw ValidationError("classify: sample dimension " +
                          std::to_string(Ytest.rows()) +
                          " does not match model dimension " +
                          std::to_string(model.D.rows()));

  const BlockLayout& layout = model.layout;
  const int K = layout.total_atoms();
  const int k0 = layout.k0;
  const double lambda2 = model.params.lambda2;

  Matrix Dbar(model.D.rows(), K + k0);
  Dbar.leftCols(K) = model.D;
  if (k0 > 0) Dbar.rightCols(k0) = model.D0;
  const Matrix DbtDb = Dbar.transpose() * Dbar;
  const double L = spectral_bound(DbtDb) + lambda2 + 1.0;

  ClassifyResult res;
  res.predicted.resize(Ytest.cols());
  res.scores.assign(Ytest.cols(), std::vector<double>(layout.C, 0.0));

  for (Eigen::Index s = 0; s < Ytest.cols(); ++s) {
    const Vector y = Ytest.col(s);
    const Vector Dbt_y = Dbar.transpose() * y;
    auto grad = [&](const Matrix& xbar) {
      Matrix g = DbtDb * xbar - Dbt_y;
      if (k0 > 0)
        g.bottomRows(k0) +=
            lambda2 * (xbar.bottomRows(k0) - model.shared_mean);
      return g;
    };
    Matrix x0 = Matrix::Zero(K + k0, 1);
    const Matrix xbar =
        fista(grad, L, model.params.lambda1, x0,
              {model.params.fista_max_iters, defaults::fista_tol})
            .solution;
    const Vector x = xbar.topRows(K);
    Vector ybar = y;
    if (k0 > 0) ybar -= model.D0 * xbar.bottomRows(k0);

    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int c = 0; c < layout.C; ++c) {
      const auto Dc = model.class_dict(c);
      const auto xc = x.segment(layout.atom_offset(c), layout.k[c]);
      const double score = w * (ybar - Dc * xc).squaredNorm() +
                           (1.0 - w) * (x - model.class_means.col(c)).squaredNorm();
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

}  // namespace lrsdl
}  // namespace ddl
