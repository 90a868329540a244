#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>

#include "ddl/blockmat.hpp"
#include "ddl/errors.hpp"
#include "ddl/types.hpp"

namespace ddl {

// Observes intermediate iterates of an iterative solver.
using IterateHook = std::function<void(int iter, const Matrix& iterate, double elapsed_sec)>;

struct FistaOptions {
  int max_iters = defaults::fista_max_iters;
  double tol = defaults::fista_tol;
};

struct FistaResult {
  Matrix solution;
  int iterations = 0;
  bool converged = false;
};

// Accelerated proximal gradient for min_X h(X) + lambda1 * ||X||_1 where
// grad evaluates the gradient of the smooth part h and `lipschitz` bounds
// its Lipschitz constant. Stops when the relative change of the proximal
// iterate drops below tol.
template <typename Grad>
FistaResult fista(Grad&& grad, double lipschitz, double lambda1,
                  const Matrix& x_init, const FistaOptions& opts = {}) {
  if (lipschitz <= 0) throw ArgumentError("fista: Lipschitz bound must be > 0");
  if (lambda1 < 0) throw ArgumentError("fista: lambda1 must be >= 0");
  if (opts.max_iters < 1) throw ArgumentError("fista: max_iters must be >= 1");

  const double step_tau = lambda1 / lipschitz;
  Matrix z_prev = x_init;
  Matrix w = x_init;
  double t = 1.0;
  FistaResult res;
  for (int k = 1; k <= opts.max_iters; ++k) {
    Matrix g = grad(w);
    if (!g.allFinite())
      throw NumericalError("fista: non-finite gradient at iteration " +
                           std::to_string(k));
    Matrix z = soft_threshold(w - g / lipschitz, step_tau);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    w = z + ((t - 1.0) / t_next) * (z - z_prev);
    const double rel = (z - z_prev).norm() / std::max(1.0, z_prev.norm());
    z_prev = std::move(z);
    t = t_next;
    res.iterations = k;
    if (rel < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.solution = std::move(z_prev);
  return res;
}

// One round of dictionary optimization for
//   min_D  -2 tr(E D^T) + tr(F D^T D)   s.t. ||d_i||_2 <= 1,
// by cyclic column updates u = d_i + (e_i - D f_i) / F_ii followed by
// projection onto the unit ball. Columns with F_ii below 1e-10 are frozen.
inline Matrix odl_dictionary_update(const Matrix& E, const Matrix& F, Matrix D,
                                    int sweeps = defaults::odl_sweeps,
                                    double tol = defaults::odl_tol) {
  if (F.rows() != F.cols())
    throw ArgumentError("odl_dictionary_update: F is not square");
  if (D.cols() != F.rows() || E.rows() != D.rows() || E.cols() != D.cols())
    throw ArgumentError("odl_dictionary_update: E/F/D shapes disagree");
  if (sweeps < 1) throw ArgumentError("odl_dictionary_update: sweeps must be >= 1");
  for (Eigen::Index i = 0; i < F.rows(); ++i)
    if (F(i, i) < -1e-10)
      throw ArgumentError("odl_dictionary_update: F has negative diagonal");

  const Eigen::Index k = D.cols();
  for (int s = 0; s < sweeps; ++s) {
    Matrix D_prev = D;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double fii = F(i, i);
      if (fii <= 1e-10) continue;
      Vector u = D.col(i) + (E.col(i) - D * F.col(i)) / fii;
      const double nu = u.norm();
      D.col(i) = nu > 1.0 ? Vector(u / nu) : u;
    }
    const double rel = (D - D_prev).norm() / std::max(1.0, D_prev.norm());
    if (rel < tol) break;
  }
  if (!D.allFinite())
    throw NumericalError("odl_dictionary_update: non-finite dictionary");
  return D;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void check_admm_inputs(const Matrix& E, const Matrix& F, const Matrix& D,
                              double eta, double rho, int max_iters) {
  if (F.rows() != F.cols() || D.cols() != F.rows() || E.rows() != D.rows() ||
      E.cols() != D.cols())
    throw ArgumentError("admm dictionary update: E/F/D shapes disagree");
  if (eta < 0) throw ArgumentError("admm dictionary update: eta must be >= 0");
  if (rho <= 0) throw ArgumentError("admm dictionary update: rho must be > 0");
  if (max_iters < 1)
    throw ArgumentError("admm dictionary update: max_iters must be >= 1");
}

inline void check_admm_divergence(const Matrix& U, double init_scale) {
  if (!U.allFinite() || U.norm() > 1e6 * init_scale)
    throw NumericalError(
        "admm dictionary update diverged (dual variable exploded); "
        "try a different rho");
}

}  // namespace detail

// ADMM for the nuclear-norm-regularized dictionary problem
//   min_D  -2 tr(E D^T) + tr(F D^T D) + eta * ||D||_*   s.t. ||d_i||_2 <= 1.
// Splitting D = Z: the D step reuses odl_dictionary_update on shifted
// (E, F), the Z step is singular value thresholding at eta / rho, and U
// accumulates the scaled residual. Returns the low-rank iterate Z.
inline Matrix admm_lowrank_dictionary(const Matrix& E, const Matrix& F,
                                      double eta, double rho, Matrix D_init,
                                      int max_iters = defaults::admm_max_iters,
                                      double tol = defaults::admm_tol,
                                      const IterateHook& hook = {}) {
  detail::check_admm_inputs(E, F, D_init, eta, rho, max_iters);
  const auto t0 = std::chrono::steady_clock::now();
  const double init_scale = std::max(1.0, D_init.norm());
  const Eigen::Index k = D_init.cols();

  Matrix D = D_init;
  Matrix Z = D_init;
  Matrix U = Matrix::Zero(D.rows(), k);
  const Matrix F_shift = F + (rho / 2.0) * Matrix::Identity(k, k);
  for (int it = 1; it <= max_iters; ++it) {
    const Matrix E_shift = E + (rho / 2.0) * (Z - U);
    D = odl_dictionary_update(E_shift, F_shift, D);
    Matrix Z_prev = Z;
    Z = singular_value_threshold(D + U, eta / rho);
    U += D - Z;
    detail::check_admm_divergence(U, init_scale);
    if (hook) hook(it, Z, detail::seconds_since(t0));
    const double resid = std::max((D - Z).norm(), rho * (Z - Z_prev).norm()) /
                         std::max(1.0, D.norm());
    if (resid < tol) break;
  }
  return Z;
}

// ADMM for the incoherence-regularized dictionary problem
//   min_D  -2 tr(E D^T) + tr(F D^T D) + eta * ||A D||_F^2  s.t. ||d_i|| <= 1.
// The Z step solves (2 eta A^T A + rho I) Z = rho (D + U); the factorization
// is computed once and reused. Returns the feasible (ball-projected) iterate.
inline Matrix admm_incoherent_dictionary(const Matrix& E, const Matrix& F,
                                         const Matrix& A, double eta, double rho,
                                         Matrix D_init,
                                         int max_iters = defaults::admm_max_iters,
                                         double tol = defaults::admm_tol,
                                         const IterateHook& hook = {}) {
  detail::check_admm_inputs(E, F, D_init, eta, rho, max_iters);
  if (A.cols() != 0 && A.cols() != D_init.rows())
    throw ArgumentError("admm_incoherent_dictionary: A column count "
                        "differs from dictionary row count");
  const auto t0 = std::chrono::steady_clock::now();
  const double init_scale = std::max(1.0, D_init.norm());
  const Eigen::Index d = D_init.rows();
  const Eigen::Index k = D_init.cols();

  Matrix G = rho * Matrix::Identity(d, d);
  if (A.rows() > 0) G += 2.0 * eta * (A.transpose() * A);
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success)
    throw NumericalError("admm_incoherent_dictionary: Z-step system is not "
                         "positive definite");

  Matrix D = D_init;
  Matrix Z = D_init;
  Matrix U = Matrix::Zero(d, k);
  const Matrix F_shift = F + (rho / 2.0) * Matrix::Identity(k, k);
  for (int it = 1; it <= max_iters; ++it) {
    const Matrix E_shift = E + (rho / 2.0) * (Z - U);
    D = odl_dictionary_update(E_shift, F_shift, D);
    Matrix Z_prev = Z;
    Z = llt.solve(rho * (D + U));
    U += D - Z;
    detail::check_admm_divergence(U, init_scale);
    if (hook) hook(it, D, detail::seconds_since(t0));
    const double resid = std::max((D - Z).norm(), rho * (Z - Z_prev).norm()) /
                         std::max(1.0, D.norm());
    if (resid < tol) break;
  }
  return D;
}

// Column-wise solver for the same incoherence-regularized problem, kept as
// the baseline: every column solves a fresh d x d system
//   (F_jj I + eta A^T A) u = e_j - D f_j + F_jj d_j
// followed by projection onto the unit ball. Columns whose F_jj vanishes
// are left untouched.
inline Matrix colwise_incoherent_dictionary(const Matrix& E, const Matrix& F,
                                            const Matrix& A, double eta,
                                            Matrix D_init,
                                            int max_iters = defaults::odl_sweeps,
                                            double tol = defaults::odl_tol) {
  if (F.rows() != F.cols() || D_init.cols() != F.rows() ||
      E.rows() != D_init.rows() || E.cols() != D_init.cols())
    throw ArgumentError("colwise_incoherent_dictionary: E/F/D shapes disagree");
  if (eta < 0) throw ArgumentError("colwise_incoherent_dictionary: eta must be >= 0");
  if (max_iters < 1)
    throw ArgumentError("colwise_incoherent_dictionary: max_iters must be >= 1");
  const Eigen::Index d = D_init.rows();
  const Eigen::Index k = D_init.cols();
  Matrix AtA;
  if (A.rows() > 0) {
    if (A.cols() != d)
      throw ArgumentError("colwise_incoherent_dictionary: A column count "
                          "differs from dictionary row count");
    AtA = A.transpose() * A;
  }

  Matrix D = D_init;
  for (int s = 0; s < max_iters; ++s) {
    Matrix D_prev = D;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double fjj = F(j, j);
      if (fjj <= 1e-10) continue;
      Vector rhs = E.col(j) - D * F.col(j) + fjj * D.col(j);
      Matrix G = fjj * Matrix::Identity(d, d);
      if (eta > 0 && AtA.size() > 0) G += eta * AtA;
      Eigen::LLT<Matrix> llt(G);
      if (llt.info() != Eigen::Success)
        throw NumericalError("colwise_incoherent_dictionary: singular "
                             "column system");
      Vector u = llt.solve(rhs);
      const double nu = u.norm();
      D.col(j) = nu > 1.0 ? Vector(u / nu) : u;
    }
    const double rel = (D - D_prev).norm() / std::max(1.0, D_prev.norm());
    if (rel < tol) break;
  }
  if (!D.allFinite())
    throw NumericalError("colwise_incoherent_dictionary: non-finite dictionary");
  return D;
}

// Baseline per-class dictionary update: exactly the column-wise scheme above
// instantiated for  min_Dc ||Yc - Dc Xc||_F^2 + eta ||A Dc||_F^2.
inline Matrix odlsi_dictionary_update(const Matrix& Yc, const Matrix& Xc,
                                      const Matrix& A, double eta, Matrix D_init,
                                      int max_iters = defaults::odl_sweeps,
                                      double tol = defaults::odl_tol) {
  if (Yc.cols() != Xc.cols())
    throw ArgumentError("odlsi_dictionary_update: Yc/Xc column counts disagree");
  return colwise_incoherent_dictionary(Yc * Xc.transpose(), Xc * Xc.transpose(),
                                       A, eta, std::move(D_init), max_iters, tol);
}

// Plain (single-dictionary) sparse dictionary learning
//   min_{D,X} 1/2 ||Y - D X||_F^2 + lambda ||X||_1   s.t. ||d_i|| <= 1,
// alternating FISTA coding and ODL column updates. Used to initialize the
// discriminative trainers and as a standalone baseline.
struct OdlTrainResult {
  Matrix D;
  Matrix X;
  std::vector<double> costs;
};

inline double odl_objective(const Matrix& Y, const Matrix& D, const Matrix& X,
                            double lambda) {
  return 0.5 * (Y - D * X).squaredNorm() + lambda * l1_norm(X);
}

// Draws `k` distinct sample columns (unit-normalized) as the initial
// dictionary.
inline Matrix sample_columns_init(const Matrix& Y, int k, std::mt19937_64& rng) {
  if (Y.cols() < k)
    throw ArgumentError("dictionary init: class has " + std::to_string(Y.cols()) +
                        " samples but needs " + std::to_string(k));
  std::vector<Eigen::Index> idx(Y.cols());
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < k; ++j) {
    std::uniform_int_distribution<Eigen::Index> pick(j, static_cast<Eigen::Index>(idx.size()) - 1);
    std::swap(idx[j], idx[pick(rng)]);
  }
  Matrix D(Y.rows(), k);
  for (int j = 0; j < k; ++j) {
    Vector col = Y.col(idx[j]);
    const double n = col.norm();
    D.col(j) = n > 0 ? Vector(col / n) : col;
  }
  return D;
}

inline OdlTrainResult odl_train(const Matrix& Y, const Matrix& D_init,
                                double lambda, int max_iters = 30,
                                int fista_max_iters = defaults::fista_max_iters,
                                double outer_tol = defaults::outer_tol);

namespace detail {

// Validates a caller-supplied warm start against the dataset and layout.
inline InitResult checked_init(InitResult init, const Matrix& Y,
                               const BlockLayout& layout) {
  const Eigen::Index d = Y.rows(), N = Y.cols();
  const Eigen::Index K = layout.total_atoms(), k0 = layout.k0;
  if (init.D.rows() != d || init.D.cols() != K)
    throw ArgumentError("init.D must be " + std::to_string(d) + " x " +
                        std::to_string(K) + " for this dataset and layout");
  if (init.X.rows() != K || init.X.cols() != N)
    throw ArgumentError("init.X must be " + std::to_string(K) + " x " +
                        std::to_string(N));
  if (k0 > 0) {
    if (init.D0.rows() != d || init.D0.cols() != k0)
      throw ArgumentError("init.D0 must be " + std::to_string(d) + " x " +
                          std::to_string(k0));
    if (init.X0.rows() != k0 || init.X0.cols() != N)
      throw ArgumentError("init.X0 must be " + std::to_string(k0) + " x " +
                          std::to_string(N));
  } else {
    init.D0 = Matrix(d, 0);
    init.X0 = Matrix(0, N);
  }
  return init;
}

}  // namespace detail

// Warm start shared by the discriminative trainers: every class dictionary
// comes from plain dictionary learning on that class's samples (codes fill
// the matching diagonal block of X), and the shared dictionary from plain
// dictionary learning on all samples.
inline InitResult initialize_dictionaries(const Matrix& Y, const BlockLayout& layout,
                                          double lambda1, unsigned long long seed,
                                          int fista_max_iters = defaults::fista_max_iters) {
  std::mt19937_64 rng(seed);
  const int K = layout.total_atoms();
  const Eigen::Index N = Y.cols();
  InitResult r;
  r.D.resize(Y.rows(), K);
  r.X = Matrix::Zero(K, N);
  for (int c = 0; c < layout.C; ++c) {
    const auto Yc = Y.middleCols(layout.sample_offset(c), layout.n[c]);
    Matrix D_init = sample_columns_init(Yc, layout.k[c], rng);
    OdlTrainResult odl = odl_train(Yc, D_init, lambda1, 30, fista_max_iters);
    r.D.middleCols(layout.atom_offset(c), layout.k[c]) = odl.D;
    r.X.block(layout.atom_offset(c), layout.sample_offset(c), layout.k[c],
              layout.n[c]) = odl.X;
  }
  if (layout.k0 > 0) {
    Matrix D0_init = sample_columns_init(Y, layout.k0, rng);
    OdlTrainResult odl = odl_train(Y, D0_init, lambda1, 30, fista_max_iters);
    r.D0 = odl.D;
    r.X0 = odl.X;
  } else {
    r.D0.resize(Y.rows(), 0);
    r.X0.resize(0, N);
  }
  return r;
}

inline OdlTrainResult odl_train(const Matrix& Y, const Matrix& D_init,
                                double lambda, int max_iters,
                                int fista_max_iters, double outer_tol) {
  OdlTrainResult r;
  r.D = D_init;
  r.X = Matrix::Zero(D_init.cols(), Y.cols());
  double prev_cost = odl_objective(Y, r.D, r.X, lambda);
  r.costs.push_back(prev_cost);
  for (int it = 0; it < max_iters; ++it) {
    const Matrix DtD = r.D.transpose() * r.D;
    const Matrix DtY = r.D.transpose() * Y;
    double L = spectral_bound(DtD);
    if (L <= 0) L = 1.0;
    auto grad = [&](const Matrix& X) { return DtD * X - DtY; };
    r.X = fista(grad, L, lambda, r.X, {fista_max_iters, defaults::fista_tol}).solution;
    r.D = odl_dictionary_update(Y * r.X.transpose(), r.X * r.X.transpose(), r.D);
    const double cost = odl_objective(Y, r.D, r.X, lambda);
    r.costs.push_back(cost);
    if (std::abs(prev_cost - cost) < outer_tol * std::max(1.0, std::abs(prev_cost)))
      break;
    prev_cost = cost;
  }
  return r;
}

}  // namespace ddl
