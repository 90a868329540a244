#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ddl/block_layout.hpp"
#include "ddl/errors.hpp"

namespace ddl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline void check_partition(const std::vector<int>& sizes, Eigen::Index dim,
                            const char* which) {
  long sum = 0;
  for (int s : sizes) {
    if (s < 0) throw PartitionError(std::string(which) + " block size < 0");
    sum += s;
  }
  if (sum != static_cast<long>(dim))
    throw PartitionError(std::string(which) + " blocks sum to " +
                         std::to_string(sum) + " but dimension is " +
                         std::to_string(dim));
}

}  // namespace detail

// A + blockdiag(A_11, ..., A_CC): adds each diagonal block onto itself.
// rows/cols give the per-class block sizes along each dimension and must
// tile A exactly.
inline Matrix double_block_diagonal(const Matrix& A,
                                    const std::vector<int>& rows,
                                    const std::vector<int>& cols) {
  if (rows.size() != cols.size())
    throw PartitionError("double_block_diagonal: row partition has " +
                         std::to_string(rows.size()) +
                         " blocks, column partition has " +
                         std::to_string(cols.size()));
  detail::check_partition(rows, A.rows(), "row");
  detail::check_partition(cols, A.cols(), "column");
  Matrix R = A;
  Eigen::Index ro = 0, co = 0;
  for (size_t c = 0; c < rows.size(); ++c) {
    R.block(ro, co, rows[c], cols[c]) += A.block(ro, co, rows[c], cols[c]);
    ro += rows[c];
    co += cols[c];
  }
  return R;
}

// Layout-inferring overload: each side independently matches either the atom
// partition (size K) or the sample partition (size N) of `layout`.
inline Matrix double_block_diagonal(const Matrix& A, const BlockLayout& layout) {
  auto pick = [&](Eigen::Index dim, const char* side) -> const std::vector<int>& {
    const bool matches_k = dim == layout.total_atoms();
    const bool matches_n = dim == layout.total_samples();
    if (matches_k && matches_n && layout.k != layout.n)
      throw PartitionError(std::string("double_block_diagonal: ") + side +
                           " dimension matches both atom and sample "
                           "partitions; pass partitions explicitly");
    if (matches_k) return layout.k;
    if (matches_n) return layout.n;
    throw PartitionError(std::string("double_block_diagonal: ") + side +
                         " dimension " + std::to_string(dim) +
                         " matches neither atom nor sample partition");
  };
  return double_block_diagonal(A, pick(A.rows(), "row"), pick(A.cols(), "column"));
}

// Column mean of A replicated n times: mu(A, n).
inline Matrix column_mean_matrix(const Matrix& A, Eigen::Index n) {
  if (A.cols() == 0)
    throw ArgumentError("column_mean_matrix: input has no columns");
  if (n < 0) throw ArgumentError("column_mean_matrix: negative column count");
  Vector m = A.rowwise().mean();
  return m.replicate(1, n);
}

// Per-class mean matrix: column block c holds the mean of X's class-c
// columns, replicated n_c times.
inline Matrix per_class_mean_matrix(const Matrix& X, const BlockLayout& layout) {
  detail::check_partition(layout.n, X.cols(), "column");
  Matrix M(X.rows(), X.cols());
  for (int c = 0; c < layout.C; ++c) {
    auto block = X.middleCols(layout.sample_offset(c), layout.n[c]);
    M.middleCols(layout.sample_offset(c), layout.n[c]) =
        block.rowwise().mean().replicate(1, layout.n[c]);
  }
  return M;
}

// One mean column per class: column c = mean of X's class-c columns.
inline Matrix class_mean_vectors(const Matrix& X, const BlockLayout& layout) {
  detail::check_partition(layout.n, X.cols(), "column");
  Matrix M(X.rows(), layout.C);
  for (int c = 0; c < layout.C; ++c)
    M.col(c) = X.middleCols(layout.sample_offset(c), layout.n[c]).rowwise().mean();
  return M;
}

// Entrywise soft shrinkage: sign(a) * max(|a| - tau, 0).
inline Matrix soft_threshold(const Matrix& A, double tau) {
  if (tau < 0) throw ArgumentError("soft_threshold: negative threshold");
  return A.unaryExpr([tau](double a) {
    const double m = std::abs(a) - tau;
    return m > 0 ? (a > 0 ? m : -m) : 0.0;
  });
}

// Thin SVD with a fixed sign convention: the first entry of each left
// singular vector whose magnitude exceeds a scale-relative cutoff is made
// nonnegative, so repeated factorizations of the same input agree.
struct ThinSvd {
  Matrix U;
  Vector S;
  Matrix V;
};

inline ThinSvd thin_svd(const Matrix& A) {
  if (!A.allFinite()) throw ArgumentError("thin_svd: non-finite input");
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd r{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index j = 0; j < r.U.cols(); ++j) {
    const double cutoff = 1e-12 * std::max(1.0, r.U.col(j).cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < r.U.rows(); ++i) {
      if (std::abs(r.U(i, j)) > cutoff) {
        if (r.U(i, j) < 0) {
          r.U.col(j) = -r.U.col(j);
          r.V.col(j) = -r.V.col(j);
        }
        break;
      }
    }
  }
  return r;
}

// Singular value thresholding: U * max(S - tau, 0) * V^T.
inline Matrix singular_value_threshold(const Matrix& A, double tau) {
  if (tau < 0) throw ArgumentError("singular_value_threshold: negative threshold");
  if (A.rows() == 0 || A.cols() == 0) return A;
  ThinSvd svd = thin_svd(A);
  Vector s = (svd.S.array() - tau).max(0.0);
  return svd.U * s.asDiagonal() * svd.V.transpose();
}

inline double nuclear_norm(const Matrix& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  if (!A.allFinite()) throw ArgumentError("nuclear_norm: non-finite input");
  return Eigen::JacobiSVD<Matrix>(A).singularValues().sum();
}

// Upper bound on the largest eigenvalue of a symmetric PSD matrix: power
// iteration on a deterministic start vector, Rayleigh-quotient tolerance
// 1e-8, at most 200 iterations, result inflated by 1.01.
inline double spectral_bound(const Matrix& S) {
  if (S.rows() != S.cols())
    throw ArgumentError("spectral_bound: matrix is not square");
  if (S.rows() == 0) return 0.0;
  if (!S.allFinite()) throw ArgumentError("spectral_bound: non-finite input");
  const double scale = S.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, scale))
    throw ArgumentError("spectral_bound: matrix is not symmetric");

  Vector v(S.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = 1.0 + 1e-3 * static_cast<double>(i);
  v.normalize();
  double rayleigh = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = S * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double r = v.dot(S * v);
    if (it > 0 && std::abs(r - rayleigh) <= 1e-8 * std::max(1.0, std::abs(r))) {
      rayleigh = r;
      break;
    }
    rayleigh = r;
  }
  return 1.01 * std::max(rayleigh, 0.0);
}

// Projects each column of D onto the unit l2 ball; columns already inside
// (including zero columns) are untouched.
inline Matrix normalize_atoms(const Matrix& D) {
  Matrix R = D;
  for (Eigen::Index j = 0; j < R.cols(); ++j) {
    const double nj = R.col(j).norm();
    if (nj > 1.0) R.col(j) /= nj;
  }
  return R;
}

inline double l1_norm(const Matrix& A) { return A.cwiseAbs().sum(); }

}  // namespace ddl
