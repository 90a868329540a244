#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ddl/fddl.hpp"
#include "ddl/types.hpp"
#include "oracles.hpp"

using ddl::Matrix;

namespace {

struct Instance {
  Matrix Y;
  Matrix D;
  Matrix X;
  ddl::BlockLayout layout;
};

Instance make_instance(unsigned seed, std::vector<int> n, std::vector<int> k,
                       Eigen::Index d) {
  std::mt19937_64 rng(seed);
  Instance ins{Matrix(), Matrix(), Matrix(), ddl::BlockLayout(n, k, 0)};
  const Eigen::Index N = ins.layout.total_samples();
  const Eigen::Index K = ins.layout.total_atoms();
  ins.Y = oracle::random_matrix(d, N, rng);
  ins.D = oracle::random_matrix(d, K, rng);
  for (Eigen::Index j = 0; j < K; ++j) ins.D.col(j).normalize();
  ins.X = oracle::random_matrix(K, N, rng);
  return ins;
}

ddl::LabeledDataset make_dataset(unsigned seed, int C, int per_class,
                                 Eigen::Index d) {
  std::mt19937_64 rng(seed);
  std::vector<int> labels;
  for (int c = 1; c <= C; ++c)
    for (int i = 0; i < per_class; ++i) labels.push_back(c);
  const Matrix Y = oracle::random_matrix(d, C * per_class, rng);
  return ddl::LabeledDataset::from_data(Y, labels);
}

}  // namespace

TEST(FddlCostSuite, MatchesIndependentFormula) {
  const Instance ins = make_instance(1, {4, 5, 3}, {2, 3, 2}, 9);
  const double lambda1 = 0.07, lambda2 = 0.3;
  const double got = ddl::fddl::cost(ins.Y, ins.D, ins.X, ins.layout,
                                     lambda1, lambda2);
  const double want = oracle::fddl_cost(ins.Y, ins.D, ins.X, ins.layout.n,
                                        ins.layout.k, lambda1, lambda2);
  EXPECT_LE(std::abs(got - want), 1e-10 * std::max(1.0, std::abs(want)));

  const double fid = ddl::fddl::fidelity(ins.Y, ins.D, ins.X, ins.layout);
  const double fid_want =
      oracle::fddl_fidelity(ins.Y, ins.D, ins.X, ins.layout.n, ins.layout.k);
  EXPECT_LE(std::abs(fid - fid_want), 1e-10 * std::max(1.0, fid_want));

  const double pen = ddl::fddl::code_penalty(ins.X, ins.layout);
  const double pen_want =
      oracle::discriminative_penalty(ins.X, ins.layout.n);
  EXPECT_LE(std::abs(pen - pen_want), 1e-10 * std::max(1.0, std::abs(pen_want)));
}

TEST(FddlGradientSuite, MatchesFiniteDifferencesOfSmoothCost) {
  for (unsigned seed : {2u, 3u, 4u}) {
    const Instance ins = make_instance(seed, {3, 4, 3}, {2, 2, 2}, 8);
    const double lambda2 = 0.25;
    auto f = [&](const Matrix& X) {
      return oracle::fddl_smooth_cost(ins.Y, ins.D, X, ins.layout.n,
                                      ins.layout.k, lambda2);
    };
    const Matrix G_fd = oracle::fd_gradient(f, ins.X);
    const Matrix G =
        ddl::fddl::x_gradient(ins.Y, ins.D, ins.X, ins.layout, lambda2);
    const double rel = (G - G_fd).norm() / std::max(1.0, G_fd.norm());
    EXPECT_LE(rel, 1e-5) << "seed " << seed;
  }
}

TEST(FddlXUpdateSuite, DecreasesTheCost) {
  const Instance ins = make_instance(5, {4, 4, 4}, {3, 3, 3}, 10);
  ddl::HyperParams params;
  params.lambda1 = 0.05;
  params.lambda2 = 0.1;
  params.fista_max_iters = 200;
  const double before = ddl::fddl::cost(ins.Y, ins.D, ins.X, ins.layout,
                                        params.lambda1, params.lambda2);
  const Matrix X_new =
      ddl::fddl::x_update(ins.Y, ins.D, ins.X, ins.layout, params).solution;
  const double after = ddl::fddl::cost(ins.Y, ins.D, X_new, ins.layout,
                                       params.lambda1, params.lambda2);
  EXPECT_LE(after, before + 1e-9);
  EXPECT_LT(after, before);
}

// The joint dictionary surrogate h(D) = -2 tr(E^T D) + tr(F D^T D) with
// E = Y M(X)^T and F = M(X X^T) must track the fidelity up to a constant:
// evaluating both at two dictionaries gives identical differences.
TEST(FddlSurrogateSuite, JointSurrogateDiffersFromFidelityByConstant) {
  for (unsigned seed = 10; seed < 15; ++seed) {
    const Instance ins = make_instance(seed, {3, 5, 4}, {2, 3, 2}, 7);
    std::mt19937_64 rng(seed + 100);
    Matrix D2 = oracle::random_matrix(ins.D.rows(), ins.D.cols(), rng);
    for (Eigen::Index j = 0; j < D2.cols(); ++j) D2.col(j).normalize();

    const Matrix MX = oracle::naive_mask(ins.X, ins.layout.k, ins.layout.n);
    const Matrix E = ins.Y * MX.transpose();
    const Matrix F = oracle::naive_mask(ins.X * ins.X.transpose(),
                                        ins.layout.k, ins.layout.k);

    const double dfid =
        oracle::fddl_fidelity(ins.Y, ins.D, ins.X, ins.layout.n, ins.layout.k) -
        oracle::fddl_fidelity(ins.Y, D2, ins.X, ins.layout.n, ins.layout.k);
    const double dh = oracle::dict_objective(E, F, ins.D) -
                      oracle::dict_objective(E, F, D2);
    EXPECT_LE(std::abs(dfid - dh), 1e-8 * std::max(1.0, std::abs(dfid)))
        << "seed " << seed;
  }
}

TEST(FddlDUpdateSuite, BothVariantsDecreaseCost) {
  const Instance ins = make_instance(6, {5, 5, 5}, {3, 3, 3}, 12);
  ddl::HyperParams params;
  params.lambda1 = 0.05;
  params.lambda2 = 0.05;
  const Matrix X =
      ddl::fddl::x_update(ins.Y, ins.D, ins.X, ins.layout, params).solution;
  const double before = ddl::fddl::cost(ins.Y, ins.D, X, ins.layout,
                                        params.lambda1, params.lambda2);

  const Matrix D_eff = ddl::fddl::d_update(ins.Y, X, ins.D, ins.layout);
  const double after_eff = ddl::fddl::cost(ins.Y, D_eff, X, ins.layout,
                                           params.lambda1, params.lambda2);
  EXPECT_LE(after_eff, before + 1e-9);

  const Matrix D_orig =
      ddl::fddl::d_update_per_class(ins.Y, X, ins.D, ins.layout);
  const double after_orig = ddl::fddl::cost(ins.Y, D_orig, X, ins.layout,
                                            params.lambda1, params.lambda2);
  EXPECT_LE(after_orig, before + 1e-9);

  for (Eigen::Index j = 0; j < D_eff.cols(); ++j) {
    EXPECT_LE(D_eff.col(j).norm(), 1.0 + 1e-12);
    EXPECT_LE(D_orig.col(j).norm(), 1.0 + 1e-12);
  }
}

TEST(FddlTrainSuite, HistoryIsMonotoneAndRunIsDeterministic) {
  const ddl::LabeledDataset ds = make_dataset(8, 3, 5, 12);
  ddl::HyperParams params;
  params.lambda1 = 0.01;
  params.lambda2 = 0.003;
  params.k = 3;
  params.max_outer_iters = 8;
  params.seed = 1;
  ddl::TrainOptions opts;
  opts.outer_tol = 0.0;

  const ddl::TrainState a = ddl::fddl::train(ds, params, opts);
  ASSERT_GE(a.history.size(), 2u);
  for (size_t t = 1; t < a.history.size(); ++t)
    EXPECT_LE(a.history[t].cost, a.history[t - 1].cost + 1e-9)
        << "cost rose at outer iteration " << t;
  EXPECT_EQ(a.model.method, "fddl");
  EXPECT_EQ(a.model.D0.cols(), 0);
  EXPECT_EQ(a.model.params.k0, 0);
  EXPECT_EQ(a.model.class_means.cols(), 3);
  EXPECT_EQ(a.model.class_means.rows(), a.model.D.cols());

  const ddl::TrainState b = ddl::fddl::train(ds, params, opts);
  EXPECT_EQ(a.model.D, b.model.D);
  EXPECT_EQ(a.history.back().cost, b.history.back().cost);
}

TEST(FddlTrainSuite, WarmStartIsHonored) {
  const ddl::LabeledDataset ds = make_dataset(9, 2, 6, 10);
  ddl::HyperParams params;
  params.k = 2;
  params.max_outer_iters = 1;
  const ddl::BlockLayout layout = ddl::BlockLayout::uniform(ds.layout.n, 2, 0);

  std::mt19937_64 rng(33);
  ddl::InitResult init;
  init.D = ddl::sample_columns_init(ds.Y, layout.total_atoms(), rng);
  init.X = Matrix::Zero(layout.total_atoms(), ds.Y.cols());

  ddl::TrainOptions opts;
  opts.init = init;
  const ddl::TrainState st = ddl::fddl::train(ds, params, opts);
  const double expected0 = ddl::fddl::cost(ds.Y, init.D, init.X, layout,
                                           params.lambda1, params.lambda2);
  ASSERT_FALSE(st.history.empty());
  EXPECT_DOUBLE_EQ(st.history.front().cost, expected0);
  EXPECT_EQ(st.history.front().iter, 0);

  ddl::InitResult bad = init;
  bad.D = Matrix::Zero(ds.Y.rows(), 1);
  ddl::TrainOptions bad_opts;
  bad_opts.init = bad;
  EXPECT_THROW(ddl::fddl::train(ds, params, bad_opts), ddl::ArgumentError);
}
