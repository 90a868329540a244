#include <gtest/gtest.h>

#include <vector>

#include "ddl/synthdata.hpp"
#include "oracles.hpp"

using ddl::Matrix;

namespace {

ddl::SynthSpec small_spec() {
  ddl::SynthSpec spec;
  spec.classes = 3;
  spec.dim = 40;
  spec.elems_per_class = 2;
  spec.shared_elems = 1;
  spec.train_per_class = 5;
  spec.test_per_class = 4;
  spec.noise_sigma = 0.05;
  spec.seed = 9;
  return spec;
}

}  // namespace

TEST(SynthSpecSuite, ValidatesItsFields) {
  ddl::SynthSpec s = small_spec();
  EXPECT_NO_THROW(s.validate());

  s = small_spec();
  s.classes = 0;
  EXPECT_THROW(s.validate(), ddl::ArgumentError);
  s = small_spec();
  s.noise_sigma = -0.1;
  EXPECT_THROW(s.validate(), ddl::ArgumentError);
  s = small_spec();
  s.coef_min = 2.0;
  s.coef_max = 1.0;
  EXPECT_THROW(s.validate(), ddl::ArgumentError);
  s = small_spec();
  s.train_per_class = 0;
  EXPECT_THROW(s.validate(), ddl::ArgumentError);

  // More elements than feature dimensions cannot have disjoint supports.
  s = small_spec();
  s.dim = 6;
  EXPECT_THROW(s.validate(), ddl::ArgumentError);
}

TEST(SynthDataSuite, ShapesLabelsAndElementOwnership) {
  const ddl::SynthSpec spec = small_spec();
  const ddl::SynthData data = ddl::generate(spec);

  EXPECT_EQ(data.train.Y.rows(), 40);
  EXPECT_EQ(data.train.Y.cols(), 15);
  EXPECT_EQ(data.test.Y.cols(), 12);
  EXPECT_EQ(data.elements.rows(), 40);
  EXPECT_EQ(data.elements.cols(), 7);

  ASSERT_EQ(data.train.labels.size(), 15u);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i)
      EXPECT_EQ(data.train.labels[c * 5 + i], c + 1);
  ASSERT_EQ(data.test.labels.size(), 12u);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 4; ++i)
      EXPECT_EQ(data.test.labels[c * 4 + i], c + 1);

  const std::vector<int> want_owner = {1, 1, 2, 2, 3, 3, 0};
  EXPECT_EQ(data.element_class, want_owner);

  for (Eigen::Index j = 0; j < data.elements.cols(); ++j)
    EXPECT_NEAR(data.elements.col(j).norm(), 1.0, 1e-12);
}

TEST(SynthDataSuite, ElementsHaveDisjointSupports) {
  const ddl::SynthData data = ddl::generate(small_spec());
  for (Eigen::Index a = 0; a < data.elements.cols(); ++a)
    for (Eigen::Index b = a + 1; b < data.elements.cols(); ++b) {
      const double overlap =
          (data.elements.col(a).cwiseAbs().array() *
           data.elements.col(b).cwiseAbs().array())
              .sum();
      EXPECT_EQ(overlap, 0.0) << "elements " << a << " and " << b;
    }
}

TEST(SynthDataSuite, NoiselessSamplesLieInPlantedSpan) {
  ddl::SynthSpec spec = small_spec();
  spec.noise_sigma = 0.0;
  const ddl::SynthData data = ddl::generate(spec);

  for (int c = 0; c < spec.classes; ++c) {
    // Basis for class c: its own elements plus the shared pool.
    Matrix B(spec.dim, spec.elems_per_class + spec.shared_elems);
    B.leftCols(spec.elems_per_class) = data.elements.middleCols(
        c * spec.elems_per_class, spec.elems_per_class);
    B.rightCols(spec.shared_elems) = data.elements.rightCols(spec.shared_elems);
    const Matrix P = B * (B.transpose() * B).ldlt().solve(B.transpose());

    for (int i = 0; i < spec.train_per_class; ++i) {
      const Eigen::Index col = c * spec.train_per_class + i;
      const Eigen::VectorXd y = data.train.Y.col(col);
      EXPECT_LE((y - P * y).norm(), 1e-10 * std::max(1.0, y.norm()))
          << "train sample " << col;
    }
  }
}

TEST(SynthDataSuite, SeedControlsReproducibility) {
  const ddl::SynthSpec spec = small_spec();
  const ddl::SynthData a = ddl::generate(spec);
  const ddl::SynthData b = ddl::generate(spec);
  EXPECT_EQ(a.train.Y, b.train.Y);
  EXPECT_EQ(a.test.Y, b.test.Y);
  EXPECT_EQ(a.elements, b.elements);

  ddl::SynthSpec other = spec;
  other.seed = spec.seed + 1;
  const ddl::SynthData c = ddl::generate(other);
  EXPECT_NE(a.train.Y, c.train.Y);
}

TEST(SynthDataSuite, NoSharedElementsLeavesOnlyClassOwners) {
  ddl::SynthSpec spec = small_spec();
  spec.shared_elems = 0;
  const ddl::SynthData data = ddl::generate(spec);
  EXPECT_EQ(data.elements.cols(), 6);
  for (int owner : data.element_class) EXPECT_GE(owner, 1);
}
