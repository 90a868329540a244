#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ddl/blockmat.hpp"
#include "ddl/errors.hpp"
#include "ddl/types.hpp"

namespace ddl {

// Generator settings for the planted-dictionary synthetic benchmark: each
// class mixes its own localized basis elements with a pool of elements shared
// by every class, then relative Gaussian noise is added.
struct SynthSpec {
  int classes = 4;
  int dim = 400;
  int elems_per_class = 2;
  int shared_elems = 1;
  int train_per_class = 200;
  int test_per_class = 800;
  double noise_sigma = 0.05;  // relative to the clean-signal RMS
  double coef_min = 0.5;      // mixing coefficients are uniform on [coef_min, coef_max]
  double coef_max = 1.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (classes < 1) throw ArgumentError("SynthSpec: classes must be >= 1");
    if (dim < 1) throw ArgumentError("SynthSpec: dim must be >= 1");
    if (elems_per_class < 1) throw ArgumentError("SynthSpec: elems_per_class must be >= 1");
    if (shared_elems < 0) throw ArgumentError("SynthSpec: shared_elems must be >= 0");
    if (train_per_class < 1) throw ArgumentError("SynthSpec: train_per_class must be >= 1");
    if (test_per_class < 1) throw ArgumentError("SynthSpec: test_per_class must be >= 1");
    if (!std::isfinite(noise_sigma) || noise_sigma < 0.0)
      throw ArgumentError("SynthSpec: noise_sigma must be finite and >= 0");
    if (!std::isfinite(coef_min) || !std::isfinite(coef_max) || coef_min > coef_max)
      throw ArgumentError("SynthSpec: coefficient range must be finite with coef_min <= coef_max");
    const long long total =
        static_cast<long long>(classes) * elems_per_class + shared_elems;
    if (total > dim)
      throw ArgumentError("SynthSpec: " + std::to_string(total) +
                          " basis elements cannot occupy disjoint supports in dim " +
                          std::to_string(dim));
  }

  int total_elems() const { return classes * elems_per_class + shared_elems; }
};

struct SynthData {
  LabeledDataset train;
  LabeledDataset test;
  // Planted unit-norm basis elements, one per column: class 1's elements
  // first, then class 2's, ..., then the shared elements last.
  Matrix elements;
  // Per element: owning class in 1..C, or 0 for a shared element.
  std::vector<int> element_class;
};

// Draws the planted elements and samples. All randomness comes from one
// generator seeded with spec.seed, consumed in a fixed order (elements,
// then per-class coefficients, then noise), so outputs are reproducible.
// Train/test membership is decided by sample index before noise is drawn.
inline SynthData generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  const int total = spec.total_elems();
  Matrix elements = Matrix::Zero(spec.dim, total);
  std::vector<int> element_class(static_cast<std::size_t>(total), 0);
  std::uniform_real_distribution<double> value_dist(0.5, 1.5);

  // One disjoint segment of the feature axis per element; the element's
  // support is a random contiguous sub-range of its segment.
  for (int j = 0; j < total; ++j) {
    const int seg_begin = static_cast<int>(
        static_cast<long long>(spec.dim) * j / total);
    const int seg_end = static_cast<int>(
        static_cast<long long>(spec.dim) * (j + 1) / total);
    const int seg_len = seg_end - seg_begin;
    std::uniform_int_distribution<int> len_dist(std::max(1, seg_len / 2), seg_len);
    const int len = len_dist(rng);
    std::uniform_int_distribution<int> start_dist(seg_begin, seg_end - len);
    const int start = start_dist(rng);
    for (int r = start; r < start + len; ++r) elements(r, j) = value_dist(rng);
    elements.col(j).normalize();
    element_class[static_cast<std::size_t>(j)] =
        j < spec.classes * spec.elems_per_class ? j / spec.elems_per_class + 1 : 0;
  }

  const int per_class = spec.train_per_class + spec.test_per_class;
  Matrix clean(spec.dim, static_cast<long long>(spec.classes) * per_class);
  std::uniform_real_distribution<double> coef_dist(spec.coef_min, spec.coef_max);
  for (int c = 0; c < spec.classes; ++c) {
    for (int s = 0; s < per_class; ++s) {
      const Eigen::Index col = static_cast<Eigen::Index>(c) * per_class + s;
      Vector y = Vector::Zero(spec.dim);
      for (int e = 0; e < spec.elems_per_class; ++e)
        y += coef_dist(rng) * elements.col(c * spec.elems_per_class + e);
      for (int e = 0; e < spec.shared_elems; ++e)
        y += coef_dist(rng) * elements.col(spec.classes * spec.elems_per_class + e);
      clean.col(col) = y;
    }
  }

  Matrix data = clean;
  const double rms = std::sqrt(clean.squaredNorm() / static_cast<double>(clean.size()));
  const double sigma = spec.noise_sigma * rms;
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      for (Eigen::Index r = 0; r < data.rows(); ++r) data(r, c) += noise(rng);
  }

  Matrix train_mat(spec.dim, static_cast<long long>(spec.classes) * spec.train_per_class);
  Matrix test_mat(spec.dim, static_cast<long long>(spec.classes) * spec.test_per_class);
  std::vector<int> train_labels, test_labels;
  train_labels.reserve(static_cast<std::size_t>(train_mat.cols()));
  test_labels.reserve(static_cast<std::size_t>(test_mat.cols()));
  for (int c = 0; c < spec.classes; ++c) {
    const Eigen::Index src = static_cast<Eigen::Index>(c) * per_class;
    train_mat.middleCols(static_cast<Eigen::Index>(c) * spec.train_per_class,
                         spec.train_per_class) =
        data.middleCols(src, spec.train_per_class);
    test_mat.middleCols(static_cast<Eigen::Index>(c) * spec.test_per_class,
                        spec.test_per_class) =
        data.middleCols(src + spec.train_per_class, spec.test_per_class);
    train_labels.insert(train_labels.end(), static_cast<std::size_t>(spec.train_per_class), c + 1);
    test_labels.insert(test_labels.end(), static_cast<std::size_t>(spec.test_per_class), c + 1);
  }

  SynthData out;
  out.train = LabeledDataset::from_data(train_mat, train_labels);
  out.test = LabeledDataset::from_data(test_mat, test_labels);
  out.elements = std::move(elements);
  out.element_class = std::move(element_class);
  return out;
}

}  // namespace ddl
