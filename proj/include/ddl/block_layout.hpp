#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "ddl/errors.hpp"

namespace ddl {

// Describes how samples and dictionary atoms are partitioned across C
// classes plus an optional shared block of k0 atoms.
//
//   n[c] : samples of class c        (columns of Y, columns of X)
//   k[c] : atoms of class dictionary c (columns of D, rows of X)
//   k0   : shared atoms                (columns of D0, rows of X0)
struct BlockLayout {
  int C = 0;
  std::vector<int> n;
  std::vector<int> k;
  int k0 = 0;

  BlockLayout() = default;

  BlockLayout(std::vector<int> n_sizes, std::vector<int> k_sizes, int k0_size)
      : C(static_cast<int>(n_sizes.size())),
        n(std::move(n_sizes)),
        k(std::move(k_sizes)),
        k0(k0_size) {
    if (C < 1) throw ArgumentError("BlockLayout: need at least one class");
    if (static_cast<int>(k.size()) != C)
      throw ArgumentError("BlockLayout: k has " + std::to_string(k.size()) +
                          " entries for " + std::to_string(C) + " classes");
    for (int c = 0; c < C; ++c) {
      if (n[c] < 1)
        throw ArgumentError("BlockLayout: class " + std::to_string(c + 1) +
                            " has sample count " + std::to_string(n[c]));
      if (k[c] < 1)
        throw ArgumentError("BlockLayout: class " + std::to_string(c + 1) +
                            " has dictionary size " + std::to_string(k[c]));
    }
    if (k0 < 0) throw ArgumentError("BlockLayout: k0 must be >= 0");
    n_off_.resize(C + 1, 0);
    k_off_.resize(C + 1, 0);
    for (int c = 0; c < C; ++c) {
      n_off_[c + 1] = n_off_[c] + n[c];
      k_off_[c + 1] = k_off_[c] + k[c];
    }
  }

  // Uniform per-class dictionary size.
  static BlockLayout uniform(std::vector<int> n_sizes, int k_per_class,
                             int k0_size) {
    std::vector<int> ks(n_sizes.size(), k_per_class);
    return BlockLayout(std::move(n_sizes), std::move(ks), k0_size);
  }

  int total_samples() const { return n_off_.back(); }   // N
  int total_atoms() const { return k_off_.back(); }     // K

  int sample_offset(int c) const { return n_off_[c]; }  // first column of class c
  int atom_offset(int c) const { return k_off_[c]; }    // first atom of block c

  bool operator==(const BlockLayout& o) const {
    return C == o.C && n == o.n && k == o.k && k0 == o.k0;
  }

 private:
  std::vector<int> n_off_;
  std::vector<int> k_off_;
};

}  // namespace ddl
