#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "ddl/copar.hpp"
#include "ddl/dlsi.hpp"
#include "ddl/fddl.hpp"
#include "ddl/synthdata.hpp"
#include "ddl/types.hpp"

namespace ddl {

// Head-to-head timing of the original and efficient dictionary updates of a
// single method on one synthetic problem.
struct BenchSetup {
  std::string compare = "fddl-d";  // fddl-d | dlsi-d | copar-d
  int C = 10;
  int d = 100;
  int n = 7;  // training samples per class
  int k = 7;  // atoms per class
  int iters = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (compare != "fddl-d" && compare != "dlsi-d" && compare != "copar-d")
      throw ArgumentError("bench: compare must be fddl-d, dlsi-d, or copar-d");
    if (C < 1 || d < 1 || n < 1 || k < 1)
      throw ArgumentError("bench: C, d, n, and k must be positive");
    if (iters < 0) throw ArgumentError("bench: iters must be >= 0");
  }
};

struct BenchComparison {
  std::vector<BenchRecord> original;
  std::vector<BenchRecord> efficient;
  double original_loop_sec = 0.0;  // iteration time, shared init excluded
  double efficient_loop_sec = 0.0;
  double original_dict_sec = 0.0;  // time inside the compared dictionary step
  double efficient_dict_sec = 0.0;
  double original_final_cost = 0.0;
  double efficient_final_cost = 0.0;
  double speedup = 0.0;  // original_dict_sec / efficient_dict_sec
};

inline BenchComparison run_bench(const BenchSetup& setup) {
  setup.validate();

  SynthSpec spec;
  spec.classes = setup.C;
  spec.dim = setup.d;
  spec.elems_per_class = 2;
  spec.shared_elems = 1;
  spec.train_per_class = setup.n;
  spec.test_per_class = 1;
  spec.noise_sigma = 0.05;
  spec.seed = setup.seed;
  const SynthData data = generate(spec);

  HyperParams params;
  params.lambda1 = 0.01;
  params.lambda2 = 0.003;
  params.eta = 0.01;
  params.k = setup.k;
  params.k0 = setup.compare == "copar-d" ? setup.k : 0;
  params.max_outer_iters = setup.iters;
  params.seed = setup.seed;

  auto run = [&](DictUpdateVariant variant) {
    TrainOptions opts;
    opts.variant = variant;
    opts.outer_tol = 0.0;  // never stop early, so both traces cover all iters
    if (setup.compare == "fddl-d") return fddl::train(data.train, params, opts);
    if (setup.compare == "dlsi-d") return dlsi::train(data.train, params, opts);
    return copar::train(data.train, params, opts);
  };

  BenchComparison out;
  if (setup.iters == 0) return out;  // nothing to time
  out.original = run(DictUpdateVariant::original).history;
  out.efficient = run(DictUpdateVariant::efficient).history;
  out.original_loop_sec =
      out.original.back().elapsed_sec - out.original.front().elapsed_sec;
  out.efficient_loop_sec =
      out.efficient.back().elapsed_sec - out.efficient.front().elapsed_sec;
  for (const auto& r : out.original) out.original_dict_sec += r.dict_sec;
  for (const auto& r : out.efficient) out.efficient_dict_sec += r.dict_sec;
  out.original_final_cost = out.original.back().cost;
  out.efficient_final_cost = out.efficient.back().cost;
  out.speedup = out.efficient_dict_sec > 0.0
                    ? out.original_dict_sec / out.efficient_dict_sec
                    : 0.0;
  return out;
}

// CSV trace of both runs; the pre-loop record (iter 0) is not a timed
// iteration and is omitted, so iters = 0 produces a header-only file.
inline void write_bench_csv(const BenchComparison& bench,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write bench csv: " + path);
  out << "variant,iter,cost,elapsed_sec\n";
  out << std::setprecision(17);
  auto rows = [&](const char* name, const std::vector<BenchRecord>& hist) {
    for (const auto& r : hist)
      if (r.iter >= 1)
        out << name << ',' << r.iter << ',' << r.cost << ',' << r.elapsed_sec
            << '\n';
  };
  rows("original", bench.original);
  rows("efficient", bench.efficient);
  if (!out) throw IoError("failed writing bench csv: " + path);
}

}  // namespace ddl
