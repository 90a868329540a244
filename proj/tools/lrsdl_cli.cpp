// lrsdl: train / classify / synth / bench / complexity command-line surface.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "ddl/bench.hpp"
#include "ddl/complexity.hpp"
#include "ddl/copar.hpp"
#include "ddl/dlsi.hpp"
#include "ddl/fddl.hpp"
#include "ddl/lrsdl.hpp"
#include "ddl/matrix_io.hpp"
#include "ddl/model_io.hpp"
#include "ddl/synthdata.hpp"

namespace {

struct TrainArgs {
  std::string method = "lrsdl";
  std::string data;
  std::string labels;
  std::string out;
  std::string variant = "efficient";
  std::string history;
  std::string config;
  double lambda1 = 0.01;
  double lambda2 = 0.003;
  double eta = 0.003;
  double w = 0.5;
  int k = 4;
  int k0 = 2;
  int iters = ddl::defaults::max_outer_iters;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Config values fill in only where the command line stayed silent.
void apply_config(const CLI::App& sub, TrainArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw ddl::IoError("cannot open config: " + a.config);
  nlohmann::json j;
  try {
    in >> j;
    if (!j.is_object()) throw ddl::ParseError("config: top level must be an object");
    auto unset = [&](const char* flag) { return sub.count(flag) == 0; };
    auto merged = [&](const char* key, const char* flag, auto& field) {
      if (j.contains(key) && unset(flag)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    merged("method", "--method", a.method);
    merged("data", "--data", a.data);
    merged("labels", "--labels", a.labels);
    merged("out", "--out", a.out);
    merged("variant", "--variant", a.variant);
    merged("history", "--history", a.history);
    merged("lambda1", "--lambda1", a.lambda1);
    merged("lambda2", "--lambda2", a.lambda2);
    merged("eta", "--eta", a.eta);
    merged("w", "--w", a.w);
    merged("k", "--k", a.k);
    merged("k0", "--k0", a.k0);
    merged("iters", "--iters", a.iters);
    merged("seed", "--seed", a.seed);
    merged("threads", "--threads", a.threads);
    static const char* known[] = {"method", "data",   "labels", "out",  "variant",
                                  "history", "lambda1", "lambda2", "eta",  "w",
                                  "k",      "k0",     "iters",  "seed", "threads"};
    for (const auto& item : j.items()) {
      bool ok = false;
      for (const char* name : known) ok = ok || item.key() == name;
      if (!ok) std::cerr << "warning: unknown config key '" << item.key() << "' ignored\n";
    }
  } catch (const nlohmann::json::exception& e) {
    throw ddl::ParseError(std::string("config: ") + e.what());
  }
}

int run_train(const CLI::App& sub, TrainArgs a) {
  if (!a.config.empty()) apply_config(sub, a);
  if (a.data.empty()) throw ddl::ArgumentError("--data is required");
  if (a.labels.empty()) throw ddl::ArgumentError("--labels is required");
  if (a.out.empty()) throw ddl::ArgumentError("--out is required");
  if (a.method != "lrsdl" && a.method != "fddl" && a.method != "dlsi" &&
      a.method != "copar")
    throw ddl::ArgumentError("method must be lrsdl, fddl, dlsi, or copar");
  if (a.variant != "original" && a.variant != "efficient")
    throw ddl::ArgumentError("variant must be original or efficient");
  if (a.threads < 1) throw ddl::ArgumentError("--threads must be >= 1");

  // Only lrsdl and copar use shared atoms; an untouched k0 falls back to the
  // method's natural value instead of the lrsdl default.
  const bool k0_given = sub.count("--k0") > 0;
  if (a.method == "fddl" || a.method == "dlsi") {
    if (k0_given && a.k0 != 0)
      throw ddl::ArgumentError("--k0 must be 0 for method " + a.method);
    a.k0 = 0;
  } else if (a.method == "copar") {
    if (a.k0 < 1) throw ddl::ArgumentError("copar requires k0 >= 1");
  } else if (a.k0 == 0) {
    std::cerr << "warning: k0 = 0 makes lrsdl identical to fddl\n";
  }

  const ddl::Matrix Y = ddl::read_matrix(a.data);
  const std::vector<int> labels = ddl::read_labels(a.labels);
  const ddl::LabeledDataset ds = ddl::LabeledDataset::from_data(Y, labels);

  ddl::HyperParams params;
  params.lambda1 = a.lambda1;
  params.lambda2 = a.lambda2;
  params.eta = a.eta;
  params.w = a.w;
  params.k = a.k;
  params.k0 = a.k0;
  params.max_outer_iters = a.iters;
  params.seed = a.seed;

  ddl::TrainOptions opts;
  opts.variant = a.variant == "original" ? ddl::DictUpdateVariant::original
                                         : ddl::DictUpdateVariant::efficient;

  if (a.threads > 1 && a.method != "dlsi")
    std::cerr << "warning: --threads only affects dlsi; ignored\n";

  ddl::TrainState state;
  if (a.method == "fddl")
    state = ddl::fddl::train(ds, params, opts);
  else if (a.method == "dlsi")
    state = ddl::dlsi::train(ds, params, opts, a.threads);
  else if (a.method == "copar")
    state = ddl::copar::train(ds, params, opts);
  else
    state = ddl::lrsdl::train(ds, params, opts);

  ddl::save_model(state.model, a.out);

  if (!a.history.empty()) {
    std::ofstream hist(a.history);
    if (!hist) throw ddl::IoError("cannot write history: " + a.history);
    hist << "iter,cost,elapsed_sec\n" << std::setprecision(17);
    for (const auto& r : state.history)
      hist << r.iter << ',' << r.cost << ',' << r.elapsed_sec << '\n';
    if (!hist) throw ddl::IoError("failed writing history: " + a.history);
  }

  std::cout << "method=" << state.model.method << " C=" << ds.layout.C
            << " d=" << ds.Y.rows() << " N=" << ds.Y.cols()
            << " k=" << params.k << " k0=" << params.k0 << '\n'
            << "iterations=" << state.history.back().iter << " final_cost="
            << std::setprecision(10) << state.history.back().cost << '\n'
            << "model written to " << a.out << '\n';
  return 0;
}

int run_classify(const std::string& model_dir, const std::string& data_path,
                 const std::string& labels_path, double w,
                 const std::string& report_path, bool w_given) {
  const ddl::DictionaryModel model = ddl::load_model(model_dir);
  const ddl::Matrix Y = ddl::read_matrix(data_path);

  std::vector<int> labels;
  if (!labels_path.empty()) {
    labels = ddl::read_labels(labels_path);
    if (static_cast<Eigen::Index>(labels.size()) != Y.cols())
      throw ddl::ValidationError("label count does not match sample count");
  }

  ddl::ClassifyResult res;
  if (model.method == "dlsi") {
    if (w_given) std::cerr << "warning: --w ignored for method dlsi\n";
    res = ddl::dlsi::classify(model, Y);
  } else if (model.method == "copar") {
    if (w_given) std::cerr << "warning: --w ignored for method copar\n";
    res = ddl::copar::classify(model, Y);
  } else {
    res = ddl::lrsdl::classify(model, Y, w_given ? w : -1.0);
  }

  int correct = 0;
  for (size_t i = 0; i < res.predicted.size(); ++i)
    if (!labels.empty() && labels[i] == res.predicted[i]) ++correct;
  const double accuracy =
      labels.empty() ? 0.0 : static_cast<double>(correct) / res.predicted.size();

  if (!report_path.empty()) {
    nlohmann::json report;
    report["per_sample"] = nlohmann::json::array();
    for (size_t i = 0; i < res.predicted.size(); ++i) {
      nlohmann::json row;
      if (!labels.empty()) row["true"] = labels[i];
      row["predicted"] = res.predicted[i];
      row["scores"] = res.scores[i];
      report["per_sample"].push_back(row);
    }
    if (!labels.empty()) report["accuracy"] = accuracy;
    std::ofstream out(report_path);
    if (!out) throw ddl::IoError("cannot write report: " + report_path);
    out << report.dump(2) << '\n';
    if (!out) throw ddl::IoError("failed writing report: " + report_path);
  }

  std::cout << "classified " << res.predicted.size() << " samples with "
            << model.method << '\n';
  if (!labels.empty())
    std::cout << "accuracy=" << std::setprecision(6) << accuracy << " ("
              << correct << "/" << res.predicted.size() << ")\n";
  return 0;
}

int run_synth(const ddl::SynthSpec& spec, const std::string& out_dir) {
  const ddl::SynthData data = ddl::generate(spec);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ddl::IoError("cannot create output directory: " + out_dir);

  ddl::write_matrix(out_dir + "/train.txt", data.train.Y);
  ddl::write_labels(out_dir + "/train_labels.txt", data.train.labels);
  ddl::write_matrix(out_dir + "/test.txt", data.test.Y);
  ddl::write_labels(out_dir + "/test_labels.txt", data.test.labels);
  ddl::write_matrix(out_dir + "/elements.txt", data.elements);

  nlohmann::json meta;
  meta["classes"] = spec.classes;
  meta["dim"] = spec.dim;
  meta["elems_per_class"] = spec.elems_per_class;
  meta["shared_elems"] = spec.shared_elems;
  meta["train_per_class"] = spec.train_per_class;
  meta["test_per_class"] = spec.test_per_class;
  meta["noise_sigma"] = spec.noise_sigma;
  meta["coef_min"] = spec.coef_min;
  meta["coef_max"] = spec.coef_max;
  meta["seed"] = spec.seed;
  meta["element_class"] = data.element_class;  // 1..C per class, 0 = shared
  meta["files"] = {{"train", "train.txt"},
                   {"train_labels", "train_labels.txt"},
                   {"test", "test.txt"},
                   {"test_labels", "test_labels.txt"},
                   {"elements", "elements.txt"}};
  std::ofstream out(out_dir + "/meta.json");
  if (!out) throw ddl::IoError("cannot write meta.json in " + out_dir);
  out << meta.dump(2) << '\n';
  if (!out) throw ddl::IoError("failed writing meta.json in " + out_dir);

  std::cout << "wrote " << data.train.Y.cols() << " train / "
            << data.test.Y.cols() << " test samples (dim " << spec.dim
            << ") to " << out_dir << '\n';
  return 0;
}

int run_bench(const ddl::BenchSetup& setup, const std::string& out_csv) {
  const ddl::BenchComparison bench = ddl::run_bench(setup);
  if (!out_csv.empty()) ddl::write_bench_csv(bench, out_csv);

  std::cout << "compare=" << setup.compare << " C=" << setup.C
            << " d=" << setup.d << " n=" << setup.n << " k=" << setup.k
            << " iters=" << setup.iters << " seed=" << setup.seed << '\n'
            << std::setprecision(10) << "original : final_cost="
            << bench.original_final_cost << " loop_sec="
            << bench.original_loop_sec << " dict_sec="
            << bench.original_dict_sec << '\n'
            << "efficient: final_cost=" << bench.efficient_final_cost
            << " loop_sec=" << bench.efficient_loop_sec << " dict_sec="
            << bench.efficient_dict_sec << '\n'
            << "speedup=" << std::setprecision(4) << bench.speedup << "x\n";
  if (!out_csv.empty()) std::cout << "curves written to " << out_csv << '\n';
  return 0;
}

int run_complexity(const ddl::ComplexityInputs& in) {
  const std::vector<ddl::ComplexityEntry> rows = ddl::complexity_table(in);
  int table = 0;
  for (const auto& row : rows) {
    if (row.table != table) {
      table = row.table;
      std::cout << (table == 1 ? "Table I  (dictionary update steps)\n"
                               : "Table II (per-iteration totals)\n");
    }
    std::cout << "  " << std::left << std::setw(22) << row.name << ' '
              << std::setw(62) << row.formula << ' ' << std::right
              << std::setprecision(6) << row.value << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative dictionary learning: train, classify, and "
               "benchmark LRSDL, FDDL, DLSI, and COPAR models"};
  app.require_subcommand(1);

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Train a dictionary model");
  train->add_option("--method", ta.method, "lrsdl | fddl | dlsi | copar")
      ->check(CLI::IsMember({"lrsdl", "fddl", "dlsi", "copar"}));
  train->add_option("--data", ta.data, "training matrix file (d x N)");
  train->add_option("--labels", ta.labels, "training labels file (N lines)");
  train->add_option("--k", ta.k, "atoms per class");
  train->add_option("--k0", ta.k0, "shared atoms");
  train->add_option("--lambda1", ta.lambda1, "l1 weight");
  train->add_option("--lambda2", ta.lambda2, "code-similarity weight");
  train->add_option("--eta", ta.eta, "low-rank / incoherence weight");
  train->add_option("--w", ta.w, "classification blend in [0,1]");
  train->add_option("--iters", ta.iters, "outer iterations");
  train->add_option("--seed", ta.seed, "RNG seed");
  train->add_option("--out", ta.out, "model output directory");
  train->add_option("--variant", ta.variant, "original | efficient")
      ->check(CLI::IsMember({"original", "efficient"}));
  train->add_option("--history", ta.history, "cost history CSV path");
  train->add_option("--config", ta.config,
                    "JSON config; explicit flags take precedence");
  train->add_option("--threads", ta.threads, "parallel DLSI code updates");

  std::string cl_model, cl_data, cl_labels, cl_report;
  double cl_w = 0.5;
  CLI::App* classify = app.add_subcommand("classify", "Classify samples");
  classify->add_option("--model", cl_model, "model directory")->required();
  classify->add_option("--data", cl_data, "sample matrix file")->required();
  classify->add_option("--labels", cl_labels, "true labels (enables accuracy)");
  classify->add_option("--w", cl_w, "override the model's blend weight");
  classify->add_option("--report", cl_report, "JSON report path");

  ddl::SynthSpec spec;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--classes", spec.classes, "number of classes");
  synth->add_option("--dim", spec.dim, "sample dimension");
  synth->add_option("--elems-per-class", spec.elems_per_class,
                    "basis elements per class");
  synth->add_option("--shared-elems", spec.shared_elems,
                    "basis elements shared by all classes");
  synth->add_option("--train-per-class", spec.train_per_class,
                    "training samples per class");
  synth->add_option("--test-per-class", spec.test_per_class,
                    "test samples per class");
  synth->add_option("--noise-sigma", spec.noise_sigma,
                    "noise level relative to signal RMS");
  synth->add_option("--coef-min", spec.coef_min, "smallest coefficient");
  synth->add_option("--coef-max", spec.coef_max, "largest coefficient");
  synth->add_option("--seed", spec.seed, "RNG seed");
  synth->add_option("--out", synth_out, "output directory")->required();

  ddl::BenchSetup setup;
  std::string bench_out;
  CLI::App* bench = app.add_subcommand(
      "bench", "Time original vs efficient dictionary updates");
  bench->add_option("--compare", setup.compare, "fddl-d | dlsi-d | copar-d")
      ->required()
      ->check(CLI::IsMember({"fddl-d", "dlsi-d", "copar-d"}));
  bench->add_option("--C", setup.C, "number of classes");
  bench->add_option("--d", setup.d, "sample dimension");
  bench->add_option("--n", setup.n, "training samples per class");
  bench->add_option("--k", setup.k, "atoms per class");
  bench->add_option("--iters", setup.iters, "outer iterations");
  bench->add_option("--seed", setup.seed, "RNG seed");
  bench->add_option("--out", bench_out, "curves CSV path");

  ddl::ComplexityInputs ci;
  CLI::App* complexity = app.add_subcommand(
      "complexity", "Evaluate the per-iteration complexity tables");
  complexity->add_option("--C", ci.C, "number of classes");
  complexity->add_option("--n", ci.n, "training samples per class");
  complexity->add_option("--k", ci.k, "atoms per class");
  complexity->add_option("--q", ci.q, "dictionary update sweeps");
  complexity->add_option("--d", ci.d, "sample dimension");
  complexity->add_option("--q2", ci.q2, "shared dictionary update sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return run_train(*train, ta);
    if (*classify)
      return run_classify(cl_model, cl_data, cl_labels, cl_w, cl_report,
                          classify->count("--w") > 0);
    if (*synth) return run_synth(spec, synth_out);
    if (*bench) return run_bench(setup, bench_out);
    if (*complexity) return run_complexity(ci);
  } catch (const ddl::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ddl::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ddl::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
