#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sgl/sgl.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitMaxIterations = 2;
constexpr int kExitInputError = 3;
constexpr int kExitNumericalFailure = 4;

struct Manifest {
  ordered_json json = ordered_json::object();
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  Manifest(const std::string& command, const std::vector<std::string>& argv) {
    json["command"] = command;
    json["argv"] = argv;
    json["params"] = ordered_json::object();
    json["seeds"] = ordered_json::object();
    json["inputs"] = ordered_json::object();
    json["outputs"] = ordered_json::object();
  }

  void write(const fs::path& path) {
    json["outputs"]["manifest"] = path.string();
    json["version"] = sgl::version;
    json["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    sgl::io::write_file_atomic(path, json.dump(2) + "\n");
  }
};

std::string matrix_name(const std::string& stem, sgl::io::MatrixFormat format) {
  return stem + (format == sgl::io::MatrixFormat::csv ? ".csv" : ".bin");
}

struct GenerateArgs {
  std::string graph;
  std::optional<std::size_t> m;
  std::optional<double> jl_eps;
  std::uint64_t seed = 1;
  double noise = 0.0;
  std::string out = ".";
  bool csv = false;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv) {
  Manifest manifest("generate", argv);
  if (a.m && a.jl_eps) throw sgl::InvalidArgument("generate: give only one of --m and --jl-eps");
  const std::size_t m = a.m.value_or(50);
  const sgl::WeightedGraph g = sgl::io::read_matrix_market(a.graph);
  sgl::require_connected(g, "generate");

  sgl::MeasurementSet set;
  if (a.jl_eps) {
    set = sgl::generate_jl_measurements(g, *a.jl_eps, a.seed);
  } else {
    set.Y = sgl::generate_currents(g.node_count(), m, a.seed);
    set.X = sgl::simulate_voltages(g, *set.Y);
    set.seed = a.seed;
  }
  set.X = sgl::add_noise(set.X, a.noise, a.seed);

  const auto format = a.csv ? sgl::io::MatrixFormat::csv : sgl::io::MatrixFormat::binary;
  fs::create_directories(a.out);
  const fs::path x_path = fs::path(a.out) / matrix_name("X", format);
  sgl::io::write_matrix(x_path, set.X, format);
  manifest.json["outputs"]["X"] = x_path.string();
  if (!a.jl_eps) {
    const fs::path y_path = fs::path(a.out) / matrix_name("Y", format);
    sgl::io::write_matrix(y_path, *set.Y, format);
    manifest.json["outputs"]["Y"] = y_path.string();
  }
  manifest.json["inputs"]["graph"] = a.graph;
  manifest.json["params"] = {{"mode", a.jl_eps ? "jl" : "currents"},
                             {"m", set.measurement_count()},
                             {"noise", a.noise},
                             {"format", a.csv ? "csv" : "binary"}};
  if (a.jl_eps) manifest.json["params"]["jl_eps"] = *a.jl_eps;
  manifest.json["seeds"]["seed"] = a.seed;
  manifest.write(fs::path(a.out) / "manifest.json");
  std::cout << fmt::format("generated {} x {} measurements in {}\n", set.X.rows(), set.X.cols(), a.out);
  return kExitConverged;
}

struct LearnArgs {
  std::string x;
  std::optional<std::string> y;
  sgl::LearnConfig config;
  std::optional<double> subsample;
  std::uint64_t seed = 1;
  bool trace_objective = false;
  std::string out = ".";
};

int cmd_learn(LearnArgs a, const std::vector<std::string>& argv) {
  Manifest manifest("learn", argv);
  if (a.subsample && a.y) {
    throw sgl::InvalidArgument("learn: --subsample learns a reduced graph and cannot use --y");
  }
  Eigen::MatrixXd X = sgl::io::read_matrix(a.x);
  std::optional<Eigen::MatrixXd> Y;
  if (a.y) Y = sgl::io::read_matrix(*a.y);

  fs::create_directories(a.out);
  std::vector<sgl::NodeId> kept;
  if (a.subsample) {
    sgl::SubsampledMeasurements sub = sgl::subsample_nodes(X, *a.subsample, a.seed);
    X = std::move(sub.X);
    kept = std::move(sub.kept);
    std::string text = "reduced_node,original_node\n";
    for (std::size_t i = 0; i < kept.size(); ++i) text += fmt::format("{},{}\n", i, kept[i]);
    const fs::path kept_path = fs::path(a.out) / "kept_nodes.csv";
    sgl::io::write_file_atomic(kept_path, text);
    manifest.json["outputs"]["kept_nodes"] = kept_path.string();
  }

  a.config.record_objective = a.trace_objective;
  const sgl::LearnResult result = sgl::learn(X, Y, a.config);

  const fs::path graph_path = fs::path(a.out) / "learned.mtx";
  const fs::path trace_path = fs::path(a.out) / "trace.csv";
  sgl::io::write_matrix_market(graph_path, result.graph);
  sgl::io::write_trace_csv(trace_path, result.trace);

  manifest.json["inputs"]["X"] = a.x;
  if (a.y) manifest.json["inputs"]["Y"] = *a.y;
  manifest.json["params"] = {{"k", a.config.k},
                             {"r", a.config.r},
                             {"tol", a.config.tol},
                             {"beta", a.config.beta_sample},
                             {"sigma2_inv", a.config.inverse_variance},
                             {"max_iterations", a.config.resolved_max_iterations()},
                             {"trace_objective", a.trace_objective}};
  if (a.subsample) {
    manifest.json["params"]["subsample"] = *a.subsample;
    manifest.json["seeds"]["seed"] = a.seed;
  }
  manifest.json["outputs"]["graph"] = graph_path.string();
  manifest.json["outputs"]["trace"] = trace_path.string();
  manifest.json["result"] = {{"status", sgl::to_string(result.trace.status)},
                             {"iterations", result.trace.records.size()},
                             {"nodes", result.graph.node_count()},
                             {"edges", result.graph.edge_count()},
                             {"final_s_max", result.trace.records.empty()
                                                 ? 0.0
                                                 : result.trace.records.back().s_max},
                             {"scale_factor", result.scale_factor}};
  manifest.write(fs::path(a.out) / "manifest.json");

  std::cout << fmt::format("{}: {} nodes, {} edges after {} iterations\n",
                           sgl::to_string(result.trace.status), result.graph.node_count(),
                           result.graph.edge_count(), result.trace.records.size());
  return result.trace.status == sgl::LearnStatus::max_iterations ? kExitMaxIterations
                                                                   : kExitConverged;
}

struct EvalArgs {
  std::string truth;
  std::string learned;
  std::size_t pairs = 1000;
  std::size_t spectrum_k = 10;
  std::uint64_t seed = 1;
  std::optional<std::string> x;
  std::string out = ".";
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  Manifest manifest("eval", argv);
  const sgl::WeightedGraph truth = sgl::io::read_matrix_market(a.truth);
  const sgl::WeightedGraph learned = sgl::io::read_matrix_market(a.learned);
  std::optional<Eigen::MatrixXd> X;
  if (a.x) X = sgl::io::read_matrix(*a.x);
  const sgl::EvalReport report =
      sgl::evaluate(truth, learned, a.pairs, a.spectrum_k, a.seed, X ? &*X : nullptr);

  fs::create_directories(a.out);
  const fs::path out(a.out);
  sgl::io::write_spectra_csv(out / "spectra.csv", report.spectra);
  sgl::io::write_resistance_csv(out / "resistance_scatter.csv", report.resistance);
  sgl::io::write_layout_csv(out / "layout_true.csv", sgl::layout_coordinates(truth));
  sgl::io::write_layout_csv(out / "layout_learned.csv", sgl::layout_coordinates(learned));

  ordered_json ratios = ordered_json::array();
  for (Eigen::Index i = 0; i < report.spectra.ratio.size(); ++i) ratios.push_back(report.spectra.ratio[i]);
  manifest.json["inputs"] = {{"truth", a.truth}, {"learned", a.learned}};
  manifest.json["params"] = {{"pairs", a.pairs}, {"spectrum_k", a.spectrum_k}};
  manifest.json["seeds"]["seed"] = a.seed;
  manifest.json["outputs"] = {{"spectra", (out / "spectra.csv").string()},
                              {"resistance_scatter", (out / "resistance_scatter.csv").string()},
                              {"layout_true", (out / "layout_true.csv").string()},
                              {"layout_learned", (out / "layout_learned.csv").string()}};
  manifest.json["report"] = {{"pearson_r", report.resistance.pearson_r},
                             {"pairs", report.resistance.samples.size()},
                             {"edges_true", report.edges_true},
                             {"edges_learned", report.edges_learned},
                             {"eigenvalue_ratios", ratios}};
  if (a.x) manifest.json["inputs"]["X"] = *a.x;
  if (report.distortion) {
    manifest.json["report"]["distortion_max"] = report.distortion->max;
    manifest.json["report"]["distortion_mean"] = report.distortion->mean;
    manifest.json["report"]["distortion_buckets"] = report.distortion->bucket_counts;
  }
  manifest.write(out / "manifest.json");

  std::cout << fmt::format("pearson_r {:.6f} over {} pairs; edges {} (truth {})\n",
                           report.resistance.pearson_r, report.resistance.samples.size(),
                           report.edges_learned, report.edges_true);
  std::cout << "eigenvalue ratios";
  for (Eigen::Index i = 0; i < report.spectra.ratio.size(); ++i) {
    std::cout << fmt::format(" {:.4f}", report.spectra.ratio[i]);
  }
  std::cout << "\n";
  return kExitConverged;
}

int run(const std::vector<std::string>& argv);

int cmd_replay(const std::string& manifest_path) {
  const ordered_json manifest = ordered_json::parse(sgl::io::read_file(manifest_path));
  if (!manifest.contains("argv") || !manifest["argv"].is_array()) {
    throw sgl::IoError(manifest_path + ": manifest has no argv array");
  }
  const auto argv = manifest["argv"].get<std::vector<std::string>>();
  if (argv.size() >= 2 && argv[1] == "replay") throw sgl::IoError("refusing to replay a replay");
  return run(argv);
}

int run(const std::vector<std::string>& argv) {
  CLI::App app{"Learn sparse resistor networks from voltage measurements"};
  app.set_version_flag("--version", std::string(sgl::version));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "simulate voltage measurements on a graph");
  generate->add_option("graph", gen.graph, "Matrix Market graph")->required()->check(CLI::ExistingFile);
  generate->add_option("--m", gen.m, "number of random current measurements (default 50)")
      ->check(CLI::PositiveNumber);
  generate->add_option("--jl-eps", gen.jl_eps, "sketch accuracy for resistance-preserving measurements")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  generate->add_option("--noise", gen.noise, "relative noise level zeta")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  generate->add_option("--out", gen.out, "output directory")->capture_default_str();
  generate->add_flag("--csv", gen.csv, "write CSV instead of binary");

  LearnArgs lrn;
  auto* learn = app.add_subcommand("learn", "learn a graph from measurements");
  learn->add_option("X", lrn.x, "voltage matrix (binary or CSV)")->required()->check(CLI::ExistingFile);
  learn->add_option("--y", lrn.y, "current matrix, enables edge scaling")->check(CLI::ExistingFile);
  learn->add_option("--k", lrn.config.k, "nearest neighbors")->check(CLI::PositiveNumber)->capture_default_str();
  learn->add_option("--r", lrn.config.r, "embedding dimension plus one")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))->capture_default_str();
  learn->add_option("--tol", lrn.config.tol, "sensitivity tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  learn->add_option("--beta", lrn.config.beta_sample, "edge sampling ratio")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  learn->add_option("--sigma2-inv", lrn.config.inverse_variance, "prior inverse variance 1/sigma^2")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  learn->add_option("--max-iterations", lrn.config.max_iterations, "iteration cap (0: 10 ceil(1/beta))")
      ->capture_default_str();
  learn->add_option("--subsample", lrn.subsample, "learn on a random fraction of the nodes")
      ->check(CLI::Range(0.0, 1.0));
  learn->add_option("--seed", lrn.seed, "subsampling seed")->capture_default_str();
  learn->add_flag("--trace-objective", lrn.trace_objective, "record the objective in trace.csv");
  learn->add_option("--out", lrn.out, "output directory")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "compare a learned graph with the ground truth");
  eval->add_option("truth", ev.truth, "ground-truth Matrix Market graph")->required()->check(CLI::ExistingFile);
  eval->add_option("learned", ev.learned, "learned Matrix Market graph")->required()->check(CLI::ExistingFile);
  eval->add_option("--pairs", ev.pairs, "node pairs for the resistance scatter")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))->capture_default_str();
  eval->add_option("--spectrum-k", ev.spectrum_k, "nontrivial eigenvalues to compare")
      ->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--seed", ev.seed, "pair sampling seed")->capture_default_str();
  eval->add_option("--x", ev.x, "measurements, enables distortion statistics")->check(CLI::ExistingFile);
  eval->add_option("--out", ev.out, "output directory")->capture_default_str();

  std::size_t rows = 0, cols = 0;
  double grid_weight = 1.0;
  std::string grid_out;
  auto* grid = app.add_subcommand("make-grid", "write a 2-D grid graph");
  grid->add_option("--rows", rows, "grid rows")->required()->check(CLI::PositiveNumber);
  grid->add_option("--cols", cols, "grid columns")->required()->check(CLI::PositiveNumber);
  grid->add_option("--weight", grid_weight, "edge weight")->check(CLI::PositiveNumber)->capture_default_str();
  grid->add_option("--out", grid_out, "output .mtx path")->required();

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(argv.rbegin(), argv.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  if (*generate) return cmd_generate(gen, argv);
  if (*learn) return cmd_learn(lrn, argv);
  if (*eval) return cmd_eval(ev, argv);
  if (*grid) {
    sgl::io::write_matrix_market(grid_out, sgl::grid_graph(rows, cols, grid_weight));
    return kExitConverged;
  }
  return cmd_replay(manifest_path);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  try {
    return run(args);
  } catch (const sgl::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const sgl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}
