// Command-line pipeline: prediction records -> similarity matrix -> spectrum
// -> optimal mixture -> discovery trace / sampling plan.

#include "mixopt/core.hpp"
#include "mixopt/discovery.hpp"
#include "mixopt/io.hpp"
#include "mixopt/prediction.hpp"
#include "mixopt/qp_solver.hpp"
#include "mixopt/sampler.hpp"
#include "mixopt/similarity.hpp"
#include "mixopt/spectral.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace mixopt;
namespace fs = std::filesystem;

// 0 success, 2 input/validation error, 3 incomplete data, 4 solver failure.
int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IncompletePair:
      return 3;
    case ErrorCode::SolverDiverged:
      return 4;
    default:
      return 2;
  }
}

fs::path sibling_with_extension(const fs::path& path, const char* ext) {
  fs::path sibling = path;
  sibling.replace_extension(ext);
  if (sibling == path) {
    sibling = path;
    sibling += ext;  // --out already carried this extension
  }
  return sibling;
}

struct CommonParams {
  double beta = 20.0;
  double lambda = 10.0;
  std::string shift = "auto";
  double epsilon_rel = kDefaultEpsilonRel;
  int threads = 0;
};

void add_potential_options(CLI::App* cmd, CommonParams& params) {
  cmd->add_option("--beta", params.beta, "Unary potential strength")
      ->capture_default_str();
  cmd->add_option("--lambda", params.lambda, "Pairwise diversity penalty")
      ->capture_default_str();
  cmd->add_option("--shift", params.shift, "PSD correction mode")
      ->check(CLI::IsMember({"auto", "off"}))
      ->capture_default_str();
  cmd->add_option("--epsilon-rel", params.epsilon_rel,
                  "Relative jitter added by the spectral shift")
      ->capture_default_str();
}

ShiftMode shift_mode(const std::string& name) {
  return name == "off" ? ShiftMode::OFF : ShiftMode::AUTO;
}

Potentials potentials_from_file(const std::string& in,
                                const CommonParams& params) {
  const SimilarityMatrix s = io::read_similarity(in);
  return build_potentials(s, PotentialParams{params.beta, params.lambda},
                          shift_mode(params.shift), params.epsilon_rel);
}

int cmd_similarity(const std::string& in, const std::string& metric,
                   const std::string& jsd_mode, int threads,
                   const std::string& out) {
  std::ifstream stream(in);
  if (!stream) {
    fail(ErrorCode::IoError, "cannot open '" + in + "'");
  }
  const PredictionStore store = ingest(stream);

  SimilarityOptions options;
  options.metric = metric_from_name(metric);
  options.jsd_complement = jsd_mode == "complement";
  options.threads = threads;

  std::vector<std::string> warnings;
  const SimilarityMatrix s = build_similarity(store, options, &warnings);
  for (const auto& w : warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  io::write_similarity_json(out, s);
  std::cout << "similarity: " << s.size() << " tasks, metric "
            << metric_name(s.metric) << " -> " << out << "\n";
  return 0;
}

int cmd_spectrum(const std::string& in, const std::string& out) {
  const SimilarityMatrix s = io::read_similarity(in);
  const SpectrumReport report = eigen_spectrum(s.values);
  io::write_spectrum_json(out, report);
  const fs::path csv = sibling_with_extension(out, ".csv");
  io::write_spectrum_csv(csv, report);
  std::cout << "spectrum: lambda_min " << report.lambda_min << ", lambda_max "
            << report.lambda_max << " -> " << out << ", " << csv.string()
            << "\n";
  return 0;
}

int cmd_solve(const std::string& in, const CommonParams& params,
              const std::string& out) {
  const Potentials pot = potentials_from_file(in, params);
  io::SolutionFile file;
  file.solution = solve(pot);
  file.params = pot.params;
  file.shift = pot.shift;
  file.kkt_residual = kkt_residual(file.solution, pot);
  io::write_solution_json(out, file);
  std::cout << "solve: path " << solver_path_name(file.solution.solver_path)
            << ", energy " << file.solution.energy << ", kkt residual "
            << file.kkt_residual << " -> " << out << "\n";
  return 0;
}

int cmd_discover(const std::string& in, const CommonParams& params, int k,
                 const std::string& order, const std::string& out) {
  const Potentials pot = potentials_from_file(in, params);
  DiscoveryTrace trace;
  if (!order.empty()) {
    trace = affinity_trajectory(pot, order == "desc" ? UnaryOrder::DESC_UNARY
                                                     : UnaryOrder::ASC_UNARY);
  } else {
    trace = greedy_select(pot, k);
  }
  for (size_t t = 1; t < trace.f_values.size(); ++t) {
    if (trace.f_values[t] < trace.f_values[t - 1] - 1e-9) {
      fail(ErrorCode::SolverDiverged,
           "trace f_values decreased at step " + std::to_string(t));
    }
  }
  io::write_trace_json(out, trace);
  std::cout << "discover: " << trace.selected.size() << " steps, final F "
            << trace.f_values.back() << " -> " << out << "\n";
  return 0;
}

int cmd_sample(const std::string& in, std::uint64_t budget, std::uint64_t seed,
               const std::string& capacities_path, const std::string& mode,
               const std::string& out) {
  const io::SolutionFile file = io::read_solution_json(in);
  std::optional<std::vector<std::uint64_t>> capacities;
  if (!capacities_path.empty()) {
    capacities = io::read_capacities_csv(capacities_path, file.solution.tasks);
  }
  SamplingPlan plan = allocate(file.solution.tasks, file.solution.p, budget,
                               seed, capacities,
                               mode == "expected" ? AllocationMode::EXPECTED
                                                  : AllocationMode::MULTINOMIAL);
  if (capacities) {
    plan.manifest = draw_instances(plan.counts, *capacities, seed);
  }
  io::write_plan_json(out, plan);
  std::cout << "sample: budget " << budget << " -> " << out;
  if (plan.manifest) {
    const fs::path manifest = sibling_with_extension(out, ".manifest.csv");
    io::write_manifest_csv(manifest, plan);
    std::cout << ", " << manifest.string();
  }
  std::cout << "\n";
  return 0;
}

int cmd_gamma(int n, int trials, const CommonParams& params,
              std::uint64_t seed, const std::string& out) {
  const GammaReport report =
      gamma_experiment(n, PotentialParams{params.beta, params.lambda}, trials,
                       seed, params.epsilon_rel, params.threads);
  io::write_gamma_report_json(out, report);
  const fs::path hist = sibling_with_extension(out, ".hist.csv");
  io::write_gamma_histogram_csv(hist, report);
  std::cout << "gamma: min observed ratio " << report.min_gamma << " over "
            << report.gammas.size() << " non-degenerate trials ("
            << report.degenerate_trials << " degenerate) -> " << out << ", "
            << hist.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal fine-tuning task mixtures from behavioral similarity"};
  app.set_config("--config", "", "Read options from a config file");
  app.require_subcommand(1);

  std::string in;
  std::string out;
  std::string metric = "jsd";
  std::string jsd_mode = "raw";
  std::string order;
  std::string capacities_path;
  std::string sample_mode = "multinomial";
  CommonParams params;
  int k = 1;
  int gamma_n = 10;
  int trials = 100;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;

  auto* similarity = app.add_subcommand(
      "similarity", "Build a task-similarity matrix from prediction records");
  similarity->add_option("--in", in, "Prediction records (JSON Lines)")
      ->required();
  similarity->add_option("--out", out, "Output matrix JSON")->required();
  similarity->add_option("--metric", metric, "Similarity metric")
      ->check(CLI::IsMember({"pmi", "jsd"}))
      ->capture_default_str();
  similarity->add_option("--jsd-mode", jsd_mode, "Raw JSD or ln2 - JSD")
      ->check(CLI::IsMember({"raw", "complement"}))
      ->capture_default_str();
  similarity->add_option("--threads", params.threads, "Worker threads (0 = all cores)")
      ->envname("MIXOPT_THREADS")
      ->capture_default_str();

  auto* spectrum =
      app.add_subcommand("spectrum", "Eigenvalue spectrum of a matrix");
  spectrum->add_option("--in", in, "Similarity matrix (JSON or CSV)")
      ->required();
  spectrum->add_option("--out", out, "Output spectrum JSON")->required();

  auto* solve_cmd =
      app.add_subcommand("solve", "Optimal mixture over the simplex");
  solve_cmd->add_option("--in", in, "Similarity matrix (JSON or CSV)")
      ->required();
  solve_cmd->add_option("--out", out, "Output solution JSON")->required();
  add_potential_options(solve_cmd, params);

  auto* discover = app.add_subcommand(
      "discover", "Greedy task selection or an affinity trajectory");
  discover->add_option("--in", in, "Similarity matrix (JSON or CSV)")
      ->required();
  discover->add_option("--out", out, "Output trace JSON")->required();
  discover->add_option("--k", k, "Selection budget")->capture_default_str();
  discover
      ->add_option("--order", order,
                   "Add all tasks by unary potential instead of greedily")
      ->check(CLI::IsMember({"asc", "desc"}));
  add_potential_options(discover, params);

  auto* sample = app.add_subcommand(
      "sample", "Instance counts and manifest from a solved mixture");
  sample->add_option("--in", in, "Solution JSON")->required();
  sample->add_option("--out", out, "Output plan JSON")->required();
  sample->add_option("--budget", budget, "Total instance budget")->required();
  sample->add_option("--seed", seed, "Random seed")->capture_default_str();
  sample->add_option("--capacities", capacities_path,
                     "Per-task dataset sizes (task_id,size CSV)");
  sample->add_option("--mode", sample_mode, "Count allocation mode")
      ->check(CLI::IsMember({"multinomial", "expected"}))
      ->capture_default_str();

  auto* gamma = app.add_subcommand(
      "gamma", "Empirical submodularity ratios on random instances");
  gamma->add_option("--out", out, "Output report JSON")->required();
  gamma->add_option("--n", gamma_n, "Tasks per instance")
      ->capture_default_str();
  gamma->add_option("--trials", trials, "Number of trials")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gamma->add_option("--seed", seed, "Random seed")->capture_default_str();
  gamma->add_option("--threads", params.threads, "Worker threads (0 = all cores)")
      ->envname("MIXOPT_THREADS")
      ->capture_default_str();
  add_potential_options(gamma, params);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // argument errors fall under the input-error exit code
  }

  try {
    if (similarity->parsed()) {
      return cmd_similarity(in, metric, jsd_mode, params.threads, out);
    }
    if (spectrum->parsed()) {
      return cmd_spectrum(in, out);
    }
    if (solve_cmd->parsed()) {
      return cmd_solve(in, params, out);
    }
    if (discover->parsed()) {
      return cmd_discover(in, params, k, order, out);
    }
    if (sample->parsed()) {
      return cmd_sample(in, budget, seed, capacities_path, sample_mode, out);
    }
    if (gamma->parsed()) {
      return cmd_gamma(gamma_n, trials, params, seed, out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
