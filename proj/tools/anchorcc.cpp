// anchorcc: generate simulated data, cluster multi-view datasets, sweep
// hyperparameters and evaluate label files.

#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "anchorcc/cli.hpp"

namespace {

using namespace anchorcc;

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& cfg, std::string& lambda_text) {
  cmd->add_option("--beta", cfg.beta, "Graph regularization weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--lambda", lambda_text, "Structure weight (number or 'inf')");
  cmd->add_option("--alpha", cfg.align.alpha, "Fixed-point step size")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", cfg.seed, "Random seed");
  cmd->add_option("--align", cfg.align_mode, "hard|relaxed|none")
      ->transform(CLI::CheckedTransformer(std::map<std::string, AlignMode>{
          {"hard", AlignMode::hard}, {"relaxed", AlignMode::relaxed}, {"none", AlignMode::none}}));
  cmd->add_option("--anchor-mode", cfg.anchor_mode, "orthogonal|fixed|unconstrained")
      ->transform(CLI::CheckedTransformer(std::map<std::string, AnchorMode>{
          {"orthogonal", AnchorMode::orthogonal},
          {"fixed", AnchorMode::fixed},
          {"unconstrained", AnchorMode::unconstrained}}));
  cmd->add_option("--init", cfg.init, "sample|kmeans")
      ->transform(CLI::CheckedTransformer(std::map<std::string, InitStrategy>{
          {"sample", InitStrategy::sample}, {"kmeans", InitStrategy::kmeans}}));
  cmd->add_option("--learn-tol", cfg.learn_tol)->check(CLI::PositiveNumber);
  cmd->add_option("--learn-max-iter", cfg.learn_max_iter)->check(CLI::PositiveNumber);
  cmd->add_option("--fp-tol", cfg.align.fp_tol)->check(CLI::PositiveNumber);
  cmd->add_option("--fp-max-iter", cfg.align.fp_max_iter)->check(CLI::PositiveNumber);
  cmd->add_option("--ds-tol", cfg.align.ds_tol)->check(CLI::PositiveNumber);
  cmd->add_option("--ds-max-iter", cfg.align.ds_max_iter)->check(CLI::PositiveNumber);
  cmd->add_option("--kmeans-restarts", cfg.kmeans_restarts)->check(CLI::PositiveNumber);
}

double parse_lambda(const std::string& text, double fallback) {
  if (text.empty()) return fallback;
  if (text == "inf" || text == "+inf" || text == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  std::size_t used = 0;
  double value = -1.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
  }
  if (used != text.size() || !(value >= 0.0)) {
    throw CLI::ValidationError("--lambda", "expected a nonnegative number or 'inf'");
  }
  return value;
}

std::string join_args(int argc, char** argv) {
  std::ostringstream os;
  for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view anchor-correspondence clustering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kVersion);

  cli::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write the simulated two-view Gaussian dataset");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--seed", gen.seed, "Random seed")->required();
  generate->add_option("--sep", gen.sep, "Radius of the cluster-mean circle")->check(CLI::PositiveNumber);
  generate->add_option("--per-cluster", gen.per_cluster, "Samples per cluster")->check(CLI::PositiveNumber);
  generate->add_option("--clusters", gen.clusters, "Number of clusters")->check(CLI::PositiveNumber);

  cli::ClusterOptions clu;
  std::string clu_lambda;
  auto* cluster = app.add_subcommand("cluster", "Cluster a multi-view dataset");
  cluster->add_option("--data", clu.data, "Manifest file or its directory")->required();
  cluster->add_option("--anchors", clu.config.anchors, "Anchors per view")->required()->check(CLI::PositiveNumber);
  cluster->add_option("--clusters", clu.config.clusters, "Number of clusters")->required()->check(CLI::PositiveNumber);
  cluster->add_option("--out", clu.out, "Output directory")->required();
  cluster->add_flag("--scramble", clu.config.scramble, "Permute every view's anchors before alignment");
  cluster->add_flag("--dump-matrices", clu.dump_matrices, "Write Z_i, P_i and Z_aligned as CSV");
  add_pipeline_flags(cluster, clu.config, clu_lambda);

  cli::SweepOptions sw;
  std::string sw_lambda;
  int seed_count = 0;
  auto* sweep = app.add_subcommand("sweep", "Grid over lambda and anchor count");
  sweep->add_option("--data", sw.data, "Manifest file or its directory")->required();
  sweep->add_option("--clusters", sw.base.clusters, "Number of clusters")->required()->check(CLI::PositiveNumber);
  sweep->add_option("--out", sw.out, "Output CSV")->required();
  sweep->add_option("--seeds", sw.seeds, "Seed list")->delimiter(',');
  sweep->add_option("--seed-count", seed_count, "Use seeds 0..N-1")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", sw.jobs, "Concurrent cells (ANCHORCC_JOBS overrides)")->check(CLI::PositiveNumber);
  add_pipeline_flags(sweep, sw.base, sw_lambda);

  std::string pred_path, truth_path;
  auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
  eval->add_option("--pred", pred_path, "Predicted labels CSV")->required();
  eval->add_option("--truth", truth_path, "Ground-truth labels CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      const auto manifest = cli::cmd_generate(gen);
      std::cout << "wrote " << manifest.string() << "\n";
    } else if (cluster->parsed()) {
      clu.config.align.lambda = parse_lambda(clu_lambda, clu.config.align.lambda);
      clu.command_line = join_args(argc, argv);
      const auto outcome = cli::cmd_cluster(clu);
      std::cout << "wrote " << outcome.labels_path.string() << "\n";
      if (outcome.metrics) std::cout << outcome.metrics->to_key_value();
      for (const auto& w : outcome.result.warnings) std::cerr << "warning: " << w << "\n";
    } else if (sweep->parsed()) {
      if (sweep->count("--lambda")) {
        sw.lambdas = {parse_lambda(sw_lambda, sw.base.align.lambda)};
      }
      if (seed_count > 0) {
        sw.seeds.clear();
        for (int s = 0; s < seed_count; ++s) sw.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      const auto rows = cli::cmd_sweep(sw);
      std::cout << "wrote " << rows.size() << " rows to " << sw.out.string() << "\n";
    } else if (eval->parsed()) {
      std::cout << cli::cmd_eval(pred_path, truth_path).to_key_value();
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const PipelineError& e) {
    std::cerr << "error " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [" << (generate->parsed() ? "generate" : "run") << "] " << e.what() << "\n";
    return 2;
  }
  return 0;
}
