#pragma once

// Command implementations behind the anchorcc tool. Argument parsing lives
// in tools/anchorcc.cpp; everything here takes plain option structs so the
// same code paths can be driven from tests.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "anchorcc/data_io.hpp"
#include "anchorcc/metrics.hpp"
#include "anchorcc/pipeline.hpp"

namespace anchorcc::cli {

inline constexpr const char* kVersion = "1.0.0";

namespace fs = std::filesystem;

// A --data argument may name the manifest or the directory holding it.
inline fs::path resolve_manifest(const fs::path& data) {
  if (fs::is_directory(data)) return data / "manifest.txt";
  return data;
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

inline std::string format_lambda(double lambda) {
  if (std::isinf(lambda)) return "inf";
  std::ostringstream os;
  os << std::setprecision(17) << lambda;
  return os.str();
}

struct GenerateOptions {
  fs::path out;
  std::uint64_t seed = 0;
  double sep = 10.0;
  int per_cluster = 50;
  int clusters = 4;
};

inline fs::path cmd_generate(const GenerateOptions& opt) {
  const auto ds = generate_simulated(opt.seed, opt.per_cluster, opt.clusters, opt.sep);
  return save_dataset(ds, opt.out);
}

struct ClusterOptions {
  fs::path data;
  fs::path out;
  PipelineConfig config;
  bool dump_matrices = false;
  std::string command_line;
};

struct ClusterOutcome {
  ClusteringResult result;
  std::optional<MetricsReport> metrics;
  fs::path labels_path;
};

inline std::string config_block(const PipelineConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "anchors=" << cfg.anchors << "\n"
     << "clusters=" << cfg.clusters << "\n"
     << "beta=" << cfg.beta << "\n"
     << "lambda=" << format_lambda(cfg.align.lambda) << "\n"
     << "alpha=" << cfg.align.alpha << "\n"
     << "seed=" << cfg.seed << "\n"
     << "align=" << to_string(cfg.align_mode) << "\n"
     << "anchor_mode=" << to_string(cfg.anchor_mode) << "\n"
     << "init=" << (cfg.init == InitStrategy::sample ? "sample" : "kmeans") << "\n"
     << "scramble=" << (cfg.scramble ? 1 : 0) << "\n"
     << "learn_tol=" << cfg.learn_tol << "\n"
     << "learn_max_iter=" << cfg.learn_max_iter << "\n"
     << "fp_tol=" << cfg.align.fp_tol << "\n"
     << "fp_max_iter=" << cfg.align.fp_max_iter << "\n"
     << "ds_tol=" << cfg.align.ds_tol << "\n"
     << "ds_max_iter=" << cfg.align.ds_max_iter << "\n"
     << "kmeans_restarts=" << cfg.kmeans_restarts << "\n";
  return os.str();
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

/// Runs the pipeline on a manifest and writes labels.csv, metrics.txt (when
/// ground truth is available), optional matrix dumps, and appends one block
/// to run_record.txt.
inline ClusterOutcome cmd_cluster(const ClusterOptions& opt) {
  const auto manifest = resolve_manifest(opt.data);
  MultiViewDataset ds;
  try {
    ds = load_dataset(manifest);
  } catch (const std::exception& e) {
    throw PipelineError("load", e.what());
  }
  ClusterOutcome outcome;
  outcome.result = run(ds, opt.config);
  const auto& result = outcome.result;

  try {
    ensure_directory(opt.out);
    outcome.labels_path = opt.out / "labels.csv";
    save_labels(result.labels, outcome.labels_path);
    if (ds.labels) {
      outcome.metrics = evaluate(result.labels, *ds.labels);
      auto out = detail::open_for_write(opt.out / "metrics.txt");
      out << outcome.metrics->to_key_value();
    }
    std::vector<fs::path> dumped;
    if (opt.dump_matrices) {
      for (std::size_t i = 0; i < result.graphs.size(); ++i) {
        dumped.push_back(opt.out / ("Z_" + std::to_string(i) + ".csv"));
        save_matrix(result.graphs[i].graph, dumped.back());
      }
      for (std::size_t i = 0; i < result.plans.size(); ++i) {
        const auto& plan = result.plans[i];
        dumped.push_back(opt.out / ("P_" + std::to_string(i + 1) + ".csv"));
        save_matrix(opt.config.align_mode == AlignMode::relaxed ? plan.relaxed : plan.hard_matrix(),
                    dumped.back());
        dumped.push_back(opt.out / ("P_" + std::to_string(i + 1) + "_relaxed.csv"));
        save_matrix(plan.relaxed, dumped.back());
      }
      dumped.push_back(opt.out / "Z_aligned.csv");
      save_matrix(result.fused.graph, dumped.back());
    }

    std::ofstream record(opt.out / "run_record.txt", std::ios::app);
    if (!record) throw Error("cannot append to run_record.txt");
    record << std::setprecision(17);
    record << "--- run\n"
           << "tool=anchorcc\n"
           << "version=" << kVersion << "\n"
           << "timestamp=" << utc_timestamp() << "\n"
           << "command=cluster\n";
    if (!opt.command_line.empty()) record << "argv=" << opt.command_line << "\n";
    record << "data=" << manifest.string() << "\n"
           << "n=" << ds.samples() << "\n"
           << "v=" << ds.view_count() << "\n"
           << config_block(opt.config)
           << "timing.learn=" << result.timings.learn << "\n"
           << "timing.align=" << result.timings.align << "\n"
           << "timing.fuse=" << result.timings.fuse << "\n"
           << "timing.embed=" << result.timings.embed << "\n"
           << "timing.kmeans=" << result.timings.kmeans << "\n"
           << "timing.total=" << result.timings.total << "\n";
    for (std::size_t i = 0; i < result.plans.size(); ++i) {
      record << "align." << i + 1 << ".iterations=" << result.plans[i].iterations << "\n"
             << "align." << i + 1 << ".converged=" << (result.plans[i].converged ? 1 : 0) << "\n";
    }
    if (outcome.metrics) {
      record << "metrics.acc=" << outcome.metrics->acc << "\n"
             << "metrics.nmi=" << outcome.metrics->nmi << "\n"
             << "metrics.fscore=" << outcome.metrics->fscore << "\n";
    }
    for (const auto& w : result.warnings) record << "warning=" << w << "\n";
    record << "output.labels=" << outcome.labels_path.string() << "\n";
    if (outcome.metrics) record << "output.metrics=" << (opt.out / "metrics.txt").string() << "\n";
    for (const auto& p : dumped) record << "output.matrix=" << p.string() << "\n";
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("write", e.what());
  }
  return outcome;
}

struct SweepOptions {
  fs::path data;
  fs::path out;  // CSV file
  PipelineConfig base;  // clusters, beta, alpha, modes; anchors and lambda are swept
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> lambdas{1e-4, 1.0, 1e4, std::numeric_limits<double>::infinity()};
  std::vector<int> anchor_multipliers{1, 2, 5};
  int jobs = 1;
};

struct SweepRow {
  double lambda = 0.0;
  int anchors = 0;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

// ANCHORCC_JOBS, when set to a positive integer, wins over --jobs.
inline int effective_jobs(int requested) {
  if (const char* env = std::getenv("ANCHORCC_JOBS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<int>(value);
  }
  return std::max(1, requested);
}

/// Grid over lambda x anchors x seeds; writes lambda,m,seed,acc,nmi,fscore.
inline std::vector<SweepRow> cmd_sweep(const SweepOptions& opt) {
  const auto manifest = resolve_manifest(opt.data);
  MultiViewDataset ds;
  try {
    ds = load_dataset(manifest);
  } catch (const std::exception& e) {
    throw PipelineError("load", e.what());
  }
  if (!ds.labels) throw PipelineError("load", "sweep needs ground-truth labels");
  const int k = opt.base.clusters;
  std::vector<SweepRow> rows;
  for (double lambda : opt.lambdas) {
    for (int mult : opt.anchor_multipliers) {
      for (auto seed : opt.seeds) rows.push_back({lambda, mult * k, seed, {}});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<std::string> first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        PipelineConfig cfg = opt.base;
        cfg.anchors = rows[i].anchors;
        cfg.align.lambda = rows[i].lambda;
        cfg.seed = rows[i].seed;
        cfg.parallel = false;
        rows[i].metrics = evaluate(run(ds, cfg).labels, *ds.labels);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = e.what();
      }
    }
  };
  const int jobs = std::min<int>(effective_jobs(opt.jobs), static_cast<int>(rows.size()));
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (first_error) throw PipelineError("sweep", *first_error);

  try {
    if (opt.out.has_parent_path()) ensure_directory(opt.out.parent_path());
    auto out = detail::open_for_write(opt.out);
    out << "lambda,m,seed,acc,nmi,fscore\n";
    for (const auto& r : rows) {
      out << format_lambda(r.lambda) << ',' << r.anchors << ',' << r.seed << ','
          << detail::format_double(r.metrics.acc) << ',' << detail::format_double(r.metrics.nmi)
          << ',' << detail::format_double(r.metrics.fscore) << '\n';
    }
    if (!out) throw Error("failed writing " + opt.out.string());
  } catch (const std::exception& e) {
    throw PipelineError("write", e.what());
  }
  return rows;
}

inline MetricsReport cmd_eval(const fs::path& pred, const fs::path& truth) {
  try {
    return evaluate(load_labels(pred), load_labels(truth));
  } catch (const std::exception& e) {
    throw PipelineError("eval", e.what());
  }
}

}  // namespace anchorcc::cli
