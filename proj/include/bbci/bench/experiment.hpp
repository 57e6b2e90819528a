#pragma once

#include <string>
#include <vector>

#include "bbci/bench/config.hpp"
#include "bbci/bench/metrics.hpp"

namespace bbci::bench {

struct ManifestEntry {
  std::string path;  // relative to output_dir
  std::string digest;
};

using Manifest = std::vector<ManifestEntry>;

// Scenario names accepted in [experiment] scenario.
inline const std::vector<std::string> kScenarios = {
    "codec_bench", "encode_demo", "plasticity_demo", "emulator",
    "ncp",         "coadapt",     "full_pipeline"};

// Validates the config for its scenario, executes it across all seeds,
// writes metrics/checkpoints/CSVs under output_dir and a manifest listing
// every file with its digest. `output_dir_override` (from the CLI / env
// var) replaces [experiment] output_dir when non-empty.
Manifest run_experiment(const Config& config, const std::string& output_dir_override = "");

// Evaluation-only entry point: loads the co-processor checkpoint recorded
// by a previous ncp run (dropping the emulator entirely) and reruns the
// closed-loop evaluation.
Manifest run_eval_only(const Config& config, const std::string& output_dir_override = "");

// Built-in gradient verification suite (the `grad-check` subcommand).
// Returns the max relative error across all checked nets and prints one
// line per net.
double run_grad_check_suite();

}  // namespace bbci::bench
