#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankpo/types.hpp"

namespace rankpo::cli {

// Subcommand implementations. Each returns a process exit code (0 iff all
// requested work completed) and is idempotent given identical inputs and
// seed. Data directories use fixed file names:
//   documents.jsonl, positives.jsonl, splits.json, examples_<stage>.jsonl
// Model files use the checkpoint format from checkpoint.hpp.

struct GenerateArgs {
  std::string spec_path;  // empty -> defaults
  std::string out_dir;
};
int cmd_generate(const GenerateArgs& args);

struct TrainClArgs {
  std::string data_dir;
  std::string config_path;  // empty -> defaults
  std::string strategy = "curriculum";
  std::string out_checkpoint;
  std::uint32_t hash_dim = 4096;
  std::uint32_t hidden_dim = 128;
  std::uint32_t out_dim = 64;
  int mine_lo = 2;
  int mine_hi = 100;
  std::optional<TrainConfig> config_override;  // takes precedence over file
  bool quiet = false;
};
int cmd_train_cl(const TrainClArgs& args);

struct MineArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string examples_path;
  std::string out_path;
  std::string stage_name = "hn1";
  int rank_lo = 2;
  int rank_hi = 100;
  int n_per_query = 5;
  std::uint64_t seed = 42;
};
int cmd_mine(const MineArgs& args);

struct AnnotateArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string annotator = "oracle";  // oracle | external
  std::string out_dir;
  std::uint64_t seed = 42;
  int train_pool_k = 100;
  int eval_pool_k = 20;
  int train_tasks_per_query = 1;
  int eval_tasks_per_query = 10;
  // external annotator only; the bearer token is read from
  // $ANNOTATOR_API_TOKEN
  std::string endpoint_url;
  std::string endpoint_model = "default";
  std::string prompt_template_path;  // empty -> built-in default
  int concurrency = 4;
  bool quiet = false;
};
int cmd_annotate(const AnnotateArgs& args);

struct TrainPoArgs {
  std::string checkpoint;
  std::string ref_checkpoint;  // empty -> same as checkpoint
  std::string data_dir;
  std::string pairs_path;
  std::string method = "rankpo";  // rankpo | simrankpo | sft
  std::string config_path;
  std::string out_checkpoint;
  std::string log_path;  // per-step JSONL; empty -> no log
  std::optional<TrainConfig> config_override;
  bool beta_flag_given = false;  // for the sft + --beta warning
  bool quiet = false;
};
int cmd_train_po(const TrainPoArgs& args);

struct SweepArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string train_pairs_path;
  std::string eval_pairs_path;
  std::vector<std::string> methods;   // empty -> all five defaults
  std::vector<double> learning_rates; // empty -> default 11-point grid
  std::vector<std::uint64_t> seeds;   // empty -> {1, 2}
  std::string out_csv;
  std::string config_path;
  std::optional<TrainConfig> config_override;
  int jobs = 1;
  bool quiet = false;
};
int cmd_sweep(const SweepArgs& args);

struct EvaluateArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string eval_pairs_path;  // empty -> report without alignment
  std::string out_json;
  std::string out_csv;  // optional one-row CSV
};
int cmd_evaluate(const EvaluateArgs& args);

// Default methods and learning-rate grid used by cmd_sweep.
const std::vector<std::string>& default_sweep_methods();
const std::vector<double>& default_sweep_learning_rates();

}  // namespace rankpo::cli
