#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankpo/cli.hpp"
#include "rankpo/jsonl.hpp"

namespace {

using rankpo::TrainConfig;

// Shared --config/--epochs/... handling: the file (when given) is loaded
// first, then explicit flags override it.
struct ConfigFlags {
  std::string config_path;
  TrainConfig flags;
  CLI::App* cmd = nullptr;

  void attach(CLI::App& app) {
    cmd = &app;
    app.add_option("--config", config_path,
                   "Config file (JSON or key=value), keys mirror the "
                   "TrainConfig field names");
    app.add_option("--epochs", flags.epochs);
    app.add_option("--batch-size", flags.batch_size);
    app.add_option("--num-negatives", flags.num_negatives);
    app.add_option("--learning-rate", flags.learning_rate);
    app.add_option("--warmup-ratio", flags.warmup_ratio);
    app.add_option_function<std::string>(
           "--schedule",
           [this](const std::string& s) {
             flags.schedule = rankpo::schedule_from_string(s);
           })
        ->check(CLI::IsMember({"cosine", "constant"}));
    app.add_option("--tau-cl", flags.tau_cl);
    app.add_option("--tau-po", flags.tau_po);
    app.add_option("--beta", flags.beta);
    app.add_option_function<std::string>(
           "--loss-shape",
           [this](const std::string& s) {
             flags.loss_shape = rankpo::loss_shape_from_string(s);
           })
        ->check(CLI::IsMember({"sigmoid", "hinge"}));
    app.add_option("--seed", flags.seed);
  }

  TrainConfig resolve() const {
    TrainConfig config;
    if (!config_path.empty()) config = rankpo::load_train_config(config_path);
    auto given = [this](const char* name) { return cmd->count(name) > 0; };
    if (given("--epochs")) config.epochs = flags.epochs;
    if (given("--batch-size")) config.batch_size = flags.batch_size;
    if (given("--num-negatives")) config.num_negatives = flags.num_negatives;
    if (given("--learning-rate")) config.learning_rate = flags.learning_rate;
    if (given("--warmup-ratio")) config.warmup_ratio = flags.warmup_ratio;
    if (given("--schedule")) config.schedule = flags.schedule;
    if (given("--tau-cl")) config.tau_cl = flags.tau_cl;
    if (given("--tau-po")) config.tau_po = flags.tau_po;
    if (given("--beta")) config.beta = flags.beta;
    if (given("--loss-shape")) config.loss_shape = flags.loss_shape;
    if (given("--seed")) config.seed = flags.seed;
    config.validate();
    return config;
  }

  bool beta_given() const { return cmd->count("--beta") > 0; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage bi-encoder ranking toolkit: contrastive training "
               "with hard-negative mining, then preference fine-tuning "
               "(RankPO / SimRankPO / SFT)"};
  app.require_subcommand(1);

  rankpo::cli::GenerateArgs gen_args;
  auto* generate = app.add_subcommand(
      "generate", "Generate a synthetic rule-based JD/talent dataset");
  generate->add_option("--spec", gen_args.spec_path,
                       "Dataset spec JSON (defaults when omitted)");
  generate->add_option("--out", gen_args.out_dir, "Output data directory")
      ->required();

  rankpo::cli::TrainClArgs cl_args;
  ConfigFlags cl_config;
  auto* train_cl = app.add_subcommand(
      "train-cl", "Contrastive training (random -> hn1 -> hn2)");
  train_cl->add_option("--data", cl_args.data_dir, "Data directory")
      ->required();
  train_cl->add_option("--strategy", cl_args.strategy)
      ->check(CLI::IsMember({"curriculum", "combined"}));
  train_cl->add_option("--out", cl_args.out_checkpoint, "Output checkpoint")
      ->required();
  train_cl->add_option("--hash-dim", cl_args.hash_dim);
  train_cl->add_option("--hidden-dim", cl_args.hidden_dim);
  train_cl->add_option("--out-dim", cl_args.out_dim);
  train_cl->add_option("--mine-lo", cl_args.mine_lo);
  train_cl->add_option("--mine-hi", cl_args.mine_hi);
  cl_config.attach(*train_cl);

  rankpo::cli::MineArgs mine_args;
  auto* mine = app.add_subcommand("mine", "Mine hard negatives");
  mine->add_option("--checkpoint", mine_args.checkpoint)->required();
  mine->add_option("--data", mine_args.data_dir)->required();
  mine->add_option("--examples", mine_args.examples_path)->required();
  mine->add_option("--out", mine_args.out_path)->required();
  mine->add_option("--stage", mine_args.stage_name);
  mine->add_option("--lo", mine_args.rank_lo);
  mine->add_option("--hi", mine_args.rank_hi);
  mine->add_option("--per-query", mine_args.n_per_query);
  mine->add_option("--seed", mine_args.seed);

  rankpo::cli::AnnotateArgs ann_args;
  auto* annotate = app.add_subcommand(
      "annotate", "Label candidate pairs (oracle or external LLM judge)");
  annotate->add_option("--checkpoint", ann_args.checkpoint)->required();
  annotate->add_option("--data", ann_args.data_dir)->required();
  annotate->add_option("--annotator", ann_args.annotator)
      ->check(CLI::IsMember({"oracle", "external"}));
  annotate->add_option("--out", ann_args.out_dir)->required();
  annotate->add_option("--seed", ann_args.seed);
  annotate->add_option("--train-pool", ann_args.train_pool_k);
  annotate->add_option("--eval-pool", ann_args.eval_pool_k);
  annotate->add_option("--train-tasks-per-query",
                       ann_args.train_tasks_per_query);
  annotate->add_option("--eval-tasks-per-query", ann_args.eval_tasks_per_query);
  annotate->add_option("--endpoint", ann_args.endpoint_url,
                       "Chat endpoint base URL (external annotator; bearer "
                       "token from $ANNOTATOR_API_TOKEN)");
  annotate->add_option("--endpoint-model", ann_args.endpoint_model);
  annotate->add_option("--prompt-template", ann_args.prompt_template_path);
  annotate->add_option("--concurrency", ann_args.concurrency);

  rankpo::cli::TrainPoArgs po_args;
  ConfigFlags po_config;
  auto* train_po =
      app.add_subcommand("train-po", "Preference fine-tuning from pairs");
  train_po->add_option("--checkpoint", po_args.checkpoint)->required();
  train_po->add_option("--ref-checkpoint", po_args.ref_checkpoint,
                       "Reference model for rankpo (defaults to "
                       "--checkpoint)");
  train_po->add_option("--data", po_args.data_dir)->required();
  train_po->add_option("--pairs", po_args.pairs_path)->required();
  train_po->add_option("--method", po_args.method)
      ->check(CLI::IsMember({"rankpo", "rankpo-sigmoid", "rankpo-hinge",
                             "simrankpo", "simrankpo-sigmoid",
                             "simrankpo-hinge", "sft"}));
  train_po->add_option("--out", po_args.out_checkpoint)->required();
  train_po->add_option("--log", po_args.log_path, "Per-step JSONL log");
  po_config.attach(*train_po);

  rankpo::cli::SweepArgs sweep_args;
  ConfigFlags sweep_config;
  auto* sweep = app.add_subcommand(
      "sweep", "Fine-tune across a (method, learning-rate, seed) grid");
  sweep->add_option("--checkpoint", sweep_args.checkpoint)->required();
  sweep->add_option("--data", sweep_args.data_dir)->required();
  sweep->add_option("--train-pairs", sweep_args.train_pairs_path)->required();
  sweep->add_option("--eval-pairs", sweep_args.eval_pairs_path)->required();
  sweep->add_option("--methods", sweep_args.methods,
                    "Default: sft rankpo-sigmoid rankpo-hinge "
                    "simrankpo-sigmoid simrankpo-hinge");
  sweep->add_option("--learning-rates", sweep_args.learning_rates);
  sweep->add_option("--seeds", sweep_args.seeds, "Default: 1 2");
  sweep->add_option("--out", sweep_args.out_csv)->required();
  sweep->add_option("--jobs", sweep_args.jobs);
  sweep_config.attach(*sweep);

  rankpo::cli::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Write an EvalReport JSON");
  evaluate->add_option("--checkpoint", eval_args.checkpoint)->required();
  evaluate->add_option("--data", eval_args.data_dir)->required();
  evaluate->add_option("--eval-pairs", eval_args.eval_pairs_path,
                       "Optional; adds the alignment score");
  evaluate->add_option("--out", eval_args.out_json)->required();
  evaluate->add_option("--csv", eval_args.out_csv, "Optional one-row CSV");

  CLI11_PARSE(app, argc, argv);

  if (generate->parsed()) return rankpo::cli::cmd_generate(gen_args);
  if (train_cl->parsed()) {
    cl_args.config_override = cl_config.resolve();
    return rankpo::cli::cmd_train_cl(cl_args);
  }
  if (mine->parsed()) return rankpo::cli::cmd_mine(mine_args);
  if (annotate->parsed()) return rankpo::cli::cmd_annotate(ann_args);
  if (train_po->parsed()) {
    po_args.config_override = po_config.resolve();
    po_args.beta_flag_given = po_config.beta_given();
    return rankpo::cli::cmd_train_po(po_args);
  }
  if (sweep->parsed()) {
    sweep_args.config_override = sweep_config.resolve();
    return rankpo::cli::cmd_sweep(sweep_args);
  }
  if (evaluate->parsed()) return rankpo::cli::cmd_evaluate(eval_args);
  return 1;
}
