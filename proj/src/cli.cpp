#include "rankpo/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "rankpo/annotate.hpp"
#include "rankpo/checkpoint.hpp"
#include "rankpo/contrastive.hpp"
#include "rankpo/datagen.hpp"
#include "rankpo/eval.hpp"
#include "rankpo/jsonl.hpp"
#include "rankpo/preference.hpp"

#include <json.hpp>

namespace rankpo::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_lr(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failure: " + path);
}

struct DataDir {
  Corpus corpus;
  RelevanceSets positives;
  Splits splits;
};

DataDir load_data_dir(const std::string& dir) {
  DataDir data;
  data.corpus = Corpus(load_documents_jsonl(join(dir, "documents.jsonl")));
  data.positives = load_positives_jsonl(join(dir, "positives.jsonl"));
  data.splits = load_splits_json(join(dir, "splits.json"));
  return data;
}

TrainConfig resolve_config(const std::string& config_path,
                           const std::optional<TrainConfig>& override) {
  if (override) {
    override->validate();
    return *override;
  }
  if (!config_path.empty()) return load_train_config(config_path);
  return TrainConfig{};
}

// The checkpoint path with ".rpo" (or any extension) replaced by a
// stage-specific suffix: model.rpo -> model.<stage>.rpo
std::string stage_path(const std::string& checkpoint_path,
                       const std::string& stage,
                       const std::string& extension) {
  fs::path p(checkpoint_path);
  const std::string ext = p.extension().string();
  p.replace_extension();
  return p.string() + "." + stage + (extension.empty() ? ext : extension);
}

struct MethodSpec {
  PrefMethod method = PrefMethod::SFT;
  std::optional<LossShape> shape;  // unset -> config value; unused for sft
};

MethodSpec parse_method_spec(const std::string& name) {
  MethodSpec spec;
  std::string base = name;
  if (const auto dash = name.find('-'); dash != std::string::npos) {
    base = name.substr(0, dash);
    spec.shape = loss_shape_from_string(name.substr(dash + 1));
  }
  spec.method = pref_method_from_string(base);
  if (spec.method == PrefMethod::SFT && spec.shape) {
    throw std::invalid_argument("sft takes no loss shape: " + name);
  }
  return spec;
}

int run_guarded(const char* command, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

const std::vector<std::string>& default_sweep_methods() {
  static const std::vector<std::string> kMethods = {
      "sft", "rankpo-sigmoid", "rankpo-hinge", "simrankpo-sigmoid",
      "simrankpo-hinge"};
  return kMethods;
}

const std::vector<double>& default_sweep_learning_rates() {
  // Same 11-point pattern as the preference-stage grid (5,10,20,...,90,100
  // in grid units), scaled to where this encoder actually transitions from
  // "barely adapts" to "fully adapts".
  static const std::vector<double> kGrid = {
      5e-5, 1e-4, 2e-4, 3e-4, 4e-4, 5e-4, 6e-4, 7e-4, 8e-4, 9e-4, 1e-3};
  return kGrid;
}

int cmd_generate(const GenerateArgs& args) {
  return run_guarded("generate", [&] {
    GenSpec spec;
    double train_fraction = 0.9;
    int n_negatives = 5;
    if (!args.spec_path.empty()) {
      spec = gen_spec_from_json_file(args.spec_path);
      std::ifstream in(args.spec_path);
      const auto doc = nlohmann::json::parse(in);
      if (doc.contains("train_fraction")) {
        train_fraction = doc["train_fraction"].get<double>();
      }
      if (doc.contains("n_negatives")) {
        n_negatives = doc["n_negatives"].get<int>();
      }
    }

    const GeneratedData data = generate_corpus(spec);
    fs::create_directories(args.out_dir);
    write_documents_jsonl(join(args.out_dir, "documents.jsonl"),
                          data.corpus.docs());
    write_positives_jsonl(join(args.out_dir, "positives.jsonl"),
                          data.positives);

    Rng split_rng(spec.seed + 1);
    const Splits splits =
        split_queries(data.corpus.query_ids(), train_fraction, split_rng);
    write_splits_json(join(args.out_dir, "splits.json"), splits);

    Rng example_rng(spec.seed + 2);
    const auto examples = build_contrastive_examples(
        splits.train_query_ids, data.positives, data.corpus.candidate_ids(),
        n_negatives, example_rng, "random");
    write_examples_jsonl(join(args.out_dir, "examples_random.jsonl"),
                         examples);

    double positives_total = 0.0;
    for (const auto& [query_id, ids] : data.positives) {
      positives_total += static_cast<double>(ids.size());
    }
    const double mean_positives =
        positives_total / static_cast<double>(data.positives.size());

    // How often the text-overlap oracle prefers a rule-negative over a
    // rule-positive: the measured tension between the two stages.
    Rng probe_rng(spec.seed + 3);
    int disagreements = 0;
    int probes = 0;
    const auto candidate_ids = data.corpus.candidate_ids();
    for (const auto& query_id : splits.train_query_ids) {
      if (probes >= 200) break;
      const auto& pos = data.positives.at(query_id);
      const auto& pos_id =
          *std::next(pos.begin(), static_cast<long>(probe_rng.index(pos.size())));
      std::string neg_id;
      do {
        neg_id = candidate_ids[probe_rng.index(candidate_ids.size())];
      } while (pos.count(neg_id) != 0);
      const auto& query = data.corpus.at(query_id);
      if (oracle_score(query, data.corpus.at(neg_id)) >
          oracle_score(query, data.corpus.at(pos_id))) {
        ++disagreements;
      }
      ++probes;
    }

    std::cout << "generated " << data.corpus.query_ids().size()
              << " queries, " << candidate_ids.size() << " candidates\n"
              << "train/test queries: " << splits.train_query_ids.size()
              << "/" << splits.test_query_ids.size() << "\n"
              << "mean positives per query: " << fmt(mean_positives) << "\n"
              << "oracle vs rule disagreement (sampled pos/neg pairs): "
              << fmt(static_cast<double>(disagreements) /
                     static_cast<double>(std::max(probes, 1)))
              << "\n";
    return 0;
  });
}

namespace {

void write_stage_outputs(const std::string& out_checkpoint,
                         const std::string& stage, const EncoderModel& model,
                         const DataDir& data, const FeatureCache& features,
                         bool quiet) {
  save_checkpoint(model, stage_path(out_checkpoint, stage, ""));
  const EvalReport report =
      evaluate(model, data.corpus, features, data.splits.test_query_ids,
               data.positives, nullptr);
  write_text(stage_path(out_checkpoint, stage, ".metrics.json"),
             report_to_json(report) + "\n");
  if (!quiet) {
    std::cout << "stage " << stage << ": nDCG@20 " << fmt(report.ndcg.at(20))
              << ", recall@20 " << fmt(report.recall.at(20)) << "\n";
  }
}

}  // namespace

int cmd_train_cl(const TrainClArgs& args) {
  return run_guarded("train-cl", [&] {
    const DataDir data = load_data_dir(args.data_dir);
    const TrainConfig config =
        resolve_config(args.config_path, args.config_override);
    const Strategy strategy = strategy_from_string(args.strategy);
    const FeatureCache features(data.corpus, args.hash_dim);

    Rng init_rng(config.seed);
    const EncoderModel base = EncoderModel::init(
        args.hash_dim, args.hidden_dim, args.out_dim, init_rng);

    const auto random_examples =
        load_examples_jsonl(join(args.data_dir, "examples_random.jsonl"));

    auto train_stage = [&](EncoderModel from,
                           const std::vector<ContrastiveExample>& examples,
                           std::size_t stage_index) {
      TrainConfig stage_config = config;
      stage_config.seed = config.seed + stage_index;
      return train_contrastive(std::move(from), data.corpus, features,
                               examples, stage_config);
    };
    auto mine_stage = [&](const EncoderModel& model,
                          const std::string& stage_name,
                          std::uint64_t seed_offset) {
      Rng mine_rng(config.seed + seed_offset);
      std::vector<std::string> warnings;
      auto mined = mine_hard_negatives(
          model, data.corpus, features, random_examples, data.positives,
          args.mine_lo, args.mine_hi, config.num_negatives, mine_rng,
          stage_name, &warnings);
      for (const auto& w : warnings) std::cerr << "train-cl: " << w << "\n";
      write_examples_jsonl(
          join(args.data_dir, "examples_" + stage_name + ".jsonl"), mined);
      return mined;
    };

    // The mining chain is shared: hn1 comes from the random-stage model,
    // hn2 from the model after the hn1 stage.
    EncoderModel model_random = train_stage(base, random_examples, 0);
    write_stage_outputs(args.out_checkpoint, "random", model_random, data,
                        features, args.quiet);
    const auto hn1 = mine_stage(model_random, "hn1", 101);

    EncoderModel model_hn1 = train_stage(std::move(model_random), hn1, 1);
    write_stage_outputs(args.out_checkpoint, "hn1", model_hn1, data, features,
                        args.quiet);
    const auto hn2 = mine_stage(model_hn1, "hn2", 102);

    EncoderModel final_model;
    if (strategy == Strategy::Curriculum) {
      final_model = train_stage(std::move(model_hn1), hn2, 2);
      write_stage_outputs(args.out_checkpoint, "hn2", final_model, data,
                          features, args.quiet);
    } else {
      const std::vector<Stage> stages = {{"random", random_examples},
                                         {"hn1", hn1},
                                         {"hn2", hn2}};
      final_model = run_strategy(Strategy::Combined, stages, base,
                                 data.corpus, features, config);
      write_stage_outputs(args.out_checkpoint, "combined", final_model, data,
                          features, args.quiet);
    }
    save_checkpoint(final_model, args.out_checkpoint);
    return 0;
  });
}

int cmd_mine(const MineArgs& args) {
  return run_guarded("mine", [&] {
    const DataDir data = load_data_dir(args.data_dir);
    const EncoderModel model = load_checkpoint(args.checkpoint);
    const FeatureCache features(data.corpus, model.hash_dim);
    const auto examples = load_examples_jsonl(args.examples_path);
    Rng rng(args.seed);
    std::vector<std::string> warnings;
    const auto mined = mine_hard_negatives(
        model, data.corpus, features, examples, data.positives, args.rank_lo,
        args.rank_hi, args.n_per_query, rng, args.stage_name, &warnings);
    for (const auto& w : warnings) std::cerr << "mine: " << w << "\n";
    write_examples_jsonl(args.out_path, mined);
    std::cout << "mined " << mined.size() << " examples -> " << args.out_path
              << "\n";
    return 0;
  });
}

int cmd_annotate(const AnnotateArgs& args) {
  return run_guarded("annotate", [&] {
    const DataDir data = load_data_dir(args.data_dir);
    const EncoderModel model = load_checkpoint(args.checkpoint);
    const FeatureCache features(data.corpus, model.hash_dim);
    const Annotator annotator = annotator_from_string(args.annotator);

    Rng train_rng(args.seed);
    const auto train_tasks = build_tasks(
        model, data.corpus, features, data.splits.train_query_ids,
        args.train_pool_k, args.train_tasks_per_query, train_rng);
    Rng eval_rng(args.seed + 1);
    const auto eval_tasks = build_tasks(
        model, data.corpus, features, data.splits.test_query_ids,
        args.eval_pool_k, args.eval_tasks_per_query, eval_rng);

    fs::create_directories(args.out_dir);
    int exit_code = 0;

    auto annotate_all = [&](const std::vector<AnnotationTask>& tasks,
                            const std::string& out_name) {
      std::vector<PreferencePair> pairs;
      if (annotator == Annotator::Oracle) {
        pairs.reserve(tasks.size());
        for (const auto& task : tasks) {
          pairs.push_back(oracle_annotate(task, data.corpus));
        }
      } else {
        ChatEndpoint endpoint;
        endpoint.base_url = args.endpoint_url;
        endpoint.model_name = args.endpoint_model;
        if (const char* token = std::getenv("ANNOTATOR_API_TOKEN")) {
          endpoint.api_token = token;
        }
        std::string prompt_template = default_prompt_template();
        if (!args.prompt_template_path.empty()) {
          std::ifstream in(args.prompt_template_path, std::ios::binary);
          if (!in) {
            throw std::runtime_error("cannot open prompt template: " +
                                     args.prompt_template_path);
          }
          std::stringstream buffer;
          buffer << in.rdbuf();
          prompt_template = buffer.str();
        }
        const auto result = annotate_tasks_external(
            tasks, data.corpus, endpoint, prompt_template, args.concurrency);
        for (const auto& diag : result.diagnostics) {
          std::cerr << "annotate: " << diag << "\n";
        }
        if (result.n_transport_errors > 0) exit_code = 1;
        pairs = result.pairs;
      }
      write_pairs_jsonl(join(args.out_dir, out_name), pairs);
      if (!args.quiet) {
        std::cout << out_name << ": " << pairs.size() << " pairs from "
                  << tasks.size() << " tasks\n";
      }
    };

    annotate_all(train_tasks, "pairs_train.jsonl");
    annotate_all(eval_tasks, "pairs_eval.jsonl");
    return exit_code;
  });
}

int cmd_train_po(const TrainPoArgs& args) {
  return run_guarded("train-po", [&] {
    TrainConfig config = resolve_config(args.config_path, args.config_override);
    const MethodSpec spec = parse_method_spec(args.method);
    if (spec.shape) config.loss_shape = *spec.shape;
    if (spec.method == PrefMethod::SFT && args.beta_flag_given) {
      std::cerr << "train-po: warning: --beta is ignored by the sft method\n";
    }

    const EncoderModel policy = load_checkpoint(args.checkpoint);
    std::optional<EncoderModel> ref;
    if (spec.method == PrefMethod::RankPO) {
      ref = load_checkpoint(args.ref_checkpoint.empty() ? args.checkpoint
                                                        : args.ref_checkpoint);
    }

    const DataDir data = load_data_dir(args.data_dir);
    const auto pairs = load_pairs_jsonl(args.pairs_path);
    const FeatureCache features(data.corpus, policy.hash_dim);

    std::ofstream log_file;
    PrefLogSink sink;
    if (!args.log_path.empty()) {
      log_file.open(args.log_path, std::ios::binary | std::ios::trunc);
      if (!log_file) {
        throw std::runtime_error("cannot open step log: " + args.log_path);
      }
      sink = [&log_file](const PrefStepLog& entry) {
        nlohmann::json record{{"step", entry.step},
                              {"loss", entry.loss},
                              {"mean_u", entry.mean_u},
                              {"lr", entry.lr}};
        log_file << record.dump() << '\n';
      };
    }

    const EncoderModel trained = train_preference(
        policy, ref ? &*ref : nullptr, pairs, data.corpus, features, config,
        spec.method, sink);
    save_checkpoint(trained, args.out_checkpoint);
    if (!args.quiet) {
      std::cout << "trained " << args.method << " on " << pairs.size()
                << " pairs -> " << args.out_checkpoint << "\n";
    }
    return 0;
  });
}

int cmd_sweep(const SweepArgs& args) {
  return run_guarded("sweep", [&] {
    const DataDir data = load_data_dir(args.data_dir);
    const EncoderModel base = load_checkpoint(args.checkpoint);
    const FeatureCache features(data.corpus, base.hash_dim);
    const auto train_pairs = load_pairs_jsonl(args.train_pairs_path);
    const auto eval_pairs = load_pairs_jsonl(args.eval_pairs_path);
    const TrainConfig base_config =
        resolve_config(args.config_path, args.config_override);

    const auto& methods =
        args.methods.empty() ? default_sweep_methods() : args.methods;
    const auto& lrs = args.learning_rates.empty()
                          ? default_sweep_learning_rates()
                          : args.learning_rates;
    const std::vector<std::uint64_t> seeds =
        args.seeds.empty() ? std::vector<std::uint64_t>{1, 2} : args.seeds;

    struct Cell {
      std::string method;
      double lr = 0.0;
      std::uint64_t seed = 0;
      std::string row;
      std::string error;
    };
    std::vector<Cell> cells;
    for (const auto& method : methods) {
      parse_method_spec(method);  // fail fast on typos
      for (double lr : lrs) {
        for (std::uint64_t seed : seeds) {
          cells.push_back({method, lr, seed, "", ""});
        }
      }
    }

    auto run_cell = [&](Cell& cell) {
      try {
        const MethodSpec spec = parse_method_spec(cell.method);
        TrainConfig config = base_config;
        config.learning_rate = cell.lr;
        config.seed = cell.seed;
        if (spec.shape) config.loss_shape = *spec.shape;

        const EncoderModel* ref =
            spec.method == PrefMethod::RankPO ? &base : nullptr;
        const EncoderModel trained =
            train_preference(base, ref, train_pairs, data.corpus, features,
                             config, spec.method);
        const EvalReport report =
            evaluate(trained, data.corpus, features,
                     data.splits.test_query_ids, data.positives, &eval_pairs);

        std::ostringstream row;
        row << to_string(spec.method) << ','
            << (spec.method == PrefMethod::SFT
                    ? "-"
                    : to_string(spec.shape ? *spec.shape
                                           : config.loss_shape))
            << ',' << fmt_lr(cell.lr) << ',' << cell.seed << ','
            << fmt(report.alignment);
        for (int k : {5, 20, 100}) row << ',' << fmt(report.mrr.at(k));
        for (int k : {5, 20, 100}) row << ',' << fmt(report.recall.at(k));
        for (int k : {5, 20, 100}) row << ',' << fmt(report.ndcg.at(k));
        cell.row = row.str();
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    };

    const int jobs = std::max(1, args.jobs);
    if (jobs == 1) {
      for (auto& cell : cells) run_cell(cell);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> workers;
      for (int t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            run_cell(cells[i]);
          }
        });
      }
      for (auto& worker : workers) worker.join();
    }

    std::ostringstream csv;
    csv << "method,loss_shape,lr,seed,alignment,"
           "mrr@5,mrr@20,mrr@100,recall@5,recall@20,recall@100,"
           "ndcg@5,ndcg@20,ndcg@100\n";
    int failures = 0;
    for (const auto& cell : cells) {
      if (!cell.error.empty()) {
        ++failures;
        std::cerr << "sweep: cell (" << cell.method << ", lr "
                  << fmt_lr(cell.lr) << ", seed " << cell.seed
                  << ") failed: " << cell.error << "\n";
        continue;
      }
      csv << cell.row << '\n';
      if (!args.quiet) std::cout << cell.row << "\n";
    }
    write_text(args.out_csv, csv.str());
    return failures == 0 ? 0 : 1;
  });
}

int cmd_evaluate(const EvaluateArgs& args) {
  return run_guarded("evaluate", [&] {
    const DataDir data = load_data_dir(args.data_dir);
    const EncoderModel model = load_checkpoint(args.checkpoint);
    const FeatureCache features(data.corpus, model.hash_dim);

    std::vector<PreferencePair> eval_pairs;
    if (!args.eval_pairs_path.empty()) {
      eval_pairs = load_pairs_jsonl(args.eval_pairs_path);
    }
    const EvalReport report =
        evaluate(model, data.corpus, features, data.splits.test_query_ids,
                 data.positives, eval_pairs.empty() ? nullptr : &eval_pairs);
    write_text(args.out_json, report_to_json(report) + "\n");

    if (!args.out_csv.empty()) {
      std::ostringstream csv;
      csv << "alignment";
      for (const char* name : {"mrr", "recall", "ndcg"}) {
        for (int k : kMetricCutoffs) csv << ',' << name << '@' << k;
      }
      csv << '\n'
          << (report.has_alignment ? fmt(report.alignment) : std::string("-"));
      for (const auto* metric : {&report.mrr, &report.recall, &report.ndcg}) {
        for (int k : kMetricCutoffs) csv << ',' << fmt(metric->at(k));
      }
      csv << '\n';
      write_text(args.out_csv, csv.str());
    }
    std::cout << report_to_json(report) << "\n";
    return 0;
  });
}

}  // namespace rankpo::cli
