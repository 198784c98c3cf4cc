#include "rankpo/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "rankpo/eval.hpp"

namespace rankpo {

double contrastive_pool_loss(const EncoderModel& model,
                             const FeatureCache& features,
                             const std::string& query_id,
                             std::span<const std::string> candidate_ids,
                             double tau, double grad_scale, Gradients& acc) {
  const EncodeTrace query_trace = encode_traced(model, features.get(query_id));
  std::vector<EncodeTrace> cand_traces;
  cand_traces.reserve(candidate_ids.size());
  std::vector<double> sims;
  sims.reserve(candidate_ids.size());
  for (const auto& id : candidate_ids) {
    cand_traces.push_back(encode_traced(model, features.get(id)));
    sims.push_back(similarity(query_trace.embedding,
                              cand_traces.back().embedding));
  }
  const SoftmaxLoss ce = softmax_xent(sims, 0, tau);

  const std::size_t od = model.out_dim;
  std::vector<double> d_query(od, 0.0);
  std::vector<double> d_cand(od);
  for (std::size_t j = 0; j < candidate_ids.size(); ++j) {
    const double g = ce.dsims[j] * grad_scale;
    for (std::size_t o = 0; o < od; ++o) {
      d_query[o] += g * cand_traces[j].embedding.values[o];
      d_cand[o] = g * query_trace.embedding.values[o];
    }
    backward_encode(model, features.get(candidate_ids[j]), cand_traces[j],
                    d_cand, acc);
  }
  backward_encode(model, features.get(query_id), query_trace, d_query, acc);
  return ce.loss;
}

namespace {

void check_example_ids(const Corpus& corpus,
                       const std::vector<ContrastiveExample>& examples) {
  for (const auto& ex : examples) {
    if (!corpus.has(ex.query_id)) {
      throw std::runtime_error("example references unknown query " +
                               ex.query_id);
    }
    if (!corpus.has(ex.positive_id)) {
      throw std::runtime_error("example for " + ex.query_id +
                               " references unknown positive " +
                               ex.positive_id);
    }
    for (const auto& neg : ex.negative_ids) {
      if (!corpus.has(neg)) {
        throw std::runtime_error("example for " + ex.query_id +
                                 " references unknown negative " + neg);
      }
    }
  }
}

}  // namespace

EncoderModel train_contrastive(EncoderModel model, const Corpus& corpus,
                               const FeatureCache& features,
                               const std::vector<ContrastiveExample>& examples,
                               const TrainConfig& config,
                               const ContrastiveLogSink& log) {
  config.validate();
  check_example_ids(corpus, examples);
  if (examples.empty() || config.epochs == 0) return model;

  const std::size_t n = examples.size();
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  const long steps_per_epoch =
      static_cast<long>((n + batch_size - 1) / batch_size);
  const long total_steps = steps_per_epoch * config.epochs;

  AdamW optimizer(model, config.learning_rate, config.schedule,
                  config.warmup_ratio, total_steps);
  Gradients grads(model);
  Rng rng(config.seed);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  // Per-batch scratch, reused across steps.
  std::vector<std::string> batch_docs;
  std::unordered_set<std::string> seen;
  std::vector<std::string> pool;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t end = std::min(n, begin + batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);

      // Distinct candidates of the batch, first-seen order: for each
      // example its positive then its negatives.
      batch_docs.clear();
      seen.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& ex = examples[order[i]];
        if (seen.insert(ex.positive_id).second) {
          batch_docs.push_back(ex.positive_id);
        }
        for (const auto& neg : ex.negative_ids) {
          if (seen.insert(neg).second) batch_docs.push_back(neg);
        }
      }

      grads.reset();
      double batch_loss = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& ex = examples[order[i]];
        pool.clear();
        pool.push_back(ex.positive_id);
        for (const auto& id : batch_docs) {
          if (id != ex.positive_id) pool.push_back(id);
        }
        const double loss = contrastive_pool_loss(
            model, features, ex.query_id, pool, config.tau_cl, inv_batch,
            grads);
        if (!std::isfinite(loss)) {
          throw std::runtime_error(
              "train_contrastive: non-finite loss in batch containing query " +
              ex.query_id);
        }
        batch_loss += loss;
      }
      batch_loss *= inv_batch;

      optimizer.step(model, grads);
      if (log) {
        log({optimizer.steps_taken(), batch_loss,
             optimizer.lr_at(optimizer.steps_taken())});
      }
    }
  }
  return model;
}

std::vector<ContrastiveExample> mine_hard_negatives(
    const EncoderModel& model, const Corpus& corpus,
    const FeatureCache& features,
    const std::vector<ContrastiveExample>& examples,
    const RelevanceSets& positives, int rank_lo, int rank_hi, int n_per_query,
    Rng& rng, const std::string& stage_name,
    std::vector<std::string>* warnings) {
  check_example_ids(corpus, examples);
  const CandidateIndex index(model, corpus, features);
  const std::size_t n_candidates = index.ids().size();
  if (rank_lo < 1) {
    throw std::invalid_argument("mine_hard_negatives: rank_lo must be >= 1");
  }
  if (static_cast<std::size_t>(rank_hi) > n_candidates || rank_hi < rank_lo) {
    throw std::invalid_argument(
        "mine_hard_negatives: rank window outside candidate count");
  }

  std::vector<ContrastiveExample> mined;
  mined.reserve(examples.size());
  static const std::set<std::string> kNoPositives;

  for (const auto& ex : examples) {
    const Embedding query_emb =
        encode(model, features.get(ex.query_id));
    const auto ranked = index.top_k(query_emb, n_candidates);

    const auto pos_it = positives.find(ex.query_id);
    const auto& query_positives =
        pos_it == positives.end() ? kNoPositives : pos_it->second;

    std::vector<std::string> window_pool;
    for (std::size_t r = static_cast<std::size_t>(rank_lo);
         r <= static_cast<std::size_t>(rank_hi); ++r) {
      const auto& id = ranked[r - 1].first;
      if (query_positives.count(id) == 0) window_pool.push_back(id);
    }
    if (window_pool.size() < static_cast<std::size_t>(n_per_query)) {
      for (std::size_t r = static_cast<std::size_t>(rank_hi) + 1;
           r <= n_candidates &&
           window_pool.size() < static_cast<std::size_t>(n_per_query);
           ++r) {
        const auto& id = ranked[r - 1].first;
        if (query_positives.count(id) == 0) window_pool.push_back(id);
      }
      if (warnings) {
        warnings->push_back("query " + ex.query_id + ": rank window [" +
                            std::to_string(rank_lo) + "," +
                            std::to_string(rank_hi) +
                            "] exhausted after excluding positives; drew "
                            "from the next available ranks");
      }
    }

    const std::size_t take = std::min<std::size_t>(
        window_pool.size(), static_cast<std::size_t>(n_per_query));
    ContrastiveExample out;
    out.query_id = ex.query_id;
    out.positive_id = ex.positive_id;
    out.stage = stage_name;
    for (std::size_t idx : rng.sample_indices(window_pool.size(), take)) {
      out.negative_ids.push_back(window_pool[idx]);
    }
    mined.push_back(std::move(out));
  }
  return mined;
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "curriculum") return Strategy::Curriculum;
  if (s == "combined") return Strategy::Combined;
  throw std::invalid_argument("unknown strategy: " + s);
}

EncoderModel run_strategy(Strategy strategy, std::span<const Stage> stages,
                          EncoderModel base_model, const Corpus& corpus,
                          const FeatureCache& features,
                          const TrainConfig& config,
                          std::vector<std::string>* consumed_stages) {
  if (stages.empty()) {
    throw std::invalid_argument("run_strategy: no stages given");
  }
  if (strategy == Strategy::Curriculum) {
    EncoderModel model = std::move(base_model);
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (consumed_stages) consumed_stages->push_back(stages[i].name);
      TrainConfig stage_config = config;
      stage_config.seed = config.seed + i;
      model = train_contrastive(std::move(model), corpus, features,
                                stages[i].examples, stage_config);
    }
    return model;
  }
  std::vector<ContrastiveExample> combined;
  for (const auto& stage : stages) {
    if (consumed_stages) consumed_stages->push_back(stage.name);
    combined.insert(combined.end(), stage.examples.begin(),
                    stage.examples.end());
  }
  return train_contrastive(std::move(base_model), corpus, features, combined,
                           config);
}

}  // namespace rankpo
