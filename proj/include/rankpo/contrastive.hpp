#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rankpo/encoder.hpp"
#include "rankpo/losses.hpp"
#include "rankpo/types.hpp"

namespace rankpo {

struct ContrastiveStepLog {
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

using ContrastiveLogSink = std::function<void(const ContrastiveStepLog&)>;

// InfoNCE loss and parameter gradients for one query against an explicit
// candidate pool (candidates[0] is the positive). Shared by the training
// loop and the gradient-check tests.
double contrastive_pool_loss(const EncoderModel& model,
                             const FeatureCache& features,
                             const std::string& query_id,
                             std::span<const std::string> candidate_ids,
                             double tau, double grad_scale, Gradients& acc);

// config.epochs over shuffled examples in batches of config.batch_size.
// Each query's pool is its positive followed by every other distinct
// candidate in the batch (own negatives plus the other queries' positives
// and negatives, deduplicated, its own positive excluded). Batch losses are
// arithmetic means.
EncoderModel train_contrastive(EncoderModel model, const Corpus& corpus,
                               const FeatureCache& features,
                               const std::vector<ContrastiveExample>& examples,
                               const TrainConfig& config,
                               const ContrastiveLogSink& log = nullptr);

// For each example, ranks all candidates under `model` (exact search,
// descending similarity, ties by id) and samples n_per_query negatives
// uniformly without replacement from 1-based rank positions [lo, hi],
// excluding every labeled positive of the query. If the window has fewer
// than n_per_query non-positives it is extended past hi and a warning is
// recorded.
std::vector<ContrastiveExample> mine_hard_negatives(
    const EncoderModel& model, const Corpus& corpus,
    const FeatureCache& features,
    const std::vector<ContrastiveExample>& examples,
    const RelevanceSets& positives, int rank_lo, int rank_hi, int n_per_query,
    Rng& rng, const std::string& stage_name,
    std::vector<std::string>* warnings = nullptr);

struct Stage {
  std::string name;
  std::vector<ContrastiveExample> examples;
};

enum class Strategy { Curriculum, Combined };

Strategy strategy_from_string(const std::string& s);

// Curriculum trains stage-by-stage, each stage starting from the previous
// stage's model (stage i uses seed config.seed + i). Combined concatenates
// all stages' examples and trains the base model once with config.seed.
EncoderModel run_strategy(Strategy strategy, std::span<const Stage> stages,
                          EncoderModel base_model, const Corpus& corpus,
                          const FeatureCache& features,
                          const TrainConfig& config,
                          std::vector<std::string>* consumed_stages = nullptr);

}  // namespace rankpo
