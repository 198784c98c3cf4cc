#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rankpo/encoder.hpp"
#include "rankpo/losses.hpp"
#include "rankpo/types.hpp"

namespace rankpo {

enum class PrefMethod { RankPO, SimRankPO, SFT };

PrefMethod pref_method_from_string(const std::string& s);
const char* to_string(PrefMethod method);

struct PrefStepLog {
  long step = 0;
  double loss = 0.0;
  double mean_u = 0.0;
  double lr = 0.0;
};

using PrefLogSink = std::function<void(const PrefStepLog&)>;

// Mean loss and policy gradients over a batch of preference pairs.
// `ref` may be null except for RankPO. Returns {mean loss, mean u}.
std::pair<double, double> preference_batch_loss(
    const EncoderModel& model, const EncoderModel* ref,
    const FeatureCache& features, std::span<const PreferencePair> pairs,
    PrefMethod method, double beta, double tau, LossShape shape,
    Gradients& acc);

// config.epochs over shuffled pairs in batches of config.batch_size; each
// step encodes (query, winner, loser) under the policy (and the reference
// for RankPO, with no gradient through it). The reference model is never
// mutated.
EncoderModel train_preference(EncoderModel model, const EncoderModel* ref,
                              const std::vector<PreferencePair>& pairs,
                              const Corpus& corpus,
                              const FeatureCache& features,
                              const TrainConfig& config, PrefMethod method,
                              const PrefLogSink& log = nullptr);

}  // namespace rankpo
