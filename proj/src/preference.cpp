#include "rankpo/preference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace rankpo {

PrefMethod pref_method_from_string(const std::string& s) {
  if (s == "rankpo") return PrefMethod::RankPO;
  if (s == "simrankpo") return PrefMethod::SimRankPO;
  if (s == "sft") return PrefMethod::SFT;
  throw std::invalid_argument("unknown preference method: " + s);
}

const char* to_string(PrefMethod method) {
  switch (method) {
    case PrefMethod::RankPO: return "rankpo";
    case PrefMethod::SimRankPO: return "simrankpo";
    case PrefMethod::SFT: return "sft";
  }
  return "?";
}

std::pair<double, double> preference_batch_loss(
    const EncoderModel& model, const EncoderModel* ref,
    const FeatureCache& features, std::span<const PreferencePair> pairs,
    PrefMethod method, double beta, double tau, LossShape shape,
    Gradients& acc) {
  if (pairs.empty()) {
    throw std::invalid_argument("preference_batch_loss: empty batch");
  }
  if (method == PrefMethod::RankPO && ref == nullptr) {
    throw std::invalid_argument("RankPO requires a reference model");
  }

  // Encode each distinct document of the batch once.
  std::vector<std::string> batch_docs;
  std::unordered_set<std::string> seen;
  for (const auto& pair : pairs) {
    for (const auto* id : {&pair.query_id, &pair.winner_id, &pair.loser_id}) {
      if (seen.insert(*id).second) batch_docs.push_back(*id);
    }
  }
  std::unordered_map<std::string, EncodeTrace> traces;
  std::unordered_map<std::string, Embedding> ref_embeddings;
  traces.reserve(batch_docs.size());
  for (const auto& id : batch_docs) {
    traces.emplace(id, encode_traced(model, features.get(id)));
    if (method == PrefMethod::RankPO) {
      ref_embeddings.emplace(id, encode(*ref, features.get(id)));
    }
  }

  const double inv_batch = 1.0 / static_cast<double>(pairs.size());
  const std::size_t od = model.out_dim;
  std::unordered_map<std::string, std::vector<double>> d_embedding;
  auto grad_of = [&](const std::string& id) -> std::vector<double>& {
    auto [it, inserted] = d_embedding.try_emplace(id);
    if (inserted) it->second.assign(od, 0.0);
    return it->second;
  };

  double loss_sum = 0.0;
  double u_sum = 0.0;
  for (const auto& pair : pairs) {
    const auto& eq = traces.at(pair.query_id).embedding;
    const auto& ew = traces.at(pair.winner_id).embedding;
    const auto& el = traces.at(pair.loser_id).embedding;
    const double sim_w = similarity(eq, ew);
    const double sim_l = similarity(eq, el);

    double loss = 0.0;
    double u = 0.0;
    double dsim_w = 0.0;
    double dsim_l = 0.0;
    switch (method) {
      case PrefMethod::RankPO: {
        const auto& rq = ref_embeddings.at(pair.query_id);
        const double ref_w = similarity(rq, ref_embeddings.at(pair.winner_id));
        const double ref_l = similarity(rq, ref_embeddings.at(pair.loser_id));
        const PreferenceLoss pl =
            rankpo_loss(sim_w, sim_l, ref_w, ref_l, beta, tau, shape);
        loss = pl.loss;
        u = pl.u;
        dsim_w = pl.dloss_du * beta / tau;
        dsim_l = -pl.dloss_du * beta / tau;
        break;
      }
      case PrefMethod::SimRankPO: {
        const PreferenceLoss pl =
            simrankpo_loss(sim_w, sim_l, beta, tau, shape);
        loss = pl.loss;
        u = pl.u;
        dsim_w = pl.dloss_du * beta / tau;
        dsim_l = -pl.dloss_du * beta / tau;
        break;
      }
      case PrefMethod::SFT: {
        const SftLoss sl = sft_loss(sim_w, sim_l, tau);
        loss = sl.loss;
        u = sl.logit;
        dsim_w = sl.dsim_w;
        dsim_l = sl.dsim_l;
        break;
      }
    }
    if (!std::isfinite(loss)) {
      throw std::runtime_error(
          "preference training: non-finite loss on pair for query " +
          pair.query_id);
    }
    loss_sum += loss;
    u_sum += u;

    dsim_w *= inv_batch;
    dsim_l *= inv_batch;
    auto& dq = grad_of(pair.query_id);
    auto& dw = grad_of(pair.winner_id);
    auto& dl = grad_of(pair.loser_id);
    for (std::size_t o = 0; o < od; ++o) {
      dq[o] += dsim_w * ew.values[o] + dsim_l * el.values[o];
      dw[o] += dsim_w * eq.values[o];
      dl[o] += dsim_l * eq.values[o];
    }
  }

  for (const auto& id : batch_docs) {
    const auto it = d_embedding.find(id);
    if (it == d_embedding.end()) continue;
    backward_encode(model, features.get(id), traces.at(id), it->second, acc);
  }
  return {loss_sum * inv_batch, u_sum * inv_batch};
}

EncoderModel train_preference(EncoderModel model, const EncoderModel* ref,
                              const std::vector<PreferencePair>& pairs,
                              const Corpus& corpus,
                              const FeatureCache& features,
                              const TrainConfig& config, PrefMethod method,
                              const PrefLogSink& log) {
  config.validate();
  if (method == PrefMethod::RankPO) {
    if (ref == nullptr) {
      throw std::invalid_argument("RankPO requires a reference model");
    }
    if (!ref->same_shape(model)) {
      throw std::invalid_argument(
          "reference model shape differs from the policy");
    }
  }
  for (const auto& pair : pairs) {
    validate_pair(pair);
    for (const auto* id : {&pair.query_id, &pair.winner_id, &pair.loser_id}) {
      if (!corpus.has(*id)) {
        throw std::runtime_error("preference pair references unknown id " +
                                 *id);
      }
    }
  }
  if (pairs.empty() || config.epochs == 0) return model;

  const std::size_t n = pairs.size();
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
  std::vector<PreferencePair> batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t end = std::min(n, begin + batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(pairs[order[i]]);

      grads.reset();
      const auto [loss, mean_u] = preference_batch_loss(
          model, ref, features, batch, method, config.beta, config.tau_po,
          config.loss_shape, grads);
      optimizer.step(model, grads);
      if (log) {
        log({optimizer.steps_taken(), loss, mean_u,
             optimizer.lr_at(optimizer.steps_taken())});
      }
    }
  }
  return model;
}

}  // namespace rankpo
