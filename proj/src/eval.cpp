#include "rankpo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace rankpo {

CandidateIndex::CandidateIndex(const EncoderModel& model, const Corpus& corpus,
                               const FeatureCache& features) {
  ids_ = corpus.candidate_ids();
  if (ids_.empty()) {
    throw std::invalid_argument("CandidateIndex: corpus has no candidates");
  }
  embeddings_.reserve(ids_.size());
  for (const auto& id : ids_) {
    embeddings_.push_back(encode(model, features.get(id)));
  }
}

std::vector<std::pair<std::string, double>> CandidateIndex::top_k(
    const Embedding& query, std::size_t k) const {
  const std::size_t n = ids_.size();
  std::vector<std::size_t> order(n);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
    scores[i] = similarity(query, embeddings_[i]);
  }
  const std::size_t take = std::min(k, n);
  // ids_ is ascending, so index order is the id tie-break.
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + take, order.end(), better);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.emplace_back(ids_[order[i]], scores[order[i]]);
  }
  return out;
}

std::vector<std::pair<std::string, double>> rank_candidates(
    const EncoderModel& model, const Document& query, const Corpus& corpus,
    const FeatureCache& features, std::size_t k) {
  if (k < 1) throw std::invalid_argument("rank_candidates: k must be >= 1");
  const CandidateIndex index(model, corpus, features);
  const Embedding query_emb = encode(model, featurize(query, model.hash_dim));
  return index.top_k(query_emb, k);
}

double mrr_at_k(std::span<const std::vector<std::string>> rankings,
                std::span<const std::set<std::string>> relevant, int k) {
  if (rankings.size() != relevant.size()) {
    throw std::invalid_argument("mrr_at_k: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const std::size_t depth =
        std::min<std::size_t>(rankings[q].size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
      if (relevant[q].count(rankings[q][i]) != 0) {
        sum += 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
  }
  return rankings.empty() ? 0.0 : sum / static_cast<double>(rankings.size());
}

double recall_at_k(std::span<const std::vector<std::string>> rankings,
                   std::span<const std::set<std::string>> relevant, int k) {
  if (rankings.size() != relevant.size()) {
    throw std::invalid_argument("recall_at_k: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (relevant[q].empty()) {
      throw std::invalid_argument("recall_at_k: empty relevance set");
    }
    const std::size_t depth =
        std::min<std::size_t>(rankings[q].size(), static_cast<std::size_t>(k));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
      if (relevant[q].count(rankings[q][i]) != 0) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(relevant[q].size());
  }
  return rankings.empty() ? 0.0 : sum / static_cast<double>(rankings.size());
}

double ndcg_at_k(std::span<const std::vector<std::string>> rankings,
                 std::span<const std::set<std::string>> relevant, int k,
                 int* n_zero_idcg) {
  if (rankings.size() != relevant.size()) {
    throw std::invalid_argument("ndcg_at_k: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const std::size_t n_rel = relevant[q].size();
    const std::size_t ideal_depth =
        std::min<std::size_t>(n_rel, static_cast<std::size_t>(k));
    if (ideal_depth == 0) {
      if (n_zero_idcg) ++*n_zero_idcg;
      continue;
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal_depth; ++i) {
      idcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
    const std::size_t depth =
        std::min<std::size_t>(rankings[q].size(), static_cast<std::size_t>(k));
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
      if (relevant[q].count(rankings[q][i]) != 0) {
        dcg += 1.0 / std::log2(static_cast<double>(i + 2));
      }
    }
    sum += dcg / idcg;
  }
  return rankings.empty() ? 0.0 : sum / static_cast<double>(rankings.size());
}

double alignment_score(const EncoderModel& model,
                       const std::vector<PreferencePair>& pairs,
                       const Corpus& corpus, const FeatureCache& features) {
  if (pairs.empty()) {
    throw std::invalid_argument("alignment_score: no pairs given");
  }
  std::unordered_map<std::string, Embedding> cache;
  auto emb = [&](const std::string& id) -> const Embedding& {
    auto it = cache.find(id);
    if (it == cache.end()) {
      if (!corpus.has(id)) {
        throw std::runtime_error("alignment_score: unknown id " + id);
      }
      it = cache.emplace(id, encode(model, features.get(id))).first;
    }
    return it->second;
  };
  double score = 0.0;
  for (const auto& pair : pairs) {
    const auto& eq = emb(pair.query_id);
    const double sim_w = similarity(eq, emb(pair.winner_id));
    const double sim_l = similarity(eq, emb(pair.loser_id));
    if (sim_w > sim_l) {
      score += 1.0;
    } else if (sim_w == sim_l) {
      score += 0.5;
    }
  }
  return score / static_cast<double>(pairs.size());
}

EvalReport evaluate(const EncoderModel& model, const Corpus& corpus,
                    const FeatureCache& features,
                    const std::vector<std::string>& query_ids,
                    const RelevanceSets& positives,
                    const std::vector<PreferencePair>* eval_pairs) {
  const CandidateIndex index(model, corpus, features);
  const int max_k = *std::max_element(kMetricCutoffs.begin(),
                                      kMetricCutoffs.end());

  EvalReport report;
  std::vector<std::vector<std::string>> rankings;
  std::vector<std::set<std::string>> relevant;
  for (const auto& query_id : query_ids) {
    const auto it = positives.find(query_id);
    if (it == positives.end() || it->second.empty()) {
      ++report.n_queries_no_relevant;
      continue;
    }
    const Embedding query_emb = encode(model, features.get(query_id));
    const auto top = index.top_k(query_emb, static_cast<std::size_t>(max_k));
    std::vector<std::string> ids;
    ids.reserve(top.size());
    for (const auto& [id, score] : top) ids.push_back(id);
    rankings.push_back(std::move(ids));
    relevant.push_back(it->second);
  }
  report.n_queries = static_cast<int>(rankings.size());
  for (int k : kMetricCutoffs) {
    report.mrr[k] = mrr_at_k(rankings, relevant, k);
    report.recall[k] = recall_at_k(rankings, relevant, k);
    report.ndcg[k] = ndcg_at_k(rankings, relevant, k);
  }
  if (eval_pairs != nullptr && !eval_pairs->empty()) {
    report.has_alignment = true;
    report.alignment = alignment_score(model, *eval_pairs, corpus, features);
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["n_queries"] = report.n_queries;
  doc["n_queries_no_relevant"] = report.n_queries_no_relevant;
  for (const auto& [k, v] : report.mrr) doc["mrr"][std::to_string(k)] = v;
  for (const auto& [k, v] : report.recall) {
    doc["recall"][std::to_string(k)] = v;
  }
  for (const auto& [k, v] : report.ndcg) doc["ndcg"][std::to_string(k)] = v;
  if (report.has_alignment) doc["alignment"] = report.alignment;
  return doc.dump(2);
}

}  // namespace rankpo
