#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "rankpo/encoder.hpp"
#include "rankpo/types.hpp"

namespace rankpo {

// Precomputed candidate embeddings; ids ascending so score ties break
// deterministically by id.
class CandidateIndex {
 public:
  CandidateIndex(const EncoderModel& model, const Corpus& corpus,
                 const FeatureCache& features);

  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<Embedding>& embeddings() const { return embeddings_; }

  // Exact top-k by similarity, descending, ties by id ascending.
  std::vector<std::pair<std::string, double>> top_k(const Embedding& query,
                                                    std::size_t k) const;

 private:
  std::vector<std::string> ids_;
  std::vector<Embedding> embeddings_;
};

std::vector<std::pair<std::string, double>> rank_candidates(
    const EncoderModel& model, const Document& query, const Corpus& corpus,
    const FeatureCache& features, std::size_t k);

// Appendix-style binary-relevance metrics. `rankings` and `relevant` are
// parallel per-query arrays; each relevant set is expected non-empty.
double mrr_at_k(std::span<const std::vector<std::string>> rankings,
                std::span<const std::set<std::string>> relevant, int k);
double recall_at_k(std::span<const std::vector<std::string>> rankings,
                   std::span<const std::set<std::string>> relevant, int k);
// Queries with zero relevant items contribute 0 and are counted in
// *n_zero_idcg when provided.
double ndcg_at_k(std::span<const std::vector<std::string>> rankings,
                 std::span<const std::set<std::string>> relevant, int k,
                 int* n_zero_idcg = nullptr);

// Fraction of pairs with sim(query, winner) > sim(query, loser); exact
// ties count 0.5. Throws on an empty pair list.
double alignment_score(const EncoderModel& model,
                       const std::vector<PreferencePair>& pairs,
                       const Corpus& corpus, const FeatureCache& features);

// MRR/Recall/nDCG at k in {5,10,20,100} over the given queries, plus
// alignment when eval_pairs is non-null and non-empty. Queries without any
// relevant candidate are excluded from the means and counted in the report.
EvalReport evaluate(const EncoderModel& model, const Corpus& corpus,
                    const FeatureCache& features,
                    const std::vector<std::string>& query_ids,
                    const RelevanceSets& positives,
                    const std::vector<PreferencePair>* eval_pairs);

std::string report_to_json(const EvalReport& report);

}  // namespace rankpo
