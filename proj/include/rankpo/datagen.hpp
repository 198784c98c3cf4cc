#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rankpo/rng.hpp"
#include "rankpo/types.hpp"

namespace rankpo {

struct GenSpec {
  int n_queries = 500;
  int n_candidates = 2000;
  int n_cities = 4;
  int n_fields = 48;
  int vocab_size = 3000;
  std::uint64_t seed = 1;

  void validate() const;
};

GenSpec gen_spec_from_json_file(const std::string& path);

// The hidden matching rule behind each JD.
struct JdRule {
  int city = 0;
  int band_lo = 0;
  int band_hi = 0;
  std::vector<int> areas;
};

bool rule_positive(const JdRule& rule, const Document& candidate);

struct GeneratedData {
  Corpus corpus;
  RelevanceSets positives;
  std::map<std::string, JdRule> rules;
};

// Synthetic JD/talent corpus. Each research field owns a disjoint topical
// vocabulary bucket on top of a shared common-word pool; candidates carry a
// city, seniority in [0,40], 1-3 research areas and 100-400 tokens of text;
// JDs carry a city, a required seniority band (surfaced in the JD text as
// one "sen<y>" token per admissible year), 1-2 target areas and 30-120
// topical tokens. A pair is positive iff the city matches, the seniority
// falls in the band and at least one area overlaps. JDs without any
// positive candidate are resampled (bounded; throws when the spec is
// infeasible).
GeneratedData generate_corpus(const GenSpec& spec);

// Split by query id; candidates are shared between splits.
Splits split_queries(const std::vector<std::string>& query_ids,
                     double train_fraction, Rng& rng);

// Per query: one uniformly sampled positive and n_negatives distinct
// non-positive candidates.
std::vector<ContrastiveExample> build_contrastive_examples(
    const std::vector<std::string>& query_ids, const RelevanceSets& positives,
    const std::vector<std::string>& candidate_ids, int n_negatives, Rng& rng,
    const std::string& stage_name = "random");

}  // namespace rankpo
