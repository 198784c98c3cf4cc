#include "rankpo/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rankpo {

void GenSpec::validate() const {
  if (n_queries < 1) throw std::invalid_argument("n_queries must be >= 1");
  if (n_candidates < 20) {
    throw std::invalid_argument("n_candidates must be >= 20");
  }
  if (n_cities < 2) throw std::invalid_argument("n_cities must be >= 2");
  if (n_fields < 4) throw std::invalid_argument("n_fields must be >= 4");
  if (vocab_size < n_fields * 8) {
    throw std::invalid_argument(
        "vocab_size too small for per-field vocabulary buckets");
  }
}

GenSpec gen_spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec: " + path);
  const auto doc = nlohmann::json::parse(in);
  GenSpec spec;
  if (doc.contains("n_queries")) spec.n_queries = doc["n_queries"].get<int>();
  if (doc.contains("n_candidates")) {
    spec.n_candidates = doc["n_candidates"].get<int>();
  }
  if (doc.contains("n_cities")) spec.n_cities = doc["n_cities"].get<int>();
  if (doc.contains("n_fields")) spec.n_fields = doc["n_fields"].get<int>();
  if (doc.contains("vocab_size")) {
    spec.vocab_size = doc["vocab_size"].get<int>();
  }
  if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
  spec.validate();
  return spec;
}

bool rule_positive(const JdRule& rule, const Document& candidate) {
  if (candidate.location != rule.city) return false;
  if (candidate.seniority_years < rule.band_lo ||
      candidate.seniority_years > rule.band_hi) {
    return false;
  }
  for (int area : candidate.research_areas) {
    if (std::find(rule.areas.begin(), rule.areas.end(), area) !=
        rule.areas.end()) {
      return true;
    }
  }
  return false;
}

namespace {

constexpr int kMaxSeniority = 40;
constexpr int kMaxJdResamples = 200;
constexpr double kTopicalTokenRate = 0.7;

constexpr int kSeniorityBucketYears = 5;
constexpr int kCandidateSenReps = 3;
constexpr int kJdSenReps = 3;

std::string doc_id(char prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%05d", prefix, i);
  return buf;
}

struct Vocabulary {
  int common_size = 0;
  int bucket_size = 0;

  std::string common_word(std::size_t i) const {
    return "w" + std::to_string(i);
  }
  std::string field_word(int field, std::size_t i) const {
    return "w" + std::to_string(static_cast<std::size_t>(common_size) +
                                static_cast<std::size_t>(field) * bucket_size +
                                i);
  }
};

std::string sample_text(const Vocabulary& vocab,
                        const std::vector<int>& areas, int n_tokens,
                        Rng& rng) {
  std::string text;
  for (int t = 0; t < n_tokens; ++t) {
    if (!text.empty()) text.push_back(' ');
    if (rng.uniform() < kTopicalTokenRate) {
      const int area = areas[rng.index(areas.size())];
      text += vocab.field_word(area,
                               rng.index(static_cast<std::size_t>(vocab.bucket_size)));
    } else {
      text += vocab.common_word(
          rng.index(static_cast<std::size_t>(vocab.common_size)));
    }
  }
  return text;
}

std::vector<int> sample_areas(int n_fields, int count, Rng& rng) {
  std::vector<int> areas;
  for (std::size_t idx :
       rng.sample_indices(static_cast<std::size_t>(n_fields),
                          static_cast<std::size_t>(count))) {
    areas.push_back(static_cast<int>(idx));
  }
  std::sort(areas.begin(), areas.end());
  return areas;
}

}  // namespace

GeneratedData generate_corpus(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  Vocabulary vocab;
  vocab.common_size = spec.vocab_size / 4;
  vocab.bucket_size = (spec.vocab_size - vocab.common_size) / spec.n_fields;

  GeneratedData data;

  std::vector<Document> candidates;
  candidates.reserve(static_cast<std::size_t>(spec.n_candidates));
  for (int i = 0; i < spec.n_candidates; ++i) {
    Document doc;
    doc.id = doc_id('c', i);
    doc.kind = DocKind::Candidate;
    doc.location = static_cast<int>(rng.index(spec.n_cities));
    doc.seniority_years = static_cast<int>(rng.index(kMaxSeniority + 1));
    doc.research_areas =
        sample_areas(spec.n_fields, 1 + static_cast<int>(rng.index(3)), rng);
    const int n_tokens = 100 + static_cast<int>(rng.index(301));
    doc.text = sample_text(vocab, doc.research_areas, n_tokens, rng);
    // Seniority enters the text as a 5-year-bucket token so a
    // bag-of-words model can see it; repeats raise its weight under l2
    // normalization but are invisible to the token-set oracle.
    for (int rep = 0; rep < kCandidateSenReps; ++rep) {
      doc.text +=
          " senb" + std::to_string(doc.seniority_years / kSeniorityBucketYears);
    }
    validate_document(doc);
    candidates.push_back(std::move(doc));
  }

  std::vector<Document> queries;
  queries.reserve(static_cast<std::size_t>(spec.n_queries));
  for (int i = 0; i < spec.n_queries; ++i) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxJdResamples && !accepted; ++attempt) {
      JdRule rule;
      rule.city = static_cast<int>(rng.index(spec.n_cities));
      // Bands cover one or two whole seniority buckets.
      const int lo_bucket = static_cast<int>(rng.index(8));
      const int n_buckets = 1 + static_cast<int>(rng.index(2));
      rule.band_lo = kSeniorityBucketYears * lo_bucket;
      rule.band_hi = std::min(
          kMaxSeniority,
          kSeniorityBucketYears * (lo_bucket + n_buckets) - 1);
      rule.areas =
          sample_areas(spec.n_fields, 1 + static_cast<int>(rng.index(2)), rng);

      Document doc;
      doc.id = doc_id('q', i);
      doc.kind = DocKind::Query;
      doc.location = rule.city;
      doc.seniority_years = (rule.band_lo + rule.band_hi) / 2;
      doc.research_areas = rule.areas;
      const int n_tokens = 30 + static_cast<int>(rng.index(91));
      doc.text = sample_text(vocab, rule.areas, n_tokens, rng);
      for (int rep = 0; rep < kJdSenReps; ++rep) {
        for (int b = rule.band_lo / kSeniorityBucketYears;
             b <= rule.band_hi / kSeniorityBucketYears; ++b) {
          doc.text += " senb" + std::to_string(b);
        }
      }

      std::set<std::string> pos;
      for (const auto& cand : candidates) {
        if (rule_positive(rule, cand)) pos.insert(cand.id);
      }
      if (pos.empty()) continue;

      validate_document(doc);
      data.positives.emplace(doc.id, std::move(pos));
      data.rules.emplace(doc.id, std::move(rule));
      queries.push_back(std::move(doc));
      accepted = true;
    }
    if (!accepted) {
      throw std::runtime_error(
          "generate_corpus: no positive candidates found for a JD after " +
          std::to_string(kMaxJdResamples) +
          " resamples; the spec is infeasible");
    }
  }

  for (auto& doc : candidates) data.corpus.add(std::move(doc));
  for (auto& doc : queries) data.corpus.add(std::move(doc));
  return data;
}

Splits split_queries(const std::vector<std::string>& query_ids,
                     double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0,1)");
  }
  std::vector<std::string> shuffled = query_ids;
  rng.shuffle(shuffled);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(shuffled.size())));
  Splits splits;
  splits.train_query_ids.assign(shuffled.begin(), shuffled.begin() + n_train);
  splits.test_query_ids.assign(shuffled.begin() + n_train, shuffled.end());
  std::sort(splits.train_query_ids.begin(), splits.train_query_ids.end());
  std::sort(splits.test_query_ids.begin(), splits.test_query_ids.end());
  return splits;
}

std::vector<ContrastiveExample> build_contrastive_examples(
    const std::vector<std::string>& query_ids, const RelevanceSets& positives,
    const std::vector<std::string>& candidate_ids, int n_negatives, Rng& rng,
    const std::string& stage_name) {
  std::vector<ContrastiveExample> examples;
  examples.reserve(query_ids.size());
  for (const auto& query_id : query_ids) {
    const auto it = positives.find(query_id);
    if (it == positives.end() || it->second.empty()) {
      throw std::runtime_error("build_contrastive_examples: query " +
                               query_id + " has no positives");
    }
    const auto& pos = it->second;
    if (candidate_ids.size() - pos.size() <
        static_cast<std::size_t>(n_negatives)) {
      throw std::runtime_error(
          "build_contrastive_examples: fewer than n_negatives non-positive "
          "candidates for query " + query_id);
    }

    ContrastiveExample ex;
    ex.query_id = query_id;
    ex.stage = stage_name;
    ex.positive_id = *std::next(pos.begin(),
                                static_cast<long>(rng.index(pos.size())));
    std::set<std::string> chosen;
    while (ex.negative_ids.size() < static_cast<std::size_t>(n_negatives)) {
      const auto& id = candidate_ids[rng.index(candidate_ids.size())];
      if (pos.count(id) != 0 || !chosen.insert(id).second) continue;
      ex.negative_ids.push_back(id);
    }
    validate_example(ex);
    examples.push_back(std::move(ex));
  }
  return examples;
}

}  // namespace rankpo
