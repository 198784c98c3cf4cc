#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace rankpo {

enum class DocKind { Query, Candidate };

// A job description (Query) or a talent profile (Candidate).
// location < 0 and seniority_years < 0 mean "not set"; corpus documents
// always carry valid values (see validate_document).
struct Document {
  std::string id;
  DocKind kind = DocKind::Candidate;
  std::string text;
  int location = -1;
  int seniority_years = -1;
  std::vector<int> research_areas;
};

void validate_document(const Document& doc);

// Documents indexed by id. Ids are unique within a corpus.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> docs);

  void add(Document doc);
  bool has(const std::string& id) const { return index_.count(id) != 0; }
  const Document& at(const std::string& id) const;
  const std::vector<Document>& docs() const { return docs_; }
  std::size_t size() const { return docs_.size(); }

  // Sorted ascending by id.
  std::vector<std::string> candidate_ids() const;
  std::vector<std::string> query_ids() const;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ContrastiveExample {
  std::string query_id;
  std::string positive_id;
  std::vector<std::string> negative_ids;
  std::string stage;  // "random", "hn1", "hn2", ...
};

void validate_example(const ContrastiveExample& ex);

enum class Annotator { Oracle, External };

struct PreferencePair {
  std::string query_id;
  std::string winner_id;
  std::string loser_id;
  Annotator annotator = Annotator::Oracle;
  int confidence = 50;  // 0..100
};

void validate_pair(const PreferencePair& pair);

enum class Schedule { Cosine, Constant };
enum class LossShape { Sigmoid, Hinge };

struct TrainConfig {
  int epochs = 3;
  int batch_size = 8;
  int num_negatives = 5;
  double learning_rate = 4e-3;
  double warmup_ratio = 0.1;
  Schedule schedule = Schedule::Cosine;
  double tau_cl = 0.02;
  double tau_po = 0.1;
  double beta = 2.0;
  LossShape loss_shape = LossShape::Sigmoid;
  std::uint64_t seed = 42;

  void validate() const;
};

// Query id -> the set of candidate ids that are rule-positive for it.
using RelevanceSets = std::map<std::string, std::set<std::string>>;

struct Splits {
  std::vector<std::string> train_query_ids;
  std::vector<std::string> test_query_ids;
};

inline const std::vector<int> kMetricCutoffs = {5, 10, 20, 100};

struct EvalReport {
  std::map<int, double> mrr;
  std::map<int, double> recall;
  std::map<int, double> ndcg;
  bool has_alignment = false;
  double alignment = 0.0;
  int n_queries = 0;
  int n_queries_no_relevant = 0;
};

const char* to_string(DocKind kind);
const char* to_string(Annotator annotator);
const char* to_string(Schedule schedule);
const char* to_string(LossShape shape);

DocKind doc_kind_from_string(const std::string& s);
Annotator annotator_from_string(const std::string& s);
Schedule schedule_from_string(const std::string& s);
LossShape loss_shape_from_string(const std::string& s);

}  // namespace rankpo
