#include "rankpo/types.hpp"

#include <algorithm>

namespace rankpo {

void validate_document(const Document& doc) {
  if (doc.id.empty()) {
    throw std::invalid_argument("document with empty id");
  }
  if (doc.seniority_years < 0) {
    throw std::invalid_argument("document " + doc.id +
                                ": seniority_years must be >= 0");
  }
  if (doc.kind == DocKind::Candidate && doc.research_areas.empty()) {
    throw std::invalid_argument("candidate " + doc.id +
                                ": research_areas must be non-empty");
  }
}

Corpus::Corpus(std::vector<Document> docs) {
  docs_.reserve(docs.size());
  for (auto& doc : docs) {
    add(std::move(doc));
  }
}

void Corpus::add(Document doc) {
  if (index_.count(doc.id) != 0) {
    throw std::invalid_argument("duplicate document id: " + doc.id);
  }
  index_.emplace(doc.id, docs_.size());
  docs_.push_back(std::move(doc));
}

const Document& Corpus::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::out_of_range("unknown document id: " + id);
  }
  return docs_[it->second];
}

std::vector<std::string> Corpus::candidate_ids() const {
  std::vector<std::string> out;
  for (const auto& doc : docs_) {
    if (doc.kind == DocKind::Candidate) out.push_back(doc.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Corpus::query_ids() const {
  std::vector<std::string> out;
  for (const auto& doc : docs_) {
    if (doc.kind == DocKind::Query) out.push_back(doc.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void validate_example(const ContrastiveExample& ex) {
  for (const auto& neg : ex.negative_ids) {
    if (neg == ex.positive_id) {
      throw std::invalid_argument("example for " + ex.query_id +
                                  ": positive listed among negatives");
    }
    if (neg == ex.query_id) {
      throw std::invalid_argument("example for " + ex.query_id +
                                  ": query listed among negatives");
    }
  }
  if (ex.positive_id == ex.query_id) {
    throw std::invalid_argument("example for " + ex.query_id +
                                ": query used as its own positive");
  }
}

void validate_pair(const PreferencePair& pair) {
  if (pair.winner_id == pair.loser_id) {
    throw std::invalid_argument("preference pair for " + pair.query_id +
                                ": winner equals loser");
  }
  if (pair.confidence < 0 || pair.confidence > 100) {
    throw std::invalid_argument("preference pair for " + pair.query_id +
                                ": confidence out of [0,100]");
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (num_negatives < 0) {
    throw std::invalid_argument("num_negatives must be >= 0");
  }
  if (!(tau_cl > 0.0)) throw std::invalid_argument("tau_cl must be > 0");
  if (!(tau_po > 0.0)) throw std::invalid_argument("tau_po must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (warmup_ratio < 0.0 || warmup_ratio > 1.0) {
    throw std::invalid_argument("warmup_ratio must be in [0,1]");
  }
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must be >= 0");
  }
}

const char* to_string(DocKind kind) {
  return kind == DocKind::Query ? "query" : "candidate";
}

const char* to_string(Annotator annotator) {
  return annotator == Annotator::Oracle ? "oracle" : "external";
}

const char* to_string(Schedule schedule) {
  return schedule == Schedule::Cosine ? "cosine" : "constant";
}

const char* to_string(LossShape shape) {
  return shape == LossShape::Sigmoid ? "sigmoid" : "hinge";
}

DocKind doc_kind_from_string(const std::string& s) {
  if (s == "query") return DocKind::Query;
  if (s == "candidate") return DocKind::Candidate;
  throw std::invalid_argument("unknown document kind: " + s);
}

Annotator annotator_from_string(const std::string& s) {
  if (s == "oracle") return Annotator::Oracle;
  if (s == "external") return Annotator::External;
  throw std::invalid_argument("unknown annotator: " + s);
}

Schedule schedule_from_string(const std::string& s) {
  if (s == "cosine") return Schedule::Cosine;
  if (s == "constant") return Schedule::Constant;
  throw std::invalid_argument("unknown schedule: " + s);
}

LossShape loss_shape_from_string(const std::string& s) {
  if (s == "sigmoid") return LossShape::Sigmoid;
  if (s == "hinge") return LossShape::Hinge;
  throw std::invalid_argument("unknown loss shape: " + s);
}

}  // namespace rankpo
