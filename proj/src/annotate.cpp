#include "rankpo/annotate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace rankpo {

std::vector<AnnotationTask> build_tasks(
    const EncoderModel& model, const Corpus& corpus,
    const FeatureCache& features, const std::vector<std::string>& query_ids,
    int pool_k, int n_tasks_per_query, Rng& rng) {
  const CandidateIndex index(model, corpus, features);
  if (static_cast<std::size_t>(pool_k) > index.ids().size()) {
    throw std::invalid_argument(
        "build_tasks: pool_k exceeds candidate count");
  }
  if (pool_k < 2) {
    throw std::invalid_argument("build_tasks: pool must hold at least 2");
  }

  std::vector<AnnotationTask> tasks;
  tasks.reserve(query_ids.size() * static_cast<std::size_t>(n_tasks_per_query));
  for (const auto& query_id : query_ids) {
    const Embedding query_emb = encode(model, features.get(query_id));
    const auto pool = index.top_k(query_emb, static_cast<std::size_t>(pool_k));
    for (int t = 0; t < n_tasks_per_query; ++t) {
      const std::size_t i = rng.index(pool.size());
      std::size_t j = rng.index(pool.size() - 1);
      if (j >= i) ++j;
      AnnotationTask task;
      task.query_id = query_id;
      task.candidate_a_id = pool[i].first;
      task.candidate_b_id = pool[j].first;
      task.order =
          rng.index(2) == 0 ? PresentationOrder::AB : PresentationOrder::BA;
      task.pool_k = pool_k;
      tasks.push_back(std::move(task));
    }
  }
  return tasks;
}

namespace {

double jaccard_tokens(const std::string& a, const std::string& b) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  const std::unordered_set<std::string> sa(ta.begin(), ta.end());
  const std::unordered_set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t both = 0;
  for (const auto& t : sa) both += sb.count(t);
  return static_cast<double>(both) /
         static_cast<double>(sa.size() + sb.size() - both);
}

double jaccard_areas(const std::vector<int>& a, const std::vector<int>& b) {
  const std::set<int> sa(a.begin(), a.end());
  const std::set<int> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t both = 0;
  for (int x : sa) both += sb.count(x);
  return static_cast<double>(both) /
         static_cast<double>(sa.size() + sb.size() - both);
}

}  // namespace

double oracle_score(const Document& query, const Document& candidate) {
  return jaccard_tokens(query.text, candidate.text) +
         0.5 * jaccard_areas(query.research_areas, candidate.research_areas);
}

PreferencePair oracle_annotate(const AnnotationTask& task,
                               const Corpus& corpus) {
  const Document& query = corpus.at(task.query_id);
  const Document& cand_a = corpus.at(task.candidate_a_id);
  const Document& cand_b = corpus.at(task.candidate_b_id);
  const double score_a = oracle_score(query, cand_a);
  const double score_b = oracle_score(query, cand_b);

  PreferencePair pair;
  pair.query_id = task.query_id;
  pair.annotator = Annotator::Oracle;
  if (score_a > score_b ||
      (score_a == score_b && cand_a.id < cand_b.id)) {
    pair.winner_id = cand_a.id;
    pair.loser_id = cand_b.id;
  } else {
    pair.winner_id = cand_b.id;
    pair.loser_id = cand_a.id;
  }
  const double top = std::max(score_a, score_b);
  if (top > 0.0) {
    const double gap = std::abs(score_a - score_b) / top;
    pair.confidence =
        50 + static_cast<int>(std::lround(50.0 * std::min(1.0, gap)));
  } else {
    pair.confidence = 50;
  }
  return pair;
}

const std::string& default_prompt_template() {
  static const std::string kTemplate =
      "You are a professional recruitment expert in academic areas.\n"
      "\n"
      "I will provide you with a job description for a specific role and "
      "resumes/lists of articles from two candidates (keywords, title and "
      "abstract from the articles).\n"
      "\n"
      "Your task is to:\n"
      "1. Analyze each candidate's compatibility with the job description.\n"
      "2. Highlight the strengths and weaknesses of each candidate.\n"
      "3. Assign a compatibility score (out of 100) to each candidate.\n"
      "4. Recommend the most suitable candidate and explain the reasoning "
      "behind your recommendation.\n"
      "\n"
      "<Job Description>\n"
      "{JD}\n"
      "\n"
      "<Candidate A>\n"
      "{Candidate A}\n"
      "\n"
      "<Candidate B>\n"
      "{Candidate B}\n"
      "\n"
      "Your response should use the format:\n"
      "Comparison: <one-sentence comparison and explanation>\n"
      "Preferred: <\"A\" or \"B\">\n"
      "Confidence score: <100>\n";
  return kTemplate;
}

namespace {

void replace_all(std::string& text, const std::string& slot,
                 const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    text.replace(pos, slot.size(), value);
    pos += value.size();
  }
}

}  // namespace

std::string fill_prompt(const std::string& prompt_template,
                        const std::string& jd_text,
                        const std::string& candidate_a_text,
                        const std::string& candidate_b_text) {
  for (const char* slot : {"{JD}", "{Candidate A}", "{Candidate B}"}) {
    if (prompt_template.find(slot) == std::string::npos) {
      throw std::invalid_argument(std::string("prompt template missing ") +
                                  slot + " slot");
    }
  }
  std::string prompt = prompt_template;
  replace_all(prompt, "{JD}", jd_text);
  replace_all(prompt, "{Candidate A}", candidate_a_text);
  replace_all(prompt, "{Candidate B}", candidate_b_text);
  return prompt;
}

std::optional<ParsedReply> parse_annotation_reply(const std::string& reply) {
  ParsedReply parsed;
  bool found_preference = false;

  std::size_t line_start = 0;
  while (line_start <= reply.size()) {
    std::size_t line_end = reply.find('\n', line_start);
    if (line_end == std::string::npos) line_end = reply.size();
    const std::string line = reply.substr(line_start, line_end - line_start);
    line_start = line_end + 1;

    if (const auto at = line.find("Preferred:"); at != std::string::npos) {
      for (std::size_t i = at + 10; i < line.size(); ++i) {
        const char c = line[i];
        if (c == 'A' || c == 'B') {
          parsed.preferred = c;
          found_preference = true;
          break;
        }
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) break;
      }
    } else if (const auto score_at = line.find("Confidence score:");
               score_at != std::string::npos) {
      std::size_t i = score_at + 17;
      while (i < line.size() &&
             std::isdigit(static_cast<unsigned char>(line[i])) == 0) {
        ++i;
      }
      if (i < line.size()) {
        int value = 0;
        while (i < line.size() &&
               std::isdigit(static_cast<unsigned char>(line[i])) != 0) {
          value = value * 10 + (line[i] - '0');
          ++i;
        }
        parsed.confidence = std::clamp(value, 0, 100);
      }
    }
  }
  if (!found_preference) return std::nullopt;
  return parsed;
}

PreferencePair reply_to_pair(const AnnotationTask& task,
                             const ParsedReply& reply) {
  // Slot A held candidate_a under AB presentation, candidate_b under BA.
  const bool slot_a_is_candidate_a = task.order == PresentationOrder::AB;
  const bool winner_in_slot_a = reply.preferred == 'A';
  const bool winner_is_candidate_a = winner_in_slot_a == slot_a_is_candidate_a;

  PreferencePair pair;
  pair.query_id = task.query_id;
  pair.winner_id =
      winner_is_candidate_a ? task.candidate_a_id : task.candidate_b_id;
  pair.loser_id =
      winner_is_candidate_a ? task.candidate_b_id : task.candidate_a_id;
  pair.annotator = Annotator::External;
  pair.confidence = reply.confidence;
  return pair;
}

}  // namespace rankpo
