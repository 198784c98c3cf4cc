#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rankpo/encoder.hpp"
#include "rankpo/eval.hpp"
#include "rankpo/rng.hpp"
#include "rankpo/types.hpp"

namespace rankpo {

enum class PresentationOrder { AB, BA };

struct AnnotationTask {
  std::string query_id;
  std::string candidate_a_id;
  std::string candidate_b_id;
  PresentationOrder order = PresentationOrder::AB;
  int pool_k = 0;  // size of the ranked pool the pair was drawn from
};

inline constexpr int kTrainPoolK = 100;
inline constexpr int kEvalPoolK = 20;

// Per query: rank candidates under `model`, sample two distinct candidates
// uniformly from the top pool_k, and shuffle the presentation order.
std::vector<AnnotationTask> build_tasks(
    const EncoderModel& model, const Corpus& corpus,
    const FeatureCache& features, const std::vector<std::string>& query_ids,
    int pool_k, int n_tasks_per_query, Rng& rng);

// Deterministic stand-in for an external judge: scores each candidate by
// token-set Jaccard overlap with the JD text (weight 1.0) plus
// research-area Jaccard overlap (weight 0.5). Ties go to the
// lexicographically smaller id. The decision ignores presentation order.
// Confidence is the relative score gap scaled into [50, 100].
PreferencePair oracle_annotate(const AnnotationTask& task,
                               const Corpus& corpus);

double oracle_score(const Document& query, const Document& candidate);

// --- External annotator -------------------------------------------------
//
// The client speaks a minimal JSON chat API:
//   POST {base_url}{path}
//   request  {"model": <name>, "messages": [{"role": "user",
//             "content": <filled prompt>}], "temperature": 0}
//   response {"choices": [{"message": {"content": <reply text>}}]}
// An "Authorization: Bearer <token>" header is sent when a token is set
// (cmd-line tools read it from the environment).

struct ChatEndpoint {
  std::string base_url;                       // e.g. http://127.0.0.1:8089
  std::string path = "/v1/chat/completions";
  std::string model_name = "default";
  std::string api_token;
  int timeout_seconds = 30;
  int max_attempts = 3;
};

// The default pairwise-comparison prompt; contains the {JD},
// {Candidate A} and {Candidate B} slots.
const std::string& default_prompt_template();

std::string fill_prompt(const std::string& prompt_template,
                        const std::string& jd_text,
                        const std::string& candidate_a_text,
                        const std::string& candidate_b_text);

struct ParsedReply {
  char preferred = '?';  // 'A' or 'B'
  int confidence = 50;   // 50 when the reply omits a confidence line
};

// Extracts the "Preferred:" and "Confidence score:" lines; nullopt when no
// A/B preference can be found.
std::optional<ParsedReply> parse_annotation_reply(const std::string& reply);

// Maps a parsed reply back through the presentation order to winner/loser.
PreferencePair reply_to_pair(const AnnotationTask& task,
                             const ParsedReply& reply);

enum class AnnotateStatus { Ok, Skipped, TransportError };

struct AnnotateResult {
  AnnotateStatus status = AnnotateStatus::Skipped;
  std::optional<PreferencePair> pair;
  std::string diagnostic;
};

// Posts the filled template and parses the reply, retrying up to
// endpoint.max_attempts times; after that the task is skipped, never
// guessed.
AnnotateResult external_annotate(const AnnotationTask& task,
                                 const Corpus& corpus,
                                 const ChatEndpoint& endpoint,
                                 const std::string& prompt_template);

struct BatchAnnotateResult {
  std::vector<PreferencePair> pairs;  // task order preserved
  int n_skipped = 0;
  int n_transport_errors = 0;
  std::vector<std::string> diagnostics;
};

// Runs tasks with at most `concurrency` requests in flight.
BatchAnnotateResult annotate_tasks_external(
    const std::vector<AnnotationTask>& tasks, const Corpus& corpus,
    const ChatEndpoint& endpoint, const std::string& prompt_template,
    int concurrency = 4);

}  // namespace rankpo
