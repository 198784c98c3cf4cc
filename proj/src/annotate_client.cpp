#include <future>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rankpo/annotate.hpp"

namespace rankpo {

namespace {

// One POST against the chat endpoint; returns the reply text or a
// transport diagnostic in `error`.
std::optional<std::string> post_chat(const ChatEndpoint& endpoint,
                                     const std::string& prompt,
                                     std::string& error) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);
  client.set_write_timeout(endpoint.timeout_seconds, 0);

  nlohmann::json request{
      {"model", endpoint.model_name},
      {"messages",
       nlohmann::json::array(
           {nlohmann::json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0}};
  httplib::Headers headers;
  if (!endpoint.api_token.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_token);
  }
  auto response = client.Post(endpoint.path, headers, request.dump(),
                              "application/json");
  if (!response) {
    error = "transport error: " + httplib::to_string(response.error());
    return std::nullopt;
  }
  if (response->status != 200) {
    error = "http status " + std::to_string(response->status);
    return std::nullopt;
  }
  try {
    const auto body = nlohmann::json::parse(response->body);
    return body.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const std::exception& e) {
    error = std::string("malformed response body: ") + e.what();
    return std::nullopt;
  }
}

}  // namespace

AnnotateResult external_annotate(const AnnotationTask& task,
                                 const Corpus& corpus,
                                 const ChatEndpoint& endpoint,
                                 const std::string& prompt_template) {
  const Document& query = corpus.at(task.query_id);
  const Document& cand_a = corpus.at(task.candidate_a_id);
  const Document& cand_b = corpus.at(task.candidate_b_id);
  const bool ab = task.order == PresentationOrder::AB;
  const std::string prompt =
      fill_prompt(prompt_template, query.text,
                  ab ? cand_a.text : cand_b.text,
                  ab ? cand_b.text : cand_a.text);

  AnnotateResult result;
  for (int attempt = 1; attempt <= endpoint.max_attempts; ++attempt) {
    std::string error;
    const auto reply = post_chat(endpoint, prompt, error);
    if (!reply) {
      result.status = AnnotateStatus::TransportError;
      result.diagnostic = "task " + task.query_id + " attempt " +
                          std::to_string(attempt) + ": " + error;
      continue;
    }
    const auto parsed = parse_annotation_reply(*reply);
    if (!parsed) {
      result.status = AnnotateStatus::Skipped;
      result.diagnostic = "task " + task.query_id + " attempt " +
                          std::to_string(attempt) +
                          ": reply had no A/B preference";
      continue;
    }
    result.status = AnnotateStatus::Ok;
    result.pair = reply_to_pair(task, *parsed);
    result.diagnostic.clear();
    return result;
  }
  return result;
}

BatchAnnotateResult annotate_tasks_external(
    const std::vector<AnnotationTask>& tasks, const Corpus& corpus,
    const ChatEndpoint& endpoint, const std::string& prompt_template,
    int concurrency) {
  if (concurrency < 1) concurrency = 1;
  BatchAnnotateResult out;
  std::vector<AnnotateResult> results(tasks.size());

  for (std::size_t begin = 0; begin < tasks.size();
       begin += static_cast<std::size_t>(concurrency)) {
    const std::size_t end = std::min(
        tasks.size(), begin + static_cast<std::size_t>(concurrency));
    std::vector<std::future<AnnotateResult>> in_flight;
    for (std::size_t i = begin; i < end; ++i) {
      in_flight.push_back(std::async(std::launch::async, [&, i] {
        return external_annotate(tasks[i], corpus, endpoint, prompt_template);
      }));
    }
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = in_flight[i - begin].get();
    }
  }

  for (auto& result : results) {
    switch (result.status) {
      case AnnotateStatus::Ok:
        out.pairs.push_back(*result.pair);
        break;
      case AnnotateStatus::Skipped:
        ++out.n_skipped;
        out.diagnostics.push_back(result.diagnostic);
        break;
      case AnnotateStatus::TransportError:
        ++out.n_transport_errors;
        out.diagnostics.push_back(result.diagnostic);
        break;
    }
  }
  return out;
}

}  // namespace rankpo
