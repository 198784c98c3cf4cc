#pragma once

#include <string>
#include <vector>

#include "rankpo/types.hpp"

namespace rankpo {

// JSON-Lines persistence: one record per line, keys sorted, so identical
// inputs always serialize to identical bytes.

void write_documents_jsonl(const std::string& path,
                           const std::vector<Document>& docs);
std::vector<Document> load_documents_jsonl(const std::string& path);

void write_examples_jsonl(const std::string& path,
                          const std::vector<ContrastiveExample>& examples);
std::vector<ContrastiveExample> load_examples_jsonl(const std::string& path);

void write_pairs_jsonl(const std::string& path,
                       const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> load_pairs_jsonl(const std::string& path);

// {"query_id": ..., "positive_ids": [...]} per line, query ids ascending.
void write_positives_jsonl(const std::string& path,
                           const RelevanceSets& positives);
RelevanceSets load_positives_jsonl(const std::string& path);

void write_splits_json(const std::string& path, const Splits& splits);
Splits load_splits_json(const std::string& path);

// Accepts either a JSON object or flat key=value lines; keys mirror the
// TrainConfig field names (epochs, batch_size, num_negatives, learning_rate,
// warmup_ratio, schedule, tau_cl, tau_po, beta, loss_shape, seed).
TrainConfig load_train_config(const std::string& path);

std::string train_config_to_json(const TrainConfig& config);

}  // namespace rankpo
