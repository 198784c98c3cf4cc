#include "rankpo/jsonl.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rankpo {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return in;
}

template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
    fn(record, line_no);
  }
}

}  // namespace

void write_documents_jsonl(const std::string& path,
                           const std::vector<Document>& docs) {
  std::ofstream out = open_out(path);
  for (const auto& doc : docs) {
    json record{{"id", doc.id},
                {"kind", to_string(doc.kind)},
                {"text", doc.text},
                {"location", doc.location},
                {"seniority_years", doc.seniority_years},
                {"research_areas", doc.research_areas}};
    out << record.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

std::vector<Document> load_documents_jsonl(const std::string& path) {
  std::vector<Document> docs;
  for_each_record(path, [&](const json& record, std::size_t) {
    Document doc;
    doc.id = record.at("id").get<std::string>();
    doc.kind = doc_kind_from_string(record.at("kind").get<std::string>());
    doc.text = record.at("text").get<std::string>();
    doc.location = record.at("location").get<int>();
    doc.seniority_years = record.at("seniority_years").get<int>();
    doc.research_areas = record.at("research_areas").get<std::vector<int>>();
    validate_document(doc);
    docs.push_back(std::move(doc));
  });
  return docs;
}

void write_examples_jsonl(const std::string& path,
                          const std::vector<ContrastiveExample>& examples) {
  std::ofstream out = open_out(path);
  for (const auto& ex : examples) {
    json record{{"query_id", ex.query_id},
                {"positive_id", ex.positive_id},
                {"negative_ids", ex.negative_ids},
                {"stage", ex.stage}};
    out << record.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

std::vector<ContrastiveExample> load_examples_jsonl(const std::string& path) {
  std::vector<ContrastiveExample> examples;
  for_each_record(path, [&](const json& record, std::size_t) {
    ContrastiveExample ex;
    ex.query_id = record.at("query_id").get<std::string>();
    ex.positive_id = record.at("positive_id").get<std::string>();
    ex.negative_ids =
        record.at("negative_ids").get<std::vector<std::string>>();
    if (record.contains("stage")) {
      ex.stage = record.at("stage").get<std::string>();
    }
    validate_example(ex);
    examples.push_back(std::move(ex));
  });
  return examples;
}

void write_pairs_jsonl(const std::string& path,
                       const std::vector<PreferencePair>& pairs) {
  std::ofstream out = open_out(path);
  for (const auto& pair : pairs) {
    json record{{"query_id", pair.query_id},
                {"winner_id", pair.winner_id},
                {"loser_id", pair.loser_id},
                {"annotator", to_string(pair.annotator)},
                {"confidence", pair.confidence}};
    out << record.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

std::vector<PreferencePair> load_pairs_jsonl(const std::string& path) {
  std::vector<PreferencePair> pairs;
  for_each_record(path, [&](const json& record, std::size_t) {
    PreferencePair pair;
    pair.query_id = record.at("query_id").get<std::string>();
    pair.winner_id = record.at("winner_id").get<std::string>();
    pair.loser_id = record.at("loser_id").get<std::string>();
    pair.annotator =
        annotator_from_string(record.at("annotator").get<std::string>());
    pair.confidence = record.at("confidence").get<int>();
    validate_pair(pair);
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

void write_positives_jsonl(const std::string& path,
                           const RelevanceSets& positives) {
  std::ofstream out = open_out(path);
  for (const auto& [query_id, ids] : positives) {
    json record{{"query_id", query_id},
                {"positive_ids",
                 std::vector<std::string>(ids.begin(), ids.end())}};
    out << record.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

RelevanceSets load_positives_jsonl(const std::string& path) {
  RelevanceSets positives;
  for_each_record(path, [&](const json& record, std::size_t line_no) {
    const auto query_id = record.at("query_id").get<std::string>();
    auto ids = record.at("positive_ids").get<std::vector<std::string>>();
    auto [it, inserted] = positives.emplace(
        query_id, std::set<std::string>(ids.begin(), ids.end()));
    if (!inserted) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": duplicate query " + query_id);
    }
  });
  return positives;
}

void write_splits_json(const std::string& path, const Splits& splits) {
  std::ofstream out = open_out(path);
  json doc{{"train_query_ids", splits.train_query_ids},
           {"test_query_ids", splits.test_query_ids}};
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failure: " + path);
}

Splits load_splits_json(const std::string& path) {
  std::ifstream in = open_in(path);
  json doc = json::parse(in);
  Splits splits;
  splits.train_query_ids =
      doc.at("train_query_ids").get<std::vector<std::string>>();
  splits.test_query_ids =
      doc.at("test_query_ids").get<std::vector<std::string>>();
  return splits;
}

namespace {

void apply_config_key(TrainConfig& config, const std::string& key,
                      const json& value) {
  if (key == "epochs") {
    config.epochs = value.get<int>();
  } else if (key == "batch_size") {
    config.batch_size = value.get<int>();
  } else if (key == "num_negatives") {
    config.num_negatives = value.get<int>();
  } else if (key == "learning_rate") {
    config.learning_rate = value.get<double>();
  } else if (key == "warmup_ratio") {
    config.warmup_ratio = value.get<double>();
  } else if (key == "schedule") {
    config.schedule = schedule_from_string(value.get<std::string>());
  } else if (key == "tau_cl") {
    config.tau_cl = value.get<double>();
  } else if (key == "tau_po") {
    config.tau_po = value.get<double>();
  } else if (key == "beta") {
    config.beta = value.get<double>();
  } else if (key == "loss_shape") {
    config.loss_shape = loss_shape_from_string(value.get<std::string>());
  } else if (key == "seed") {
    config.seed = value.get<std::uint64_t>();
  } else {
    throw std::runtime_error("unknown config key: " + key);
  }
}

}  // namespace

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in = open_in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  TrainConfig config;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const json doc = json::parse(text);
    for (const auto& [key, value] : doc.items()) {
      apply_config_key(config, key, value);
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto start = line.find_first_not_of(" \t");
      if (start == std::string::npos || line[start] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("config line without '=': " + line);
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "schedule" || key == "loss_shape") {
        apply_config_key(config, key, json(value));
      } else {
        apply_config_key(config, key, json::parse(value));
      }
    }
  }
  config.validate();
  return config;
}

std::string train_config_to_json(const TrainConfig& config) {
  json doc{{"epochs", config.epochs},
           {"batch_size", config.batch_size},
           {"num_negatives", config.num_negatives},
           {"learning_rate", config.learning_rate},
           {"warmup_ratio", config.warmup_ratio},
           {"schedule", to_string(config.schedule)},
           {"tau_cl", config.tau_cl},
           {"tau_po", config.tau_po},
           {"beta", config.beta},
           {"loss_shape", to_string(config.loss_shape)},
           {"seed", config.seed}};
  return doc.dump(2);
}

}  // namespace rankpo
