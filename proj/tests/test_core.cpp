#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rankpo/checkpoint.hpp"
#include "rankpo/jsonl.hpp"
#include "rankpo/rng.hpp"
#include "rankpo/types.hpp"

using namespace rankpo;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "rankpo_test_core";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("rng: identical seeds give identical sequences") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(1), d(2);
  bool all_equal = true;
  for (int i = 0; i < 100; ++i) {
    if (c.next_u64() != d.next_u64()) all_equal = false;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("rng: uniform stays in [0,1), index stays in range") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.index(13) < 13);
  }
  CHECK(rng.uniform_int(-3, 3) >= -3);
  CHECK_THROWS(rng.index(0));
}

TEST_CASE("rng: sample_indices draws k distinct values") {
  Rng rng(11);
  const auto sample = rng.sample_indices(10, 10);
  std::set<std::size_t> seen(sample.begin(), sample.end());
  CHECK(seen.size() == 10);
  CHECK_THROWS(rng.sample_indices(3, 4));
}

TEST_CASE("checkpoint: save/load round-trips a fresh model bit-for-bit") {
  Rng rng(3);
  const EncoderModel model = EncoderModel::init(64, 8, 4, rng);
  const auto path = (temp_dir() / "roundtrip.rpo").string();
  save_checkpoint(model, path);
  const EncoderModel loaded = load_checkpoint(path);

  CHECK(loaded.hash_dim == model.hash_dim);
  CHECK(loaded.hidden_dim == model.hidden_dim);
  CHECK(loaded.out_dim == model.out_dim);
  CHECK(loaded.w1 == model.w1);
  CHECK(loaded.b1 == model.b1);
  CHECK(loaded.w2 == model.w2);
  CHECK(loaded.b2 == model.b2);

  // And the serialized form itself is stable.
  CHECK(checkpoint_bytes(loaded) == checkpoint_bytes(model));
}

TEST_CASE("checkpoint: wrong magic is a format error") {
  const auto path = (temp_dir() / "badmagic.rpo").string();
  std::ofstream(path, std::ios::binary) << "NOPE and then some bytes";
  try {
    load_checkpoint(path);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::BadMagic);
  }
}

TEST_CASE("checkpoint: truncated file is a length mismatch") {
  Rng rng(5);
  const EncoderModel model = EncoderModel::init(32, 4, 4, rng);
  const std::string bytes = checkpoint_bytes(model);
  const auto path = (temp_dir() / "truncated.rpo").string();
  std::ofstream(path, std::ios::binary)
      << bytes.substr(0, bytes.size() / 2);
  try {
    load_checkpoint(path);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::LengthMismatch);
  }

  // Trailing garbage is a length mismatch too.
  std::ofstream(path, std::ios::binary) << bytes << "x";
  try {
    load_checkpoint(path);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::LengthMismatch);
  }
}

TEST_CASE("document validation") {
  Document doc;
  doc.id = "c1";
  doc.kind = DocKind::Candidate;
  doc.text = "hello";
  doc.location = 0;
  doc.seniority_years = 3;
  CHECK_THROWS(validate_document(doc));  // candidate without areas
  doc.research_areas = {1};
  CHECK_NOTHROW(validate_document(doc));
  doc.seniority_years = -1;
  CHECK_THROWS(validate_document(doc));
}

TEST_CASE("corpus rejects duplicate ids") {
  Corpus corpus;
  Document doc;
  doc.id = "c1";
  doc.kind = DocKind::Candidate;
  doc.research_areas = {0};
  doc.seniority_years = 0;
  corpus.add(doc);
  CHECK_THROWS(corpus.add(doc));
  CHECK(corpus.has("c1"));
  CHECK_THROWS(corpus.at("nope"));
}

TEST_CASE("example and pair invariants") {
  ContrastiveExample ex;
  ex.query_id = "q1";
  ex.positive_id = "c1";
  ex.negative_ids = {"c2", "c1"};
  CHECK_THROWS(validate_example(ex));
  ex.negative_ids = {"c2", "c3"};
  CHECK_NOTHROW(validate_example(ex));

  PreferencePair pair;
  pair.query_id = "q1";
  pair.winner_id = "c1";
  pair.loser_id = "c1";
  CHECK_THROWS(validate_pair(pair));
  pair.loser_id = "c2";
  CHECK_NOTHROW(validate_pair(pair));
}

TEST_CASE("train config validation") {
  TrainConfig config;
  CHECK_NOTHROW(config.validate());
  config.tau_cl = 0.0;
  CHECK_THROWS(config.validate());
  config = TrainConfig{};
  config.warmup_ratio = 1.5;
  CHECK_THROWS(config.validate());
}

TEST_CASE("jsonl: documents round-trip") {
  std::vector<Document> docs;
  Document q;
  q.id = "q00001";
  q.kind = DocKind::Query;
  q.text = "alpha beta";
  q.location = 2;
  q.seniority_years = 5;
  q.research_areas = {1, 3};
  docs.push_back(q);
  Document c;
  c.id = "c00001";
  c.kind = DocKind::Candidate;
  c.text = "gamma \"quoted\" text\nwith newline";
  c.location = 0;
  c.seniority_years = 12;
  c.research_areas = {3};
  docs.push_back(c);

  const auto path = (temp_dir() / "docs.jsonl").string();
  write_documents_jsonl(path, docs);
  const auto loaded = load_documents_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == q.id);
  CHECK(loaded[0].kind == DocKind::Query);
  CHECK(loaded[1].text == c.text);
  CHECK(loaded[1].research_areas == c.research_areas);

  // Identical content -> identical bytes.
  const std::string bytes_one = read_bytes(path);
  write_documents_jsonl(path, loaded);
  CHECK(read_bytes(path) == bytes_one);
}

TEST_CASE("jsonl: examples, pairs, positives, splits round-trip") {
  const auto dir = temp_dir();

  std::vector<ContrastiveExample> examples;
  examples.push_back({"q1", "c1", {"c2", "c3"}, "random"});
  const auto ex_path = (dir / "ex.jsonl").string();
  write_examples_jsonl(ex_path, examples);
  auto loaded_examples = load_examples_jsonl(ex_path);
  REQUIRE(loaded_examples.size() == 1);
  CHECK(loaded_examples[0].negative_ids == examples[0].negative_ids);
  CHECK(loaded_examples[0].stage == "random");

  std::vector<PreferencePair> pairs;
  pairs.push_back({"q1", "c1", "c2", Annotator::Oracle, 80});
  const auto pair_path = (dir / "pairs.jsonl").string();
  write_pairs_jsonl(pair_path, pairs);
  auto loaded_pairs = load_pairs_jsonl(pair_path);
  REQUIRE(loaded_pairs.size() == 1);
  CHECK(loaded_pairs[0].confidence == 80);
  CHECK(loaded_pairs[0].annotator == Annotator::Oracle);

  RelevanceSets positives;
  positives["q1"] = {"c1", "c4"};
  positives["q2"] = {"c2"};
  const auto pos_path = (dir / "pos.jsonl").string();
  write_positives_jsonl(pos_path, positives);
  CHECK(load_positives_jsonl(pos_path) == positives);

  Splits splits;
  splits.train_query_ids = {"q1"};
  splits.test_query_ids = {"q2"};
  const auto split_path = (dir / "splits.json").string();
  write_splits_json(split_path, splits);
  const auto loaded_splits = load_splits_json(split_path);
  CHECK(loaded_splits.train_query_ids == splits.train_query_ids);
  CHECK(loaded_splits.test_query_ids == splits.test_query_ids);
}

TEST_CASE("config file: json and key=value forms") {
  const auto dir = temp_dir();

  const auto json_path = (dir / "config.json").string();
  std::ofstream(json_path) << R"({"epochs": 5, "tau_cl": 0.05,
      "schedule": "constant", "loss_shape": "hinge", "seed": 9})";
  TrainConfig from_json = load_train_config(json_path);
  CHECK(from_json.epochs == 5);
  CHECK(from_json.tau_cl == doctest::Approx(0.05));
  CHECK(from_json.schedule == Schedule::Constant);
  CHECK(from_json.loss_shape == LossShape::Hinge);
  CHECK(from_json.seed == 9);
  CHECK(from_json.batch_size == 8);  // untouched default

  const auto kv_path = (dir / "config.txt").string();
  std::ofstream(kv_path) << "# comment\n"
                            "epochs = 5\n"
                            "tau_cl=0.05\n"
                            "schedule = constant\n"
                            "loss_shape = hinge\n"
                            "seed = 9\n";
  TrainConfig from_kv = load_train_config(kv_path);
  CHECK(from_kv.epochs == from_json.epochs);
  CHECK(from_kv.tau_cl == from_json.tau_cl);
  CHECK(from_kv.schedule == from_json.schedule);
  CHECK(from_kv.loss_shape == from_json.loss_shape);
  CHECK(from_kv.seed == from_json.seed);

  const auto bad_path = (dir / "bad.json").string();
  std::ofstream(bad_path) << R"({"no_such_key": 1})";
  CHECK_THROWS(load_train_config(bad_path));
}
