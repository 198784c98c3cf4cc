#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rankpo/encoder.hpp"

using namespace rankpo;

namespace {

Document make_candidate(const std::string& id, const std::string& text,
                        int location = 0, int seniority = 1,
                        std::vector<int> areas = {0}) {
  Document doc;
  doc.id = id;
  doc.kind = DocKind::Candidate;
  doc.text = text;
  doc.location = location;
  doc.seniority_years = seniority;
  doc.research_areas = std::move(areas);
  return doc;
}

FeatureVector random_features(std::uint32_t dim, std::size_t nnz, Rng& rng) {
  std::map<std::uint32_t, double> entries;
  while (entries.size() < nnz) {
    entries[static_cast<std::uint32_t>(rng.index(dim))] = rng.uniform() + 0.1;
  }
  FeatureVector f;
  f.dim = dim;
  double sum_sq = 0.0;
  for (auto& [idx, val] : entries) {
    f.indices.push_back(idx);
    f.values.push_back(val);
    sum_sq += val * val;
  }
  for (double& v : f.values) v /= std::sqrt(sum_sq);
  return f;
}

}  // namespace

TEST_CASE("featurize is deterministic and order-invariant") {
  const Document a = make_candidate("c1", "alpha beta gamma alpha");
  const Document b = make_candidate("c1", "gamma Alpha, beta? ALPHA");
  const FeatureVector fa = featurize(a, 4096);
  const FeatureVector fb = featurize(b, 4096);
  CHECK(fa.indices == fb.indices);
  CHECK(fa.values == fb.values);

  const FeatureVector fa2 = featurize(a, 4096);
  CHECK(fa.indices == fa2.indices);
  CHECK(fa.values == fa2.values);
}

TEST_CASE("featurize matches an independent hash implementation") {
  Document doc = make_candidate("c1", "a b");
  doc.location = -1;
  doc.seniority_years = -1;
  doc.research_areas.clear();
  const FeatureVector f = featurize(doc, 4096);

  const auto ha =
      static_cast<std::uint32_t>(oracles::independent_fnv1a64("a") % 4096);
  const auto hb =
      static_cast<std::uint32_t>(oracles::independent_fnv1a64("b") % 4096);
  REQUIRE(ha != hb);  // no collision for these two at 4096 bins
  CHECK(f.indices.size() == 2);
  std::set<std::uint32_t> expected{ha, hb};
  std::set<std::uint32_t> got(f.indices.begin(), f.indices.end());
  CHECK(got == expected);
  // Equal counts, l2-normalized.
  CHECK(f.values[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(f.values[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("featurize uses attributes and rejects empty documents") {
  Document doc = make_candidate("c1", "", 3, 7, {2, 5});
  const FeatureVector f = featurize(doc, 4096);
  CHECK(f.indices.size() == 4);  // loc= + 2 fields + sen=

  Document empty = make_candidate("c2", "");
  empty.location = -1;
  empty.seniority_years = -1;
  empty.research_areas.clear();
  CHECK_THROWS(featurize(empty, 4096));
  CHECK_THROWS(featurize(doc, 1));  // hash_dim too small
}

TEST_CASE("featurize output is sorted, positive, unit norm") {
  Rng rng(1);
  const Document doc = make_candidate(
      "c1", "one two three two one five six seven area topic", 2, 9, {1, 2});
  const FeatureVector f = featurize(doc, 512);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < f.indices.size(); ++i) {
    if (i > 0) CHECK(f.indices[i] > f.indices[i - 1]);
    CHECK(f.values[i] > 0.0);
    sum_sq += f.values[i] * f.values[i];
  }
  CHECK(std::abs(std::sqrt(sum_sq) - 1.0) < 1e-9);
}

TEST_CASE("encode: zeroed w2 with b2 = e1 returns e1 for any input") {
  Rng rng(2);
  EncoderModel model = EncoderModel::init(64, 8, 4, rng);
  std::fill(model.w2.begin(), model.w2.end(), 0.0);
  std::fill(model.b2.begin(), model.b2.end(), 0.0);
  model.b2[0] = 1.0;

  for (int trial = 0; trial < 5; ++trial) {
    const FeatureVector f = random_features(64, 6, rng);
    const Embedding e = encode(model, f);
    CHECK(e.values[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < e.values.size(); ++i) {
      CHECK(e.values[i] == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("encode returns unit-norm embeddings") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderModel model = EncoderModel::init(128, 16, 8, rng);
    const FeatureVector f = random_features(128, 10, rng);
    const Embedding e = encode(model, f);
    double norm = 0.0;
    for (double v : e.values) norm += v * v;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
  }
}

TEST_CASE("encode: zero pre-norm output is a degenerate-embedding error") {
  Rng rng(4);
  EncoderModel model = EncoderModel::init(16, 4, 2, rng);
  std::fill(model.w2.begin(), model.w2.end(), 0.0);
  std::fill(model.b2.begin(), model.b2.end(), 0.0);
  const FeatureVector f = random_features(16, 3, rng);
  CHECK_THROWS_WITH_AS(encode(model, f),
                       doctest::Contains("degenerate"), std::runtime_error);
}

TEST_CASE("encode rejects mismatched feature dimension") {
  Rng rng(5);
  const EncoderModel model = EncoderModel::init(64, 8, 4, rng);
  const FeatureVector f = random_features(32, 4, rng);
  CHECK_THROWS(encode(model, f));
}

TEST_CASE("embedding is invariant to scaling the pre-norm output") {
  Rng rng(6);
  EncoderModel model = EncoderModel::init(32, 6, 4, rng);
  const FeatureVector f = random_features(32, 5, rng);
  const Embedding base = encode(model, f);
  for (double c : {3.0, 0.25, 1e4}) {
    EncoderModel scaled = model;
    for (double& w : scaled.w2) w *= c;
    for (double& b : scaled.b2) b *= c;
    const Embedding e = encode(scaled, f);
    for (std::size_t i = 0; i < e.values.size(); ++i) {
      CHECK(e.values[i] == doctest::Approx(base.values[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("similarity basics and cosine oracle") {
  Rng rng(7);
  const EncoderModel model = EncoderModel::init(64, 8, 6, rng);
  const FeatureVector fa = random_features(64, 6, rng);
  const FeatureVector fb = random_features(64, 7, rng);
  const Embedding a = encode(model, fa);
  const Embedding b = encode(model, fb);

  CHECK(similarity(a, a) == doctest::Approx(1.0).epsilon(1e-6));
  Embedding neg_a = a;
  for (double& v : neg_a.values) v = -v;
  CHECK(similarity(a, neg_a) == doctest::Approx(-1.0).epsilon(1e-6));

  // Matches the full cosine formula on unnormalized copies.
  Embedding ua = a, ub = b;
  for (double& v : ua.values) v *= 7.3;
  for (double& v : ub.values) v *= 0.2;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < ua.values.size(); ++i) {
    dot += ua.values[i] * ub.values[i];
    na += ua.values[i] * ua.values[i];
    nb += ub.values[i] * ub.values[i];
  }
  const double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
  CHECK(similarity(a, b) == doctest::Approx(cosine).epsilon(1e-12));

  Embedding short_vec;
  short_vec.values = {1.0};
  CHECK_THROWS(similarity(a, short_vec));
}

TEST_CASE("encode jacobian matches central finite differences on a toy model") {
  Rng rng(8);
  const EncoderModel model = EncoderModel::init(5, 3, 2, rng);
  const FeatureVector f = random_features(5, 3, rng);
  const double eps = 1e-4;

  // Analytic jacobian row for output o via backward with a unit vector.
  const EncodeTrace trace = encode_traced(model, f);
  for (std::size_t o = 0; o < model.out_dim; ++o) {
    Gradients acc(model);
    std::vector<double> unit(model.out_dim, 0.0);
    unit[o] = 1.0;
    backward_encode(model, f, trace, unit, acc);

    auto check_tensor = [&](std::vector<double> EncoderModel::* tensor,
                            const std::vector<double>& analytic) {
      const auto& params = model.*tensor;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double numeric = oracles::central_difference(
            model, tensor, i, eps, [&](const EncoderModel& m) {
              return encode(m, f).values[o];
            });
        CHECK(oracles::relative_error(analytic[i], numeric) < 1e-4);
      }
    };
    check_tensor(&EncoderModel::w1, acc.w1);
    check_tensor(&EncoderModel::b1, acc.b1);
    check_tensor(&EncoderModel::w2, acc.w2);
    check_tensor(&EncoderModel::b2, acc.b2);
  }
}

TEST_CASE("adamw: zero gradient and zero weight decay leave params unchanged") {
  std::vector<double> params{0.5, -0.25, 1.75};
  const std::vector<double> before = params;
  std::vector<double> grads(3, 0.0), m(3, 0.0), v(3, 0.0);
  for (long step = 1; step <= 10; ++step) {
    adamw_update(params, grads, m, v, step, 0.1, 0.0);
  }
  CHECK(params == before);
}

TEST_CASE("adamw: descends f(w) = w^2 from w = 1") {
  std::vector<double> w{1.0}, m{0.0}, v{0.0};
  std::vector<double> g{2.0 * w[0]};
  adamw_update(w, g, m, v, 1, 0.05, 0.0);
  CHECK(w[0] < 1.0);
  CHECK(w[0] * w[0] < 1.0);

  // And converges with repeated steps.
  for (long step = 2; step <= 500; ++step) {
    g[0] = 2.0 * w[0];
    adamw_update(w, g, m, v, step, 0.05, 0.0);
  }
  CHECK(std::abs(w[0]) < 1e-2);
}

TEST_CASE("adamw schedule: peak at warmup end, near zero at the last step") {
  Rng rng(9);
  const EncoderModel model = EncoderModel::init(8, 2, 2, rng);
  const double peak = 1e-3;
  const long total = 200;
  AdamW opt(model, peak, Schedule::Cosine, 0.1, total);

  const long warmup_end = 20;  // 0.1 * 200
  CHECK(opt.lr_at(warmup_end) == doctest::Approx(peak).epsilon(1e-12));
  CHECK(opt.lr_at(warmup_end / 2) == doctest::Approx(peak * 0.5));
  CHECK(opt.lr_at(total) <= 1e-3 * peak);
  // Monotone decay past the peak.
  for (long step = warmup_end; step < total; ++step) {
    CHECK(opt.lr_at(step + 1) <= opt.lr_at(step) + 1e-15);
  }

  AdamW constant(model, peak, Schedule::Constant, 0.1, total);
  CHECK(constant.lr_at(total) == doctest::Approx(peak));
}

TEST_CASE("adamw rejects non-finite gradients") {
  Rng rng(10);
  EncoderModel model = EncoderModel::init(8, 2, 2, rng);
  AdamW opt(model, 1e-3, Schedule::Cosine, 0.1, 10);
  Gradients grads(model);
  grads.w1[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(opt.step(model, grads));
}

TEST_CASE("model parameters stay float32-representable through updates") {
  Rng rng(11);
  EncoderModel model = EncoderModel::init(8, 4, 2, rng);
  AdamW opt(model, 1e-2, Schedule::Cosine, 0.1, 5);
  Gradients grads(model);
  for (int step = 0; step < 5; ++step) {
    for (double& g : grads.w1) g = rng.uniform() - 0.5;
    for (double& g : grads.b2) g = rng.uniform() - 0.5;
    opt.step(model, grads);
  }
  for (const auto* tensor : {&model.w1, &model.b1, &model.w2, &model.b2}) {
    for (double p : *tensor) {
      CHECK(static_cast<double>(static_cast<float>(p)) == p);
    }
  }
}
