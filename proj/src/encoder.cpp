#include "rankpo/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace rankpo {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    const unsigned char lc =
        static_cast<unsigned char>(std::tolower(static_cast<int>(c)));
    if ((lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9')) {
      current.push_back(static_cast<char>(lc));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

FeatureVector featurize(const Document& doc, std::uint32_t hash_dim) {
  if (hash_dim < 2) throw std::invalid_argument("featurize: hash_dim < 2");
  std::map<std::uint32_t, double> counts;
  auto bump = [&](const std::string& token) {
    counts[static_cast<std::uint32_t>(fnv1a64(token) % hash_dim)] += 1.0;
  };
  for (const auto& token : tokenize(doc.text)) bump(token);
  if (doc.location >= 0) bump("loc=" + std::to_string(doc.location));
  for (int area : doc.research_areas) bump("field=" + std::to_string(area));
  if (doc.seniority_years >= 0) {
    bump("sen=" + std::to_string(doc.seniority_years));
  }
  if (counts.empty()) {
    throw std::invalid_argument("featurize: document " + doc.id +
                                " has no text and no attributes");
  }
  FeatureVector f;
  f.dim = hash_dim;
  f.indices.reserve(counts.size());
  f.values.reserve(counts.size());
  double sum_sq = 0.0;
  for (const auto& [idx, count] : counts) {
    f.indices.push_back(idx);
    f.values.push_back(count);
    sum_sq += count * count;
  }
  const double inv_norm = 1.0 / std::sqrt(sum_sq);
  for (double& v : f.values) v *= inv_norm;
  return f;
}

EncoderModel EncoderModel::init(std::uint32_t hash_dim,
                                std::uint32_t hidden_dim,
                                std::uint32_t out_dim, Rng& rng) {
  EncoderModel m;
  m.hash_dim = hash_dim;
  m.hidden_dim = hidden_dim;
  m.out_dim = out_dim;
  auto fill_uniform = [&rng](std::vector<double>& w, std::size_t n,
                             double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    w.resize(n);
    for (double& x : w) {
      // Round through float so checkpoints round-trip bit-exactly.
      x = static_cast<double>(
          static_cast<float>((rng.uniform() * 2.0 - 1.0) * limit));
    }
  };
  fill_uniform(m.w1, static_cast<std::size_t>(hash_dim) * hidden_dim,
               hash_dim, hidden_dim);
  m.b1.assign(hidden_dim, 0.0);
  fill_uniform(m.w2, static_cast<std::size_t>(out_dim) * hidden_dim,
               hidden_dim, out_dim);
  m.b2.assign(out_dim, 0.0);
  return m;
}

bool EncoderModel::same_shape(const EncoderModel& other) const {
  return hash_dim == other.hash_dim && hidden_dim == other.hidden_dim &&
         out_dim == other.out_dim;
}

double similarity(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("similarity: dimension mismatch");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
  }
  return dot;
}

EncodeTrace encode_traced(const EncoderModel& model, const FeatureVector& f) {
  if (f.dim != model.hash_dim) {
    throw std::invalid_argument("encode: feature dimension " +
                                std::to_string(f.dim) +
                                " does not match model hash_dim " +
                                std::to_string(model.hash_dim));
  }
  EncodeTrace t;
  const std::size_t hd = model.hidden_dim;
  const std::size_t od = model.out_dim;

  std::vector<double> z(model.b1);
  for (std::size_t k = 0; k < f.indices.size(); ++k) {
    const double val = f.values[k];
    const double* col = &model.w1[static_cast<std::size_t>(f.indices[k]) * hd];
    for (std::size_t h = 0; h < hd; ++h) z[h] += col[h] * val;
  }
  t.hidden.resize(hd);
  for (std::size_t h = 0; h < hd; ++h) t.hidden[h] = std::tanh(z[h]);

  t.pre_norm.assign(model.b2.begin(), model.b2.end());
  for (std::size_t o = 0; o < od; ++o) {
    const double* row = &model.w2[o * hd];
    double acc = t.pre_norm[o];
    for (std::size_t h = 0; h < hd; ++h) acc += row[h] * t.hidden[h];
    t.pre_norm[o] = acc;
  }

  double sum_sq = 0.0;
  for (double u : t.pre_norm) sum_sq += u * u;
  t.pre_norm_l2 = std::sqrt(sum_sq);
  if (!(t.pre_norm_l2 > 0.0)) {
    throw std::runtime_error("encode: degenerate embedding (zero pre-norm)");
  }
  t.embedding.values.resize(od);
  for (std::size_t o = 0; o < od; ++o) {
    t.embedding.values[o] = t.pre_norm[o] / t.pre_norm_l2;
  }
  return t;
}

Embedding encode(const EncoderModel& model, const FeatureVector& f) {
  return encode_traced(model, f).embedding;
}

Gradients::Gradients(const EncoderModel& model)
    : w1(model.w1.size(), 0.0),
      b1(model.b1.size(), 0.0),
      w2(model.w2.size(), 0.0),
      b2(model.b2.size(), 0.0) {}

void Gradients::reset() {
  std::fill(w1.begin(), w1.end(), 0.0);
  std::fill(b1.begin(), b1.end(), 0.0);
  std::fill(w2.begin(), w2.end(), 0.0);
  std::fill(b2.begin(), b2.end(), 0.0);
}

bool Gradients::finite() const {
  auto ok = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  return ok(w1) && ok(b1) && ok(w2) && ok(b2);
}

void backward_encode(const EncoderModel& model, const FeatureVector& f,
                     const EncodeTrace& trace,
                     std::span<const double> grad_embedding, Gradients& acc) {
  const std::size_t hd = model.hidden_dim;
  const std::size_t od = model.out_dim;
  if (grad_embedding.size() != od) {
    throw std::invalid_argument("backward_encode: gradient size mismatch");
  }

  // Through the normalization e = u/||u||: du = (g - (g.e) e)/||u||.
  double g_dot_e = 0.0;
  for (std::size_t o = 0; o < od; ++o) {
    g_dot_e += grad_embedding[o] * trace.embedding.values[o];
  }
  std::vector<double> du(od);
  for (std::size_t o = 0; o < od; ++o) {
    du[o] = (grad_embedding[o] - g_dot_e * trace.embedding.values[o]) /
            trace.pre_norm_l2;
  }

  std::vector<double> dh(hd, 0.0);
  for (std::size_t o = 0; o < od; ++o) {
    const double g = du[o];
    acc.b2[o] += g;
    double* w2_row = &acc.w2[o * hd];
    const double* w2_model = &model.w2[o * hd];
    for (std::size_t h = 0; h < hd; ++h) {
      w2_row[h] += g * trace.hidden[h];
      dh[h] += g * w2_model[h];
    }
  }

  // Through tanh: dz = dh * (1 - h^2).
  for (std::size_t h = 0; h < hd; ++h) {
    dh[h] *= 1.0 - trace.hidden[h] * trace.hidden[h];
    acc.b1[h] += dh[h];
  }
  for (std::size_t k = 0; k < f.indices.size(); ++k) {
    const double val = f.values[k];
    double* col = &acc.w1[static_cast<std::size_t>(f.indices[k]) * hd];
    for (std::size_t h = 0; h < hd; ++h) col[h] += dh[h] * val;
  }
}

void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v, long step,
                  double lr, double weight_decay) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
    v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    double p = params[i];
    p -= lr * (m_hat / (std::sqrt(v_hat) + kEps) + weight_decay * p);
    // Keep parameters float32-representable for bit-exact checkpoints.
    params[i] = static_cast<double>(static_cast<float>(p));
  }
}

AdamW::AdamW(const EncoderModel& model, double peak_lr, Schedule schedule,
             double warmup_ratio, long total_steps, double weight_decay)
    : peak_lr_(peak_lr),
      schedule_(schedule),
      total_steps_(std::max<long>(1, total_steps)),
      weight_decay_(weight_decay),
      m_(model.param_count(), 0.0),
      v_(model.param_count(), 0.0) {
  warmup_steps_ = std::lround(warmup_ratio * static_cast<double>(total_steps_));
}

double AdamW::lr_at(long step) const {
  if (warmup_steps_ > 0 && step <= warmup_steps_) {
    return peak_lr_ * static_cast<double>(step) /
           static_cast<double>(warmup_steps_);
  }
  if (schedule_ == Schedule::Constant) return peak_lr_;
  const long decay_span = std::max<long>(1, total_steps_ - warmup_steps_);
  const double progress =
      static_cast<double>(step - warmup_steps_) /
      static_cast<double>(decay_span);
  return peak_lr_ * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void AdamW::step(EncoderModel& model, const Gradients& grads) {
  if (!grads.finite()) {
    throw std::runtime_error(
        "AdamW: non-finite gradient at step " +
        std::to_string(step_count_ + 1) + "; aborting update");
  }
  ++step_count_;
  const double lr = lr_at(step_count_);

  std::size_t offset = 0;
  auto update_block = [&](std::vector<double>& p,
                          const std::vector<double>& g) {
    adamw_update(std::span<double>(p),
                 std::span<const double>(g),
                 std::span<double>(m_.data() + offset, p.size()),
                 std::span<double>(v_.data() + offset, p.size()),
                 step_count_, lr, weight_decay_);
    offset += p.size();
  };
  update_block(model.w1, grads.w1);
  update_block(model.b1, grads.b1);
  update_block(model.w2, grads.w2);
  update_block(model.b2, grads.b2);
}

FeatureCache::FeatureCache(const Corpus& corpus, std::uint32_t hash_dim)
    : hash_dim_(hash_dim) {
  features_.reserve(corpus.size());
  for (const auto& doc : corpus.docs()) {
    features_.emplace(doc.id, featurize(doc, hash_dim));
  }
}

const FeatureVector& FeatureCache::get(const std::string& doc_id) const {
  auto it = features_.find(doc_id);
  if (it == features_.end()) {
    throw std::out_of_range("no featurization for document: " + doc_id);
  }
  return it->second;
}

}  // namespace rankpo
