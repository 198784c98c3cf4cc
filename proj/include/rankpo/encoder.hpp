#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankpo/rng.hpp"
#include "rankpo/types.hpp"

namespace rankpo {

// Sparse, count-weighted, l2-normalized bag of hashed features.
// Indices are strictly increasing and values strictly positive.
struct FeatureVector {
  std::uint32_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
};

// Lowercase tokens: maximal runs of [a-z0-9] after ASCII lowercasing;
// everything else is a separator.
std::vector<std::string> tokenize(const std::string& text);

// FNV-1a, 64-bit: h = 14695981039346656037; h = (h ^ byte) * 1099511628211.
std::uint64_t fnv1a64(const std::string& s);

// Hashes text tokens plus the structured attributes "loc=<city>",
// "field=<area>" (one per research area) and "sen=<years>" into
// [0, hash_dim), accumulates counts and l2-normalizes. Attributes with
// negative values are treated as absent. Throws if the document yields
// no features at all.
FeatureVector featurize(const Document& doc, std::uint32_t hash_dim);

// Two-layer MLP over hashed features: h = tanh(W1 f + b1), u = W2 h + b2,
// embedding = u / ||u||. Parameters are kept float32-representable (init
// and every optimizer step round through float) so checkpoints round-trip
// bit-exactly.
struct EncoderModel {
  std::uint32_t hash_dim = 4096;
  std::uint32_t hidden_dim = 128;
  std::uint32_t out_dim = 64;
  std::vector<double> w1;  // [hash_dim][hidden_dim], feature-major
  std::vector<double> b1;  // [hidden_dim]
  std::vector<double> w2;  // [out_dim][hidden_dim], row-major
  std::vector<double> b2;  // [out_dim]

  static EncoderModel init(std::uint32_t hash_dim, std::uint32_t hidden_dim,
                           std::uint32_t out_dim, Rng& rng);

  std::size_t param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }
  bool same_shape(const EncoderModel& other) const;
};

struct Embedding {
  std::vector<double> values;
};

// Dot product of two unit-norm embeddings; throws on dimension mismatch.
double similarity(const Embedding& a, const Embedding& b);

// Intermediates kept for backprop within a training step.
struct EncodeTrace {
  std::vector<double> hidden;    // tanh activations
  std::vector<double> pre_norm;  // u
  double pre_norm_l2 = 0.0;
  Embedding embedding;
};

Embedding encode(const EncoderModel& model, const FeatureVector& f);
EncodeTrace encode_traced(const EncoderModel& model, const FeatureVector& f);

// Parameter gradients, same shapes as EncoderModel.
struct Gradients {
  std::vector<double> w1, b1, w2, b2;

  explicit Gradients(const EncoderModel& model);
  void reset();
  bool finite() const;
};

// Accumulates d(loss)/d(params) into `acc` given d(loss)/d(embedding).
void backward_encode(const EncoderModel& model, const FeatureVector& f,
                     const EncodeTrace& trace,
                     std::span<const double> grad_embedding, Gradients& acc);

// AdamW (beta1 0.9, beta2 0.999, eps 1e-8, weight decay 0.01) with linear
// warmup over warmup_ratio of total steps, then cosine decay to zero (or a
// constant-at-peak schedule).
class AdamW {
 public:
  AdamW(const EncoderModel& model, double peak_lr, Schedule schedule,
        double warmup_ratio, long total_steps, double weight_decay = 0.01);

  // Learning rate at a 1-based step.
  double lr_at(long step) const;

  // Applies one update; throws on non-finite gradients.
  void step(EncoderModel& model, const Gradients& grads);

  long steps_taken() const { return step_count_; }

 private:
  double peak_lr_;
  Schedule schedule_;
  long warmup_steps_;
  long total_steps_;
  double weight_decay_;
  long step_count_ = 0;
  std::vector<double> m_, v_;
};

// One AdamW update on a raw parameter array (used by AdamW::step and
// directly testable on scalar problems).
void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v, long step,
                  double lr, double weight_decay);

// Featurizations of a whole corpus, computed once per (corpus, hash_dim).
class FeatureCache {
 public:
  FeatureCache(const Corpus& corpus, std::uint32_t hash_dim);
  const FeatureVector& get(const std::string& doc_id) const;
  std::uint32_t hash_dim() const { return hash_dim_; }

 private:
  std::uint32_t hash_dim_;
  std::unordered_map<std::string, FeatureVector> features_;
};

}  // namespace rankpo
