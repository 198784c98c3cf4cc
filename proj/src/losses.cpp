#include "rankpo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rankpo {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// 1 / (1 + exp(-x)).
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

SoftmaxLoss softmax_xent(std::span<const double> sims, std::size_t target,
                         double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_xent: tau must be > 0");
  if (sims.empty()) throw std::invalid_argument("softmax_xent: no candidates");
  if (target >= sims.size()) {
    throw std::invalid_argument("softmax_xent: target out of range");
  }
  for (double s : sims) {
    if (!std::isfinite(s)) {
      throw std::runtime_error("softmax_xent: non-finite similarity");
    }
  }
  const double inv_tau = 1.0 / tau;
  double max_logit = sims[0] * inv_tau;
  for (double s : sims) max_logit = std::max(max_logit, s * inv_tau);

  SoftmaxLoss out;
  out.dsims.resize(sims.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < sims.size(); ++j) {
    out.dsims[j] = std::exp(sims[j] * inv_tau - max_logit);
    sum += out.dsims[j];
  }
  out.loss = std::log(sum) - (sims[target] * inv_tau - max_logit);
  for (std::size_t j = 0; j < sims.size(); ++j) {
    double p = out.dsims[j] / sum;
    if (j == target) p -= 1.0;
    out.dsims[j] = p * inv_tau;
  }
  return out;
}

SoftmaxLoss infonce_loss(const Embedding& query, const Embedding& positive,
                         std::span<const Embedding> negatives, double tau) {
  std::vector<double> sims;
  sims.reserve(1 + negatives.size());
  sims.push_back(similarity(query, positive));
  for (const auto& neg : negatives) sims.push_back(similarity(query, neg));
  return softmax_xent(sims, 0, tau);
}

double pair_logratio(double sim_w, double sim_l, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("pair_logratio: tau must be > 0");
  return sim_w / tau - sim_l / tau;
}

PreferenceLoss preference_shape(double u, LossShape shape) {
  PreferenceLoss out;
  out.u = u;
  if (shape == LossShape::Sigmoid) {
    out.loss = softplus(-u);
    out.dloss_du = -sigmoid(-u);
  } else {
    out.loss = std::max(0.0, 1.0 - u);
    out.dloss_du = u < 1.0 ? -1.0 : 0.0;
  }
  return out;
}

PreferenceLoss rankpo_loss(double policy_sim_w, double policy_sim_l,
                           double ref_sim_w, double ref_sim_l, double beta,
                           double tau, LossShape shape) {
  if (!(beta > 0.0)) throw std::invalid_argument("rankpo_loss: beta must be > 0");
  const double u = beta * pair_logratio(policy_sim_w, policy_sim_l, tau) -
                   beta * pair_logratio(ref_sim_w, ref_sim_l, tau);
  return preference_shape(u, shape);
}

PreferenceLoss simrankpo_loss(double policy_sim_w, double policy_sim_l,
                              double beta, double tau, LossShape shape) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("simrankpo_loss: beta must be > 0");
  }
  const double u = beta * pair_logratio(policy_sim_w, policy_sim_l, tau);
  return preference_shape(u, shape);
}

SftLoss sft_loss(double sim_w, double sim_l, double tau) {
  const double sims[2] = {sim_w, sim_l};
  const SoftmaxLoss ce = softmax_xent(std::span<const double>(sims, 2), 0, tau);
  SftLoss out;
  out.loss = ce.loss;
  out.logit = pair_logratio(sim_w, sim_l, tau);
  out.dsim_w = ce.dsims[0];
  out.dsim_l = ce.dsims[1];
  return out;
}

}  // namespace rankpo
