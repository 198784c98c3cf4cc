#pragma once

#include <span>
#include <vector>

#include "rankpo/encoder.hpp"
#include "rankpo/types.hpp"

namespace rankpo {

struct SoftmaxLoss {
  double loss = 0.0;
  std::vector<double> dsims;  // d(loss)/d(sim_j), same order as input
};

// Cross-entropy of the temperature-scaled softmax over `sims` against the
// candidate at `target`. Stabilized by subtracting the max logit.
SoftmaxLoss softmax_xent(std::span<const double> sims, std::size_t target,
                         double tau);

// Softmax-contrastive loss over [positive, negatives...]; dsims[0] is the
// gradient w.r.t. sim(query, positive).
SoftmaxLoss infonce_loss(const Embedding& query, const Embedding& positive,
                         std::span<const Embedding> negatives, double tau);

// sim_w/tau - sim_l/tau: the log-ratio of the two-candidate softmax
// selection probabilities.
double pair_logratio(double sim_w, double sim_l, double tau);

struct PreferenceLoss {
  double loss = 0.0;
  double u = 0.0;         // the margin the shape function is applied to
  double dloss_du = 0.0;  // hinge kink (u == 1) uses subgradient 0
};

// loss = shape(u). Sigmoid: -log sigmoid(u), computed as softplus(-u).
// Hinge: max(0, 1 - u).
PreferenceLoss preference_shape(double u, LossShape shape);

// u = beta*(sim_w_policy - sim_l_policy)/tau
//   - beta*(sim_w_ref - sim_l_ref)/tau
PreferenceLoss rankpo_loss(double policy_sim_w, double policy_sim_l,
                           double ref_sim_w, double ref_sim_l, double beta,
                           double tau, LossShape shape);

// rankpo_loss with the reference terms removed.
PreferenceLoss simrankpo_loss(double policy_sim_w, double policy_sim_l,
                              double beta, double tau, LossShape shape);

struct SftLoss {
  double loss = 0.0;
  double logit = 0.0;  // (sim_w - sim_l)/tau
  double dsim_w = 0.0;
  double dsim_l = 0.0;
};

// Two-way cross-entropy on temperature-scaled similarities.
SftLoss sft_loss(double sim_w, double sim_l, double tau);

}  // namespace rankpo
