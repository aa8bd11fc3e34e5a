/*
 * Copyright 2026 The evigrid Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "evigrid/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evigrid/special_functions.hpp"

namespace evigrid {

CellTarget target_from_label(CellLabel label) {
  switch (label) {
    case CellLabel::kFree:
      return CellTarget{1, 0};
    case CellLabel::kOccupied:
      return CellTarget{0, 1};
    case CellLabel::kUnknown:
      return CellTarget{0, 0};
  }
  return CellTarget{0, 0};
}

double lambda_t(int epoch, const LossConfig& cfg) {
  if (cfg.anneal_epochs <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(epoch) /
                           static_cast<double>(cfg.anneal_epochs));
}

double cell_loss(const EvidencePair& e, const CellTarget& y) {
  const DirichletBinary d = evidence_to_dirichlet(e);
  const double s = d.strength();
  const double pf = d.alpha_free / s;
  const double po = d.alpha_occ / s;
  const double var_scale = 1.0 / (s + 1.0);
  const double lf = (y.y_free - pf) * (y.y_free - pf) + pf * (1.0 - pf) * var_scale;
  const double lo = (y.y_occ - po) * (y.y_occ - po) + po * (1.0 - po) * var_scale;
  return lf + lo;
}

namespace {

// alpha~ = y + (1 - y) * alpha: reset the true-class parameter to 1.
DirichletBinary tilde_alpha(const EvidencePair& e, const CellTarget& y) {
  const DirichletBinary d = evidence_to_dirichlet(e);
  return DirichletBinary{y.y_free == 1 ? 1.0 : d.alpha_free,
                         y.y_occ == 1 ? 1.0 : d.alpha_occ};
}

}  // namespace

double kl_regularizer(const EvidencePair& e, const CellTarget& y) {
  return kl_from_uniform(tilde_alpha(e, y));
}

std::array<double, 2> cell_loss_grad(const EvidencePair& e, const CellTarget& y) {
  const DirichletBinary d = evidence_to_dirichlet(e);
  const double s = d.strength();
  const double p[2] = {d.alpha_free / s, d.alpha_occ / s};
  const double yv[2] = {static_cast<double>(y.y_free),
                        static_cast<double>(y.y_occ)};
  const double inv_s1 = 1.0 / (s + 1.0);

  // d p_A / d e_B = (delta_AB - p_A) / S, and the variance scale 1/(S+1)
  // contributes -sum_A p_A (1 - p_A) / (S+1)^2 through dS/de_B = 1.
  double q[2];
  double q_dot_p = 0.0;
  double var_sum = 0.0;
  for (int a = 0; a < 2; ++a) {
    q[a] = -2.0 * (yv[a] - p[a]) + (1.0 - 2.0 * p[a]) * inv_s1;
    q_dot_p += q[a] * p[a];
    var_sum += p[a] * (1.0 - p[a]);
  }
  const double scale_term = var_sum * inv_s1 * inv_s1;
  return {(q[0] - q_dot_p) / s - scale_term, (q[1] - q_dot_p) / s - scale_term};
}

std::array<double, 2> kl_regularizer_grad(const EvidencePair& e,
                                          const CellTarget& y) {
  const DirichletBinary a = tilde_alpha(e, y);
  const double s = a.strength();
  const double common = (s - 2.0) * trigamma(s);
  // d KL / d alpha~_B = (alpha~_B - 1) psi'(alpha~_B) - (S~ - K) psi'(S~);
  // the true-class component is constant (alpha~ = 1), so its gradient is 0.
  std::array<double, 2> g{0.0, 0.0};
  if (y.y_free == 0) {
    g[0] = (a.alpha_free - 1.0) * trigamma(a.alpha_free) - common;
  }
  if (y.y_occ == 0) {
    g[1] = (a.alpha_occ - 1.0) * trigamma(a.alpha_occ) - common;
  }
  return g;
}

namespace {

void check_specs(const EvidentialGrid& pred, const GroundTruthGrid& truth) {
  if (!(pred.spec == truth.spec)) {
    throw std::invalid_argument("loss: prediction and truth grids disagree on spec");
  }
}

}  // namespace

double total_loss(const EvidentialGrid& pred, const GroundTruthGrid& truth,
                  int epoch, const LossConfig& cfg) {
  check_specs(pred, truth);
  const double lambda = lambda_t(epoch, cfg);
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < pred.cells.size(); ++i) {
    const CellTarget y = target_from_label(truth.cells[i]);
    const double w = truth.cells[i] == CellLabel::kOccupied ? cfg.occupied_weight : 1.0;
    const double term =
        w * (cell_loss(pred.cells[i], y) + lambda * kl_regularizer(pred.cells[i], y));
    const double t = sum + term;  // Kahan
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

LossGradient loss_gradient(const EvidentialGrid& pred,
                           const GroundTruthGrid& truth, int epoch,
                           const LossConfig& cfg) {
  check_specs(pred, truth);
  const double lambda = lambda_t(epoch, cfg);
  LossGradient out;
  out.d_evidence.resize(pred.cells.size());
  double sum = 0.0, comp = 0.0;
  double kl_sum = 0.0, kl_comp = 0.0;
  for (std::size_t i = 0; i < pred.cells.size(); ++i) {
    const CellTarget y = target_from_label(truth.cells[i]);
    const double w = truth.cells[i] == CellLabel::kOccupied ? cfg.occupied_weight : 1.0;
    const double kl = kl_regularizer(pred.cells[i], y);
    const double term = w * (cell_loss(pred.cells[i], y) + lambda * kl);
    {
      const double t = sum + term;
      comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
      sum = t;
    }
    {
      const double wkl = w * kl;
      const double t = kl_sum + wkl;
      kl_comp += std::abs(kl_sum) >= std::abs(wkl) ? (kl_sum - t) + wkl
                                                   : (wkl - t) + kl_sum;
      kl_sum = t;
    }
    const auto gl = cell_loss_grad(pred.cells[i], y);
    const auto gk = kl_regularizer_grad(pred.cells[i], y);
    out.d_evidence[i] = {w * (gl[0] + lambda * gk[0]),
                         w * (gl[1] + lambda * gk[1])};
  }
  out.loss = sum + comp;
  out.weighted_kl = kl_sum + kl_comp;
  return out;
}

}  // namespace evigrid
