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

#pragma once

#include <array>
#include <vector>

#include "evigrid/evidential.hpp"
#include "evigrid/grid.hpp"

namespace evigrid {

// One-hot cell target; Unknown cells are all-zero.
struct CellTarget {
  int y_free = 0;
  int y_occ = 0;
};

CellTarget target_from_label(CellLabel label);

struct LossConfig {
  double occupied_weight = 100.0;
  int anneal_epochs = 10;
};

// Ramp weight of the KL regularizer: 0 at epoch 0, 1 from anneal_epochs on.
double lambda_t(int epoch, const LossConfig& cfg);

// Expected sum-of-squares loss of the Dirichlet implied by the evidence:
//   sum_A (y_A - p_A)^2 + p_A (1 - p_A) / (S + 1),  alpha = e + 1.
double cell_loss(const EvidencePair& e, const CellTarget& y);

// KL from uniform of alpha~ = y + (1 - y) * alpha: the true class component
// is reset to 1 so only conflicting evidence is penalized; Unknown targets
// keep alpha unchanged.
double kl_regularizer(const EvidencePair& e, const CellTarget& y);

// d cell_loss / d (e_free, e_occ).
std::array<double, 2> cell_loss_grad(const EvidencePair& e, const CellTarget& y);

// d kl_regularizer / d (e_free, e_occ).
std::array<double, 2> kl_regularizer_grad(const EvidencePair& e,
                                          const CellTarget& y);

// sum_i w_i (cell_loss_i + lambda_t * kl_i), w_i = occupied_weight for cells
// whose true label is Occupied. Compensated summation, fixed cell order.
// Throws std::invalid_argument if the grids disagree on their spec.
double total_loss(const EvidentialGrid& pred, const GroundTruthGrid& truth,
                  int epoch, const LossConfig& cfg);

struct LossGradient {
  double loss = 0.0;
  // Occupied-weighted KL regularizer sum before the lambda ramp; tracked for
  // training logs.
  double weighted_kl = 0.0;
  // d loss / d (e_free, e_occ) per cell, row-major.
  std::vector<std::array<double, 2>> d_evidence;
};

LossGradient loss_gradient(const EvidentialGrid& pred,
                           const GroundTruthGrid& truth, int epoch,
                           const LossConfig& cfg);

}  // namespace evigrid
