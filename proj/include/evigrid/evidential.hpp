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

namespace evigrid {

// Fixed binary frame {Free, Occupied}. The four structs below are equivalent
// per-cell uncertainty representations; conversions between them are exact
// bijections except where a clamp is requested explicitly.
inline constexpr int kNumClasses = 2;

// Dempster-Shafer belief masses over {Free}, {Occupied} and the whole frame.
// m_free + m_occ + m_unknown == 1; the empty set carries no mass.
struct BeliefMass {
  double m_free = 0.0;
  double m_occ = 0.0;
  double m_unknown = 1.0;
};

// Subjective-logic opinion: singleton beliefs plus uncertainty mass.
// b_free + b_occ + u == 1.
struct SubjectiveOpinion {
  double b_free = 0.0;
  double b_occ = 0.0;
  double u = 1.0;
};

// Nonnegative evidence for each singleton.
struct EvidencePair {
  double e_free = 0.0;
  double e_occ = 0.0;
};

// Binary Dirichlet parameters, alpha = evidence + 1, so alpha >= 1 and the
// strength S = alpha_free + alpha_occ >= 2.
struct DirichletBinary {
  double alpha_free = 1.0;
  double alpha_occ = 1.0;

  double strength() const { return alpha_free + alpha_occ; }
};

// alpha_A = e_A + 1. Throws std::domain_error on negative or non-finite
// evidence.
DirichletBinary evidence_to_dirichlet(const EvidencePair& e);

// b_A = (alpha_A - 1) / S, u = K / S. Throws std::domain_error if any
// alpha < 1.
SubjectiveOpinion dirichlet_to_opinion(const DirichletBinary& d);

BeliefMass opinion_to_mass(const SubjectiveOpinion& o);
SubjectiveOpinion mass_to_opinion(const BeliefMass& m);

// Inverse of dirichlet_to_opinion with a floor on the uncertainty mass:
// u' = max(u, u_min), beliefs rescaled so b_free + b_occ + u' == 1, then
// S = K / u' and e_A = b_A * S. A dogmatic opinion (u == 0) maps to infinite
// evidence, so u' must end up positive: throws std::domain_error when
// u_min < 0 or max(u, u_min) == 0.
DirichletBinary opinion_to_dirichlet(const SubjectiveOpinion& o, double u_min);

// Expected class probabilities p_A = alpha_A / S; components sum to 1.
std::array<double, 2> expected_probability(const DirichletBinary& d);

// Dirichlet density at p = (p_free, p_occ) on the binary simplex. Throws
// std::domain_error when p is outside the simplex (tolerance 1e-9 on the
// sum). 0^0 at the boundary is taken as 1, so Dir(1,1) is uniformly 1.
double dirichlet_pdf(const DirichletBinary& d, double p_free, double p_occ);

// KL[ Dir(alpha) || Dir(1,1) ] via gamma/digamma closed form.
double kl_from_uniform(const DirichletBinary& d);

// KL[ Dir(alpha1) || Dir(alpha2) ], general closed form:
//   log B(a2) - log B(a1) + sum_A (a1_A - a2_A) (psi(a1_A) - psi(S1)).
// Reduces to kl_from_uniform when alpha2 == (1,1).
double kl_dirichlet(const DirichletBinary& d1, const DirichletBinary& d2);

}  // namespace evigrid
