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

#include "evigrid/evidential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "evigrid/special_functions.hpp"

namespace evigrid {

namespace {

void check_finite_nonnegative(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0) {
    throw std::domain_error(std::string(what) + " must be finite and >= 0");
  }
}

}  // namespace

DirichletBinary evidence_to_dirichlet(const EvidencePair& e) {
  check_finite_nonnegative(e.e_free, "evidence e_free");
  check_finite_nonnegative(e.e_occ, "evidence e_occ");
  return DirichletBinary{e.e_free + 1.0, e.e_occ + 1.0};
}

SubjectiveOpinion dirichlet_to_opinion(const DirichletBinary& d) {
  if (!(d.alpha_free >= 1.0) || !(d.alpha_occ >= 1.0) ||
      !std::isfinite(d.alpha_free) || !std::isfinite(d.alpha_occ)) {
    throw std::domain_error("dirichlet_to_opinion: alpha components must be >= 1");
  }
  const double s = d.strength();
  return SubjectiveOpinion{(d.alpha_free - 1.0) / s, (d.alpha_occ - 1.0) / s,
                           static_cast<double>(kNumClasses) / s};
}

BeliefMass opinion_to_mass(const SubjectiveOpinion& o) {
  return BeliefMass{o.b_free, o.b_occ, o.u};
}

SubjectiveOpinion mass_to_opinion(const BeliefMass& m) {
  return SubjectiveOpinion{m.m_free, m.m_occ, m.m_unknown};
}

DirichletBinary opinion_to_dirichlet(const SubjectiveOpinion& o, double u_min) {
  if (u_min < 0.0 || u_min > 1.0 || !std::isfinite(u_min)) {
    throw std::domain_error("opinion_to_dirichlet: u_min must be in [0, 1]");
  }
  const double u = std::max(o.u, u_min);
  if (u <= 0.0) {
    throw std::domain_error(
        "opinion_to_dirichlet: dogmatic opinion needs u_min > 0");
  }
  double b_free = o.b_free;
  double b_occ = o.b_occ;
  if (u > o.u) {
    // Rescale beliefs so the triple sums to 1 with the clamped uncertainty.
    const double b_sum = o.b_free + o.b_occ;
    const double scale = b_sum > 0.0 ? (1.0 - u) / b_sum : 0.0;
    b_free *= scale;
    b_occ *= scale;
  }
  const double s = static_cast<double>(kNumClasses) / u;
  return DirichletBinary{b_free * s + 1.0, b_occ * s + 1.0};
}

std::array<double, 2> expected_probability(const DirichletBinary& d) {
  const double s = d.strength();
  return {d.alpha_free / s, d.alpha_occ / s};
}

namespace {

// p^(a-1) with the 0^0 == 1 convention at the simplex boundary.
double simplex_power(double p, double alpha) {
  if (alpha == 1.0) return 1.0;
  return std::pow(p, alpha - 1.0);
}

}  // namespace

double dirichlet_pdf(const DirichletBinary& d, double p_free, double p_occ) {
  if (p_free < 0.0 || p_occ < 0.0 || p_free > 1.0 || p_occ > 1.0 ||
      std::abs(p_free + p_occ - 1.0) > 1e-9) {
    throw std::domain_error("dirichlet_pdf: p outside the binary simplex");
  }
  const double log_b = log_beta(d.alpha_free, d.alpha_occ);
  return std::exp(-log_b) * simplex_power(p_free, d.alpha_free) *
         simplex_power(p_occ, d.alpha_occ);
}

double kl_from_uniform(const DirichletBinary& d) {
  return kl_dirichlet(d, DirichletBinary{1.0, 1.0});
}

double kl_dirichlet(const DirichletBinary& d1, const DirichletBinary& d2) {
  const double s1 = d1.strength();
  const double psi_s1 = digamma(s1);
  double kl = log_beta(d2.alpha_free, d2.alpha_occ) -
              log_beta(d1.alpha_free, d1.alpha_occ);
  kl += (d1.alpha_free - d2.alpha_free) * (digamma(d1.alpha_free) - psi_s1);
  kl += (d1.alpha_occ - d2.alpha_occ) * (digamma(d1.alpha_occ) - psi_s1);
  // Clamp the tiny negative residue closed-form cancellation can leave.
  return kl < 0.0 && kl > -1e-12 ? 0.0 : kl;
}

}  // namespace evigrid
