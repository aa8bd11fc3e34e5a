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

#include "evigrid/special_functions.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace evigrid {

namespace {

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(fn) + ": argument must be finite and > 0");
  }
}

// Lanczos g=7, n=9 coefficients (Godfrey).
constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // log(2*pi)/2

double lanczos_log_gamma(double x) {
  // Valid for x >= 0.5.
  double acc = kLanczos[0];
  for (int i = 1; i < 9; ++i) {
    acc += kLanczos[i] / (x - 1.0 + static_cast<double>(i));
  }
  const double t = x + 6.5;  // x + g - 0.5
  return kHalfLogTwoPi + (x - 0.5) * std::log(t) - t + std::log(acc);
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x < 0.5) {
    // Gamma(x) = Gamma(x + 1) / x.
    return lanczos_log_gamma(x + 1.0) - std::log(x);
  }
  return lanczos_log_gamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double acc = 0.0;
  // psi(x) = psi(x + 1) - 1/x, lift into the asymptotic regime.
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ log x - 1/(2x) - sum B_2n / (2n x^2n).
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  series += inv2 * (1.0 / 12.0);
  series -= inv2 * inv2 * (1.0 / 120.0);
  series += inv2 * inv2 * inv2 * (1.0 / 252.0);
  series -= inv2 * inv2 * inv2 * inv2 * (1.0 / 240.0);
  series += inv2 * inv2 * inv2 * inv2 * inv2 * (1.0 / 132.0);
  series -= inv2 * inv2 * inv2 * inv2 * inv2 * inv2 * (691.0 / 32760.0);
  return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double acc = 0.0;
  // psi'(x) = psi'(x + 1) + 1/x^2.
  while (x < 12.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_2n / x^(2n+1).
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double s = 1.0 + inv * 0.5;
  double p = inv2;
  s += p * (1.0 / 6.0);
  p *= inv2;
  s -= p * (1.0 / 30.0);
  p *= inv2;
  s += p * (1.0 / 42.0);
  p *= inv2;
  s -= p * (1.0 / 30.0);
  p *= inv2;
  s += p * (5.0 / 66.0);
  return acc + s * inv;
}

double log_beta(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

}  // namespace evigrid
