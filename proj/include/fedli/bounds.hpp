/*
 * Copyright 2026 The fedli Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDLI_BOUNDS_HPP_
#define FEDLI_BOUNDS_HPP_

#include <cstddef>
#include <span>

namespace fedli {

// Quantities entering the FedLi-LS convergence rates.
struct BoundInputs {
  double eta_g = 1.0;
  double eta_lmax = 0.0;
  double mu = 0.0;
  double L = 0.0;
  double K = 1.0;
  double rho = 1.0;
  double c = 0.5;
  double G = 0.0;
  double beta_lipschitz = 0.0;
  double d0_sq = 0.0;  // ‖w_0 − w*‖²

  void validate() const;
};

struct BoundValue {
  double value = 0.0;
  // The theorem's hypotheses fail for these inputs; `value` is still the
  // formula evaluated verbatim.
  bool invalid_regime = false;
  bool negative = false;
};

// (1 − η_g·η_lmax·μ·K)^{t+1}·d0². Flags a contraction factor outside (0, 1).
BoundValue strongly_convex_bound(const BoundInputs& in, std::size_t t);

struct CFeasibility {
  double c_min = 0.0;
  bool feasible = false;  // c_min < 1
};

// Smallest Armijo constant admitted by the convex and strongly convex
// rates:
//   max{ Lη(η_g + 2Kρ) / (2ρ(2 + LηK)),  η_g/(2ρ) + ηLK/2 }.
CFeasibility c_feasibility(const BoundInputs& in);

// max{1/(RT), 1/(𝒦T)}·d0² − min{1/R, 1/𝒦}·((1−ρ)/ρ)·η²K²G with
//   R = η_gηK(2 − Lη_gη/(2(1−c)ρc) − ηLK/c),
//   𝒦 = η_gηK(2 − η_g/(ρc) − ηLK/c).
// Invalid when either constant is nonpositive; negative results are
// reported as-is and flagged.
BoundValue convex_gap_bound(const BoundInputs& in, std::size_t T);

// Bound on min_t ‖∇f(w_t)‖²:
//   2/(η_gηKT)·(f0 − fT) + LηK(β²/ρ + G)(2^{K+1}/K²·Lη + η_g).
// Invalid when β is unknown (zero).
BoundValue nonconvex_bound(const BoundInputs& in, std::size_t T, double f0_minus_fT);

// exp of the least-squares slope of log(values[t]) against t. Nonpositive
// entries are dropped; fewer than five usable points is an error.
double contraction_fit(std::span<const double> values);

}  // namespace fedli

#endif  // FEDLI_BOUNDS_HPP_
