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

#include "fedli/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedli/errors.hpp"

namespace fedli {

void BoundInputs::validate() const {
  for (double v : {eta_g, eta_lmax, mu, L, K, rho, c, G, beta_lipschitz, d0_sq}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("bound inputs must be finite and nonnegative");
  }
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError("bound inputs: c must lie in (0,1]");
}

BoundValue strongly_convex_bound(const BoundInputs& in, std::size_t t) {
  in.validate();
  const double factor = 1.0 - in.eta_g * in.eta_lmax * in.mu * in.K;
  BoundValue out;
  out.value = std::pow(factor, static_cast<double>(t) + 1.0) * in.d0_sq;
  out.invalid_regime = !(factor > 0.0 && factor < 1.0);
  out.negative = out.value < 0.0;
  return out;
}

CFeasibility c_feasibility(const BoundInputs& in) {
  if (!(in.rho > 0.0) || !(in.K > 0.0) || !(in.eta_lmax > 0.0) || !(in.L > 0.0)) {
    throw ConfigError("c_feasibility needs positive rho, K, eta_lmax and L");
  }
  const double lek = in.L * in.eta_lmax * in.K;
  const double first = in.L * in.eta_lmax * (in.eta_g + 2.0 * in.K * in.rho) /
                       (2.0 * in.rho * (2.0 + lek));
  const double second = in.eta_g / (2.0 * in.rho) + lek / 2.0;
  CFeasibility out;
  out.c_min = std::max(first, second);
  out.feasible = out.c_min < 1.0;
  return out;
}

BoundValue convex_gap_bound(const BoundInputs& in, std::size_t T) {
  in.validate();
  if (T == 0) throw ConfigError("convex bound needs T >= 1");
  const double base = in.eta_g * in.eta_lmax * in.K;
  const double lek_c = in.eta_lmax * in.L * in.K / in.c;
  const double r = base * (2.0 - in.L * in.eta_g * in.eta_lmax /
                                     (2.0 * (1.0 - in.c) * in.rho * in.c) - lek_c);
  const double k = base * (2.0 - in.eta_g / (in.rho * in.c) - lek_c);
  const double t = static_cast<double>(T);
  BoundValue out;
  out.invalid_regime = !(r > 0.0) || !(k > 0.0) || !std::isfinite(r);
  const double variance = (1.0 - in.rho) / in.rho * in.eta_lmax * in.eta_lmax * in.K * in.K * in.G;
  out.value = std::max(1.0 / (r * t), 1.0 / (k * t)) * in.d0_sq -
              std::min(1.0 / r, 1.0 / k) * variance;
  out.negative = out.value < 0.0;
  return out;
}

BoundValue nonconvex_bound(const BoundInputs& in, std::size_t T, double f0_minus_fT) {
  in.validate();
  if (T == 0) throw ConfigError("nonconvex bound needs T >= 1");
  const double t = static_cast<double>(T);
  const double le = in.L * in.eta_lmax;
  const double descent = 2.0 / (in.eta_g * in.eta_lmax * in.K * t) * f0_minus_fT;
  const double floor = le * in.K * (in.beta_lipschitz * in.beta_lipschitz / in.rho + in.G) *
                       (std::pow(2.0, in.K + 1.0) / (in.K * in.K) * le + in.eta_g);
  BoundValue out;
  out.value = descent + floor;
  out.invalid_regime = !(in.beta_lipschitz > 0.0);
  out.negative = out.value < 0.0;
  return out;
}

double contraction_fit(std::span<const double> values) {
  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t] > 0.0 && std::isfinite(values[t])) {
      ts.push_back(static_cast<double>(t));
      logs.push_back(std::log(values[t]));
    }
  }
  if (ts.size() < 5) throw InputError("contraction fit needs at least 5 positive distances");
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += logs[i];
  }
  mt /= n;
  ml /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (logs[i] - ml);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  return std::exp(sxy / sxx);
}

}  // namespace fedli
