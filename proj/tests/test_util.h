// Instance builders shared by the unit tests.

#ifndef OACP_TESTS_TEST_UTIL_H_
#define OACP_TESTS_TEST_UTIL_H_

#include <random>
#include <vector>

#include "oacp/core.h"

namespace oacp::testing {

inline Instance LinearInstance(double b1, double bmax, double xbar,
                               const std::vector<double>& c,
                               const std::vector<double>& e) {
  Instance inst;
  inst.initial_budget = ResourceVector{b1};
  inst.budget_cap = ResourceVector{bmax};
  inst.allocation_cap = ResourceVector{xbar};
  for (std::size_t t = 0; t < c.size(); ++t) {
    inst.rounds.push_back(
        {UtilitySpec::Linear(ResourceVector{c[t]}), ResourceVector{e[t]}});
  }
  return inst;
}

inline Instance LogInstance(double b1, double bmax, double xbar,
                            const std::vector<double>& c,
                            const std::vector<double>& e) {
  Instance inst;
  inst.initial_budget = ResourceVector{b1};
  inst.budget_cap = ResourceVector{bmax};
  inst.allocation_cap = ResourceVector{xbar};
  for (std::size_t t = 0; t < c.size(); ++t) {
    inst.rounds.push_back({UtilitySpec::LogServe(c[t]), ResourceVector{e[t]}});
  }
  return inst;
}

// Random single-resource instance; `zero_e` forces E_hat = 0.
inline Instance RandomInstance(std::mt19937_64& rng, std::size_t T, bool linear,
                               bool zero_e) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double bmax = 1.0 + 4.0 * u(rng);
  const double b1 = bmax * (0.1 + 0.8 * u(rng));
  const double xbar = std::min(bmax, 0.2 + 1.3 * u(rng));
  std::vector<double> c(T), e(T);
  for (std::size_t t = 0; t < T; ++t) {
    c[t] = 0.05 + 1.5 * u(rng);
    e[t] = zero_e || u(rng) < 0.4 ? 0.0 : 1.2 * u(rng);
  }
  return linear ? LinearInstance(b1, bmax, xbar, c, e)
                : LogInstance(b1, bmax, xbar, c, e);
}

}  // namespace oacp::testing

#endif  // OACP_TESTS_TEST_UTIL_H_
