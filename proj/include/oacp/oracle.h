// Offline optimum OPT(y) with full knowledge of all rounds: an interior-point
// solver for the concave program and a brute-force dynamic program over
// discretized budget levels used to cross-check it.

#ifndef OACP_ORACLE_H_
#define OACP_ORACLE_H_

#include <vector>

#include "oacp/core.h"

namespace oacp {

struct OptResult {
  double value = 0.0;  // sum_t f_t(x_t) of `decisions`
  std::vector<ResourceVector> decisions;
  int iterations = 0;
  double residual = 0.0;  // duality-gap bound (concave) or grid spacing (DP)
  bool converged = true;
  // DP only: feasible lower bound (== value) and a relaxation upper bound.
  double lower = 0.0;
  double upper = 0.0;
};

struct ConcaveSolverOptions {
  double gap_tol = 1e-8;  // stop once the barrier gap bound is below this
  int max_newton = 2000;
};

// Log-barrier interior point over (x_t, post-round level) pairs. The dynamics
// min(E_hat, Bmax - B) are relaxed to "replenish any amount up to that", which
// has the same optimum because more budget never lowers the achievable
// utility. Resources decouple, so M > 1 requires linear utilities and is
// solved one resource at a time.
OptResult SolveOptConcave(const Instance& instance,
                          const ConcaveSolverOptions& opts = {});

// Single resource, T <= 12, 2 <= levels <= 2001. `value` comes from a policy
// whose post-round budget always lands on a grid level, so it is feasible for
// the exact dynamics; `upper` rounds every post-round budget up instead.
OptResult SolveOptDp(const Instance& instance, int levels);

// Total utility of a decision sequence under the exact dynamics, or a
// ContractViolation if it overdraws the budget.
double ReplayDecisions(const Instance& instance,
                       const std::vector<ResourceVector>& decisions);

}  // namespace oacp

#endif  // OACP_ORACLE_H_
