#include "oacp/oracle.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace oacp {

namespace {

// One resource's view of the program.
struct ScalarProblem {
  bool log_serve = false;
  std::vector<double> coeff;  // slope (linear) or demand (log-serve)
  std::vector<double> cap;    // upper bound on x_t
  std::vector<double> e_hat;
  double b1 = 0.0;
  double bmax = 0.0;

  std::size_t T() const { return coeff.size(); }
  double F(std::size_t t, double x) const {
    return log_serve ? coeff[t] * std::log1p(x / coeff[t]) : coeff[t] * x;
  }
  double dF(std::size_t t, double x) const {
    return log_serve ? coeff[t] / (coeff[t] + x) : coeff[t];
  }
  double d2F(std::size_t t, double x) const {
    if (!log_serve) return 0.0;
    const double d = coeff[t] + x;
    return -coeff[t] / (d * d);
  }
};

ScalarProblem Project(const Instance& inst, std::size_t m) {
  ScalarProblem p;
  p.b1 = inst.initial_budget[m];
  p.bmax = inst.budget_cap[m];
  const double xbar = inst.allocation_cap[m];
  for (const Round& r : inst.rounds) {
    if (const auto* lin = std::get_if<LinearUtility>(&r.utility.kind())) {
      p.coeff.push_back(lin->coeffs[m]);
      p.cap.push_back(xbar);
    } else {
      const double c = std::get<LogServeUtility>(r.utility.kind()).demand;
      p.log_serve = true;
      p.coeff.push_back(c);
      // Utility is flat beyond the demand.
      p.cap.push_back(std::min(xbar, c));
    }
    p.e_hat.push_back(r.e_hat[m]);
  }
  return p;
}

// Symmetric positive definite matrix with half-bandwidth 2, stored by rows:
// band[i][k] = A(i, i - k).
using Band = std::vector<std::array<double, 3>>;

bool CholeskySolve(Band a, std::vector<double>& rhs) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = std::min<std::size_t>(i, 2) + 1; k-- > 0;) {
      const std::size_t j = i - k;
      double s = a[i][k];
      for (std::size_t q = std::max<std::size_t>(j >= 2 ? j - 2 : 0,
                                                 i >= 2 ? i - 2 : 0);
           q < j; ++q) {
        s -= a[i][i - q] * a[j][j - q];
      }
      if (k == 0) {
        if (!(s > 0.0)) return false;
        a[i][0] = std::sqrt(s);
      } else {
        a[i][k] = s / a[j][0];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 1; k <= std::min<std::size_t>(i, 2); ++k) {
      s -= a[i][k] * rhs[i - k];
    }
    rhs[i] = s / a[i][0];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = 1; k <= 2 && i + k < n; ++k) {
      s -= a[i + k][k] * rhs[i + k];
    }
    rhs[i] = s / a[i][0];
  }
  return true;
}

// z = (x_0, b_0, x_1, b_1, ...), b_t the level after round t.
class Barrier {
 public:
  explicit Barrier(const ScalarProblem& p) : p_(p) {}

  std::size_t num_constraints() const { return 5 * p_.T(); }

  // Smallest slack; <= 0 means z is not strictly feasible.
  double MinSlack(const std::vector<double>& z) const {
    double lo = std::numeric_limits<double>::infinity();
    ForEachSlack(z, [&](double s, auto&&...) { lo = std::min(lo, s); });
    return lo;
  }

  double Value(const std::vector<double>& z, double tau) const {
    double v = 0.0;
    for (std::size_t t = 0; t < p_.T(); ++t) v -= tau * p_.F(t, z[2 * t]);
    ForEachSlack(z, [&](double s, auto&&...) { v -= std::log(s); });
    return v;
  }

  void Derivatives(const std::vector<double>& z, double tau,
                   std::vector<double>& g, Band& h) const {
    const std::size_t n = z.size();
    g.assign(n, 0.0);
    h.assign(n, {0.0, 0.0, 0.0});
    for (std::size_t t = 0; t < p_.T(); ++t) {
      g[2 * t] -= tau * p_.dF(t, z[2 * t]);
      h[2 * t][0] -= tau * p_.d2F(t, z[2 * t]);
    }
    ForEachSlack(z, [&](double s, const std::array<long, 3>& idx,
                        const std::array<double, 3>& coef, int count) {
      const double inv = 1.0 / s;
      const double inv2 = inv * inv;
      for (int a = 0; a < count; ++a) {
        g[idx[a]] -= coef[a] * inv;
        for (int b = 0; b < count; ++b) {
          if (idx[b] <= idx[a]) {
            h[idx[a]][idx[a] - idx[b]] += coef[a] * coef[b] * inv2;
          }
        }
      }
    });
  }

 private:
  // Calls fn(slack, indices, coefficients, count) for every constraint
  // written as slack = const + sum coef * z[idx] > 0.
  template <typename Fn>
  void ForEachSlack(const std::vector<double>& z, Fn&& fn) const {
    for (std::size_t t = 0; t < p_.T(); ++t) {
      const long xi = static_cast<long>(2 * t);
      const long bi = xi + 1;
      const double x = z[xi];
      const double b = z[bi];
      fn(x, std::array<long, 3>{xi, 0, 0}, std::array<double, 3>{1, 0, 0}, 1);
      fn(p_.cap[t] - x, std::array<long, 3>{xi, 0, 0},
         std::array<double, 3>{-1, 0, 0}, 1);
      fn(b, std::array<long, 3>{bi, 0, 0}, std::array<double, 3>{1, 0, 0}, 1);
      fn(p_.bmax - b - x, std::array<long, 3>{xi, bi, 0},
         std::array<double, 3>{-1, -1, 0}, 2);
      if (t == 0) {
        fn(p_.e_hat[t] + p_.b1 - b - x, std::array<long, 3>{xi, bi, 0},
           std::array<double, 3>{-1, -1, 0}, 2);
      } else {
        fn(p_.e_hat[t] + z[bi - 2] - b - x,
           std::array<long, 3>{xi, bi, bi - 2},
           std::array<double, 3>{-1, -1, 1}, 3);
      }
    }
  }

  const ScalarProblem& p_;
};

struct ScalarSolution {
  std::vector<double> x;
  int iterations = 0;
  double gap = 0.0;
  bool converged = true;
};

ScalarSolution SolveScalar(const ScalarProblem& p,
                           const ConcaveSolverOptions& opts) {
  const std::size_t T = p.T();
  const double dT = static_cast<double>(T);
  std::vector<double> z(2 * T);
  for (std::size_t t = 0; t < T; ++t) {
    z[2 * t] = std::min(0.5 * p.cap[t], 0.45 * p.b1 / (dT + 1.0));
    z[2 * t + 1] = p.b1 * (dT - static_cast<double>(t)) / (dT + 1.0);
  }
  Barrier barrier(p);
  if (!(barrier.MinSlack(z) > 0.0)) {
    throw ContractViolation("interior-point start is not strictly feasible");
  }

  // Scale the first barrier weight to the utility magnitude.
  double fmax = 0.0;
  for (std::size_t t = 0; t < T; ++t) fmax = std::max(fmax, p.F(t, p.cap[t]));
  const double m = static_cast<double>(barrier.num_constraints());
  double tau = m / std::max(fmax * dT, 1e-12);

  ScalarSolution sol;
  std::vector<double> g, step, trial(z.size());
  Band h;
  for (;;) {
    for (int inner = 0; inner < 200; ++inner) {
      if (sol.iterations >= opts.max_newton) {
        sol.converged = false;
        break;
      }
      ++sol.iterations;
      barrier.Derivatives(z, tau, g, h);
      step = g;
      for (double& v : step) v = -v;
      if (!CholeskySolve(h, step)) {
        sol.converged = false;
        break;
      }
      double decrement = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) decrement -= g[i] * step[i];
      if (decrement < 1e-10) break;

      const double phi = barrier.Value(z, tau);
      double s = 1.0;
      bool accepted = false;
      while (s > 1e-16) {
        for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] + s * step[i];
        if (barrier.MinSlack(trial) > 0.0 &&
            barrier.Value(trial, tau) <= phi - 0.25 * s * decrement) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) break;  // rounding floor reached for this tau
      z.swap(trial);
    }
    sol.gap = m / tau;
    if (sol.gap <= opts.gap_tol || !sol.converged) break;
    tau *= 8.0;
  }
  sol.x.resize(T);
  for (std::size_t t = 0; t < T; ++t) sol.x[t] = z[2 * t];
  return sol;
}

}  // namespace

OptResult SolveOptConcave(const Instance& instance,
                          const ConcaveSolverOptions& opts) {
  instance.Validate();
  const std::size_t M = instance.num_resources;
  if (M > 1 && instance.utility_kind() != UtilityKind::kLinear) {
    throw InputError("multi-resource offline solve needs linear utilities");
  }
  OptResult res;
  res.decisions.assign(instance.horizon(), ResourceVector(M));
  for (std::size_t m = 0; m < M; ++m) {
    const ScalarSolution sol = SolveScalar(Project(instance, m), opts);
    for (std::size_t t = 0; t < instance.horizon(); ++t) {
      res.decisions[t][m] = sol.x[t];
    }
    res.iterations += sol.iterations;
    res.residual = std::max(res.residual, sol.gap);
    res.converged = res.converged && sol.converged;
  }
  res.value = ReplayDecisions(instance, res.decisions);
  res.lower = res.upper = res.value;
  return res;
}

OptResult SolveOptDp(const Instance& instance, int levels) {
  if (instance.num_resources != 1) {
    throw InputError("the DP oracle supports a single resource only");
  }
  const std::size_t T = instance.horizon();
  if (T == 0 || T > 12) throw InputError("the DP oracle needs 1 <= T <= 12");
  if (levels < 2 || levels > 2001) {
    throw InputError("the DP oracle needs 2..2001 budget levels");
  }
  const double bmax = instance.budget_cap[0];
  const double xbar = instance.allocation_cap[0];
  const double b1 = instance.initial_budget[0];
  OptResult res;
  res.decisions.assign(T, ResourceVector(1));
  if (!(bmax > 0.0) || !(b1 >= 0.0)) {
    res.value = res.lower = res.upper = 0.0;
    return res;
  }
  const std::size_t G = static_cast<std::size_t>(levels);
  const double h = bmax / static_cast<double>(G - 1);
  const auto level = [&](std::size_t j) {
    return j + 1 == G ? bmax : h * static_cast<double>(j);
  };
  const auto f = [&](std::size_t t, double x) {
    return instance.rounds[t].utility.Evaluate(ResourceVector{x});
  };
  const double tol = 1e-12 * std::max(1.0, bmax);

  // Lower bound: post-round budget is exactly a grid level.
  std::vector<std::vector<double>> lo(T + 1, std::vector<double>(G, 0.0));
  std::vector<std::vector<double>> up(T + 1, std::vector<double>(G, 0.0));
  const auto best_lower = [&](std::size_t t, double a,
                              const std::vector<double>& next,
                              std::size_t* arg) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < G && level(j) <= a + tol; ++j) {
      const double x = std::max(0.0, a - level(j));
      if (x > xbar + tol) continue;
      const double v = f(t, std::min(x, xbar)) + next[j];
      if (v > best) {
        best = v;
        if (arg) *arg = j;
      }
    }
    return best;
  };
  // Upper bound: post-round budget rounded up to the next grid level.
  const auto best_upper = [&](std::size_t t, double a,
                              const std::vector<double>& next) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < G; ++j) {
      const double below = j == 0 ? -std::numeric_limits<double>::infinity()
                                  : level(j - 1);
      if (below >= a) break;
      if (a - level(j) > xbar + tol) continue;
      const double x = std::min({xbar, a, a - below});
      best = std::max(best, f(t, x) + next[j]);
    }
    return best;
  };
  for (std::size_t t = T; t-- > 0;) {
    const double e = instance.rounds[t].e_hat[0];
    for (std::size_t i = 0; i < G; ++i) {
      const double a = std::min(level(i) + e, bmax);
      lo[t][i] = best_lower(t, a, lo[t + 1], nullptr);
      up[t][i] = best_upper(t, a, up[t + 1]);
    }
  }
  // Roll the lower-bound policy forward from the exact initial budget.
  double b = b1;
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double e = instance.rounds[t].e_hat[0];
    const double a = std::min(b + e, bmax);
    std::size_t j = 0;
    best_lower(t, a, lo[t + 1], &j);
    const double x = std::clamp(a - level(j), 0.0, std::min(xbar, a));
    res.decisions[t][0] = x;
    total += f(t, x);
    b = a - x;
  }
  {
    const double a = std::min(b1 + instance.rounds[0].e_hat[0], bmax);
    res.upper = best_upper(0, a, up[1]);
  }
  res.value = res.lower = total;
  res.residual = h;
  res.iterations = static_cast<int>(T * G);
  return res;
}

double ReplayDecisions(const Instance& instance,
                       const std::vector<ResourceVector>& decisions) {
  if (decisions.size() != instance.horizon()) {
    throw InputError("decision sequence length does not match the horizon");
  }
  BudgetState budget{instance.initial_budget};
  double total = 0.0;
  for (std::size_t t = 0; t < decisions.size(); ++t) {
    const Round& r = instance.rounds[t];
    budget = StepBudget(budget, r.e_hat, decisions[t], instance.budget_cap).next;
    total += r.utility.Evaluate(decisions[t]);
  }
  return total;
}

}  // namespace oacp
