#include "oacp/oacp.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oacp {

ResourceVector Preselect(const UtilitySpec& u, const ResourceVector& mu,
                         const ResourceVector& xbar) {
  RequireSameSize(mu, xbar, "pre-selection");
  if (u.dimension() != mu.size()) {
    throw InputError("utility/price dimension mismatch");
  }
  if (const auto* lin = std::get_if<LinearUtility>(&u.kind())) {
    ResourceVector x(mu.size());
    for (std::size_t m = 0; m < mu.size(); ++m) {
      x[m] = lin->coeffs[m] > mu[m] ? xbar[m] : 0.0;
    }
    return x;
  }
  const double c = std::get<LogServeUtility>(u.kind()).demand;
  const double hi = std::min(xbar[0], c);
  if (mu[0] <= 0.0) return ResourceVector{hi};
  return ResourceVector{std::clamp(c * (1.0 / mu[0] - 1.0), 0.0, hi)};
}

OacpStepResult OacpStep(const BudgetState& budget, const DualState& dual,
                        const Round& round, const ResourceVector& rho,
                        const ResourceVector& xbar,
                        const ResourceVector& budget_cap) {
  OacpStepResult out;
  out.replenished = Replenishment(budget, round.e_hat, budget_cap);
  const ResourceVector available = budget.remaining + out.replenished;
  out.preselect = Preselect(round.utility, dual.mu, xbar);
  if (out.preselect.AllLessEqual(available, kFeasibilityTol)) {
    out.x = ClampDecision(out.preselect, xbar, available);
    out.g = rho - out.preselect;
  } else {
    out.violated = true;
    out.x = ResourceVector(rho.size());
    out.g = ResourceVector(rho.size());
  }
  out.budget = StepBudget(budget, round.e_hat, out.x, budget_cap).next;
  out.dual = MirrorStep(dual, out.g);
  return out;
}

double OptimalEta(double rho_bar, double xbar_inf, double sigma, double v_cap,
                  double horizon) {
  if (!(v_cap > 0.0) || !(sigma > 0.0)) return 1.0 / std::sqrt(horizon);
  return std::sqrt(2.0 * sigma * v_cap / horizon) / (rho_bar + xbar_inf);
}

double WorstCaseBregmanRadius(const Instance& instance,
                              const ReferenceFunction& ref) {
  const std::size_t m = instance.num_resources;
  const ResourceVector rho = instance.rho();
  const ResourceVector mu1 = InitialDual(ref.kind, m);
  const double scale = instance.f_bar() / instance.alpha();
  double v = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    ResourceVector e(m);
    e[j] = scale / rho[j];
    v = std::max(v, Bregman(ref, e, mu1));
  }
  return v;
}

double ResolveEta(const Instance& instance, const OacpConfig& cfg,
                  const ReferenceFunction& ref) {
  if (cfg.eta) {
    if (!(*cfg.eta > 0.0)) throw InputError("eta must be > 0");
    return *cfg.eta;
  }
  return OptimalEta(instance.rho_bar(), instance.allocation_cap.MaxNorm(),
                    ref.sigma, WorstCaseBregmanRadius(instance, ref),
                    static_cast<double>(instance.horizon()));
}

TheoremMu BuildTheoremMu(const Instance& instance, const ReferenceFunction& ref,
                         std::set<std::size_t> violated_resources,
                         std::vector<std::size_t> violation_rounds) {
  const std::size_t m = instance.num_resources;
  TheoremMu out;
  out.mu_star = ResourceVector(m);
  out.violated_resources = std::move(violated_resources);
  out.violation_rounds = std::move(violation_rounds);
  if (out.violated_resources.empty()) return out;
  const ResourceVector rho = instance.rho();
  const ResourceVector mu1 = InitialDual(ref.kind, m);
  const double scale = instance.f_bar() / instance.alpha();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j : out.violated_resources) {
    ResourceVector cand(m);
    cand[j] = scale / rho[j];
    const double v = Bregman(ref, cand, mu1);
    if (v < best) {
      best = v;
      out.mu_star = cand;
    }
  }
  return out;
}

OacpAllocator::OacpAllocator(const Instance& instance, const OacpConfig& cfg)
    : instance_(instance),
      rho_(instance.rho()),
      record_(cfg.record_diagnostics),
      budget_{instance.initial_budget} {
  dual_.ref = MakeReference(cfg.reference, instance);
  dual_.mu = InitialDual(cfg.reference, instance.num_resources);
  dual_.eta = ResolveEta(instance, cfg, dual_.ref);
}

RoundRecord OacpAllocator::Step(const Round& round) {
  RoundRecord rec;
  rec.budget = budget_.remaining;
  if (record_) rec.dual = dual_.mu;
  OacpStepResult r = OacpStep(budget_, dual_, round, rho_,
                              instance_.allocation_cap, instance_.budget_cap);
  if (r.violated) {
    violation_rounds_.push_back(t_);
    const ResourceVector available = budget_.remaining + r.replenished;
    for (std::size_t m = 0; m < available.size(); ++m) {
      if (r.preselect[m] > available[m] + kFeasibilityTol) {
        violated_resources_.insert(m);
      }
    }
  }
  rec.x = r.x;
  rec.utility = round.utility.Evaluate(r.x);
  rec.replenished = std::move(r.replenished);
  rec.violated = r.violated;
  if (record_) rec.preselect = std::move(r.preselect);
  budget_ = std::move(r.budget);
  dual_ = std::move(r.dual);
  ++t_;
  return rec;
}

TheoremMu OacpAllocator::theorem_mu() const {
  return BuildTheoremMu(instance_, dual_.ref, violated_resources_,
                        violation_rounds_);
}

OacpRun RunOacp(const Instance& instance, const OacpConfig& cfg) {
  OacpAllocator alloc(instance, cfg);
  OacpRun run;
  run.trace = RunAllocator(instance, alloc);
  run.theorem_mu = alloc.theorem_mu();
  run.eta = alloc.dual().eta;
  run.ref = alloc.dual().ref;
  return run;
}

CompetitiveBound EvaluateOacpBound(const Instance& instance, const OacpRun& run,
                                   double opt_value) {
  const double alpha = instance.alpha();
  const double g = instance.rho_bar() + instance.allocation_cap.MaxNorm();
  const double horizon = static_cast<double>(instance.horizon());
  const ResourceVector mu1 = InitialDual(run.ref.kind, instance.num_resources);
  CompetitiveBound b;
  b.lhs = opt_value - alpha * run.trace.total_utility;
  b.rhs = alpha * instance.f_bar() +
          alpha * g * g * run.eta * horizon / (2.0 * run.ref.sigma) +
          alpha / run.eta * Bregman(run.ref, run.theorem_mu.mu_star, mu1);
  return b;
}

}  // namespace oacp
