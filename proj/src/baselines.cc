#include "oacp/baselines.h"

#include <string>

namespace oacp {

BaselineKind ParseBaselineKind(std::string_view name) {
  if (name == "equal") return BaselineKind::kEqual;
  if (name == "greedy") return BaselineKind::kGreedy;
  if (name == "dmd") return BaselineKind::kDmd;
  throw InputError("unknown baseline '" + std::string(name) + "'");
}

std::string_view BaselineName(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kEqual:
      return "equal";
    case BaselineKind::kGreedy:
      return "greedy";
    case BaselineKind::kDmd:
      return "dmd";
  }
  return "";
}

namespace {

RoundRecord Commit(BudgetState& budget, const Round& round,
                   const ResourceVector& x, const ResourceVector& budget_cap) {
  RoundRecord rec;
  rec.budget = budget.remaining;
  BudgetStep step = StepBudget(budget, round.e_hat, x, budget_cap);
  rec.replenished = std::move(step.replenished);
  rec.x = x;
  rec.utility = round.utility.Evaluate(x);
  budget = std::move(step.next);
  return rec;
}

}  // namespace

EqualAllocator::EqualAllocator(const Instance& instance)
    : instance_(instance),
      rho_(instance.rho()),
      budget_{instance.initial_budget} {}

RoundRecord EqualAllocator::Step(const Round& round) {
  const ResourceVector e =
      Replenishment(budget_, round.e_hat, instance_.budget_cap);
  const ResourceVector x = ClampDecision(rho_ + e, instance_.allocation_cap,
                                         budget_.remaining + e);
  return Commit(budget_, round, x, instance_.budget_cap);
}

GreedyAllocator::GreedyAllocator(const Instance& instance)
    : instance_(instance), budget_{instance.initial_budget} {}

RoundRecord GreedyAllocator::Step(const Round& round) {
  const ResourceVector e =
      Replenishment(budget_, round.e_hat, instance_.budget_cap);
  const ResourceVector x =
      ClampDecision(instance_.allocation_cap, instance_.allocation_cap,
                    budget_.remaining + e);
  return Commit(budget_, round, x, instance_.budget_cap);
}

DmdAllocator::DmdAllocator(const Instance& instance, const OacpConfig& cfg)
    : instance_(instance),
      rho_(instance.rho()),
      record_(cfg.record_diagnostics),
      budget_{instance.initial_budget} {
  dual_.ref = MakeReference(cfg.reference, instance);
  dual_.mu = InitialDual(cfg.reference, instance.num_resources);
  dual_.eta = ResolveEta(instance, cfg, dual_.ref);
}

RoundRecord DmdAllocator::Step(const Round& round) {
  const ResourceVector e =
      Replenishment(budget_, round.e_hat, instance_.budget_cap);
  const ResourceVector xhat =
      Preselect(round.utility, dual_.mu, instance_.allocation_cap);
  const ResourceVector x =
      ClampDecision(xhat, instance_.allocation_cap, budget_.remaining + e);
  const ResourceVector mu = dual_.mu;
  dual_ = MirrorStep(dual_, rho_ + e - xhat);
  RoundRecord rec = Commit(budget_, round, x, instance_.budget_cap);
  if (record_) {
    rec.preselect = xhat;
    rec.dual = mu;
  }
  return rec;
}

Trace RunBaseline(BaselineKind kind, const Instance& instance,
                  const OacpConfig& dual_cfg) {
  switch (kind) {
    case BaselineKind::kEqual: {
      EqualAllocator a(instance);
      return RunAllocator(instance, a);
    }
    case BaselineKind::kGreedy: {
      GreedyAllocator a(instance);
      return RunAllocator(instance, a);
    }
    case BaselineKind::kDmd: {
      DmdAllocator a(instance, dual_cfg);
      return RunAllocator(instance, a);
    }
  }
  throw InputError("unknown baseline");
}

}  // namespace oacp
