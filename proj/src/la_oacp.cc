#include "oacp/la_oacp.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oacp {

namespace {

constexpr int kGridPoints = 512;
constexpr double kBisectionTol = 1e-9;
constexpr int kMaxSweeps = 100;

bool Feasible(const RoundContext& ctx, const ResourceVector& x,
              const RobustnessConfig& cfg) {
  return FeasibilityMargin(ctx, x, cfg) >= -kMarginTol;
}

// Shrinks [good, bad] until it is narrower than the tolerance and returns the
// feasible end. `at(v)` builds the candidate for scalar v.
template <typename At>
double BisectBoundary(double good, double bad, const At& at,
                      const RoundContext& ctx, const RobustnessConfig& cfg) {
  for (int i = 0; i < 200 && std::abs(bad - good) > kBisectionTol; ++i) {
    const double mid = 0.5 * (good + bad);
    if (Feasible(ctx, at(mid), cfg)) {
      good = mid;
    } else {
      bad = mid;
    }
  }
  return good;
}

Projection ProjectScalar(double target, const RoundContext& ctx, double hi,
                         const RobustnessConfig& cfg) {
  const auto at = [](double v) { return ResourceVector{v}; };
  const ResourceVector fallback = FallbackAction(ctx);
  if (hi <= 0.0) return {fallback, true};

  std::vector<double> grid(kGridPoints);
  std::vector<char> ok(kGridPoints);
  for (int k = 0; k < kGridPoints; ++k) {
    grid[k] = k == kGridPoints - 1 ? hi : hi * k / (kGridPoints - 1);
    ok[k] = Feasible(ctx, at(grid[k]), cfg);
  }
  std::vector<double> candidates;
  if (ok.front()) candidates.push_back(grid.front());
  if (ok.back()) candidates.push_back(grid.back());
  for (int k = 0; k + 1 < kGridPoints; ++k) {
    if (ok[k] == ok[k + 1]) continue;
    candidates.push_back(ok[k] ? BisectBoundary(grid[k], grid[k + 1], at, ctx, cfg)
                               : BisectBoundary(grid[k + 1], grid[k], at, ctx, cfg));
  }
  if (candidates.empty()) return {fallback, true};
  double best = candidates.front();
  for (double c : candidates) {
    if (std::abs(c - target) < std::abs(best - target)) best = c;
  }
  if (Feasible(ctx, fallback, cfg) &&
      std::abs(fallback[0] - target) < std::abs(best - target)) {
    return {fallback, true};
  }
  return {ResourceVector{best}, false};
}

// Moves one coordinate at a time from the fallback toward the target, as far
// as the margin allows.
Projection ProjectCoordinatewise(const ResourceVector& target,
                                 const RoundContext& ctx,
                                 const ResourceVector& hi,
                                 const RobustnessConfig& cfg) {
  const ResourceVector fallback = FallbackAction(ctx);
  ResourceVector x = fallback;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    double moved = 0.0;
    for (std::size_t m = 0; m < x.size(); ++m) {
      const double from = x[m];
      const double to = std::clamp(target[m], 0.0, hi[m]);
      if (from == to) continue;
      const auto at = [&](double v) {
        ResourceVector y = x;
        y[m] = v;
        return y;
      };
      x[m] = Feasible(ctx, at(to), cfg) ? to
                                        : BisectBoundary(from, to, at, ctx, cfg);
      moved = std::max(moved, std::abs(x[m] - from));
    }
    converged = moved <= kBisectionTol;
  }
  if (!converged || !Feasible(ctx, x, cfg)) return {fallback, true};
  return {x, x == fallback};
}

}  // namespace

void RobustnessConfig::Validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InputError("lambda must lie in [0, 1]");
  }
  if (!(R >= 0.0) || !std::isfinite(R)) throw InputError("R must be >= 0");
  if (!(L > 0.0) || !std::isfinite(L)) throw InputError("L must be > 0");
}

RobustnessConfig RobustnessConfig::For(const Instance& instance, double lambda,
                                       double R) {
  RobustnessConfig cfg{lambda, R, instance.lipschitz()};
  cfg.Validate();
  return cfg;
}

double ReservationUtility(const RoundContext& ctx, const ResourceVector& x,
                          const RobustnessConfig& cfg) {
  if (cfg.lambda == 0.0) return 0.0;
  const ResourceVector gap = ctx.expert_after() - (ctx.available() - x);
  return cfg.lambda * cfg.L * PositivePart(gap).Sum();
}

double FeasibilityMargin(const RoundContext& ctx, const ResourceVector& x,
                         const RobustnessConfig& cfg) {
  return ctx.ledger.own_utility + ctx.utility->Evaluate(x) -
         cfg.lambda * ctx.expert_utility_through() -
         ReservationUtility(ctx, x, cfg) + cfg.R;
}

ResourceVector FallbackAction(const RoundContext& ctx) {
  return Min(ctx.expert_x, ctx.available());
}

Projection ConstrainedProjection(const ResourceVector& x_tilde,
                                 const RoundContext& ctx,
                                 const ResourceVector& xbar,
                                 const RobustnessConfig& cfg) {
  RequireSameSize(x_tilde, xbar, "projection");
  const ResourceVector hi = PositivePart(Min(xbar, ctx.available()));
  const ResourceVector target = Clamp(x_tilde, ResourceVector(hi.size()), hi);
  if (Feasible(ctx, target, cfg)) return {target, false};
  if (target.size() == 1) return ProjectScalar(target[0], ctx, hi[0], cfg);
  return ProjectCoordinatewise(target, ctx, hi, cfg);
}

ExpertConfig::Kind ParseExpertKind(std::string_view name) {
  if (name == "oacp") return ExpertConfig::Kind::kOacp;
  if (name == "oacp-plus") return ExpertConfig::Kind::kOacpPlus;
  throw InputError("unknown expert '" + std::string(name) +
                   "' (expected oacp|oacp-plus)");
}

Trace RunExpert(const Instance& instance, const ExpertConfig& cfg) {
  if (cfg.kind == ExpertConfig::Kind::kOacp) {
    return RunOacp(instance, cfg.oacp).trace;
  }
  return RunOacpPlus(instance, cfg.oacp_plus).trace;
}

LaOacpRun RunLaOacp(const Instance& instance, Predictor& predictor,
                    const Trace& expert, const RobustnessConfig& cfg) {
  cfg.Validate();
  if (expert.rounds.size() != instance.horizon()) {
    throw InputError("expert trace length does not match the horizon");
  }
  predictor.Reset(instance);
  LaOacpRun run;
  run.expert = expert;
  run.trace.algorithm = "la-oacp";
  run.trace.rounds.reserve(instance.horizon());
  run.rounds.reserve(instance.horizon());

  RobustLedger ledger{{instance.initial_budget}, {instance.initial_budget}};
  for (std::size_t t = 0; t < instance.horizon(); ++t) {
    const Round& round = instance.rounds[t];
    const ResourceVector& x_expert = expert.rounds[t].x;
    const BudgetStep expert_step =
        StepBudget(ledger.expert, round.e_hat, x_expert, instance.budget_cap);

    RoundContext ctx;
    ctx.ledger = ledger;
    ctx.utility = &round.utility;
    ctx.replenished =
        Replenishment(ledger.own, round.e_hat, instance.budget_cap);
    ctx.expert_replenished = expert_step.replenished;
    ctx.expert_x = x_expert;

    PredictorInput in{&instance, t, &round, ledger.own.remaining,
                      ctx.replenished};
    const ResourceVector x_tilde =
        Clamp(predictor.Predict(in), ResourceVector(instance.num_resources),
              instance.allocation_cap);
    const Projection proj =
        ConstrainedProjection(x_tilde, ctx, instance.allocation_cap, cfg);

    LaOacpRound info;
    info.x_tilde = x_tilde;
    info.margin = FeasibilityMargin(ctx, proj.x, cfg);
    info.fallback_margin = FeasibilityMargin(ctx, FallbackAction(ctx), cfg);
    info.reservation = ReservationUtility(ctx, proj.x, cfg);
    info.expert_utility = ctx.expert_utility_through();
    info.used_fallback = proj.used_fallback;

    RoundRecord rec;
    rec.x = proj.x;
    rec.utility = round.utility.Evaluate(proj.x);
    rec.budget = ledger.own.remaining;
    rec.replenished = ctx.replenished;

    ledger.own =
        StepBudget(ledger.own, round.e_hat, proj.x, instance.budget_cap).next;
    ledger.expert = expert_step.next;
    ledger.own_utility += rec.utility;
    ledger.expert_utility = info.expert_utility;

    run.trace.total_utility += rec.utility;
    run.trace.rounds.push_back(std::move(rec));
    run.rounds.push_back(std::move(info));
  }
  return run;
}

LaOacpRun RunLaOacp(const Instance& instance, Predictor& predictor,
                    const ExpertConfig& expert, const RobustnessConfig& cfg) {
  return RunLaOacp(instance, predictor, RunExpert(instance, expert), cfg);
}

Trace RunPredictorOnly(const Instance& instance, Predictor& predictor) {
  predictor.Reset(instance);
  Trace trace;
  trace.algorithm = "ml";
  BudgetState budget{instance.initial_budget};
  for (std::size_t t = 0; t < instance.horizon(); ++t) {
    const Round& round = instance.rounds[t];
    const BudgetStep probe = StepBudget(
        budget, round.e_hat, ResourceVector(instance.num_resources),
        instance.budget_cap);
    PredictorInput in{&instance, t, &round, budget.remaining,
                      probe.replenished};
    RoundRecord rec;
    rec.x = ClampDecision(predictor.Predict(in), instance.allocation_cap,
                          budget.remaining + probe.replenished);
    rec.utility = round.utility.Evaluate(rec.x);
    rec.budget = budget.remaining;
    rec.replenished = probe.replenished;
    budget = StepBudget(budget, round.e_hat, rec.x, instance.budget_cap).next;
    trace.total_utility += rec.utility;
    trace.rounds.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace oacp
