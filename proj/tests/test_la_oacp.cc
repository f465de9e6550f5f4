#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oacp/la_oacp.h"
#include "oacp/oracle.h"
#include "oacp/predictor.h"
#include "test_util.h"

namespace oacp {
namespace {

using testing::LinearInstance;
using testing::RandomInstance;

struct Ctx {
  UtilitySpec utility;
  RoundContext ctx;
};

// own B=1, expert B=2, no replenishment, expert plays 0.5, F = 1 vs 2.
Ctx Example() {
  Ctx c{UtilitySpec::Linear(ResourceVector{1.0}), {}};
  c.ctx.ledger = {{ResourceVector{1.0}}, {ResourceVector{2.0}}, 1.0, 2.0};
  c.ctx.replenished = ResourceVector{0.0};
  c.ctx.expert_replenished = ResourceVector{0.0};
  c.ctx.expert_x = ResourceVector{0.5};
  return c;
}

TEST(Reservation, Example) {
  Ctx c = Example();
  c.ctx.utility = &c.utility;
  const RobustnessConfig cfg{0.5, 0.0, 1.0};
  EXPECT_NEAR(ReservationUtility(c.ctx, ResourceVector{0.2}, cfg), 0.35, 1e-15);
  EXPECT_EQ(ReservationUtility(c.ctx, ResourceVector{0.2}, {0.0, 0.0, 1.0}),
            0.0);
}

TEST(Reservation, NoChargeWhenAhead) {
  Ctx c = Example();
  c.ctx.utility = &c.utility;
  c.ctx.ledger.own.remaining = ResourceVector{3.0};
  EXPECT_EQ(ReservationUtility(c.ctx, ResourceVector{0.5}, {0.9, 0.0, 1.0}),
            0.0);
}

TEST(Margin, Example) {
  Ctx c = Example();
  c.ctx.utility = &c.utility;
  // 1 + 0.2 - 0.5 * 2.5 - 0.35 + 0.
  EXPECT_NEAR(FeasibilityMargin(c.ctx, ResourceVector{0.2}, {0.5, 0.0, 1.0}),
              -0.4, 1e-14);
  EXPECT_NEAR(FeasibilityMargin(c.ctx, ResourceVector{0.2}, {0.5, 1.0, 1.0}),
              0.6, 1e-14);
}

TEST(Fallback, ExpertCappedByAvailable) {
  Ctx c = Example();
  c.ctx.utility = &c.utility;
  EXPECT_EQ(FallbackAction(c.ctx), ResourceVector{0.5});
  c.ctx.ledger.own.remaining = ResourceVector{0.3};
  EXPECT_EQ(FallbackAction(c.ctx), ResourceVector{0.3});
}

TEST(Projection, FeasibleTargetUnchanged) {
  Ctx c = Example();
  c.ctx.utility = &c.utility;
  const Projection p = ConstrainedProjection(ResourceVector{0.7}, c.ctx,
                                             ResourceVector{1.0},
                                             {0.1, 0.0, 1.0});
  EXPECT_EQ(p.x, ResourceVector{0.7});
  EXPECT_FALSE(p.used_fallback);
}

TEST(Projection, LambdaZeroIsBoxClamp) {
  Ctx c = Example();
  c.ctx.utility = &c.utility;
  const RobustnessConfig cfg{0.0, 0.0, 1.0};
  EXPECT_EQ(ConstrainedProjection(ResourceVector{1.5}, c.ctx,
                                  ResourceVector{2.0}, cfg).x,
            ResourceVector{1.0});
  EXPECT_EQ(ConstrainedProjection(ResourceVector{1.5}, c.ctx,
                                  ResourceVector{0.8}, cfg).x,
            ResourceVector{0.8});
}

TEST(Projection, InfeasibleMovesToBoundary) {
  Ctx c = Example();
  c.ctx.utility = &c.utility;
  // Margin(x) = 1 + x - 1.25 - 0.5 (0.5 + x) + R = 0.5 x - 0.5 + R.
  const Projection p = ConstrainedProjection(ResourceVector{0.1}, c.ctx,
                                             ResourceVector{1.0},
                                             {0.5, 0.0, 1.0});
  EXPECT_NEAR(p.x[0], 1.0, 1e-8);
  const Projection q = ConstrainedProjection(
      ResourceVector{0.1}, c.ctx, ResourceVector{1.0}, {0.5, 0.25, 1.0});
  EXPECT_NEAR(q.x[0], 0.5, 1e-8);
  EXPECT_GE(FeasibilityMargin(c.ctx, q.x, {0.5, 0.25, 1.0}), -kMarginTol);
}

// Nearest feasible point on a fine grid, else the fallback.
double GridProjection(double target, const RoundContext& ctx, double hi,
                      const RobustnessConfig& cfg) {
  double best = FallbackAction(ctx)[0];
  double best_d = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(std::ceil(hi / 1e-5));
  for (int k = 0; k <= n; ++k) {
    const double x = std::min(hi, k * 1e-5);
    if (FeasibilityMargin(ctx, ResourceVector{x}, cfg) < -kMarginTol) continue;
    if (std::abs(x - target) < best_d) {
      best_d = std::abs(x - target);
      best = x;
    }
  }
  return best;
}

TEST(Projection, MatchesGridScan) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int infeasible_targets = 0;
  for (int i = 0; i < 120; ++i) {
    const UtilitySpec f = i % 2 == 0
                              ? UtilitySpec::LogServe(0.1 + u(rng))
                              : UtilitySpec::Linear(ResourceVector{0.1 + u(rng)});
    RoundContext ctx;
    ctx.ledger.own.remaining = ResourceVector{2.0 * u(rng)};
    ctx.ledger.expert.remaining = ResourceVector{2.0 * u(rng)};
    ctx.ledger.own_utility = 3.0 * u(rng);
    ctx.ledger.expert_utility = 3.0 * u(rng);
    ctx.utility = &f;
    ctx.replenished = ResourceVector{0.5 * u(rng)};
    ctx.expert_replenished = ResourceVector{0.5 * u(rng)};
    ctx.expert_x = ResourceVector{std::min(
        u(rng), ctx.ledger.expert.remaining[0] + ctx.expert_replenished[0])};
    const RobustnessConfig cfg{u(rng), 0.3 * u(rng), 1.0};
    const double xbar = 0.2 + u(rng);
    const double target = xbar * u(rng);
    const double hi = std::min(xbar, ctx.available()[0]);
    if (FeasibilityMargin(ctx, ResourceVector{std::min(target, hi)}, cfg) <
        -kMarginTol) {
      ++infeasible_targets;
    }
    EXPECT_NEAR(ConstrainedProjection(ResourceVector{target}, ctx,
                                      ResourceVector{xbar}, cfg).x[0],
                GridProjection(target, ctx, hi, cfg), 1e-4);
  }
  EXPECT_GT(infeasible_targets, 20);
}

TEST(Projection, FeasibleSetShrinksWithLambda) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const UtilitySpec f = UtilitySpec::LogServe(0.1 + u(rng));
    RoundContext ctx;
    ctx.ledger = {{ResourceVector{u(rng)}}, {ResourceVector{u(rng)}},
                  2.0 * u(rng), 2.0 * u(rng)};
    ctx.utility = &f;
    ctx.replenished = ResourceVector{0.0};
    ctx.expert_replenished = ResourceVector{0.0};
    ctx.expert_x = ResourceVector{0.5 * ctx.ledger.expert.remaining[0]};
    const ResourceVector x{u(rng) * ctx.available()[0]};
    const double lo = u(rng), hi = lo + (1.0 - lo) * u(rng);
    if (FeasibilityMargin(ctx, x, {hi, 0.1, 1.0}) >= 0.0) {
      EXPECT_GE(FeasibilityMargin(ctx, x, {lo, 0.1, 1.0}), 0.0);
    }
  }
}

TEST(RunLaOacp, ExpertPredictorAtLambdaOneReproducesExpert) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 20; ++i) {
    const Instance inst = RandomInstance(rng, 40, i % 2 == 0, i % 3 == 0);
    const Trace expert = RunExpert(inst, {});
    std::vector<ResourceVector> xs;
    for (const RoundRecord& r : expert.rounds) xs.push_back(r.x);
    ReplayPredictor pred(xs);
    const LaOacpRun run =
        RunLaOacp(inst, pred, expert, RobustnessConfig::For(inst, 1.0, 0.0));
    for (std::size_t t = 0; t < inst.horizon(); ++t) {
      EXPECT_NEAR(run.trace.rounds[t].x[0], expert.rounds[t].x[0], 1e-9);
    }
    EXPECT_NEAR(run.trace.total_utility, expert.total_utility, 1e-9);
  }
}

TEST(RunLaOacp, RobustAgainstAdversarialPredictors) {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 30; ++i) {
    const Instance inst = RandomInstance(rng, 48, i % 2 == 0, i % 4 == 0);
    const Trace expert = RunExpert(inst, {});
    AlwaysMaxPredictor greedy;
    AlwaysZeroPredictor idle;
    UniformRandomPredictor noise(static_cast<std::uint64_t>(i));
    for (Predictor* p : std::initializer_list<Predictor*>{&greedy, &idle, &noise}) {
      for (double lambda : {0.1, 0.5, 0.9}) {
        const double R = i % 2 == 0 ? 0.0 : 0.5;
        const LaOacpRun run =
            RunLaOacp(inst, *p, expert, RobustnessConfig::For(inst, lambda, R));
        EXPECT_EQ(CheckTrace(inst, run.trace), "");
        EXPECT_GE(run.trace.total_utility,
                  lambda * expert.total_utility - R - 1e-9)
            << p->name() << " lambda=" << lambda;
        for (const LaOacpRound& r : run.rounds) {
          EXPECT_GE(r.margin, -1e-9);
          EXPECT_GE(r.fallback_margin, -1e-9);
        }
      }
    }
  }
}

TEST(RunLaOacp, PerRoundInvariant) {
  std::mt19937_64 rng(45);
  for (int i = 0; i < 20; ++i) {
    const Instance inst = RandomInstance(rng, 40, false, false);
    const Trace expert = RunExpert(inst, {});
    AlwaysMaxPredictor p;
    const RobustnessConfig cfg = RobustnessConfig::For(inst, 0.7, 0.0);
    const LaOacpRun run = RunLaOacp(inst, p, expert, cfg);
    double own = 0.0;
    for (std::size_t t = 0; t < inst.horizon(); ++t) {
      own += run.trace.rounds[t].utility;
      EXPECT_GE(own + cfg.R,
                cfg.lambda * run.rounds[t].expert_utility +
                    run.rounds[t].reservation - 1e-9);
    }
  }
}

TEST(RunLaOacp, OptReplayAtLambdaZeroGivesOpt) {
  std::mt19937_64 rng(46);
  for (int i = 0; i < 10; ++i) {
    const Instance inst = RandomInstance(rng, 24, false, false);
    const OptResult opt = SolveOptConcave(inst);
    ReplayPredictor p(opt.decisions);
    const LaOacpRun run =
        RunLaOacp(inst, p, ExpertConfig{}, RobustnessConfig::For(inst, 0.0, 0.0));
    EXPECT_NEAR(run.trace.total_utility, opt.value, 1e-6);
  }
}

TEST(RunLaOacp, RejectsBadConfig) {
  const Instance inst = LinearInstance(1.0, 2.0, 1.0, {1.0}, {0.0});
  AlwaysZeroPredictor p;
  EXPECT_THROW(RunLaOacp(inst, p, ExpertConfig{}, {1.5, 0.0, 1.0}), InputError);
  EXPECT_THROW(RunLaOacp(inst, p, ExpertConfig{}, {0.5, -1.0, 1.0}), InputError);
  EXPECT_THROW(ParseExpertKind("dmd"), InputError);
}

}  // namespace
}  // namespace oacp
