#include "oacp/oacp_plus.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oacp/oacp.h"

namespace oacp {

namespace {

double Pow2(std::size_t k) { return std::ldexp(1.0, static_cast<int>(k)); }

}  // namespace

FramePlan BuildFramePlan(std::size_t horizon, std::size_t unit_length) {
  if (unit_length < 1 || unit_length > horizon) {
    throw InputError("unit frame length must satisfy 1 <= T* <= T");
  }
  std::size_t k = 1;
  while ((std::size_t{1} << k) * unit_length < horizon) ++k;
  FramePlan plan;
  plan.unit_length = unit_length;
  plan.horizon = horizon;
  std::size_t prev_end = 0;
  for (std::size_t i = 1; i <= k; ++i) {
    Frame f;
    f.start = prev_end + 1;
    f.end = i == k ? horizon : ((std::size_t{1} << i) - 1) * unit_length;
    plan.frames.push_back(f);
    prev_end = f.end;
  }
  return plan;
}

FrameBudget AssignFrameBudget(std::size_t frame, const ResourceVector& actual,
                              const FramePlan& plan, const ResourceVector& rho,
                              const ResourceVector& rho_max,
                              const ResourceVector& beta) {
  const std::size_t k = plan.num_frames();
  if (frame < 1 || frame > k) throw InputError("frame index out of range");
  RequireSameSize(actual, rho, "frame budget");
  const double ts = static_cast<double>(plan.unit_length);
  const double horizon = static_cast<double>(plan.horizon);
  const std::size_t m = rho.size();

  FrameBudget fb;
  fb.frame = frame;
  fb.actual_at_start = actual;
  const ResourceVector fixed = rho * (Pow2(frame - 1) * ts);
  if (frame == k) {
    // The last frame receives everything that is left.
    fb.additive = actual - fixed;
    fb.assigned = actual;
  } else {
    fb.additive = ResourceVector(m);
    if (frame >= 2) {
      const ResourceVector reserved =
          rho * (horizon - (Pow2(frame - 1) - 1.0) * ts);
      const ResourceVector threshold =
          Hadamard(rho_max, beta) * (Pow2(frame - 2) * ts);
      fb.additive = Min(actual - reserved, threshold);
      for (std::size_t j = 0; j < m; ++j) {
        if (fb.additive[j] < 0.0) {
          fb.additive[j] = 0.0;
          fb.clamped = true;
        }
      }
    }
    fb.assigned = fixed + fb.additive;
  }
  fb.rho_hat =
      fb.assigned * (1.0 / static_cast<double>(plan.frames[frame - 1].length()));
  fb.remaining = fb.assigned;
  return fb;
}

ResourceVector OptimalBeta(const ResourceVector& rho,
                           const ResourceVector& rho_max, double horizon,
                           double unit_length) {
  RequireSameSize(rho, rho_max, "optimal beta");
  ResourceVector beta(rho.size());
  for (std::size_t m = 0; m < rho.size(); ++m) {
    const double bmax = rho_max[m] * horizon;
    const double ratio = rho[m] / rho_max[m];
    double b;
    if (bmax >= (horizon + unit_length) * rho[m]) {
      b = 4.0 * horizon / (3.0 * (horizon + unit_length)) - 2.0 * ratio / 3.0;
    } else {
      b = horizon / (3.0 * unit_length) -
          (horizon - unit_length) / (3.0 * unit_length) * ratio;
    }
    beta[m] = std::max(0.0, b);
  }
  return beta;
}

ResourceVector DeltaRho(const ResourceVector& e_min, const ResourceVector& rho,
                        const ResourceVector& rho_max, double horizon,
                        double unit_length) {
  RequireSameSize(e_min, rho, "delta rho");
  RequireSameSize(rho, rho_max, "delta rho");
  ResourceVector d(rho.size());
  for (std::size_t m = 0; m < rho.size(); ++m) {
    if (e_min[m] <= 0.0) continue;
    const double bmax = rho_max[m] * horizon;
    double cap_term;
    if (bmax >= (horizon + unit_length) * rho[m]) {
      cap_term = 2.0 * bmax / (3.0 * (horizon + unit_length)) - rho[m] / 3.0;
    } else {
      cap_term = bmax / (6.0 * unit_length) -
                 (horizon - unit_length) * rho[m] / (6.0 * unit_length);
    }
    d[m] = std::max(0.0, std::min(e_min[m] / (2.0 * unit_length), cap_term));
  }
  return d;
}

double FrameEta(std::size_t frame, double sigma, double v_cap, double rho_bar,
                double rho_max_bar, double beta_bar, double xbar_inf,
                std::size_t unit_length) {
  const double len = Pow2(frame - 1) * static_cast<double>(unit_length);
  if (!(v_cap > 0.0) || !(sigma > 0.0)) return 1.0 / std::sqrt(len);
  return std::sqrt(2.0 * sigma * v_cap / len) /
         (rho_bar + 0.5 * beta_bar * rho_max_bar + xbar_inf);
}

ResourceVector EffectiveAdditiveBudget(std::size_t frame, const FramePlan& plan,
                                       const ResourceVector& rho,
                                       const ResourceVector& rho_max,
                                       const ResourceVector& beta,
                                       const ResourceVector& e_min) {
  const std::size_t m = rho.size();
  if (frame <= 1) return ResourceVector(m);
  const double ts = static_cast<double>(plan.unit_length);
  const double horizon = static_cast<double>(plan.horizon);
  const ResourceVector cap_beta = Hadamard(rho_max, beta);
  const ResourceVector e_prime = Min(e_min, cap_beta * ts);
  if (frame == 2) {
    return Min((rho_max - rho) * horizon, e_prime);
  }
  const ResourceVector first = rho_max * horizon -
                               cap_beta * (Pow2(frame - 3) * ts) -
                               rho * (horizon - (Pow2(frame - 2) - 1.0) * ts);
  return Min(first, e_prime * Pow2(frame - 2));
}

// ---------------------------------------------------------------------------

OacpPlusAllocator::OacpPlusAllocator(const Instance& instance,
                                     const OacpPlusConfig& cfg)
    : instance_(instance),
      cfg_(cfg),
      plan_(BuildFramePlan(instance.horizon(), cfg.unit_length)),
      rho_(instance.rho()),
      rho_max_(instance.rho_max()),
      budget_{instance.initial_budget} {
  const double horizon = static_cast<double>(instance.horizon());
  beta_ = cfg.beta ? *cfg.beta
                   : OptimalBeta(rho_, rho_max_, horizon,
                                 static_cast<double>(cfg.unit_length));
  RequireSameSize(beta_, rho_, "beta");
  if (!beta_.AllNonNegative()) throw InputError("beta must be >= 0");
  ref_ = MakeReference(cfg.reference, instance);
  v_cap_ = WorstCaseBregmanRadius(instance, ref_);
  dual_.ref = ref_;
  if (cfg.eta && !(*cfg.eta > 0.0)) throw InputError("eta must be > 0");
}

void OacpPlusAllocator::StartFrame(std::size_t frame) {
  frame_ = frame;
  FrameBudget fb = AssignFrameBudget(frame, budget_.remaining, plan_, rho_,
                                     rho_max_, beta_);
  if (fb.clamped) {
    std::ostringstream os;
    os << "frame " << frame << ": negative additive budget clamped to 0";
    diagnostics_.push_back(os.str());
  }
  frames_.push_back(std::move(fb));
  dual_.mu = InitialDual(cfg_.reference, instance_.num_resources);
  dual_.eta = cfg_.eta ? *cfg_.eta
                       : FrameEta(frame, ref_.sigma, v_cap_, rho_.Max(),
                                  rho_max_.Max(), beta_.Max(),
                                  instance_.allocation_cap.MaxNorm(),
                                  plan_.unit_length);
}

RoundRecord OacpPlusAllocator::Step(const Round& round) {
  if (frame_ == 0 || t_ + 1 > plan_.frames[frame_ - 1].end) {
    StartFrame(frame_ + 1);
  }
  FrameBudget& fb = frames_.back();
  RoundRecord rec;
  rec.budget = budget_.remaining;
  if (cfg_.record_diagnostics) rec.dual = dual_.mu;

  const ResourceVector e =
      Replenishment(budget_, round.e_hat, instance_.budget_cap);
  const ResourceVector available = budget_.remaining + e;
  const ResourceVector xhat =
      Preselect(round.utility, dual_.mu, instance_.allocation_cap);
  ResourceVector x(xhat.size());
  ResourceVector g(xhat.size());
  if (xhat.AllLessEqual(Min(fb.remaining, available), kFeasibilityTol)) {
    x = ClampDecision(xhat, instance_.allocation_cap,
                      Min(fb.remaining, available));
    g = fb.rho_hat - xhat;
  } else {
    rec.violated = true;
  }
  fb.remaining = PositivePart(fb.remaining - x);
  budget_ = StepBudget(budget_, round.e_hat, x, instance_.budget_cap).next;
  dual_ = MirrorStep(dual_, g);

  rec.x = x;
  rec.utility = round.utility.Evaluate(x);
  rec.replenished = e;
  if (cfg_.record_diagnostics) rec.preselect = xhat;
  ++t_;
  return rec;
}

OacpPlusRun RunOacpPlus(const Instance& instance, const OacpPlusConfig& cfg) {
  OacpPlusAllocator alloc(instance, cfg);
  OacpPlusRun run;
  run.trace = RunAllocator(instance, alloc);
  run.plan = alloc.plan();
  run.beta = alloc.beta();
  run.frame_budgets = alloc.frame_budgets();
  run.diagnostics = alloc.diagnostics();
  return run;
}

double LowerBoundShortfall(const Instance& instance, const OacpPlusRun& run,
                           const ResourceVector& e_min) {
  const std::size_t k = run.plan.num_frames();
  double worst = -std::numeric_limits<double>::infinity();
  for (const FrameBudget& fb : run.frame_budgets) {
    if (fb.frame >= k) continue;
    const ResourceVector lower = EffectiveAdditiveBudget(
        fb.frame, run.plan, instance.rho(), instance.rho_max(), run.beta,
        e_min);
    for (std::size_t m = 0; m < lower.size(); ++m) {
      worst = std::max(worst, lower[m] - fb.additive[m]);
    }
  }
  return worst;
}

}  // namespace oacp
