// Learning-augmented allocation: an ML prediction projected onto the set of
// decisions that keep cumulative utility within lambda of a shadow-run expert,
// net of the reservation utility and the slack R.

#ifndef OACP_LA_OACP_H_
#define OACP_LA_OACP_H_

#include <memory>
#include <string>
#include <vector>

#include "oacp/core.h"
#include "oacp/oacp.h"
#include "oacp/oacp_plus.h"

namespace oacp {

struct RobustnessConfig {
  double lambda = 0.3;
  double R = 0.0;
  double L = 1.0;

  void Validate() const;
  // L taken from the instance's utilities.
  static RobustnessConfig For(const Instance& instance, double lambda,
                              double R);
};

// Budgets and cumulative utilities of the learner and the expert, both taken
// before the current round.
struct RobustLedger {
  BudgetState own;
  BudgetState expert;
  double own_utility = 0.0;     // F_{t-1}
  double expert_utility = 0.0;  // F_{t-1} of the expert
};

// Everything the round-t constraint depends on besides the candidate x_t.
struct RoundContext {
  RobustLedger ledger;
  const UtilitySpec* utility = nullptr;
  ResourceVector replenished;         // E_t
  ResourceVector expert_replenished;  // E_t of the expert
  ResourceVector expert_x;            // x_t of the expert

  ResourceVector available() const {
    return ledger.own.remaining + replenished;
  }
  ResourceVector expert_after() const {
    return ledger.expert.remaining + expert_replenished - expert_x;
  }
  // F_t of the expert, including round t.
  double expert_utility_through() const {
    return ledger.expert_utility + utility->Evaluate(expert_x);
  }
};

// lambda L sum_m [(B+ + E+ - x+)_m - (B + E - x)_m]^+ (+ marks the expert).
double ReservationUtility(const RoundContext& ctx, const ResourceVector& x,
                          const RobustnessConfig& cfg);

// F_{t-1} + f_t(x) - lambda F_t(expert) - reservation(x) + R.
double FeasibilityMargin(const RoundContext& ctx, const ResourceVector& x,
                         const RobustnessConfig& cfg);

// min(x_expert, B + E).
ResourceVector FallbackAction(const RoundContext& ctx);

// Slack under which a margin counts as non-negative.
inline constexpr double kMarginTol = 1e-11;

struct Projection {
  ResourceVector x;
  bool used_fallback = false;
};

// Euclidean-nearest point to x_tilde in [0, min(xbar, B+E)] with a
// non-negative margin. Falls back to FallbackAction when no such point is
// found.
Projection ConstrainedProjection(const ResourceVector& x_tilde,
                                 const RoundContext& ctx,
                                 const ResourceVector& xbar,
                                 const RobustnessConfig& cfg);

// Online information handed to a predictor at round t.
struct PredictorInput {
  const Instance* instance = nullptr;
  std::size_t t = 0;         // 0-based round
  const Round* round = nullptr;
  ResourceVector budget;     // B_t
  ResourceVector replenished;  // E_t
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  // Called once before each episode.
  virtual void Reset(const Instance& instance) { (void)instance; }
  // Returns x_tilde in [0, xbar].
  virtual ResourceVector Predict(const PredictorInput& in) = 0;
};

struct ExpertConfig {
  enum class Kind { kOacp, kOacpPlus };
  Kind kind = Kind::kOacpPlus;
  OacpConfig oacp;
  OacpPlusConfig oacp_plus;
};

ExpertConfig::Kind ParseExpertKind(std::string_view name);

// The expert's decisions do not depend on the learner, so one expert trace can
// be shared by every LA-OACP run on the same instance.
Trace RunExpert(const Instance& instance, const ExpertConfig& cfg);

struct LaOacpRound {
  ResourceVector x_tilde;
  double margin = 0.0;           // margin of the chosen x
  double fallback_margin = 0.0;  // margin of the fallback action
  double reservation = 0.0;      // reservation utility of the chosen x
  double expert_utility = 0.0;   // expert F_t
  bool used_fallback = false;
};

struct LaOacpRun {
  Trace trace;
  Trace expert;
  std::vector<LaOacpRound> rounds;
};

LaOacpRun RunLaOacp(const Instance& instance, Predictor& predictor,
                    const Trace& expert, const RobustnessConfig& cfg);
LaOacpRun RunLaOacp(const Instance& instance, Predictor& predictor,
                    const ExpertConfig& expert, const RobustnessConfig& cfg);

// The predictor on its own, without the robustness projection.
Trace RunPredictorOnly(const Instance& instance, Predictor& predictor);

}  // namespace oacp

#endif  // OACP_LA_OACP_H_
