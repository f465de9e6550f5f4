// Reference online policies: Equal, Greedy and dual mirror descent (DMD) with
// the replenishment-aware subgradient rho + E_t - x-hat_t.

#ifndef OACP_BASELINES_H_
#define OACP_BASELINES_H_

#include <string_view>

#include "oacp/core.h"
#include "oacp/dual.h"
#include "oacp/oacp.h"

namespace oacp {

enum class BaselineKind { kEqual, kGreedy, kDmd };

BaselineKind ParseBaselineKind(std::string_view name);
std::string_view BaselineName(BaselineKind kind);

// min(xbar, rho + E_t, B_t + E_t).
class EqualAllocator : public OnlineAllocator {
 public:
  explicit EqualAllocator(const Instance& instance);
  std::string_view name() const override { return "equal"; }
  RoundRecord Step(const Round& round) override;
  const BudgetState& budget() const override { return budget_; }

 private:
  const Instance& instance_;
  ResourceVector rho_;
  BudgetState budget_;
};

// min(xbar, B_t + E_t).
class GreedyAllocator : public OnlineAllocator {
 public:
  explicit GreedyAllocator(const Instance& instance);
  std::string_view name() const override { return "greedy"; }
  RoundRecord Step(const Round& round) override;
  const BudgetState& budget() const override { return budget_; }

 private:
  const Instance& instance_;
  BudgetState budget_;
};

// Same pre-selection and mirror step as OACP, but the pre-selection is clamped
// to the available budget and the subgradient counts the replenishment.
class DmdAllocator : public OnlineAllocator {
 public:
  DmdAllocator(const Instance& instance, const OacpConfig& cfg);
  std::string_view name() const override { return "dmd"; }
  RoundRecord Step(const Round& round) override;
  const BudgetState& budget() const override { return budget_; }

 private:
  const Instance& instance_;
  ResourceVector rho_;
  bool record_;
  BudgetState budget_;
  DualState dual_;
};

Trace RunBaseline(BaselineKind kind, const Instance& instance,
                  const OacpConfig& dual_cfg = {});

}  // namespace oacp

#endif  // OACP_BASELINES_H_
