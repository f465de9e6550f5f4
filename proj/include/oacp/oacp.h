// Opportunistic allocation with conservative pricing (OACP): per-round
// pre-selection against the current resource price, zero-and-skip when the
// pre-selection exceeds the available budget, and a mirror-descent price update
// that uses the initial per-round budget as its reference.

#ifndef OACP_OACP_H_
#define OACP_OACP_H_

#include <optional>
#include <set>
#include <vector>

#include "oacp/core.h"
#include "oacp/dual.h"

namespace oacp {

struct OacpConfig {
  ReferenceKind reference = ReferenceKind::kSquaredL2;
  std::optional<double> eta;  // nullopt: learning rate chosen from the bound
  bool record_diagnostics = true;
};

// Dual witness for the per-instance bound: zero when no pre-selection was
// ever infeasible, otherwise (f_bar / (alpha rho_j)) e_j.
struct TheoremMu {
  ResourceVector mu_star;
  std::set<std::size_t> violated_resources;  // M_A
  std::vector<std::size_t> violation_rounds;  // T_A, 0-based
};

// argmax_{0 <= x <= xbar} f(x) - <mu, x>.
// Linear ties (c_m == mu_m) resolve to 0.
ResourceVector Preselect(const UtilitySpec& u, const ResourceVector& mu,
                         const ResourceVector& xbar);

struct OacpStepResult {
  ResourceVector x;
  ResourceVector g;
  ResourceVector preselect;
  ResourceVector replenished;
  bool violated = false;
  BudgetState budget;
  DualState dual;
};

// One round of the OACP loop against (budget, dual).
OacpStepResult OacpStep(const BudgetState& budget, const DualState& dual,
                        const Round& round, const ResourceVector& rho,
                        const ResourceVector& xbar,
                        const ResourceVector& budget_cap);

// (1 / (rho_bar + ||xbar||_inf)) sqrt(2 sigma v_cap / T); falls back to
// 1/sqrt(T) when v_cap <= 0.
double OptimalEta(double rho_bar, double xbar_inf, double sigma, double v_cap,
                  double horizon);

// max_m V_h((f_bar / (alpha rho_m)) e_m, mu_1).
double WorstCaseBregmanRadius(const Instance& instance,
                              const ReferenceFunction& ref);

// Learning rate for a whole-horizon run: explicit value or the bound optimum.
double ResolveEta(const Instance& instance, const OacpConfig& cfg,
                  const ReferenceFunction& ref);

TheoremMu BuildTheoremMu(const Instance& instance, const ReferenceFunction& ref,
                         std::set<std::size_t> violated_resources,
                         std::vector<std::size_t> violation_rounds);

class OacpAllocator : public OnlineAllocator {
 public:
  OacpAllocator(const Instance& instance, const OacpConfig& cfg);

  std::string_view name() const override { return "oacp"; }
  RoundRecord Step(const Round& round) override;
  const BudgetState& budget() const override { return budget_; }

  const DualState& dual() const { return dual_; }
  TheoremMu theorem_mu() const;

 private:
  const Instance& instance_;
  ResourceVector rho_;
  bool record_;
  BudgetState budget_;
  DualState dual_;
  std::size_t t_ = 0;
  std::set<std::size_t> violated_resources_;
  std::vector<std::size_t> violation_rounds_;
};

struct OacpRun {
  Trace trace;
  TheoremMu theorem_mu;
  double eta = 0.0;
  ReferenceFunction ref;
};

OacpRun RunOacp(const Instance& instance, const OacpConfig& cfg);

// Both sides of OPT - alpha F <= alpha f_bar + alpha G^2 eta T / (2 sigma)
//   + (alpha / eta) V_h(mu*, mu_1), with G = rho_bar + ||xbar||_inf.
struct CompetitiveBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool Holds(double tol) const { return lhs <= rhs + tol; }
};

CompetitiveBound EvaluateOacpBound(const Instance& instance, const OacpRun& run,
                                   double opt_value);

}  // namespace oacp

#endif  // OACP_OACP_H_
