// OACP+: doubling frames, threshold-capped frame budgets, and an OACP inner
// loop run against each frame's assigned budget. Replenishment collected in
// one frame becomes spendable from the next frame on.

#ifndef OACP_OACP_PLUS_H_
#define OACP_OACP_PLUS_H_

#include <optional>
#include <string>
#include <vector>

#include "oacp/core.h"
#include "oacp/dual.h"

namespace oacp {

// Frame i (1-based) covers rounds [start, end], also 1-based and inclusive.
struct Frame {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - start + 1; }
};

struct FramePlan {
  std::size_t unit_length = 1;  // T*
  std::size_t horizon = 0;      // T
  std::vector<Frame> frames;    // K entries
  std::size_t num_frames() const { return frames.size(); }
};

// Frames end at T_i = (2^i - 1) T*; the K-th frame is stretched or truncated
// to end at T, with K the smallest k >= 1 such that 2^k T* >= T.
FramePlan BuildFramePlan(std::size_t horizon, std::size_t unit_length);

struct FrameBudget {
  std::size_t frame = 0;          // 1-based index i
  ResourceVector assigned;        // B^(i)
  ResourceVector additive;        // Omega_i
  ResourceVector rho_hat;         // B^(i) / frame length
  ResourceVector remaining;       // B_t^(i), decreases within the frame
  ResourceVector actual_at_start; // B_{T_{i-1}+1}
  bool clamped = false;           // a negative Omega_i was clamped to 0
};

// Frame budget from the true remaining budget at the frame start.
FrameBudget AssignFrameBudget(std::size_t frame, const ResourceVector& actual,
                              const FramePlan& plan, const ResourceVector& rho,
                              const ResourceVector& rho_max,
                              const ResourceVector& beta);

ResourceVector OptimalBeta(const ResourceVector& rho,
                           const ResourceVector& rho_max, double horizon,
                           double unit_length);

ResourceVector DeltaRho(const ResourceVector& e_min, const ResourceVector& rho,
                        const ResourceVector& rho_max, double horizon,
                        double unit_length);

// eta_i = sqrt(2 sigma v_cap / (2^{i-1} T*)) /
//         (rho_bar + beta_bar rho_max_bar / 2 + ||xbar||_inf);
// 1/sqrt(2^{i-1} T*) when v_cap <= 0.
double FrameEta(std::size_t frame, double sigma, double v_cap, double rho_bar,
                double rho_max_bar, double beta_bar, double xbar_inf,
                std::size_t unit_length);

// Lower bound on Omega_i implied by a minimum per-unit-frame replenishment.
ResourceVector EffectiveAdditiveBudget(std::size_t frame, const FramePlan& plan,
                                       const ResourceVector& rho,
                                       const ResourceVector& rho_max,
                                       const ResourceVector& beta,
                                       const ResourceVector& e_min);

struct OacpPlusConfig {
  std::size_t unit_length = 1;       // T*
  std::optional<ResourceVector> beta;  // nullopt: OptimalBeta
  ReferenceKind reference = ReferenceKind::kSquaredL2;
  std::optional<double> eta;         // fixed per-frame rate; nullopt: FrameEta
  bool record_diagnostics = true;
};

class OacpPlusAllocator : public OnlineAllocator {
 public:
  OacpPlusAllocator(const Instance& instance, const OacpPlusConfig& cfg);

  std::string_view name() const override { return "oacp-plus"; }
  RoundRecord Step(const Round& round) override;
  const BudgetState& budget() const override { return budget_; }

  const FramePlan& plan() const { return plan_; }
  const ResourceVector& beta() const { return beta_; }
  const std::vector<FrameBudget>& frame_budgets() const { return frames_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  void StartFrame(std::size_t frame);

  const Instance& instance_;
  OacpPlusConfig cfg_;
  FramePlan plan_;
  ResourceVector rho_;
  ResourceVector rho_max_;
  ResourceVector beta_;
  ReferenceFunction ref_;
  double v_cap_ = 0.0;
  BudgetState budget_;
  DualState dual_;
  std::size_t t_ = 0;       // 0-based round
  std::size_t frame_ = 0;   // 1-based current frame, 0 before start
  std::vector<FrameBudget> frames_;
  std::vector<std::string> diagnostics_;
};

struct OacpPlusRun {
  Trace trace;
  FramePlan plan;
  ResourceVector beta;
  std::vector<FrameBudget> frame_budgets;
  std::vector<std::string> diagnostics;
};

OacpPlusRun RunOacpPlus(const Instance& instance, const OacpPlusConfig& cfg);

// Worst violation of Omega_i >= Omega-hat_i over frames 1..K-1 (positive means
// the lower bound was broken by that much).
double LowerBoundShortfall(const Instance& instance, const OacpPlusRun& run,
                           const ResourceVector& e_min);

}  // namespace oacp

#endif  // OACP_OACP_PLUS_H_
