// Domain types shared by every allocator: resource vectors, per-round
// utilities, problem instances, the capped budget dynamics and run traces.

#ifndef OACP_CORE_H_
#define OACP_CORE_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oacp {

// Absolute slack used for every budget feasibility comparison.
inline constexpr double kFeasibilityTol = 1e-9;

// Malformed or inconsistent caller input (dimension mismatch, bad values).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition (e.g. an infeasible allocation).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Dense vector indexed by resource type. Used for allocations, budgets,
// replenishments and dual prices; non-negativity is checked by the callers
// that need it since dual subgradients can be negative.
class ResourceVector {
 public:
  ResourceVector() = default;
  explicit ResourceVector(std::size_t m, double fill = 0.0) : v_(m, fill) {}
  ResourceVector(std::initializer_list<double> v) : v_(v) {}
  explicit ResourceVector(std::vector<double> v) : v_(std::move(v)) {}

  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }
  auto begin() { return v_.begin(); }
  auto end() { return v_.end(); }
  std::span<const double> values() const { return v_; }
  const std::vector<double>& vec() const { return v_; }

  double Sum() const;
  double Max() const;
  double Min() const;
  double MaxNorm() const;  // ||v||_inf
  double L1Norm() const;
  bool AllFinite() const;
  bool AllNonNegative() const;
  // this <= other + tol elementwise.
  bool AllLessEqual(const ResourceVector& other, double tol = 0.0) const;
  bool IsZero() const;

  ResourceVector& operator+=(const ResourceVector& o);
  ResourceVector& operator-=(const ResourceVector& o);
  ResourceVector& operator*=(double s);

  friend bool operator==(const ResourceVector&, const ResourceVector&) = default;

 private:
  std::vector<double> v_;
};

ResourceVector operator+(ResourceVector a, const ResourceVector& b);
ResourceVector operator-(ResourceVector a, const ResourceVector& b);
ResourceVector operator*(ResourceVector a, double s);
ResourceVector operator*(double s, ResourceVector a);
ResourceVector Min(const ResourceVector& a, const ResourceVector& b);
ResourceVector Max(const ResourceVector& a, const ResourceVector& b);
ResourceVector Hadamard(const ResourceVector& a, const ResourceVector& b);
ResourceVector PositivePart(ResourceVector a);
double Dot(const ResourceVector& a, const ResourceVector& b);
ResourceVector Clamp(const ResourceVector& x, const ResourceVector& lo,
                     const ResourceVector& hi);

void RequireSameSize(const ResourceVector& a, const ResourceVector& b,
                     std::string_view what);

// f(x) = <c, x>.
struct LinearUtility {
  ResourceVector coeffs;
};

// f(x) = c * log(1 + min{1, x / c}) for a single resource; c is the demand.
struct LogServeUtility {
  double demand = 0.0;
};

// Concave, non-decreasing per-round utility with f(0) = 0.
class UtilitySpec {
 public:
  using Kind = std::variant<LinearUtility, LogServeUtility>;

  static UtilitySpec Linear(ResourceVector coeffs);
  static UtilitySpec LogServe(double demand);

  bool is_linear() const { return std::holds_alternative<LinearUtility>(kind_); }
  bool is_log_serve() const {
    return std::holds_alternative<LogServeUtility>(kind_);
  }
  const Kind& kind() const { return kind_; }
  std::size_t dimension() const;
  // Demand for LogServe, coefficient sum for Linear.
  double scale() const;

  double Evaluate(const ResourceVector& x) const;
  ResourceVector Supergradient(const ResourceVector& x) const;
  // sup of f over the box [0, xbar], as used for f-bar.
  double SupOverBox(const ResourceVector& xbar) const;

 private:
  explicit UtilitySpec(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

double EvalUtility(const UtilitySpec& u, const ResourceVector& x);
ResourceVector UtilitySupergradient(const UtilitySpec& u,
                                    const ResourceVector& x);

// Information revealed at the start of one round.
struct Round {
  UtilitySpec utility;
  ResourceVector e_hat;  // potential replenishment
};

enum class UtilityKind { kLinear, kLogServe };

// One episode of T rounds over M resources.
struct Instance {
  std::size_t num_resources = 1;
  ResourceVector initial_budget;  // B1 = rho * T
  ResourceVector budget_cap;      // Bmax
  ResourceVector allocation_cap;  // xbar
  std::vector<Round> rounds;

  std::size_t horizon() const { return rounds.size(); }

  // Throws InputError when any structural invariant is broken.
  void Validate() const;

  ResourceVector rho() const;      // B1 / T
  ResourceVector rho_max() const;  // Bmax / T
  double rho_bar() const { return rho().Max(); }
  // Uniform per-round utility bound.
  double f_bar() const;
  // Lipschitz constant of the utilities under the l1 pairing.
  double lipschitz() const;
  // max_m xbar_m / rho_m.
  double alpha() const;
  UtilityKind utility_kind() const;
};

struct BudgetState {
  ResourceVector remaining;
};

struct BudgetStep {
  ResourceVector replenished;  // E_t
  BudgetState next;
};

// E_t = min(E_hat, Bmax - B_t); B_{t+1} = B_t + E_t - x_t.
BudgetStep StepBudget(const BudgetState& state, const ResourceVector& e_hat,
                      const ResourceVector& x, const ResourceVector& budget_cap);

// Actual replenishment without committing a decision.
ResourceVector Replenishment(const BudgetState& state,
                             const ResourceVector& e_hat,
                             const ResourceVector& budget_cap);

// Clamps x into [0, min(xbar, available)].
ResourceVector ClampDecision(const ResourceVector& x, const ResourceVector& xbar,
                             const ResourceVector& available);

struct RoundRecord {
  ResourceVector x;
  double utility = 0.0;
  ResourceVector budget;       // B_t before replenishment
  ResourceVector replenished;  // E_t
  ResourceVector preselect;    // x-hat_t (empty when not applicable)
  ResourceVector dual;         // mu_t (empty when not applicable)
  bool violated = false;       // t in T_A
};

struct Trace {
  std::string algorithm;
  std::vector<RoundRecord> rounds;
  double total_utility = 0.0;
};

// Empty string when the trace satisfies budget safety, utility accounting and
// the box constraints; otherwise a description of the first failure.
std::string CheckTrace(const Instance& instance, const Trace& trace,
                       double tol = 1e-7);

// Online allocator that owns its budget ledger and is fed one round at a time.
class OnlineAllocator {
 public:
  virtual ~OnlineAllocator() = default;
  virtual std::string_view name() const = 0;
  virtual RoundRecord Step(const Round& round) = 0;
  virtual const BudgetState& budget() const = 0;
};

Trace RunAllocator(const Instance& instance, OnlineAllocator& allocator);

}  // namespace oacp

#endif  // OACP_CORE_H_
