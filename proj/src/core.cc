#include "oacp/core.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace oacp {

double ResourceVector::Sum() const {
  return std::accumulate(v_.begin(), v_.end(), 0.0);
}

double ResourceVector::Max() const {
  return v_.empty() ? 0.0 : *std::max_element(v_.begin(), v_.end());
}

double ResourceVector::Min() const {
  return v_.empty() ? 0.0 : *std::min_element(v_.begin(), v_.end());
}

double ResourceVector::MaxNorm() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

double ResourceVector::L1Norm() const {
  double s = 0.0;
  for (double x : v_) s += std::abs(x);
  return s;
}

bool ResourceVector::AllFinite() const {
  return std::all_of(v_.begin(), v_.end(),
                     [](double x) { return std::isfinite(x); });
}

bool ResourceVector::AllNonNegative() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return x >= 0.0; });
}

bool ResourceVector::AllLessEqual(const ResourceVector& other,
                                  double tol) const {
  RequireSameSize(*this, other, "comparison");
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (v_[i] > other.v_[i] + tol) return false;
  }
  return true;
}

bool ResourceVector::IsZero() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return x == 0.0; });
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& o) {
  RequireSameSize(*this, o, "addition");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& o) {
  RequireSameSize(*this, o, "subtraction");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

ResourceVector& ResourceVector::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

ResourceVector operator+(ResourceVector a, const ResourceVector& b) {
  return a += b;
}
ResourceVector operator-(ResourceVector a, const ResourceVector& b) {
  return a -= b;
}
ResourceVector operator*(ResourceVector a, double s) { return a *= s; }
ResourceVector operator*(double s, ResourceVector a) { return a *= s; }

ResourceVector Min(const ResourceVector& a, const ResourceVector& b) {
  RequireSameSize(a, b, "min");
  ResourceVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::min(a[i], b[i]);
  return r;
}

ResourceVector Max(const ResourceVector& a, const ResourceVector& b) {
  RequireSameSize(a, b, "max");
  ResourceVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::max(a[i], b[i]);
  return r;
}

ResourceVector Hadamard(const ResourceVector& a, const ResourceVector& b) {
  RequireSameSize(a, b, "elementwise product");
  ResourceVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
  return r;
}

ResourceVector PositivePart(ResourceVector a) {
  for (double& x : a) x = std::max(0.0, x);
  return a;
}

double Dot(const ResourceVector& a, const ResourceVector& b) {
  RequireSameSize(a, b, "dot product");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

ResourceVector Clamp(const ResourceVector& x, const ResourceVector& lo,
                     const ResourceVector& hi) {
  return Min(Max(x, lo), hi);
}

void RequireSameSize(const ResourceVector& a, const ResourceVector& b,
                     std::string_view what) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << "dimension mismatch in " << what << ": " << a.size() << " vs "
       << b.size();
    throw InputError(os.str());
  }
}

// ---------------------------------------------------------------------------

UtilitySpec UtilitySpec::Linear(ResourceVector coeffs) {
  if (coeffs.empty()) throw InputError("linear utility needs M >= 1");
  for (double c : coeffs) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw InputError("linear utility coefficients must be finite and >= 0");
    }
  }
  return UtilitySpec(LinearUtility{std::move(coeffs)});
}

UtilitySpec UtilitySpec::LogServe(double demand) {
  if (!(demand > 0.0) || !std::isfinite(demand)) {
    throw InputError("log-serve demand must be finite and > 0");
  }
  return UtilitySpec(LogServeUtility{demand});
}

std::size_t UtilitySpec::dimension() const {
  if (const auto* lin = std::get_if<LinearUtility>(&kind_)) {
    return lin->coeffs.size();
  }
  return 1;
}

double UtilitySpec::scale() const {
  if (const auto* lin = std::get_if<LinearUtility>(&kind_)) {
    return lin->coeffs.Sum();
  }
  return std::get<LogServeUtility>(kind_).demand;
}

double UtilitySpec::Evaluate(const ResourceVector& x) const {
  if (x.size() != dimension()) {
    throw InputError("utility/allocation dimension mismatch");
  }
  if (const auto* lin = std::get_if<LinearUtility>(&kind_)) {
    return Dot(lin->coeffs, x);
  }
  const double c = std::get<LogServeUtility>(kind_).demand;
  const double xv = std::max(0.0, x[0]);
  return c * std::log1p(std::min(1.0, xv / c));
}

ResourceVector UtilitySpec::Supergradient(const ResourceVector& x) const {
  if (x.size() != dimension()) {
    throw InputError("utility/allocation dimension mismatch");
  }
  if (const auto* lin = std::get_if<LinearUtility>(&kind_)) {
    return lin->coeffs;
  }
  const double c = std::get<LogServeUtility>(kind_).demand;
  const double xv = std::max(0.0, x[0]);
  // Left limit at the kink x = c.
  if (xv <= c) return ResourceVector{1.0 / (1.0 + xv / c)};
  return ResourceVector{0.0};
}

double UtilitySpec::SupOverBox(const ResourceVector& xbar) const {
  if (const auto* lin = std::get_if<LinearUtility>(&kind_)) {
    return Dot(lin->coeffs, xbar);
  }
  return std::get<LogServeUtility>(kind_).demand * std::log(2.0);
}

double EvalUtility(const UtilitySpec& u, const ResourceVector& x) {
  return u.Evaluate(x);
}

ResourceVector UtilitySupergradient(const UtilitySpec& u,
                                    const ResourceVector& x) {
  return u.Supergradient(x);
}

// ---------------------------------------------------------------------------

void Instance::Validate() const {
  const std::size_t m = num_resources;
  if (m == 0) throw InputError("instance needs M >= 1");
  if (rounds.empty()) throw InputError("instance needs T >= 1");
  if (initial_budget.size() != m || budget_cap.size() != m ||
      allocation_cap.size() != m) {
    throw InputError("instance budget vectors must have length M");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(initial_budget[i] > 0.0) || !std::isfinite(initial_budget[i])) {
      throw InputError("initial budget must be finite and > 0");
    }
    if (!(allocation_cap[i] > 0.0) || !std::isfinite(allocation_cap[i])) {
      throw InputError("allocation cap must be finite and > 0");
    }
    if (!std::isfinite(budget_cap[i])) {
      throw InputError("budget cap must be finite");
    }
  }
  if (!initial_budget.AllLessEqual(budget_cap)) {
    throw InputError("initial budget exceeds the budget cap");
  }
  if (!allocation_cap.AllLessEqual(budget_cap)) {
    throw InputError("allocation cap exceeds the budget cap");
  }
  for (std::size_t t = 0; t < rounds.size(); ++t) {
    const Round& r = rounds[t];
    if (r.utility.dimension() != m || r.e_hat.size() != m) {
      throw InputError("round " + std::to_string(t + 1) +
                       ": dimension does not match M");
    }
    if (r.utility.is_log_serve() && m != 1) {
      throw InputError("log-serve utilities are defined for M = 1 only");
    }
    if (!r.e_hat.AllNonNegative() || !r.e_hat.AllFinite()) {
      throw InputError("round " + std::to_string(t + 1) +
                       ": replenishment must be finite and >= 0");
    }
  }
}

ResourceVector Instance::rho() const {
  return initial_budget * (1.0 / static_cast<double>(horizon()));
}

ResourceVector Instance::rho_max() const {
  return budget_cap * (1.0 / static_cast<double>(horizon()));
}

double Instance::f_bar() const {
  double f = 0.0;
  for (const Round& r : rounds) {
    f = std::max(f, r.utility.SupOverBox(allocation_cap));
  }
  return f;
}

double Instance::lipschitz() const {
  double l = 0.0;
  for (const Round& r : rounds) {
    if (const auto* lin = std::get_if<LinearUtility>(&r.utility.kind())) {
      l = std::max(l, lin->coeffs.MaxNorm());
    } else {
      l = std::max(l, 1.0);
    }
  }
  // L must be strictly positive even for all-zero linear utilities.
  return l > 0.0 ? l : 1.0;
}

double Instance::alpha() const {
  const ResourceVector r = rho();
  double a = 0.0;
  for (std::size_t m = 0; m < r.size(); ++m) {
    a = std::max(a, allocation_cap[m] / r[m]);
  }
  return a;
}

UtilityKind Instance::utility_kind() const {
  if (!rounds.empty() && rounds.front().utility.is_log_serve()) {
    return UtilityKind::kLogServe;
  }
  return UtilityKind::kLinear;
}

// ---------------------------------------------------------------------------

ResourceVector Replenishment(const BudgetState& state,
                             const ResourceVector& e_hat,
                             const ResourceVector& budget_cap) {
  return PositivePart(Min(e_hat, budget_cap - state.remaining));
}

BudgetStep StepBudget(const BudgetState& state, const ResourceVector& e_hat,
                      const ResourceVector& x,
                      const ResourceVector& budget_cap) {
  RequireSameSize(state.remaining, e_hat, "budget step");
  RequireSameSize(state.remaining, x, "budget step");
  RequireSameSize(state.remaining, budget_cap, "budget step");
  BudgetStep out;
  out.replenished = Replenishment(state, e_hat, budget_cap);
  const ResourceVector available = state.remaining + out.replenished;
  for (std::size_t m = 0; m < x.size(); ++m) {
    if (x[m] < -kFeasibilityTol || x[m] > available[m] + kFeasibilityTol) {
      std::ostringstream os;
      os << "infeasible allocation on resource " << m << ": x=" << x[m]
         << " available=" << available[m];
      throw ContractViolation(os.str());
    }
  }
  ResourceVector next = available - x;
  for (std::size_t m = 0; m < next.size(); ++m) {
    next[m] = std::clamp(next[m], 0.0, budget_cap[m]);
  }
  out.next.remaining = std::move(next);
  return out;
}

ResourceVector ClampDecision(const ResourceVector& x, const ResourceVector& xbar,
                             const ResourceVector& available) {
  const ResourceVector hi = Max(Min(xbar, available), ResourceVector(x.size()));
  return Clamp(x, ResourceVector(x.size()), hi);
}

std::string CheckTrace(const Instance& instance, const Trace& trace,
                       double tol) {
  std::ostringstream os;
  if (trace.rounds.size() != instance.horizon()) {
    os << "trace has " << trace.rounds.size() << " rounds, instance has "
       << instance.horizon();
    return os.str();
  }
  BudgetState state{instance.initial_budget};
  double total = 0.0;
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const RoundRecord& rec = trace.rounds[t];
    const Round& round = instance.rounds[t];
    const ResourceVector e = Replenishment(state, round.e_hat, instance.budget_cap);
    if (!rec.budget.AllLessEqual(instance.budget_cap, tol) ||
        !rec.budget.AllNonNegative()) {
      os << "round " << t + 1 << ": budget outside [0, Bmax]";
      return os.str();
    }
    for (std::size_t m = 0; m < e.size(); ++m) {
      if (std::abs(rec.budget[m] - state.remaining[m]) > tol ||
          std::abs(rec.replenished[m] - e[m]) > tol) {
        os << "round " << t + 1 << ": budget ledger disagrees with dynamics";
        return os.str();
      }
    }
    if (!rec.replenished.AllLessEqual(round.e_hat, tol)) {
      os << "round " << t + 1 << ": replenishment exceeds potential";
      return os.str();
    }
    if (!rec.x.AllNonNegative() ||
        !rec.x.AllLessEqual(instance.allocation_cap, tol) ||
        !rec.x.AllLessEqual(state.remaining + e, tol)) {
      os << "round " << t + 1 << ": allocation outside [0, min(xbar, B+E)]";
      return os.str();
    }
    const double f = round.utility.Evaluate(rec.x);
    if (std::abs(f - rec.utility) > tol) {
      os << "round " << t + 1 << ": recorded utility " << rec.utility
         << " != f(x) " << f;
      return os.str();
    }
    total += f;
    state = StepBudget(state, round.e_hat, ClampDecision(rec.x, instance.allocation_cap, state.remaining + e),
                       instance.budget_cap)
                .next;
  }
  if (std::abs(total - trace.total_utility) > tol * (1.0 + std::abs(total))) {
    os << "total utility " << trace.total_utility << " != sum of rounds "
       << total;
    return os.str();
  }
  return {};
}

Trace RunAllocator(const Instance& instance, OnlineAllocator& allocator) {
  Trace trace;
  trace.algorithm = std::string(allocator.name());
  trace.rounds.reserve(instance.horizon());
  for (const Round& round : instance.rounds) {
    RoundRecord rec = allocator.Step(round);
    trace.total_utility += rec.utility;
    trace.rounds.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace oacp
