// Bregman reference functions and the mirror-descent price update.

#ifndef OACP_DUAL_H_
#define OACP_DUAL_H_

#include <string_view>

#include "oacp/core.h"

namespace oacp {

// Invalid point for the reference function's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class ReferenceKind {
  kSquaredL2,   // h(mu) = 1/2 ||mu||^2
  kNegEntropy,  // h(mu) = sum mu log mu
};

struct ReferenceFunction {
  ReferenceKind kind = ReferenceKind::kSquaredL2;
  double sigma = 1.0;  // strong-convexity modulus w.r.t. ||.||_1
};

// Floor applied to entropic iterates.
inline constexpr double kEntropyFloor = 1e-12;

struct DualState {
  ResourceVector mu;
  double eta = 1.0;
  ReferenceFunction ref;
};

ReferenceKind ParseReferenceKind(std::string_view name);  // "l2" | "entropy"
std::string_view ReferenceKindName(ReferenceKind kind);

// Reference function with sigma set for an instance: 1/M for SquaredL2 and
// 1/U for NegEntropy, where U bounds the l1 size of the bound's candidate duals.
ReferenceFunction MakeReference(ReferenceKind kind, const Instance& instance);

// mu_1: zeros for SquaredL2, ones for NegEntropy.
ResourceVector InitialDual(ReferenceKind kind, std::size_t m);

// V_h(mu, mu0). For NegEntropy, mu may contain zeros (0 log 0 = 0) but mu0
// must be strictly positive.
double Bregman(const ReferenceFunction& ref, const ResourceVector& mu,
               const ResourceVector& mu0);

// argmin_{mu >= 0} <g, mu> + V_h(mu, mu_t) / eta.
DualState MirrorStep(const DualState& state, const ResourceVector& g);

}  // namespace oacp

#endif  // OACP_DUAL_H_
