#include "oacp/dual.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace oacp {

ReferenceKind ParseReferenceKind(std::string_view name) {
  if (name == "l2") return ReferenceKind::kSquaredL2;
  if (name == "entropy") return ReferenceKind::kNegEntropy;
  throw InputError("unknown reference function '" + std::string(name) +
                   "' (expected l2|entropy)");
}

std::string_view ReferenceKindName(ReferenceKind kind) {
  return kind == ReferenceKind::kSquaredL2 ? "l2" : "entropy";
}

ResourceVector InitialDual(ReferenceKind kind, std::size_t m) {
  return ResourceVector(m, kind == ReferenceKind::kSquaredL2 ? 0.0 : 1.0);
}

ReferenceFunction MakeReference(ReferenceKind kind, const Instance& instance) {
  const double m = static_cast<double>(instance.num_resources);
  if (kind == ReferenceKind::kSquaredL2) return {kind, 1.0 / m};
  const double u = instance.f_bar() / (instance.alpha() * instance.rho().Min()) +
                   InitialDual(kind, instance.num_resources).L1Norm();
  return {kind, 1.0 / u};
}

double Bregman(const ReferenceFunction& ref, const ResourceVector& mu,
               const ResourceVector& mu0) {
  RequireSameSize(mu, mu0, "Bregman divergence");
  double v = 0.0;
  if (ref.kind == ReferenceKind::kSquaredL2) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double d = mu[i] - mu0[i];
      v += 0.5 * d * d;
    }
    return v;
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(mu0[i] > 0.0) || mu[i] < 0.0) {
      throw DomainError("negative-entropy divergence needs mu >= 0, mu0 > 0");
    }
    const double plogp = mu[i] > 0.0 ? mu[i] * std::log(mu[i] / mu0[i]) : 0.0;
    v += plogp - mu[i] + mu0[i];
  }
  return std::max(0.0, v);
}

DualState MirrorStep(const DualState& state, const ResourceVector& g) {
  RequireSameSize(state.mu, g, "mirror step");
  if (!g.AllFinite()) throw InputError("non-finite dual subgradient");
  DualState next = state;
  if (state.ref.kind == ReferenceKind::kSquaredL2) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      next.mu[i] = std::max(0.0, state.mu[i] - state.eta * g[i]);
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) {
      next.mu[i] =
          std::max(kEntropyFloor, state.mu[i] * std::exp(-state.eta * g[i]));
    }
  }
  return next;
}

}  // namespace oacp
