// Synthetic single-resource workloads: diurnal solar replenishment and
// evening-peaking inference demand, dataset splits, out-of-distribution
// perturbation, minimum per-frame replenishment, and CSV/JSON persistence.

#ifndef OACP_WORKLOAD_H_
#define OACP_WORKLOAD_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "oacp/core.h"

namespace oacp {

// Malformed instance file; the message names the row or column.
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

// "linear" | "log_serve".
std::string UtilityKindName(UtilityKind kind);
UtilityKind ParseUtilityKind(const std::string& name);

struct GeneratorParams {
  std::size_t T = 120;
  double B1 = 12.0;
  double Bmax = 30.0;
  double xbar = 0.6;
  UtilityKind utility = UtilityKind::kLogServe;
  int day_length = 24;
  int start_hour = 0;  // hour of day of round 1

  // Demand c_t = base (1 + amplitude cos(2 pi (h - peak) / day) + noise).
  double demand_base = 0.3;
  double demand_amplitude = 0.9;
  double demand_peak_hour = 20.0;
  double demand_noise = 0.15;

  // Replenishment E_hat_t = max(0, A sin(pi s / 12) + noise) during daylight,
  // s the hours since sunrise; A varies per day by +-solar_day_spread.
  double solar_amplitude = 1.2;
  double solar_day_spread = 0.3;
  double sunrise_hour = 6.0;
  double solar_noise = 0.1;
  double cloud_dropout = 0.15;  // per-round chance of an 80% cut
  double overcast_day = 0.0;    // per-day chance of a 95% cut for the day
  std::size_t drought_start = 0;  // E_hat_t = 0 from this 0-based round on; 0 = never

  std::uint64_t seed = 1;
  double test_fraction = 0.25;
  double validation_fraction = 0.10;  // of the non-test remainder

  void Validate() const;
  nlohmann::json ToJson() const;
  static GeneratorParams FromJson(const nlohmann::json& j);
};

enum class Split { kTrain, kValidation, kTest };
std::string_view SplitName(Split s);

struct Dataset {
  std::vector<Instance> instances;
  std::vector<std::string> ids;
  std::vector<Split> split;
  std::vector<bool> ood;
  GeneratorParams params;

  std::size_t size() const { return instances.size(); }
  std::vector<std::size_t> Indices(Split s) const;
  std::vector<Instance> Subset(Split s) const;
};

// Instance `index` of the stream defined by params.seed.
Instance GenerateInstance(const GeneratorParams& params, std::size_t index);
Dataset GenerateDataset(const GeneratorParams& params, std::size_t n);

// Multiplies c_t and E_hat_t of exactly round(fraction * |test|) test
// instances by independent log-normal factors exp(sigma N(0,1)).
Dataset PerturbOod(const Dataset& dataset, double fraction, double sigma,
                   std::uint64_t seed);

// Smallest total E_hat over the non-overlapping unit frames of length t_star
// aligned to round 1; a trailing partial frame is ignored.
ResourceVector MinReplenishment(const Instance& instance, std::size_t t_star);

// CSV with header t,c,E_hat plus a JSON sidecar at the same path with a
// .json extension holding {T, M, B1, Bmax, xbar, utility_kind}.
void WriteInstanceCsv(const Instance& instance, const std::string& csv_path);
Instance ReadInstanceCsv(const std::string& csv_path);

// <dir>/instances/<id>.csv (+ sidecars), <dir>/meta.json, <dir>/splits.json.
void WriteDataset(const Dataset& dataset, const std::string& dir);
Dataset ReadDataset(const std::string& dir);

}  // namespace oacp

#endif  // OACP_WORKLOAD_H_
