// Experiment pipeline: run a list of algorithms over the test split of a
// dataset (clean and OOD-perturbed), normalize by the offline optimum, and
// persist per-instance rows plus an aggregate summary.

#ifndef OACP_HARNESS_H_
#define OACP_HARNESS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "oacp/core.h"
#include "oacp/la_oacp.h"
#include "oacp/predictor.h"
#include "oacp/workload.h"

namespace oacp {

// Bad or inconsistent experiment configuration (unknown algorithm, missing
// dataset or model file).
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

inline constexpr int kSummarySchemaVersion = 1;

struct AlgorithmSpec {
  std::string name;       // opt|equal|greedy|dmd|oacp|oacp-plus|ml|la-oacp
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  std::string dataset;  // dataset directory
  std::vector<AlgorithmSpec> algorithms;
  std::vector<double> lambda_grid{0.3};
  std::vector<double> R_grid{0.0};
  std::uint64_t seed = 1;
  std::string out;

  ExpertConfig expert;  // pi-dagger for violation rates and LA-OACP
  double ood_fraction = 0.3;
  double ood_sigma = 0.5;
  double dp_check_fraction = 0.05;
  std::size_t dp_check_rounds = 6;
  int dp_check_levels = 1001;
  bool write_traces = false;
  int workers = 0;  // 0: one per hardware thread

  // Relative paths resolve against base_dir.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::string& base_dir = "");
  static ExperimentConfig Load(const std::string& path);
  // Names known, grids valid, dataset and model files present.
  void Validate() const;
};

ExpertConfig ParseExpertJson(const nlohmann::json& j);

// One (algorithm, lambda, R) combination to run. LA-OACP expands over the
// grids unless its params pin lambda or R.
struct AlgorithmRun {
  std::string label;
  std::string name;
  nlohmann::json params;
  double lambda = 0.0;  // LA-OACP only
  double R = 0.0;
};

std::vector<AlgorithmRun> ExpandAlgorithms(const ExperimentConfig& cfg);

struct InstanceResult {
  std::string instance_id;
  std::string algo;
  double F_T = 0.0;
  double opt = 0.0;
  double ratio = 0.0;
  bool violated = false;  // F_T < lambda F_T(expert) - R at the run's (lambda, R)
  bool ood = false;
};

struct ViolationPoint {
  double lambda = 0.0;
  double R = 0.0;
  double rate = 0.0;
};

struct AlgorithmMetrics {
  std::string algo;
  std::size_t count = 0;
  double avg = 0.0;            // ratio of sums (Table-2 style)
  double avg_of_ratios = 0.0;
  double cr_emp = 0.0;         // min ratio
  double max_ratio = 0.0;
  std::vector<ViolationPoint> violation;  // over the lambda x R grid
};

struct SuiteMetrics {
  std::vector<AlgorithmMetrics> algorithms;  // in configuration order
  std::vector<InstanceResult> rows;          // sorted by (instance, algo)

  const AlgorithmMetrics& Get(const std::string& label) const;
};

struct DpCheck {
  std::size_t count = 0;
  double max_abs_diff = 0.0;
};

struct MetricsReport {
  SuiteMetrics test;
  SuiteMetrics ood;
  DpCheck dp_check;
};

// Models referenced by ml / la-oacp entries, loaded once per path.
using ModelCache = std::map<std::string, std::shared_ptr<const PolicyNet>>;

// Runs `runs` over `instances` and aggregates. `opt` holds the per-instance
// optimum. Predictors are created per task, so workers share nothing mutable.
SuiteMetrics EvaluateInstances(const std::vector<Instance>& instances,
                               const std::vector<std::string>& ids,
                               const std::vector<bool>& ood,
                               const std::vector<double>& opt,
                               const std::vector<AlgorithmRun>& runs,
                               const ExperimentConfig& cfg,
                               const ModelCache& models,
                               std::map<std::string, std::vector<Trace>>*
                                   traces = nullptr);

// Optimum of every instance with the concave solver.
std::vector<double> ComputeOpt(const std::vector<Instance>& instances,
                               int workers);

// Concave solver vs DP on the first `rounds` rounds of a seeded
// `fraction` subsample (at least one instance).
DpCheck CrossCheckOpt(const std::vector<Instance>& instances, double fraction,
                      std::size_t rounds, int levels, std::uint64_t seed);

ModelCache LoadModels(const std::vector<AlgorithmRun>& runs);

// Loads the dataset and models, evaluates the clean test split and its OOD
// variant, and writes the report when cfg.out is set.
MetricsReport EvaluateSuite(const ExperimentConfig& cfg);

nlohmann::json SummaryJson(const ExperimentConfig& cfg,
                           const MetricsReport& report);
nlohmann::json SuiteJson(const SuiteMetrics& suite);

// summary.json and per_instance.csv under cfg.out. OOD rows are written only
// for perturbed instances; the others repeat the clean rows.
void WriteReport(const ExperimentConfig& cfg, const MetricsReport& report);

// Round-by-round CSV of one trace.
void WriteTraceCsv(const Trace& trace, const std::string& path);

// Calls fn(i) for i in [0, n) on at most `workers` threads.
void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& fn);

}  // namespace oacp

#endif  // OACP_HARNESS_H_
