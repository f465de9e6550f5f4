// ML policy for LA-OACP: feature extraction, a small feed-forward network that
// outputs a fraction of the available budget, evolution-strategies training
// against mean LA-OACP utility, and a JSON model file. Single resource only.

#ifndef OACP_PREDICTOR_H_
#define OACP_PREDICTOR_H_

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "oacp/core.h"
#include "oacp/la_oacp.h"

namespace oacp {

// Unreadable, truncated or schema-mismatched model, or non-finite activations.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kModelSchemaVersion = 1;
inline constexpr const char* kFeatureSchema =
    "t/T,B/Bmax,E/rho_max,c/c_ref,(T-t)/T;clamp[0,4]";
inline constexpr std::size_t kNumFeatures = 5;

using FeatureVector = std::array<double, kNumFeatures>;

struct PolicyNet {
  std::vector<int> layers{static_cast<int>(kNumFeatures), 10, 10, 1};
  // Per layer: weight matrix (out x in, row-major) followed by biases.
  std::vector<double> weights;
  double c_ref = 1.0;
  std::uint64_t train_seed = 0;

  static std::size_t ParameterCount(const std::vector<int>& layers);
  // All-zero weights: the output is logistic(0) = 0.5 everywhere.
  static PolicyNet Zero(double c_ref);
  void Validate() const;
};

FeatureVector Featurize(const PredictorInput& in, double c_ref);

// Raw network output in (0, 1).
double ForwardFraction(const PolicyNet& net, const FeatureVector& features);

// fraction * min(xbar, available).
ResourceVector Forward(const PolicyNet& net, const FeatureVector& features,
                       const ResourceVector& xbar,
                       const ResourceVector& available);

class NetPredictor : public Predictor {
 public:
  explicit NetPredictor(PolicyNet net) : net_(std::move(net)) {}
  std::string name() const override { return "ml"; }
  ResourceVector Predict(const PredictorInput& in) override;
  const PolicyNet& net() const { return net_; }

 private:
  PolicyNet net_;
};

class AlwaysMaxPredictor : public Predictor {
 public:
  std::string name() const override { return "always-max"; }
  ResourceVector Predict(const PredictorInput& in) override;
};

class AlwaysZeroPredictor : public Predictor {
 public:
  std::string name() const override { return "always-zero"; }
  ResourceVector Predict(const PredictorInput& in) override;
};

// Uniform on [0, xbar]; restarts its stream on every Reset.
class UniformRandomPredictor : public Predictor {
 public:
  explicit UniformRandomPredictor(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "uniform-random"; }
  void Reset(const Instance& instance) override;
  ResourceVector Predict(const PredictorInput& in) override;

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

// Plays back a fixed decision sequence (e.g. expert or offline decisions).
class ReplayPredictor : public Predictor {
 public:
  explicit ReplayPredictor(std::vector<ResourceVector> decisions)
      : decisions_(std::move(decisions)) {}
  std::string name() const override { return "replay"; }
  ResourceVector Predict(const PredictorInput& in) override;

 private:
  std::vector<ResourceVector> decisions_;
};

// Mean per-round demand over a set of instances.
double MeanDemand(const std::vector<Instance>& instances);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 20;
  int population = 8;   // antithetic pairs per epoch
  double sigma = 0.1;   // perturbation scale
  double step = 0.05;   // ascent step on the normalized gradient estimate
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_mean;  // mean utility of the current model
  std::vector<double> best;        // best-seen objective after each epoch
  double initial = 0.0;            // objective of the zero-weight model
};

// Maximizes mean LA-OACP utility over `dataset` (the full rollout, projection
// included) and returns the best-seen model. Expert traces are computed once.
PolicyNet Train(const std::vector<Instance>& dataset, const ExpertConfig& expert,
                double lambda, double R, const TrainConfig& tc,
                TrainReport* report = nullptr);

// Mean LA-OACP utility of `net` over `instances` with precomputed experts.
double MeanLaOacpUtility(const PolicyNet& net,
                         const std::vector<Instance>& instances,
                         const std::vector<Trace>& experts, double lambda,
                         double R);

void SaveModel(const PolicyNet& net, const std::string& path);
PolicyNet LoadModel(const std::string& path);

}  // namespace oacp

#endif  // OACP_PREDICTOR_H_
