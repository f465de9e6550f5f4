#include "oacp/predictor.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace oacp {

namespace {

double Clamp04(double v) { return std::clamp(v, 0.0, 4.0); }

double Logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void RequireSingleResource(const Instance& instance) {
  if (instance.num_resources != 1) {
    throw InputError("the ML policy supports single-resource instances only");
  }
}

// Centered ranks in [-0.5, 0.5]; ties share the mean rank.
std::vector<double> CenteredRanks(const std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && f[idx[j + 1]] == f[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
    i = j + 1;
  }
  if (n > 1) {
    for (double& v : r) v = v / static_cast<double>(n - 1) - 0.5;
  }
  return r;
}

}  // namespace

std::size_t PolicyNet::ParameterCount(const std::vector<int>& layers) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    n += static_cast<std::size_t>(layers[l + 1]) * (layers[l] + 1);
  }
  return n;
}

PolicyNet PolicyNet::Zero(double c_ref) {
  PolicyNet net;
  net.weights.assign(ParameterCount(net.layers), 0.0);
  net.c_ref = c_ref;
  return net;
}

void PolicyNet::Validate() const {
  if (layers.size() < 2 || layers.front() != static_cast<int>(kNumFeatures) ||
      layers.back() != 1) {
    throw ModelError("network must map 5 features to 1 output");
  }
  for (int w : layers) {
    if (w <= 0) throw ModelError("layer widths must be positive");
  }
  if (weights.size() != ParameterCount(layers)) {
    throw ModelError("weight count does not match the layer sizes");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw ModelError("non-finite weight");
  }
  if (!(c_ref > 0.0) || !std::isfinite(c_ref)) {
    throw ModelError("c_ref must be positive");
  }
}

FeatureVector Featurize(const PredictorInput& in, double c_ref) {
  const Instance& inst = *in.instance;
  const double horizon = static_cast<double>(inst.horizon());
  const double t = static_cast<double>(in.t + 1);
  const double rho_max = inst.rho_max()[0];
  return {Clamp04(t / horizon), Clamp04(in.budget[0] / inst.budget_cap[0]),
          Clamp04(in.replenished[0] / rho_max),
          Clamp04(in.round->utility.scale() / c_ref),
          Clamp04((horizon - t) / horizon)};
}

double ForwardFraction(const PolicyNet& net, const FeatureVector& features) {
  std::vector<double> a(features.begin(), features.end());
  std::vector<double> next;
  std::size_t off = 0;
  const std::size_t n_layers = net.layers.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = net.layers[l];
    const std::size_t out = net.layers[l + 1];
    next.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double z = net.weights[off + in * out + o];
      for (std::size_t i = 0; i < in; ++i) {
        z += net.weights[off + o * in + i] * a[i];
      }
      next[o] = l + 1 < n_layers ? std::max(0.0, z) : z;
    }
    off += out * (in + 1);
    a.swap(next);
  }
  const double y = Logistic(a[0]);
  if (!std::isfinite(y)) throw ModelError("non-finite network output");
  return y;
}

ResourceVector Forward(const PolicyNet& net, const FeatureVector& features,
                       const ResourceVector& xbar,
                       const ResourceVector& available) {
  const double cap = std::max(0.0, std::min(xbar[0], available[0]));
  return ResourceVector{ForwardFraction(net, features) * cap};
}

ResourceVector NetPredictor::Predict(const PredictorInput& in) {
  RequireSingleResource(*in.instance);
  return Forward(net_, Featurize(in, net_.c_ref), in.instance->allocation_cap,
                 in.budget + in.replenished);
}

ResourceVector AlwaysMaxPredictor::Predict(const PredictorInput& in) {
  return in.instance->allocation_cap;
}

ResourceVector AlwaysZeroPredictor::Predict(const PredictorInput& in) {
  return ResourceVector(in.instance->num_resources);
}

void UniformRandomPredictor::Reset(const Instance&) { rng_.seed(seed_); }

ResourceVector UniformRandomPredictor::Predict(const PredictorInput& in) {
  ResourceVector x(in.instance->num_resources);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t m = 0; m < x.size(); ++m) {
    x[m] = u(rng_) * in.instance->allocation_cap[m];
  }
  return x;
}

ResourceVector ReplayPredictor::Predict(const PredictorInput& in) {
  if (in.t >= decisions_.size()) {
    throw InputError("replay sequence shorter than the horizon");
  }
  return decisions_[in.t];
}

double MeanDemand(const std::vector<Instance>& instances) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Instance& inst : instances) {
    for (const Round& r : inst.rounds) {
      sum += r.utility.scale();
      ++n;
    }
  }
  return n > 0 && sum > 0.0 ? sum / static_cast<double>(n) : 1.0;
}

double MeanLaOacpUtility(const PolicyNet& net,
                         const std::vector<Instance>& instances,
                         const std::vector<Trace>& experts, double lambda,
                         double R) {
  NetPredictor pred(net);
  double sum = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const RobustnessConfig cfg =
        RobustnessConfig::For(instances[i], lambda, R);
    sum += RunLaOacp(instances[i], pred, experts[i], cfg).trace.total_utility;
  }
  return instances.empty() ? 0.0 : sum / static_cast<double>(instances.size());
}

PolicyNet Train(const std::vector<Instance>& dataset, const ExpertConfig& expert,
                double lambda, double R, const TrainConfig& tc,
                TrainReport* report) {
  if (dataset.empty()) throw InputError("training set is empty");
  if (tc.epochs < 0 || tc.batch_size < 1 || tc.population < 1 ||
      !(tc.sigma > 0.0) || !(tc.step > 0.0)) {
    throw InputError("invalid training configuration");
  }
  for (const Instance& inst : dataset) RequireSingleResource(inst);

  std::vector<Trace> experts;
  experts.reserve(dataset.size());
  for (const Instance& inst : dataset) experts.push_back(RunExpert(inst, expert));

  PolicyNet theta = PolicyNet::Zero(MeanDemand(dataset));
  theta.train_seed = tc.seed;
  const std::size_t n_params = theta.weights.size();

  const auto full_objective = [&](const PolicyNet& net) {
    const double v = MeanLaOacpUtility(net, dataset, experts, lambda, R);
    if (!std::isfinite(v)) throw ModelError("training objective diverged");
    return v;
  };

  PolicyNet best = theta;
  double best_value = full_objective(theta);
  TrainReport local;
  local.initial = best_value;

  std::mt19937_64 rng(tc.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t batch =
      std::min<std::size_t>(tc.batch_size, dataset.size());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<Instance> batch_inst;
  std::vector<Trace> batch_exp;
  std::vector<std::vector<double>> eps(tc.population,
                                       std::vector<double>(n_params));
  std::vector<double> fitness(2 * tc.population);
  PolicyNet probe = theta;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    // Minibatch drawn without replacement.
    for (std::size_t i = 0; i < batch; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    batch_inst.clear();
    batch_exp.clear();
    for (std::size_t i = 0; i < batch; ++i) {
      batch_inst.push_back(dataset[order[i]]);
      batch_exp.push_back(experts[order[i]]);
    }

    for (int p = 0; p < tc.population; ++p) {
      for (double& e : eps[p]) e = normal(rng);
      for (int sign = 0; sign < 2; ++sign) {
        const double s = sign == 0 ? tc.sigma : -tc.sigma;
        for (std::size_t k = 0; k < n_params; ++k) {
          probe.weights[k] = theta.weights[k] + s * eps[p][k];
        }
        const double f =
            MeanLaOacpUtility(probe, batch_inst, batch_exp, lambda, R);
        if (!std::isfinite(f)) throw ModelError("training objective diverged");
        fitness[2 * p + sign] = f;
      }
    }
    const std::vector<double> ranks = CenteredRanks(fitness);
    const double scale =
        tc.step / (static_cast<double>(2 * tc.population) * tc.sigma);
    for (int p = 0; p < tc.population; ++p) {
      const double w = ranks[2 * p] - ranks[2 * p + 1];
      for (std::size_t k = 0; k < n_params; ++k) {
        theta.weights[k] += scale * w * eps[p][k];
      }
    }

    const double value = full_objective(theta);
    local.epoch_mean.push_back(value);
    if (value > best_value) {
      best_value = value;
      best = theta;
    }
    local.best.push_back(best_value);
  }
  if (report) *report = std::move(local);
  return best;
}

void SaveModel(const PolicyNet& net, const std::string& path) {
  net.Validate();
  nlohmann::json j;
  j["schema_version"] = kModelSchemaVersion;
  j["feature_schema"] = kFeatureSchema;
  j["layers"] = net.layers;
  j["weights"] = net.weights;
  j["c_ref"] = net.c_ref;
  j["train_seed"] = net.train_seed;
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file " + path);
  // 17 significant digits make the round trip bit-exact.
  out << j.dump(1) << '\n';
  if (!out) throw ModelError("failed writing model file " + path);
}

PolicyNet LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("malformed model file " + path + ": " + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw ModelError("model schema version " + std::to_string(version) +
                       " is not supported (expected " +
                       std::to_string(kModelSchemaVersion) + ")");
    }
    if (j.at("feature_schema").get<std::string>() != kFeatureSchema) {
      throw ModelError("model feature schema does not match");
    }
    PolicyNet net;
    net.layers = j.at("layers").get<std::vector<int>>();
    net.weights = j.at("weights").get<std::vector<double>>();
    net.c_ref = j.at("c_ref").get<double>();
    net.train_seed = j.at("train_seed").get<std::uint64_t>();
    net.Validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("invalid model file " + path + ": " + e.what());
  }
}

}  // namespace oacp
