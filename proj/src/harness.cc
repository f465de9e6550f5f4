#include "oacp/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "oacp/baselines.h"
#include "oacp/oacp.h"
#include "oacp/oacp_plus.h"
#include "oacp/oracle.h"

namespace oacp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& KnownAlgorithms() {
  static const std::set<std::string> names{
      "opt", "equal", "greedy", "dmd", "oacp", "oacp-plus", "ml", "la-oacp"};
  return names;
}

bool NeedsModel(const AlgorithmRun& run) {
  if (run.name == "ml") return true;
  if (run.name != "la-oacp") return false;
  return run.params.value("predictor", std::string("model")) == "model";
}

std::string Resolve(const std::string& base, const std::string& path) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

OacpConfig OacpFromParams(const json& p) {
  OacpConfig c;
  if (p.contains("eta")) c.eta = p.at("eta").get<double>();
  if (p.contains("reference")) {
    c.reference = ParseReferenceKind(p.at("reference").get<std::string>());
  }
  c.record_diagnostics = false;
  return c;
}

OacpPlusConfig OacpPlusFromParams(const json& p, std::size_t num_resources) {
  OacpPlusConfig c;
  if (p.contains("t_star")) c.unit_length = p.at("t_star").get<std::size_t>();
  if (p.contains("beta")) {
    c.beta = ResourceVector(num_resources, p.at("beta").get<double>());
  }
  if (p.contains("eta")) c.eta = p.at("eta").get<double>();
  if (p.contains("reference")) {
    c.reference = ParseReferenceKind(p.at("reference").get<std::string>());
  }
  c.record_diagnostics = false;
  return c;
}

ExpertConfig ExpertFor(const Instance& inst, const ExpertConfig& base) {
  ExpertConfig e = base;
  // beta given as a scalar in JSON is stored with one entry; widen it.
  if (e.oacp_plus.beta && e.oacp_plus.beta->size() != inst.num_resources) {
    e.oacp_plus.beta =
        ResourceVector(inst.num_resources, (*e.oacp_plus.beta)[0]);
  }
  return e;
}

std::uint64_t TaskSeed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x7a5cu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::unique_ptr<Predictor> MakePredictor(const AlgorithmRun& run,
                                         const ModelCache& models,
                                         std::uint64_t seed) {
  const std::string kind = run.params.value("predictor", std::string("model"));
  if (kind == "model") {
    const std::string path = run.params.at("model").get<std::string>();
    auto it = models.find(path);
    if (it == models.end()) throw ConfigError("model not loaded: " + path);
    return std::make_unique<NetPredictor>(*it->second);
  }
  if (kind == "always-max") return std::make_unique<AlwaysMaxPredictor>();
  if (kind == "always-zero") return std::make_unique<AlwaysZeroPredictor>();
  if (kind == "uniform-random") {
    return std::make_unique<UniformRandomPredictor>(seed);
  }
  throw ConfigError("unknown predictor '" + kind + "'");
}

Trace RunOne(const Instance& inst, const AlgorithmRun& run,
             const ModelCache& models,
             const Trace& expert, double opt, std::uint64_t seed) {
  const json& p = run.params;
  if (run.name == "opt") {
    Trace t;
    t.algorithm = "opt";
    t.total_utility = opt;
    return t;
  }
  if (run.name == "equal" || run.name == "greedy" || run.name == "dmd") {
    return RunBaseline(ParseBaselineKind(run.name), inst, OacpFromParams(p));
  }
  if (run.name == "oacp") return RunOacp(inst, OacpFromParams(p)).trace;
  if (run.name == "oacp-plus") {
    return RunOacpPlus(inst, OacpPlusFromParams(p, inst.num_resources)).trace;
  }
  auto predictor = MakePredictor(run, models, seed);
  if (run.name == "ml") return RunPredictorOnly(inst, *predictor);
  const RobustnessConfig rc = RobustnessConfig::For(inst, run.lambda, run.R);
  if (p.contains("expert")) {
    const ExpertConfig e = ExpertFor(inst, ParseExpertJson(p.at("expert")));
    return RunLaOacp(inst, *predictor, e, rc).trace;
  }
  return RunLaOacp(inst, *predictor, expert, rc).trace;
}

bool Violates(double f, double expert, double lambda, double R) {
  return f < lambda * expert - R - 1e-9;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& fn) {
  std::size_t w = workers > 0 ? static_cast<std::size_t>(workers)
                              : std::max(1u, std::thread::hardware_concurrency());
  w = std::min(w, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ExpertConfig ParseExpertJson(const json& j) {
  ExpertConfig e;
  if (j.is_string()) {
    e.kind = ParseExpertKind(j.get<std::string>());
    return e;
  }
  e.kind = ParseExpertKind(j.value("name", std::string("oacp-plus")));
  e.oacp = OacpFromParams(j);
  e.oacp_plus = OacpPlusFromParams(j, 1);
  return e;
}

ExperimentConfig ExperimentConfig::FromJson(const json& j,
                                            const std::string& base_dir) {
  ExperimentConfig c;
  try {
    c.dataset = Resolve(base_dir, j.at("dataset").get<std::string>());
    for (const json& a : j.at("algorithms")) {
      AlgorithmSpec spec;
      if (a.is_string()) {
        spec.name = a.get<std::string>();
      } else {
        spec.name = a.at("name").get<std::string>();
        if (a.contains("params")) spec.params = a.at("params");
      }
      if (spec.params.contains("model")) {
        spec.params["model"] =
            Resolve(base_dir, spec.params["model"].get<std::string>());
      }
      c.algorithms.push_back(std::move(spec));
    }
    if (j.contains("lambda_grid")) {
      c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    }
    if (j.contains("R_grid")) c.R_grid = j.at("R_grid").get<std::vector<double>>();
    c.seed = j.value("seed", c.seed);
    c.out = Resolve(base_dir, j.value("out", std::string()));
    if (j.contains("expert")) c.expert = ParseExpertJson(j.at("expert"));
    c.ood_fraction = j.value("ood_fraction", c.ood_fraction);
    c.ood_sigma = j.value("ood_sigma", c.ood_sigma);
    c.dp_check_fraction = j.value("dp_check_fraction", c.dp_check_fraction);
    c.dp_check_rounds = j.value("dp_check_rounds", c.dp_check_rounds);
    c.dp_check_levels = j.value("dp_check_levels", c.dp_check_levels);
    c.write_traces = j.value("traces", c.write_traces);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config file " + path + ": " + e.what());
  }
  return FromJson(j, fs::path(path).parent_path().string());
}

void ExperimentConfig::Validate() const {
  if (dataset.empty() || !fs::is_directory(dataset)) {
    throw ConfigError("dataset directory not found: " + dataset);
  }
  if (algorithms.empty()) throw ConfigError("no algorithms configured");
  for (const AlgorithmSpec& a : algorithms) {
    if (!KnownAlgorithms().count(a.name)) {
      throw ConfigError("unknown algorithm '" + a.name + "'");
    }
  }
  if (lambda_grid.empty() || R_grid.empty()) {
    throw ConfigError("lambda_grid and R_grid must be non-empty");
  }
  for (double l : lambda_grid) {
    if (!(l > 0.0 && l <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  }
  for (double r : R_grid) {
    if (!(r >= 0.0)) throw ConfigError("R must be non-negative");
  }
  if (!(ood_fraction >= 0.0 && ood_fraction <= 1.0) || !(ood_sigma >= 0.0)) {
    throw ConfigError("bad OOD settings");
  }
  if (!(dp_check_fraction >= 0.0 && dp_check_fraction <= 1.0)) {
    throw ConfigError("dp_check_fraction must lie in [0, 1]");
  }
  for (const AlgorithmRun& run : ExpandAlgorithms(*this)) {
    if (!NeedsModel(run)) continue;
    if (!run.params.contains("model")) {
      throw ConfigError(run.label + " needs a \"model\" parameter");
    }
    const std::string path = run.params.at("model").get<std::string>();
    if (!fs::is_regular_file(path)) {
      throw ConfigError("model file not found: " + path);
    }
  }
}

std::vector<AlgorithmRun> ExpandAlgorithms(const ExperimentConfig& cfg) {
  std::vector<AlgorithmRun> runs;
  for (const AlgorithmSpec& a : cfg.algorithms) {
    std::string label = a.params.value("label", a.name);
    if (a.name != "la-oacp") {
      runs.push_back({label, a.name, a.params});
      continue;
    }
    std::vector<double> lambdas = cfg.lambda_grid;
    std::vector<double> Rs = cfg.R_grid;
    if (a.params.contains("lambda")) lambdas = {a.params.at("lambda").get<double>()};
    if (a.params.contains("R")) Rs = {a.params.at("R").get<double>()};
    for (double l : lambdas) {
      for (double r : Rs) {
        runs.push_back({label + "[lambda=" + FormatNumber(l) +
                            ",R=" + FormatNumber(r) + "]",
                        a.name, a.params, l, r});
      }
    }
  }
  std::set<std::string> seen;
  for (const AlgorithmRun& r : runs) {
    if (!seen.insert(r.label).second) {
      throw ConfigError("duplicate algorithm label '" + r.label + "'");
    }
  }
  return runs;
}

ModelCache LoadModels(const std::vector<AlgorithmRun>& runs) {
  ModelCache cache;
  for (const AlgorithmRun& run : runs) {
    if (!NeedsModel(run)) continue;
    if (!run.params.contains("model")) {
      throw ConfigError(run.label + " needs a \"model\" parameter");
    }
    const std::string path = run.params.at("model").get<std::string>();
    if (cache.count(path)) continue;
    if (!fs::is_regular_file(path)) {
      throw ConfigError("model file not found: " + path);
    }
    cache[path] = std::make_shared<const PolicyNet>(LoadModel(path));
  }
  return cache;
}

const AlgorithmMetrics& SuiteMetrics::Get(const std::string& label) const {
  for (const AlgorithmMetrics& m : algorithms) {
    if (m.algo == label) return m;
  }
  throw InputError("no metrics for '" + label + "'");
}

std::vector<double> ComputeOpt(const std::vector<Instance>& instances,
                               int workers) {
  std::vector<double> opt(instances.size());
  ParallelFor(instances.size(), workers, [&](std::size_t i) {
    opt[i] = SolveOptConcave(instances[i]).value;
  });
  return opt;
}

SuiteMetrics EvaluateInstances(
    const std::vector<Instance>& instances, const std::vector<std::string>& ids,
    const std::vector<bool>& ood, const std::vector<double>& opt,
    const std::vector<AlgorithmRun>& runs, const ExperimentConfig& cfg,
    const ModelCache& models,
    std::map<std::string, std::vector<Trace>>* traces) {
  const std::size_t n = instances.size();
  if (ids.size() != n || ood.size() != n || opt.size() != n) {
    throw InputError("instance, id, OOD and OPT lists differ in length");
  }
  const std::size_t a = runs.size();
  std::vector<double> utility(n * a);
  std::vector<double> expert_utility(n);
  if (traces) {
    for (const AlgorithmRun& r : runs) (*traces)[r.label].assign(n, Trace{});
  }

  ParallelFor(n, cfg.workers, [&](std::size_t i) {
    const Instance& inst = instances[i];
    const Trace expert = RunExpert(inst, ExpertFor(inst, cfg.expert));
    expert_utility[i] = expert.total_utility;
    for (std::size_t k = 0; k < a; ++k) {
      Trace t = RunOne(inst, runs[k], models, expert, opt[i],
                       TaskSeed(cfg.seed, i * a + k));
      utility[i * a + k] = t.total_utility;
      if (traces) (*traces)[runs[k].label][i] = std::move(t);
    }
  });

  SuiteMetrics suite;
  for (std::size_t k = 0; k < a; ++k) {
    const AlgorithmRun& run = runs[k];
    AlgorithmMetrics m;
    m.algo = run.label;
    m.count = n;
    double sum_f = 0.0, sum_opt = 0.0, sum_ratio = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = utility[i * a + k];
      const double ratio = opt[i] > 0.0 ? f / opt[i] : 1.0;
      sum_f += f;
      sum_opt += opt[i];
      sum_ratio += ratio;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      const bool is_la = run.name == "la-oacp";
      const double lam = is_la ? run.lambda : cfg.lambda_grid.front();
      const double r = is_la ? run.R : cfg.R_grid.front();
      suite.rows.push_back({ids[i], run.label, f, opt[i], ratio,
                            Violates(f, expert_utility[i], lam, r), ood[i]});
    }
    if (n > 0) {
      m.avg = sum_opt > 0.0 ? sum_f / sum_opt : 1.0;
      m.avg_of_ratios = sum_ratio / static_cast<double>(n);
      m.cr_emp = lo;
      m.max_ratio = hi;
    }
    for (double lam : cfg.lambda_grid) {
      for (double r : cfg.R_grid) {
        std::size_t bad = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (Violates(utility[i * a + k], expert_utility[i], lam, r)) ++bad;
        }
        m.violation.push_back(
            {lam, r, n > 0 ? static_cast<double>(bad) / n : 0.0});
      }
    }
    suite.algorithms.push_back(std::move(m));
  }
  std::stable_sort(suite.rows.begin(), suite.rows.end(),
                   [](const InstanceResult& x, const InstanceResult& y) {
                     if (x.instance_id != y.instance_id) {
                       return x.instance_id < y.instance_id;
                     }
                     return x.algo < y.algo;
                   });
  return suite;
}

DpCheck CrossCheckOpt(const std::vector<Instance>& instances, double fraction,
                      std::size_t rounds, int levels, std::uint64_t seed) {
  DpCheck check;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].num_resources == 1) eligible.push_back(i);
  }
  if (eligible.empty() || fraction <= 0.0) return check;
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * eligible.size())));
  std::mt19937_64 rng(seed ^ 0xd1bu);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(std::min(k, eligible.size()));
  std::sort(eligible.begin(), eligible.end());
  for (std::size_t i : eligible) {
    Instance prefix = instances[i];
    if (prefix.rounds.size() > rounds) {
      prefix.rounds.erase(prefix.rounds.begin() + rounds, prefix.rounds.end());
    }
    const double concave = SolveOptConcave(prefix).value;
    const double dp = SolveOptDp(prefix, levels).value;
    check.max_abs_diff = std::max(check.max_abs_diff, std::abs(concave - dp));
    ++check.count;
  }
  return check;
}

MetricsReport EvaluateSuite(const ExperimentConfig& cfg) {
  cfg.Validate();
  const Dataset ds = ReadDataset(cfg.dataset);
  const std::vector<AlgorithmRun> runs = ExpandAlgorithms(cfg);
  const ModelCache models = LoadModels(runs);

  const std::vector<std::size_t> test_idx = ds.Indices(Split::kTest);
  if (test_idx.empty()) throw ConfigError("dataset has an empty test split");
  Dataset clean = ds;
  std::fill(clean.ood.begin(), clean.ood.end(), false);
  const Dataset shifted =
      PerturbOod(clean, cfg.ood_fraction, cfg.ood_sigma, cfg.seed);

  std::vector<Instance> test, test_ood;
  std::vector<std::string> ids;
  std::vector<bool> no_flags, flags;
  for (std::size_t i : test_idx) {
    test.push_back(clean.instances[i]);
    test_ood.push_back(shifted.instances[i]);
    ids.push_back(ds.ids[i]);
    no_flags.push_back(false);
    flags.push_back(shifted.ood[i]);
  }

  std::map<std::string, std::vector<Trace>> traces_test, traces_ood;
  const bool keep = cfg.write_traces && !cfg.out.empty();
  MetricsReport report;
  report.test = EvaluateInstances(test, ids, no_flags,
                                  ComputeOpt(test, cfg.workers), runs, cfg,
                                  models, keep ? &traces_test : nullptr);
  report.ood = EvaluateInstances(test_ood, ids, flags,
                                 ComputeOpt(test_ood, cfg.workers), runs, cfg,
                                 models, keep ? &traces_ood : nullptr);
  report.dp_check = CrossCheckOpt(test, cfg.dp_check_fraction,
                                  cfg.dp_check_rounds, cfg.dp_check_levels,
                                  cfg.seed);

  if (!cfg.out.empty()) {
    WriteReport(cfg, report);
    if (keep) {
      for (const auto& [suite, traces] :
           {std::pair{"test", &traces_test}, std::pair{"ood", &traces_ood}}) {
        for (const auto& [label, list] : *traces) {
          if (label == "opt") continue;
          const fs::path dir = fs::path(cfg.out) / "traces" / suite / label;
          fs::create_directories(dir);
          for (std::size_t i = 0; i < list.size(); ++i) {
            if (std::string(suite) == "ood" && !flags[i]) continue;
            WriteTraceCsv(list[i], (dir / (ids[i] + ".csv")).string());
          }
        }
      }
    }
  }
  return report;
}

json SuiteJson(const SuiteMetrics& suite) {
  json algos = json::array();
  for (const AlgorithmMetrics& m : suite.algorithms) {
    json v = json::array();
    for (const ViolationPoint& p : m.violation) {
      v.push_back({{"lambda", p.lambda}, {"R", p.R}, {"rate", p.rate}});
    }
    algos.push_back({{"algo", m.algo},
                     {"count", m.count},
                     {"avg", m.avg},
                     {"avg_of_ratios", m.avg_of_ratios},
                     {"cr_emp", m.cr_emp},
                     {"max_ratio", m.max_ratio},
                     {"violation_rate", v}});
  }
  return algos;
}

json SummaryJson(const ExperimentConfig& cfg, const MetricsReport& report) {
  json algos = json::array();
  for (const AlgorithmSpec& a : cfg.algorithms) {
    algos.push_back({{"name", a.name}, {"params", a.params}});
  }
  return json{{"schema_version", kSummarySchemaVersion},
              {"seed", cfg.seed},
              {"algorithms", algos},
              {"lambda_grid", cfg.lambda_grid},
              {"R_grid", cfg.R_grid},
              {"ood_fraction", cfg.ood_fraction},
              {"ood_sigma", cfg.ood_sigma},
              {"test", SuiteJson(report.test)},
              {"ood", SuiteJson(report.ood)},
              {"dp_check",
               {{"count", report.dp_check.count},
                {"max_abs_diff", report.dp_check.max_abs_diff}}}};
}

void WriteReport(const ExperimentConfig& cfg, const MetricsReport& report) {
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  WriteText(dir / "summary.json", SummaryJson(cfg, report).dump(2) + "\n");

  std::string csv = "instance_id,algo,F_T,OPT,ratio,violated,ood_flag\n";
  char buf[160];
  const auto emit = [&](const InstanceResult& r) {
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%d,%d\n", r.F_T, r.opt,
                  r.ratio, r.violated ? 1 : 0, r.ood ? 1 : 0);
    csv += r.instance_id + "," + r.algo + buf;
  };
  for (const InstanceResult& r : report.test.rows) emit(r);
  for (const InstanceResult& r : report.ood.rows) {
    if (r.ood) emit(r);
  }
  WriteText(dir / "per_instance.csv", csv);
}

void WriteTraceCsv(const Trace& trace, const std::string& path) {
  std::string out = "t,x,utility,budget,replenished\n";
  char buf[160];
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const RoundRecord& r = trace.rounds[t];
    const auto first = [](const ResourceVector& v) {
      return v.empty() ? 0.0 : v[0];
    };
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", t + 1,
                  first(r.x), r.utility, first(r.budget), first(r.replenished));
    out += buf;
  }
  WriteText(path, out);
}

}  // namespace oacp
