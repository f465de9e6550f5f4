#include "oacp/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oacp/baselines.h"
#include "oacp/harness.h"
#include "oacp/la_oacp.h"
#include "oacp/oacp.h"
#include "oacp/oacp_plus.h"
#include "oacp/oracle.h"
#include "oacp/predictor.h"
#include "oacp/workload.h"

namespace oacp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GenerateArgs {
  std::size_t n = 0;
  std::string out;
  std::string params_file;
  std::uint64_t seed = 1;
  GeneratorParams p;
  std::string utility = "log_serve";
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::uint64_t seed = 1;
  double lambda = 0.3;
  double R = 0.0;
  std::string expert = "oacp-plus";
  std::size_t t_star = 1;
  std::size_t limit = 0;
  TrainConfig tc;
};

struct RunArgs {
  std::string instance;
  std::string algo;
  std::string expert = "oacp-plus";
  double lambda = 0.3;
  double R = 0.0;
  std::string model;
  std::string predictor = "model";
  std::size_t t_star = 1;
  double beta = 0.0;
  double eta = 0.0;
  std::string reference = "l2";
  std::uint64_t seed = 1;
  std::string trace;
};

struct OptArgs {
  std::string instance;
  std::string method = "concave";
  int grid = 1001;
  std::uint64_t seed = 1;
  std::string decisions;
};

struct EvaluateArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int workers = -1;
};

struct ReportArgs {
  std::string summary;
  std::uint64_t seed = 1;
};

int DoGenerate(const GenerateArgs& a, std::ostream& out) {
  GeneratorParams p = a.p;
  if (!a.params_file.empty()) {
    std::ifstream in(a.params_file);
    if (!in) throw InputError("cannot open " + a.params_file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError("malformed " + a.params_file + ": " + e.what());
    }
    p = GeneratorParams::FromJson(j);
  }
  p.utility = ParseUtilityKind(a.utility);
  p.seed = a.seed;
  const Dataset ds = GenerateDataset(p, a.n);
  WriteDataset(ds, a.out);
  out << "wrote " << ds.size() << " instances to " << a.out << " (train "
      << ds.Indices(Split::kTrain).size() << ", validation "
      << ds.Indices(Split::kValidation).size() << ", test "
      << ds.Indices(Split::kTest).size() << ")\n";
  return kExitOk;
}

int DoTrain(const TrainArgs& a, std::ostream& out) {
  const Dataset ds = ReadDataset(a.data);
  std::vector<Instance> train = ds.Subset(Split::kTrain);
  if (a.limit > 0 && train.size() > a.limit) train.resize(a.limit);
  ExpertConfig expert;
  expert.kind = ParseExpertKind(a.expert);
  expert.oacp_plus.unit_length = a.t_star;
  TrainConfig tc = a.tc;
  tc.seed = a.seed;
  TrainReport report;
  const PolicyNet net = Train(train, expert, a.lambda, a.R, tc, &report);
  SaveModel(net, a.out);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "trained on %zu instances: objective %.6f -> %.6f\n",
                train.size(), report.initial,
                report.best.empty() ? report.initial : report.best.back());
  out << buf << "model written to " << a.out << "\n";
  return kExitOk;
}

int DoRun(const RunArgs& a, std::ostream& out) {
  const Instance inst = ReadInstanceCsv(a.instance);
  OacpConfig oc;
  oc.reference = ParseReferenceKind(a.reference);
  if (a.eta > 0.0) oc.eta = a.eta;
  OacpPlusConfig pc;
  pc.unit_length = a.t_star;
  pc.reference = oc.reference;
  if (a.beta > 0.0) pc.beta = ResourceVector(inst.num_resources, a.beta);
  if (a.eta > 0.0) pc.eta = a.eta;

  json result{{"algo", a.algo}};
  Trace trace;
  if (a.algo == "oacp") {
    trace = RunOacp(inst, oc).trace;
  } else if (a.algo == "oacp-plus") {
    OacpPlusRun run = RunOacpPlus(inst, pc);
    for (const std::string& d : run.diagnostics) result["diagnostics"].push_back(d);
    trace = std::move(run.trace);
  } else if (a.algo == "equal" || a.algo == "greedy" || a.algo == "dmd") {
    trace = RunBaseline(ParseBaselineKind(a.algo), inst, oc);
  } else if (a.algo == "ml" || a.algo == "la-oacp") {
    json params{{"predictor", a.predictor}};
    if (!a.model.empty()) params["model"] = a.model;
    AlgorithmRun spec{a.algo, a.algo, params, a.lambda, a.R};
    const ModelCache models = LoadModels({spec});
    std::unique_ptr<Predictor> pred;
    if (a.predictor == "model") {
      pred = std::make_unique<NetPredictor>(*models.at(a.model));
    } else if (a.predictor == "always-max") {
      pred = std::make_unique<AlwaysMaxPredictor>();
    } else if (a.predictor == "always-zero") {
      pred = std::make_unique<AlwaysZeroPredictor>();
    } else if (a.predictor == "uniform-random") {
      pred = std::make_unique<UniformRandomPredictor>(a.seed);
    } else {
      throw InputError("unknown predictor '" + a.predictor + "'");
    }
    if (a.algo == "ml") {
      trace = RunPredictorOnly(inst, *pred);
    } else {
      ExpertConfig ec;
      ec.kind = ParseExpertKind(a.expert);
      ec.oacp = oc;
      ec.oacp_plus = pc;
      const LaOacpRun run = RunLaOacp(inst, *pred, ec,
                                      RobustnessConfig::For(inst, a.lambda, a.R));
      std::size_t fallbacks = 0;
      for (const LaOacpRound& r : run.rounds) fallbacks += r.used_fallback;
      result["expert_F_T"] = run.expert.total_utility;
      result["fallback_rounds"] = fallbacks;
      result["lambda"] = a.lambda;
      result["R"] = a.R;
      trace = run.trace;
    }
  } else {
    throw InputError("unknown algorithm '" + a.algo + "'");
  }
  result["F_T"] = trace.total_utility;
  out << result.dump() << "\n";
  if (!a.trace.empty()) WriteTraceCsv(trace, a.trace);
  return kExitOk;
}

int DoOpt(const OptArgs& a, std::ostream& out) {
  const Instance inst = ReadInstanceCsv(a.instance);
  OptResult r;
  if (a.method == "concave") {
    r = SolveOptConcave(inst);
  } else if (a.method == "dp") {
    r = SolveOptDp(inst, a.grid);
  } else {
    throw InputError("unknown method '" + a.method + "' (expected concave|dp)");
  }
  json result{{"method", a.method},
              {"OPT", r.value},
              {"iterations", r.iterations},
              {"residual", r.residual},
              {"converged", r.converged}};
  if (a.method == "dp") result["upper"] = r.upper;
  out << result.dump() << "\n";
  if (!a.decisions.empty()) {
    std::ofstream f(a.decisions);
    if (!f) throw InputError("cannot write " + a.decisions);
    f << "t,x\n";
    char buf[64];
    for (std::size_t t = 0; t < r.decisions.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", t + 1, r.decisions[t][0]);
      f << buf;
    }
  }
  return kExitOk;
}

int DoEvaluate(const EvaluateArgs& a, std::ostream& out) {
  ExperimentConfig cfg = ExperimentConfig::Load(a.config);
  if (a.seed != 0) cfg.seed = a.seed;
  if (!a.out.empty()) cfg.out = a.out;
  if (a.workers >= 0) cfg.workers = a.workers;
  const MetricsReport report = EvaluateSuite(cfg);
  out << SummaryJson(cfg, report).dump(2) << "\n";
  return kExitOk;
}

int DoReport(const ReportArgs& a, std::ostream& out) {
  fs::path path(a.summary);
  if (fs::is_directory(path)) path /= "summary.json";
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("malformed " + path.string() + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kSummarySchemaVersion) {
    throw InputError("unsupported summary schema version");
  }
  char buf[200];
  for (const char* suite : {"test", "ood"}) {
    out << "[" << suite << "]\n";
    std::snprintf(buf, sizeof(buf), "%-32s %8s %8s %8s %10s\n", "algorithm",
                  "AVG", "CR", "n", "violation");
    out << buf;
    for (const json& m : j.at(suite)) {
      const json& v = m.at("violation_rate");
      const double rate = v.empty() ? 0.0 : v.front().at("rate").get<double>();
      std::snprintf(buf, sizeof(buf), "%-32s %8.4f %8.4f %8zu %10.4f\n",
                    m.at("algo").get<std::string>().c_str(),
                    m.at("avg").get<double>(), m.at("cr_emp").get<double>(),
                    m.at("count").get<std::size_t>(), rate);
      out << buf;
    }
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Online allocation with replenishable budgets", "oacp"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* g = app.add_subcommand("generate", "Generate a synthetic dataset");
  g->add_option("--n", gen.n, "Number of instances")->required();
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--params", gen.params_file,
                "JSON file of generator parameters (overrides the flags below)");
  g->add_option("--T", gen.p.T, "Rounds per instance");
  g->add_option("--B1", gen.p.B1, "Initial budget");
  g->add_option("--Bmax", gen.p.Bmax, "Storage capacity");
  g->add_option("--xbar", gen.p.xbar, "Per-round allocation cap");
  g->add_option("--utility", gen.utility, "log_serve | linear");
  g->add_option("--demand-base", gen.p.demand_base, "Mean demand level");
  g->add_option("--solar-amplitude", gen.p.solar_amplitude,
                "Peak replenishment per round");
  g->add_option("--overcast", gen.p.overcast_day,
                "Per-day probability of an overcast day");
  g->add_option("--drought-start", gen.p.drought_start,
                "0-based round from which replenishment stops (0 = never)");
  g->add_option("--test-fraction", gen.p.test_fraction, "Test split share");

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "Train the ML policy with ES");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Model file to write")->required();
  t->add_option("--seed", tr.seed, "Training seed");
  t->add_option("--lambda", tr.lambda, "Robustness level");
  t->add_option("--R", tr.R, "Robustness slack");
  t->add_option("--expert", tr.expert, "oacp | oacp-plus");
  t->add_option("--t-star", tr.t_star, "Unit frame length of OACP+");
  t->add_option("--limit", tr.limit, "Use at most this many training instances");
  t->add_option("--epochs", tr.tc.epochs, "ES epochs");
  t->add_option("--batch", tr.tc.batch_size, "Minibatch size");
  t->add_option("--population", tr.tc.population, "Antithetic pairs per epoch");
  t->add_option("--sigma", tr.tc.sigma, "Perturbation scale");
  t->add_option("--step", tr.tc.step, "Step size");

  RunArgs run;
  CLI::App* r = app.add_subcommand("run", "Run one algorithm on one instance");
  r->add_option("--instance", run.instance, "Instance CSV")->required();
  r->add_option("--algo", run.algo,
                "oacp | oacp-plus | equal | greedy | dmd | ml | la-oacp")
      ->required();
  r->add_option("--expert", run.expert, "Expert inside LA-OACP");
  r->add_option("--lambda", run.lambda, "Robustness level");
  r->add_option("--R", run.R, "Robustness slack");
  r->add_option("--model", run.model, "Model file for ml / la-oacp");
  r->add_option("--predictor", run.predictor,
                "model | always-max | always-zero | uniform-random");
  r->add_option("--t-star", run.t_star, "Unit frame length of OACP+");
  r->add_option("--beta", run.beta, "OACP+ beta (default: optimal)");
  r->add_option("--eta", run.eta, "Learning rate (default: from the bound)");
  r->add_option("--reference", run.reference, "l2 | entropy");
  r->add_option("--seed", run.seed, "Seed of the random predictor");
  r->add_option("--trace", run.trace, "Write the round-by-round trace here");

  OptArgs opt;
  CLI::App* o = app.add_subcommand("opt", "Offline optimum of one instance");
  o->add_option("--instance", opt.instance, "Instance CSV")->required();
  o->add_option("--method", opt.method, "concave | dp");
  o->add_option("--grid", opt.grid, "DP budget levels");
  o->add_option("--seed", opt.seed, "Unused; accepted for uniformity");
  o->add_option("--decisions", opt.decisions, "Write the optimal x_t here");

  EvaluateArgs ev;
  CLI::App* e = app.add_subcommand("evaluate", "Run an experiment config");
  e->add_option("--config", ev.config, "Experiment JSON")->required();
  e->add_option("--seed", ev.seed, "Override the config seed");
  e->add_option("--out", ev.out, "Override the output directory");
  e->add_option("--workers", ev.workers, "Worker threads (0 = all cores)");

  ReportArgs rep;
  CLI::App* p = app.add_subcommand("report", "Print a summary table");
  p->add_option("--summary", rep.summary, "summary.json or its directory")
      ->required();
  p->add_option("--seed", rep.seed, "Unused; accepted for uniformity");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    CLI::App* sub = app.get_subcommands().empty() ? &app
                                                  : app.get_subcommands()[0];
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*g) return DoGenerate(gen, out);
    if (*t) return DoTrain(tr, out);
    if (*r) return DoRun(run, out);
    if (*o) return DoOpt(opt, out);
    if (*e) return DoEvaluate(ev, out);
    if (*p) return DoReport(rep, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace oacp
