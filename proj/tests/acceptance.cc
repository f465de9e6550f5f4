// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Artifacts land in the directory given as the
// first argument (default ./acceptance_out).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oacp/baselines.h"
#include "oacp/harness.h"
#include "oacp/la_oacp.h"
#include "oacp/oacp.h"
#include "oacp/oacp_plus.h"
#include "oacp/oracle.h"
#include "oacp/predictor.h"
#include "oacp/workload.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oacp;

constexpr std::size_t kGoldenN = 400;
constexpr std::size_t kTrainInstances = 64;
constexpr double kGoldenLambda = 0.3;
constexpr const char* kLaLabel = "la-oacp[lambda=0.3,R=0]";

struct Outcome {
  bool pass = false;
  std::string detail;
  json summary = json::object();
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

std::string Fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Everything one pass over the criteria shares: the golden dataset on disk
// and the model trained on it.
class Context {
 public:
  explicit Context(fs::path dir) : dir_(std::move(dir)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  const Dataset& Golden() {
    if (!golden_) {
      golden_ = GenerateDataset(GeneratorParams{}, kGoldenN);
      WriteDataset(*golden_, (dir_ / "golden").string());
    }
    return *golden_;
  }

  // Trains once per pass on the first 64 training instances.
  void EnsureModel() {
    if (model_) return;
    const Dataset& ds = Golden();
    std::vector<Instance> train;
    for (std::size_t i : ds.Indices(Split::kTrain)) {
      if (train.size() == kTrainInstances) break;
      train.push_back(ds.instances[i]);
    }
    TrainConfig tc;  // 100 epochs, batch 20, 8 antithetic pairs, seed 1
    const auto start = std::chrono::steady_clock::now();
    model_ = Train(train, ExpertConfig{}, kGoldenLambda, 0.0, tc, &report_);
    train_seconds_ = Seconds(start);
    SaveModel(*model_, ModelPath());
  }

  const PolicyNet& Model() {
    EnsureModel();
    return *model_;
  }
  const TrainReport& Report() {
    EnsureModel();
    return report_;
  }
  double TrainSeconds() const { return train_seconds_; }
  std::string ModelPath() const { return (dir_ / "model.json").string(); }

  // Golden-suite evaluation, shared by criteria 7 and 8.
  const MetricsReport& GoldenReport() {
    if (!golden_report_) {
      Golden();
      EnsureModel();
      json j;
      j["dataset"] = "golden";
      j["out"] = "golden_eval";
      j["seed"] = 1;
      j["lambda_grid"] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
      j["R_grid"] = {0.0};
      j["algorithms"] = json::array(
          {"equal", "greedy", "dmd", "oacp", "oacp-plus",
           {{"name", "ml"}, {"params", {{"model", "model.json"}}}},
           {{"name", "la-oacp"},
            {"params", {{"model", "model.json"}, {"lambda", kGoldenLambda},
                        {"R", 0.0}}}}});
      const ExperimentConfig cfg = ExperimentConfig::FromJson(j, dir_.string());
      cfg.Validate();
      golden_report_ = EvaluateSuite(cfg);
    }
    return *golden_report_;
  }

 private:
  fs::path dir_;
  std::optional<Dataset> golden_;
  std::optional<PolicyNet> model_;
  TrainReport report_;
  double train_seconds_ = 0.0;
  std::optional<MetricsReport> golden_report_;
};

// 1. Per-instance competitive bound of OACP.
Outcome Criterion1(Context&) {
  const auto start = std::chrono::steady_clock::now();
  std::size_t held = 0, linear = 0, dry = 0, with_violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  json rows = json::array();
  for (std::size_t i = 0; i < 200; ++i) {
    GeneratorParams gp;
    gp.T = 100;
    gp.B1 = 10.0;
    gp.Bmax = 25.0;
    gp.seed = 101;
    if (i % 2 == 1) {
      gp.utility = UtilityKind::kLinear;
      ++linear;
    }
    if (i % 4 >= 2) {
      gp.solar_amplitude = 0.0;
      gp.solar_noise = 0.0;
      ++dry;
    }
    const Instance inst = GenerateInstance(gp, i);
    const OacpRun run = RunOacp(inst, OacpConfig{});
    const double opt = SolveOptConcave(inst).value;
    const CompetitiveBound b = EvaluateOacpBound(inst, run, opt);
    if (b.Holds(1e-6)) ++held;
    if (!run.theorem_mu.violation_rounds.empty()) ++with_violations;
    worst_slack = std::min(worst_slack, b.rhs - b.lhs);
    rows.push_back({b.lhs, b.rhs});
  }
  const double secs = Seconds(start);
  Outcome o;
  o.pass = held == 200 && secs < 120.0;
  o.detail = std::to_string(held) + "/200 bounds hold (" +
             std::to_string(linear) + " linear, " + std::to_string(dry) +
             " without replenishment, " + std::to_string(with_violations) +
             " with skipped rounds); min rhs-lhs " +
             Fmt("%.4g", worst_slack) + "; " + Fmt("%.1fs", secs);
  o.summary = {{"held", held}, {"min_slack", worst_slack}, {"bounds", rows}};
  return o;
}

// 2. Concave solver vs DP.
Outcome Criterion2(Context&) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  json rows = json::array();
  for (std::size_t i = 0; i < 50; ++i) {
    GeneratorParams gp;
    gp.T = 2 + i % 5;
    gp.B1 = 0.5;
    gp.Bmax = 1.5;
    gp.start_hour = static_cast<int>((5 * i) % 24);
    gp.utility = i % 3 == 0 ? UtilityKind::kLinear : UtilityKind::kLogServe;
    gp.seed = 202;
    const Instance inst = GenerateInstance(gp, i);
    const double cc = SolveOptConcave(inst).value;
    const double dp = SolveOptDp(inst, 1001).value;
    worst = std::max(worst, std::abs(cc - dp));
    rows.push_back({cc, dp});
  }
  const double secs = Seconds(start);
  Outcome o;
  o.pass = worst <= 1e-2 && secs < 60.0;
  o.detail = "max |concave - DP| = " + Fmt("%.3g", worst) + " over 50; " +
             Fmt("%.1fs", secs);
  o.summary = {{"max_abs_diff", worst}, {"values", rows}};
  return o;
}

// 3. Robustness of LA-OACP for any predictor.
Outcome Criterion3(Context& ctx) {
  const PolicyNet& net = ctx.Model();
  const auto start = std::chrono::steady_clock::now();
  std::size_t runs = 0, final_ok = 0, round_ok = 0;
  double min_final = std::numeric_limits<double>::infinity();
  double min_margin = std::numeric_limits<double>::infinity();
  double min_fallback = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 1000; ++i) {
    GeneratorParams gp;
    gp.seed = 303;
    if (i % 2 == 1) gp.utility = UtilityKind::kLinear;
    const Instance inst = GenerateInstance(gp, i);
    const Trace expert = RunExpert(inst, ExpertConfig{});
    AlwaysMaxPredictor always_max;
    AlwaysZeroPredictor always_zero;
    UniformRandomPredictor uniform(1000 + i);
    NetPredictor trained(net);
    for (Predictor* p : std::initializer_list<Predictor*>{
             &always_max, &always_zero, &uniform, &trained}) {
      for (double lambda : {0.3, 0.6, 1.0}) {
        for (double R : {0.0, 1.0}) {
          const LaOacpRun run = RunLaOacp(
              inst, *p, expert, RobustnessConfig::For(inst, lambda, R));
          ++runs;
          const double slack =
              run.trace.total_utility - (lambda * expert.total_utility - R);
          min_final = std::min(min_final, slack);
          if (slack >= -1e-9) ++final_ok;
          bool every_round = true;
          for (const LaOacpRound& r : run.rounds) {
            min_margin = std::min(min_margin, r.margin);
            min_fallback = std::min(min_fallback, r.fallback_margin);
            if (r.margin < -1e-9 || r.fallback_margin < -1e-9) {
              every_round = false;
            }
          }
          if (every_round) ++round_ok;
        }
      }
    }
  }
  const double secs = Seconds(start);
  Outcome o;
  o.pass = final_ok == runs && round_ok == runs && secs < 300.0;
  o.detail = std::to_string(final_ok) + "/" + std::to_string(runs) +
             " runs meet F_T >= lambda F_T(expert) - R, " +
             std::to_string(round_ok) + "/" + std::to_string(runs) +
             " keep every round's margin and fallback margin >= 0; min final "
             "slack " + Fmt("%.4g", min_final) + "; " + Fmt("%.1fs", secs);
  o.summary = {{"runs", runs},
               {"final_ok", final_ok},
               {"round_ok", round_ok},
               {"min_final_slack", min_final},
               {"min_margin", min_margin},
               {"min_fallback_margin", min_fallback}};
  return o;
}

// 4. Additive frame budgets never fall below the replenishment-implied bound.
Outcome Criterion4(Context& ctx) {
  std::size_t runs = 0, ok = 0;
  double worst = -std::numeric_limits<double>::infinity();
  const auto check = [&](const Instance& inst, std::size_t t_star) {
    OacpPlusConfig pc;
    pc.unit_length = t_star;
    const OacpPlusRun run = RunOacpPlus(inst, pc);
    const double s =
        LowerBoundShortfall(inst, run, MinReplenishment(inst, t_star));
    worst = std::max(worst, s);
    ++runs;
    if (s <= 1e-9) ++ok;
  };
  for (const Instance& inst : ctx.Golden().instances) {
    for (std::size_t t_star : {1, 12, 24}) check(inst, t_star);
  }
  GeneratorParams rich;
  rich.solar_amplitude = 2.0;
  rich.demand_base = 0.6;
  rich.drought_start = 48;
  for (std::size_t i = 0; i < 200; ++i) {
    const Instance inst = GenerateInstance(rich, i);
    for (std::size_t t_star : {1, 24}) check(inst, t_star);
  }
  GeneratorParams linear;
  linear.utility = UtilityKind::kLinear;
  linear.seed = 303;
  for (std::size_t i = 0; i < 200; ++i) check(GenerateInstance(linear, i), 24);
  Outcome o;
  o.pass = ok == runs;
  o.detail = std::to_string(ok) + "/" + std::to_string(runs) +
             " OACP+ runs satisfy the bound; worst shortfall " +
             Fmt("%.3g", worst);
  o.summary = {{"runs", runs}, {"ok", ok}, {"worst_shortfall", worst}};
  return o;
}

// 5. Frame-size helpers against hand-computed values.
Outcome Criterion5(Context&) {
  const double beta =
      OptimalBeta(ResourceVector{0.1}, ResourceVector{0.25}, 120, 1)[0];
  const double drho = DeltaRho(ResourceVector{0.5}, ResourceVector{0.1},
                               ResourceVector{0.25}, 120, 1)[0];
  const double drho0 = DeltaRho(ResourceVector{0.0}, ResourceVector{0.1},
                                ResourceVector{0.25}, 120, 1)[0];
  Outcome o;
  o.pass = std::abs(beta - 1.055647) <= 1e-6 &&
           std::abs(drho - 0.131956) <= 1e-6 && drho0 == 0.0;
  o.detail = "beta = " + Fmt("%.7f", beta) + ", delta_rho(0.5) = " +
             Fmt("%.7f", drho) + ", delta_rho(0) = " + Fmt("%g", drho0);
  o.summary = {{"beta", beta}, {"delta_rho", drho}, {"delta_rho_zero", drho0}};
  return o;
}

// Mean of (OPT - alpha F_T) / T for OACP with auto eta over 50 instances.
double NormalizedGap(GeneratorParams gp, std::size_t T) {
  gp.T = T;
  gp.B1 = 0.1 * static_cast<double>(T);
  gp.Bmax = 0.25 * static_cast<double>(T);
  double sum = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const Instance inst = GenerateInstance(gp, i);
    const double f = RunOacp(inst, OacpConfig{}).trace.total_utility;
    sum += (SolveOptConcave(inst).value - inst.alpha() * f) /
           static_cast<double>(T);
  }
  return sum / 50.0;
}

// 6. The normalized gap shrinks with the horizon. B1 and Bmax scale with T
// so rho and alpha stay fixed.
Outcome Criterion6(Context&) {
  const auto start = std::chrono::steady_clock::now();
  GeneratorParams dry;
  dry.seed = 606;
  dry.solar_amplitude = 0.0;
  dry.solar_noise = 0.0;
  std::vector<double> gaps;
  for (std::size_t T : {50, 200, 800}) gaps.push_back(NormalizedGap(dry, T));
  const double secs = Seconds(start);
  Outcome o;
  o.pass = gaps[1] <= gaps[0] + 0.02 && gaps[2] <= gaps[1] + 0.02 &&
           secs < 180.0;
  o.detail = "gap/T at T=50,200,800: " + Fmt("%.4f", gaps[0]) + ", " +
             Fmt("%.4f", gaps[1]) + ", " + Fmt("%.4f", gaps[2]) +
             " (no replenishment); " + Fmt("%.1fs", secs);
  o.summary = {{"T", {50, 200, 800}}, {"gap", gaps}};
  return o;
}

// Not gated: the same trend with daily replenishment.
std::string Criterion6Replenishing() {
  GeneratorParams gp;
  gp.seed = 606;
  std::vector<double> gaps;
  for (std::size_t T : {50, 200, 800}) gaps.push_back(NormalizedGap(gp, T));
  return "gap/T with replenishment at T=50,200,800: " + Fmt("%.4f", gaps[0]) +
         ", " + Fmt("%.4f", gaps[1]) + ", " + Fmt("%.4f", gaps[2]);
}

// 7. Qualitative orderings on the golden seed and the replenishment-rich
// suite (two sunny days, then none).
Outcome Criterion7(Context& ctx) {
  const MetricsReport& golden = ctx.GoldenReport();
  const SuiteMetrics& s = golden.test;
  const double equal = s.Get("equal").avg;
  bool equal_lowest = true;
  json avgs = json::object();
  for (const AlgorithmMetrics& m : s.algorithms) {
    avgs[m.algo] = m.avg;
    if (m.algo != "equal" && !(m.avg > equal)) equal_lowest = false;
  }
  const double oacp = s.Get("oacp").avg;
  const double plus = s.Get("oacp-plus").avg;
  const double la = s.Get(kLaLabel).avg;

  const std::vector<ViolationPoint>& v = s.Get("ml").violation;
  bool monotone = true;
  json rates = json::array();
  for (std::size_t k = 0; k < v.size(); ++k) {
    rates.push_back(v[k].rate);
    if (k > 0 && v[k].rate < v[k - 1].rate) monotone = false;
  }

  GeneratorParams rich;
  rich.solar_amplitude = 2.0;
  rich.demand_base = 0.6;
  rich.drought_start = 48;
  WriteDataset(GenerateDataset(rich, kGoldenN), (ctx.dir() / "rich").string());
  json j;
  j["dataset"] = "rich";
  j["out"] = "rich_eval";
  j["algorithms"] = {"dmd", "oacp-plus"};
  j["ood_fraction"] = 0.0;
  const MetricsReport rich_report =
      EvaluateSuite(ExperimentConfig::FromJson(j, ctx.dir().string()));
  const double cr_plus = rich_report.test.Get("oacp-plus").cr_emp;
  const double cr_dmd = rich_report.test.Get("dmd").cr_emp;

  const bool c_equal = equal_lowest;
  const bool c_plus = plus >= oacp;
  const bool c_la = la >= plus - 0.005;
  const bool c_rich = cr_plus >= cr_dmd;
  Outcome o;
  o.pass = c_equal && c_plus && c_la && c_rich && monotone && v.size() == 9;
  std::ostringstream d;
  d << "AVG equal " << Fmt("%.4f", equal) << (c_equal ? " lowest" : " NOT lowest")
    << "; OACP+ " << Fmt("%.4f", plus) << (c_plus ? " >= " : " < ") << "OACP "
    << Fmt("%.4f", oacp) << "; LA-OACP " << Fmt("%.4f", la)
    << (c_la ? " >= " : " < ") << "OACP+ - 0.005; rich CR OACP+ "
    << Fmt("%.4f", cr_plus) << (c_rich ? " >= " : " < ") << "DMD "
    << Fmt("%.4f", cr_dmd) << "; ML violation rate "
    << (monotone ? "non-decreasing " : "DECREASES ") << rates.dump();
  o.detail = d.str();
  o.summary = {{"golden", SuiteJson(golden.test)},
               {"avg", avgs},
               {"rich", SuiteJson(rich_report.test)}};
  return o;
}

// 8. ES training improves the objective and beats Equal.
Outcome Criterion8(Context& ctx) {
  const TrainReport& r = ctx.Report();
  const double best = r.best.empty() ? r.initial : r.best.back();
  const double gain = (best - r.initial) / r.initial;
  const SuiteMetrics& s = ctx.GoldenReport().test;
  const double la = s.Get(kLaLabel).avg;
  const double ml = s.Get("ml").avg;
  const double equal = s.Get("equal").avg;
  Outcome o;
  o.pass = gain >= 0.02 && la >= equal && ctx.TrainSeconds() < 600.0;
  o.detail = "objective " + Fmt("%.4f", r.initial) + " -> " +
             Fmt("%.4f", best) + " (" + Fmt("%+.2f%%", 100.0 * gain) +
             "); AVG trained LA-OACP " + Fmt("%.4f", la) + " vs Equal " +
             Fmt("%.4f", equal) + " (pure ML " + Fmt("%.4f", ml) + "); " +
             Fmt("%.1fs", ctx.TrainSeconds());
  std::ifstream in(ctx.ModelPath());
  const json model = json::parse(in);
  o.summary = {{"initial", r.initial},
               {"best", r.best},
               {"epoch_mean", r.epoch_mean},
               {"model", model}};
  return o;
}

using Criterion = std::function<Outcome(Context&)>;

// Result lines, also saved next to the run so they survive ctest.
std::string g_lines;

void Emit(const std::string& line) {
  std::cout << line << std::endl;
  g_lines += line + '\n';
}

std::vector<Outcome> RunPass(const fs::path& dir, bool print) {
  const std::vector<Criterion> criteria{Criterion1, Criterion2, Criterion3,
                                        Criterion4, Criterion5, Criterion6,
                                        Criterion7, Criterion8};
  Context ctx(dir);
  std::vector<Outcome> out;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k](ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::ofstream(dir / ("criterion" + std::to_string(k + 1) + ".json"))
        << o.summary.dump(1) << '\n';
    if (print) {
      Emit("criterion " + std::to_string(k + 1) + ": " +
           (o.pass ? "PASS" : "FAIL") + " - " + o.detail);
      if (k == 5) Emit("  info: " + Criterion6Replenishing());
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::string ReadBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  const fs::path run = root / "run";
  const fs::path snapshot = root / "first_pass";
  const std::vector<Outcome> first = RunPass(run, true);
  fs::remove_all(snapshot);
  fs::copy(run, snapshot, fs::copy_options::recursive);

  // 9. The same pass, repeated in the same place, must reproduce every
  // artifact byte for byte.
  RunPass(run, false);
  std::vector<std::string> differ;
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(snapshot)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), snapshot);
    const std::string ext = rel.extension().string();
    if (ext != ".json" && ext != ".csv") continue;
    ++compared;
    if (ReadBytes(e.path()) != ReadBytes(run / rel)) {
      differ.push_back(rel.string());
    }
  }
  const bool pass9 = differ.empty() && compared > 0;
  std::string line9 = std::string("criterion 9: ") + (pass9 ? "PASS" : "FAIL") +
                      " - " + std::to_string(compared - differ.size()) + "/" +
                      std::to_string(compared) +
                      " artifacts byte-identical across two passes";
  if (!differ.empty()) line9 += "; first mismatch " + differ.front();
  Emit(line9);
  std::ofstream(root / "results.txt") << g_lines;

  bool all = pass9;
  for (const Outcome& o : first) all = all && o.pass;
  return all ? 0 : 1;
}
