#include "oacp/workload.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace oacp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDemandFloor = 0.01;
constexpr int kDatasetSchemaVersion = 1;

std::mt19937_64 StreamFor(std::uint64_t seed, std::uint64_t index,
                          std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

UtilitySpec MakeUtility(UtilityKind kind, double c) {
  return kind == UtilityKind::kLinear ? UtilitySpec::Linear(ResourceVector{c})
                                      : UtilitySpec::LogServe(c);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
      cell.pop_back();
    }
    std::size_t p = 0;
    while (p < cell.size() && cell[p] == ' ') ++p;
    out.push_back(cell.substr(p));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseNumber(const std::string& s, std::size_t row,
                   const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(row) + ": column '" + column +
                     "' is not a finite number: '" + s + "'");
  }
  return v;
}

json ReadJsonFile(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

void WriteJsonFile(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

}  // namespace

std::string UtilityKindName(UtilityKind k) {
  return k == UtilityKind::kLinear ? "linear" : "log_serve";
}

UtilityKind ParseUtilityKind(const std::string& s) {
  if (s == "linear") return UtilityKind::kLinear;
  if (s == "log_serve") return UtilityKind::kLogServe;
  throw ParseError("unknown utility_kind '" + s + "'");
}

void GeneratorParams::Validate() const {
  if (T < 1) throw InputError("T must be >= 1");
  if (!(B1 > 0.0) || !(Bmax >= B1) || !(xbar > 0.0) || !(xbar <= Bmax)) {
    throw InputError("need 0 < B1 <= Bmax and 0 < xbar <= Bmax");
  }
  if (day_length < 1) throw InputError("day_length must be >= 1");
  if (!(demand_base > 0.0) || demand_amplitude < 0.0 || demand_noise < 0.0 ||
      solar_amplitude < 0.0 || solar_noise < 0.0 || solar_day_spread < 0.0 ||
      solar_day_spread > 1.0 || cloud_dropout < 0.0 || cloud_dropout > 1.0 ||
      overcast_day < 0.0 || overcast_day > 1.0) {
    throw InputError("generator scales must be non-negative");
  }
  if (test_fraction < 0.0 || test_fraction > 1.0 ||
      validation_fraction < 0.0 || validation_fraction > 1.0) {
    throw InputError("split fractions must lie in [0, 1]");
  }
}

json GeneratorParams::ToJson() const {
  return json{{"T", T},
              {"B1", B1},
              {"Bmax", Bmax},
              {"xbar", xbar},
              {"utility_kind", UtilityKindName(utility)},
              {"day_length", day_length},
              {"start_hour", start_hour},
              {"demand_base", demand_base},
              {"demand_amplitude", demand_amplitude},
              {"demand_peak_hour", demand_peak_hour},
              {"demand_noise", demand_noise},
              {"solar_amplitude", solar_amplitude},
              {"solar_day_spread", solar_day_spread},
              {"sunrise_hour", sunrise_hour},
              {"solar_noise", solar_noise},
              {"cloud_dropout", cloud_dropout},
              {"overcast_day", overcast_day},
              {"drought_start", drought_start},
              {"seed", seed},
              {"test_fraction", test_fraction},
              {"validation_fraction", validation_fraction}};
}

GeneratorParams GeneratorParams::FromJson(const json& j) {
  GeneratorParams p;
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    get("T", p.T);
    get("B1", p.B1);
    get("Bmax", p.Bmax);
    get("xbar", p.xbar);
    if (j.contains("utility_kind")) {
      p.utility = ParseUtilityKind(j.at("utility_kind").get<std::string>());
    }
    get("day_length", p.day_length);
    get("start_hour", p.start_hour);
    get("demand_base", p.demand_base);
    get("demand_amplitude", p.demand_amplitude);
    get("demand_peak_hour", p.demand_peak_hour);
    get("demand_noise", p.demand_noise);
    get("solar_amplitude", p.solar_amplitude);
    get("solar_day_spread", p.solar_day_spread);
    get("sunrise_hour", p.sunrise_hour);
    get("solar_noise", p.solar_noise);
    get("cloud_dropout", p.cloud_dropout);
    get("overcast_day", p.overcast_day);
    get("drought_start", p.drought_start);
    get("seed", p.seed);
    get("test_fraction", p.test_fraction);
    get("validation_fraction", p.validation_fraction);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad generator parameters: ") + e.what());
  }
  p.Validate();
  return p;
}

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "";
}

std::vector<std::size_t> Dataset::Indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<Instance> Dataset::Subset(Split s) const {
  std::vector<Instance> out;
  for (std::size_t i : Indices(s)) out.push_back(instances[i]);
  return out;
}

Instance GenerateInstance(const GeneratorParams& p, std::size_t index) {
  p.Validate();
  std::mt19937_64 rng = StreamFor(p.seed, index, 0x51a7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double day = static_cast<double>(p.day_length);
  const double daylight = day / 2.0;
  Instance inst;
  inst.num_resources = 1;
  inst.initial_budget = ResourceVector{p.B1};
  inst.budget_cap = ResourceVector{p.Bmax};
  inst.allocation_cap = ResourceVector{p.xbar};
  inst.rounds.reserve(p.T);

  double day_scale = 1.0;
  for (std::size_t t = 0; t < p.T; ++t) {
    const double hour =
        std::fmod(static_cast<double>(t) + p.start_hour, day);
    if (t == 0 || hour == 0.0) {
      day_scale = 1.0 + p.solar_day_spread * (2.0 * unit(rng) - 1.0);
      if (unit(rng) < p.overcast_day) day_scale *= 0.05;
    }
    const double diurnal = std::cos(2.0 * std::numbers::pi *
                                    (hour - p.demand_peak_hour) / day);
    const double c = std::max(
        kDemandFloor,
        p.demand_base * (1.0 + p.demand_amplitude * diurnal +
                         p.demand_noise * normal(rng)));

    const double since_sunrise = hour - p.sunrise_hour;
    const bool lit = since_sunrise > 0.0 && since_sunrise < daylight;
    const double noise = normal(rng);
    const bool cloudy = unit(rng) < p.cloud_dropout;
    double e = 0.0;
    if (lit && (p.drought_start == 0 || t < p.drought_start)) {
      e = p.solar_amplitude * day_scale *
              std::sin(std::numbers::pi * since_sunrise / daylight) +
          p.solar_noise * noise;
      e = std::max(0.0, e) * (cloudy ? 0.2 : 1.0);
    }
    inst.rounds.push_back({MakeUtility(p.utility, c), ResourceVector{e}});
  }
  return inst;
}

Dataset GenerateDataset(const GeneratorParams& p, std::size_t n) {
  if (n < 1) throw InputError("dataset size must be >= 1");
  p.Validate();
  Dataset ds;
  ds.params = p;
  ds.instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.instances.push_back(GenerateInstance(p, i));
    char id[32];
    std::snprintf(id, sizeof(id), "inst_%05zu", i);
    ds.ids.push_back(id);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng = StreamFor(p.seed, n, 0x5b11);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(
      std::llround(p.test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(
      p.validation_fraction * static_cast<double>(n - n_test)));
  ds.split.assign(n, Split::kTrain);
  for (std::size_t k = 0; k < n; ++k) {
    if (k < n_test) {
      ds.split[order[k]] = Split::kTest;
    } else if (k < n_test + n_val) {
      ds.split[order[k]] = Split::kValidation;
    }
  }
  ds.ood.assign(n, false);
  return ds;
}

Dataset PerturbOod(const Dataset& dataset, double fraction, double sigma,
                   std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InputError("OOD fraction must lie in [0, 1]");
  }
  if (!(sigma >= 0.0)) throw InputError("OOD sigma must be >= 0");
  Dataset out = dataset;
  std::vector<std::size_t> test = dataset.Indices(Split::kTest);
  const auto n_ood = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(test.size())));
  std::mt19937_64 pick = StreamFor(seed, 0, 0x00d);
  std::shuffle(test.begin(), test.end(), pick);
  for (std::size_t k = 0; k < n_ood; ++k) {
    const std::size_t i = test[k];
    out.ood[i] = true;
    std::mt19937_64 rng = StreamFor(seed, i + 1, 0x00d);
    std::normal_distribution<double> normal(0.0, 1.0);
    Instance& inst = out.instances[i];
    for (Round& r : inst.rounds) {
      const double fc = std::exp(sigma * normal(rng));
      const double fe = std::exp(sigma * normal(rng));
      if (const auto* lin = std::get_if<LinearUtility>(&r.utility.kind())) {
        r.utility = UtilitySpec::Linear(lin->coeffs * fc);
      } else {
        const double c = std::get<LogServeUtility>(r.utility.kind()).demand;
        r.utility = UtilitySpec::LogServe(std::max(kDemandFloor, c * fc));
      }
      r.e_hat = PositivePart(r.e_hat * fe);
    }
  }
  return out;
}

ResourceVector MinReplenishment(const Instance& instance, std::size_t t_star) {
  const std::size_t T = instance.horizon();
  if (t_star < 1 || t_star > T) {
    throw InputError("unit frame length must satisfy 1 <= T* <= T");
  }
  const std::size_t m = instance.num_resources;
  ResourceVector best(m, std::numeric_limits<double>::infinity());
  for (std::size_t start = 0; start + t_star <= T; start += t_star) {
    ResourceVector sum(m);
    for (std::size_t t = start; t < start + t_star; ++t) {
      sum += instance.rounds[t].e_hat;
    }
    best = Min(best, sum);
  }
  return best;
}

void WriteInstanceCsv(const Instance& instance, const std::string& csv_path) {
  if (instance.num_resources != 1) {
    throw InputError("instance CSV files hold single-resource instances");
  }
  std::ofstream out(csv_path);
  if (!out) throw InputError("cannot write " + csv_path);
  out << "t,c,E_hat\n";
  for (std::size_t t = 0; t < instance.horizon(); ++t) {
    const Round& r = instance.rounds[t];
    out << (t + 1) << ',' << FormatDouble(r.utility.scale()) << ','
        << FormatDouble(r.e_hat[0]) << '\n';
  }
  if (!out) throw InputError("failed writing " + csv_path);
  const json side{{"T", instance.horizon()},
                  {"M", 1},
                  {"B1", instance.initial_budget[0]},
                  {"Bmax", instance.budget_cap[0]},
                  {"xbar", instance.allocation_cap[0]},
                  {"utility_kind", UtilityKindName(instance.utility_kind())}};
  WriteJsonFile(fs::path(csv_path).replace_extension(".json"), side);
}

Instance ReadInstanceCsv(const std::string& csv_path) {
  const json side = ReadJsonFile(fs::path(csv_path).replace_extension(".json"));
  Instance inst;
  UtilityKind kind;
  std::size_t T = 0;
  try {
    if (side.at("M").get<int>() != 1) {
      throw ParseError("instance files support M = 1 only");
    }
    T = side.at("T").get<std::size_t>();
    inst.initial_budget = ResourceVector{side.at("B1").get<double>()};
    inst.budget_cap = ResourceVector{side.at("Bmax").get<double>()};
    inst.allocation_cap = ResourceVector{side.at("xbar").get<double>()};
    kind = ParseUtilityKind(side.at("utility_kind").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError("bad sidecar for " + csv_path + ": " + e.what());
  }

  std::ifstream in(csv_path);
  if (!in) throw InputError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(csv_path + ": empty file");
  const std::vector<std::string> header = SplitCsvLine(line);
  const auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError(csv_path + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t col_t = column("t");
  const std::size_t col_c = column("c");
  const std::size_t col_e = column("E_hat");

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw ParseError(csv_path + ": row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    const double t = ParseNumber(cells[col_t], row, "t");
    if (t != static_cast<double>(inst.rounds.size() + 1)) {
      throw ParseError(csv_path + ": row " + std::to_string(row) +
                       ": rounds must be numbered 1..T in order");
    }
    const double c = ParseNumber(cells[col_c], row, "c");
    const double e = ParseNumber(cells[col_e], row, "E_hat");
    if (e < 0.0) {
      throw InputError(csv_path + ": row " + std::to_string(row) +
                       ": E_hat must be >= 0");
    }
    try {
      inst.rounds.push_back({MakeUtility(kind, c), ResourceVector{e}});
    } catch (const InputError& err) {
      throw InputError(csv_path + ": row " + std::to_string(row) + ": " +
                       err.what());
    }
  }
  if (inst.rounds.size() != T) {
    throw ParseError(csv_path + ": expected " + std::to_string(T) +
                     " rounds, found " + std::to_string(inst.rounds.size()));
  }
  inst.Validate();
  return inst;
}

void WriteDataset(const Dataset& ds, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "instances");
  json splits = json::object();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    WriteInstanceCsv(ds.instances[i],
                     (root / "instances" / (ds.ids[i] + ".csv")).string());
    splits[ds.ids[i]] = SplitName(ds.split[i]);
  }
  json ids = ds.ids;
  WriteJsonFile(root / "meta.json",
                json{{"schema_version", kDatasetSchemaVersion},
                     {"count", ds.size()},
                     {"ids", ids},
                     {"generator", ds.params.ToJson()}});
  WriteJsonFile(root / "splits.json", splits);
}

Dataset ReadDataset(const std::string& dir) {
  const fs::path root(dir);
  const json meta = ReadJsonFile(root / "meta.json");
  const json splits = ReadJsonFile(root / "splits.json");
  Dataset ds;
  try {
    if (meta.at("schema_version").get<int>() != kDatasetSchemaVersion) {
      throw ParseError("unsupported dataset schema version in " + dir);
    }
    ds.params = GeneratorParams::FromJson(meta.at("generator"));
    ds.ids = meta.at("ids").get<std::vector<std::string>>();
    for (const std::string& id : ds.ids) {
      ds.instances.push_back(
          ReadInstanceCsv((root / "instances" / (id + ".csv")).string()));
      const std::string s = splits.at(id).get<std::string>();
      if (s == "train") {
        ds.split.push_back(Split::kTrain);
      } else if (s == "validation") {
        ds.split.push_back(Split::kValidation);
      } else if (s == "test") {
        ds.split.push_back(Split::kTest);
      } else {
        throw ParseError("unknown split '" + s + "' for " + id);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError("bad dataset metadata in " + dir + ": " + e.what());
  }
  ds.ood.assign(ds.size(), false);
  return ds;
}

}  // namespace oacp
