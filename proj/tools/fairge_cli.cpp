// fairge: synthetic data, masking, training, sweeps and theorem checks.
//
// Exit codes: 0 ok, 1 usage or input error, 2 numerical failure,
// 3 verification failure.

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairge/errors.hpp"
#include "fairge/graph.hpp"
#include "fairge/model.hpp"
#include "fairge/pipeline.hpp"
#include "fairge/synthetic.hpp"
#include "fairge/theorem_lab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerify = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Temp file in the same directory, then rename, so readers never see a
// half-written file.
void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Flags mirror flat config keys. Each is captured raw and converted to JSON
// after parsing so file values and flag values go through one code path.
enum class Kind { number, boolean, text, list };

struct Field {
  std::string name;
  Kind kind;
  std::string help;
  std::string raw;
};

class FieldSet {
 public:
  void add(CLI::App* app, std::string name, Kind kind, std::string help) {
    fields_.push_back(std::make_unique<Field>(Field{std::move(name), kind, std::move(help), {}}));
    Field& f = *fields_.back();
    options_.push_back(app->add_option("--" + f.name, f.raw, f.help));
  }

  // Overlay every flag that was given on top of `base`.
  json overlay(json base) const {
    if (base.is_null()) base = json::object();
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (options_[i]->count() == 0) continue;
      const Field& f = *fields_[i];
      try {
        switch (f.kind) {
          case Kind::text: base[f.name] = f.raw; break;
          case Kind::list: base[f.name] = json::parse("[" + f.raw + "]"); break;
          default: base[f.name] = json::parse(f.raw);
        }
      } catch (const json::parse_error&) {
        throw InputError("--" + f.name + ": cannot parse '" + f.raw + "'");
      }
    }
    return base;
  }

 private:
  std::vector<std::unique_ptr<Field>> fields_;
  std::vector<CLI::Option*> options_;
};

void add_train_fields(CLI::App* app, FieldSet& fs) {
  fs.add(app, "m", Kind::number, "retained eigenpairs");
  fs.add(app, "k_hops", Kind::number, "propagation hops when spectral_truncation is off");
  fs.add(app, "layers", Kind::number, "fusion layers");
  fs.add(app, "hidden", Kind::number, "hidden width");
  fs.add(app, "heads", Kind::number, "attention heads");
  fs.add(app, "d_m", Kind::number, "eigenvalue token width (even)");
  fs.add(app, "ffn_hidden", Kind::number, "FFN width, 0 for 2*d_m");
  fs.add(app, "lr", Kind::number, "Adam learning rate");
  fs.add(app, "weight_decay", Kind::number, "L2 weight decay");
  fs.add(app, "epochs", Kind::number, "training epochs");
  fs.add(app, "seed", Kind::number, "run seed");
  fs.add(app, "missing_rate", Kind::number, "fraction of sensitive values hidden");
  fs.add(app, "sensitive_in_features", Kind::boolean, "keep the zero-padded sensitive column as a feature");
  fs.add(app, "spectral_truncation", Kind::boolean, "false replaces the spectral branch by A^k H'(0)");
  fs.add(app, "train_size", Kind::number, "training nodes, 0 for all outside val/test");
}

const std::vector<std::string> kTrainKeys = {"m",      "k_hops",       "layers",       "hidden",
                                             "heads",  "d_m",          "ffn_hidden",   "lr",
                                             "weight_decay", "epochs", "seed",         "missing_rate",
                                             "sensitive_in_features", "spectral_truncation", "train_size"};

struct RunConfig {
  TrainConfig train;
  std::string edges;
  std::string attrs;
  std::string mask;
  std::string dataset;
  std::string out_dir = ".";
  std::vector<double> rates = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<std::uint64_t> seeds = {0};
};

RunConfig run_config_from_json(const json& j) {
  RunConfig rc;
  json train = json::object();
  for (const auto& [key, value] : j.items()) {
    try {
      if (std::find(kTrainKeys.begin(), kTrainKeys.end(), key) != kTrainKeys.end()) train[key] = value;
      else if (key == "edges") rc.edges = value.get<std::string>();
      else if (key == "attrs") rc.attrs = value.get<std::string>();
      else if (key == "mask") rc.mask = value.get<std::string>();
      else if (key == "dataset") rc.dataset = value.get<std::string>();
      else if (key == "out_dir") rc.out_dir = value.get<std::string>();
      else if (key == "rates") rc.rates = value.get<std::vector<double>>();
      else if (key == "seeds") rc.seeds = value.get<std::vector<std::uint64_t>>();
      else throw InputError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw InputError("config key '" + key + "': " + e.what());
    }
  }
  rc.train = train_config_from_json(train);
  rc.train.validate();
  for (const double r : rc.rates) {
    if (!(r >= 0.0 && r < 1.0)) throw InputError("missing rates must lie in [0, 1)");
  }
  if (rc.seeds.empty()) throw InputError("at least one seed is required");
  if (rc.rates.empty()) throw InputError("at least one missing rate is required");
  if (rc.dataset.empty() && !rc.attrs.empty()) rc.dataset = fs::path(rc.attrs).stem().string();
  return rc;
}

void add_run_fields(CLI::App* app, FieldSet& fs) {
  fs.add(app, "edges", Kind::text, "edge list file");
  fs.add(app, "attrs", Kind::text, "attribute CSV (id, features..., sensitive, label)");
  fs.add(app, "mask", Kind::text, "mask file of hidden node ids (overrides missing_rate)");
  fs.add(app, "dataset", Kind::text, "dataset name for reports");
  fs.add(app, "out_dir", Kind::text, "output directory");
}

struct LoadedData {
  Graph graph;
  NodeTable table;
};

LoadedData load_data(const RunConfig& rc) {
  if (rc.edges.empty() || rc.attrs.empty()) throw InputError("--edges and --attrs are required");
  LoadedData d;
  d.graph = load_edge_list(read_file(rc.edges));
  d.table = load_attributes(read_file(rc.attrs), d.graph.n());
  return d;
}

std::string report_text(const FairnessReport& r) { return to_json(r).dump(2) + "\n"; }

std::string rate_tag(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate);
  return buf;
}

// --- subcommands -----------------------------------------------------------

int cmd_gen(const json& spec_json, const std::string& prefix) {
  const SyntheticSpec spec = synthetic_spec_from_json(spec_json);
  const SyntheticData data = gen_synthetic(spec);
  write_atomic(prefix + ".edges", to_edge_list(data.graph));
  write_atomic(prefix + ".csv", to_attribute_csv(data.table));
  std::cout << "wrote " << prefix << ".edges (n=" << data.graph.n() << ", edges=" << data.graph.edge_count()
            << ") and " << prefix << ".csv\n";
  return kExitOk;
}

int cmd_mask(const std::string& attrs, double rate, std::uint64_t seed, const std::string& out) {
  const NodeTable table = load_attributes(read_file(attrs));
  const SensitiveColumn masked = apply_missing_mask(table.sensitive, rate, seed);
  write_atomic(out, to_mask_file(masked));
  std::cout << "hid " << masked.missing_count() << " of " << masked.n() << " sensitive values -> " << out << "\n";
  return kExitOk;
}

int cmd_train(RunConfig rc, const std::string& report_path, const std::string& checkpoint_path) {
  LoadedData d = load_data(rc);
  if (!rc.mask.empty()) {
    const auto missing = load_mask_file(read_file(rc.mask), d.graph.n());
    d.table.sensitive = with_missing(d.table.sensitive, missing);
    rc.train.missing_rate = static_cast<double>(missing.size()) / static_cast<double>(d.graph.n());
  }
  const ExperimentResult r = run_experiment(d.graph, d.table, rc.train, rc.dataset);
  const std::string report = report_path.empty() ? (fs::path(rc.out_dir) / "report.json").string() : report_path;
  const std::string ckpt = checkpoint_path.empty() ? (fs::path(rc.out_dir) / "checkpoint.json").string() : checkpoint_path;
  write_atomic(report, report_text(r.report));
  write_atomic(ckpt, checkpoint_to_json(r.training.params).dump() + "\n");
  std::printf("acc %.4f  d_sp %.3f%%  d_eo %.3f%%  (best epoch %d) -> %s\n", r.report.accuracy, r.report.delta_sp,
              r.report.delta_eo, r.training.best_epoch, report.c_str());
  return kExitOk;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation.
double stddev(const std::vector<double>& v) {
  const double mu = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size()));
}

int cmd_sweep(const RunConfig& rc) {
  if (!rc.mask.empty()) throw InputError("sweep draws its own masks; drop --mask");
  const LoadedData d = load_data(rc);
  struct Cell {
    double rate;
    std::uint64_t seed;
    FairnessReport report;
    std::string error;
    bool numerical = false;
  };
  std::vector<Cell> cells;
  for (const double rate : rc.rates) {
    for (const std::uint64_t seed : rc.seeds) cells.push_back({rate, seed, {}, {}, false});
  }

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Cell& c = cells[i];
    TrainConfig cfg = rc.train;
    cfg.missing_rate = c.rate;
    cfg.seed = c.seed;
    try {
      c.report = run_experiment(d.graph, d.table, cfg, rc.dataset).report;
      const auto name = "report_r" + rate_tag(c.rate) + "_s" + std::to_string(c.seed) + ".json";
      write_atomic((fs::path(rc.out_dir) / name).string(), report_text(c.report));
    } catch (const NumericalError& e) {
      c.error = e.what();
      c.numerical = true;
    } catch (const std::exception& e) {
      c.error = e.what();
    }
  }

  for (const auto& c : cells) {
    if (!c.error.empty()) {
      std::cerr << "rate " << c.rate << " seed " << c.seed << ": " << c.error << "\n";
      return c.numerical ? kExitNumerical : kExitUsage;
    }
  }

  std::ostringstream csv;
  csv.precision(10);
  csv << "missing_rate,runs,acc_mean,acc_std,d_sp_mean,d_sp_std,d_eo_mean,d_eo_std\n";
  for (const double rate : rc.rates) {
    std::vector<double> acc, sp, eo;
    for (const auto& c : cells) {
      if (c.rate != rate) continue;
      acc.push_back(c.report.accuracy);
      sp.push_back(c.report.delta_sp);
      eo.push_back(c.report.delta_eo);
    }
    csv << rate << ',' << acc.size() << ',' << mean(acc) << ',' << stddev(acc) << ',' << mean(sp) << ','
        << stddev(sp) << ',' << mean(eo) << ',' << stddev(eo) << '\n';
    std::printf("rate %.2f  acc %.4f±%.4f  d_sp %.3f±%.3f  d_eo %.3f±%.3f\n", rate, mean(acc), stddev(acc),
                mean(sp), stddev(sp), mean(eo), stddev(eo));
  }
  write_atomic((fs::path(rc.out_dir) / "aggregate.csv").string(), csv.str());
  return kExitOk;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  try {
    return json::parse("[" + text + "]").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw InputError(flag + ": expected a comma-separated list of numbers");
  }
}

struct VerifyArgs {
  std::string suite;
  std::string edges;
  std::string attrs;
  std::string sensitive;
  std::string masked_nodes;
  std::string mask;
  std::string variants = "lemma1,thm1,thm2,thm3";
  int k_max = 40;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string csv_out = "verify.csv";
  std::string summary_out = "verify_summary.json";
};

std::vector<LabCase> verify_cases(const VerifyArgs& a) {
  std::vector<LabCase> cases;
  if (a.suite == "standard" || a.suite == "all") cases = standard_suite(24, a.seed);
  if (a.suite == "sparse") cases = sparse_suite(24, a.seed);
  if (a.suite == "cliques" || a.suite == "all") {
    auto cl = clique_suite();
    cases.insert(cases.end(), cl.begin(), cl.end());
  }
  if (!a.suite.empty() && cases.empty()) throw InputError("--suite must be standard, sparse, cliques or all");
  if (a.edges.empty()) {
    if (cases.empty()) throw InputError("give --suite or --edges");
    return cases;
  }

  LabCase c;
  c.graph = load_edge_list(read_file(a.edges));
  c.id = fs::path(a.edges).stem().string();
  const auto n = c.graph.n();
  if (!a.sensitive.empty() == !a.attrs.empty()) throw InputError("give exactly one of --sensitive or --attrs");
  if (!a.attrs.empty()) {
    c.input = LabInput::from(load_attributes(read_file(a.attrs), n).sensitive);
  } else {
    const auto values = parse_number_list(a.sensitive, "--sensitive");
    if (values.size() != n) throw DimensionError("--sensitive has " + std::to_string(values.size()) + " values, graph has " + std::to_string(n) + " nodes");
    c.input.h = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    c.input.present.assign(n, true);
  }
  std::vector<NodeId> hidden;
  if (!a.mask.empty()) hidden = load_mask_file(read_file(a.mask), n);
  if (!a.masked_nodes.empty()) {
    for (const double v : parse_number_list(a.masked_nodes, "--masked_nodes")) {
      if (v < 0 || v >= static_cast<double>(n) || v != std::floor(v)) throw InputError("--masked_nodes: bad node id");
      hidden.push_back(static_cast<NodeId>(v));
    }
  }
  if (c.input.present.empty()) c.input.present.assign(n, true);
  for (const NodeId i : hidden) c.input.present[static_cast<std::size_t>(i)] = false;
  cases.push_back(std::move(c));
  return cases;
}

int cmd_verify(const VerifyArgs& a) {
  if (a.k_max < 0) throw InputError("--k_max must be nonnegative");
  std::vector<Variant> variants;
  std::stringstream ss(a.variants);
  for (std::string item; std::getline(ss, item, ',');) variants.push_back(parse_variant(item));
  const auto cases = verify_cases(a);
  const VerifyResult result = run_verification(cases, variants, a.k_max, a.tol);
  write_atomic(a.csv_out, to_csv(result.rows));
  const json summary = result.summary();
  write_atomic(a.summary_out, summary.dump(2) + "\n");
  for (const auto& [name, t] : summary["theorems"].items()) {
    std::printf("%-8s %s  passed %d/%d  skipped %d\n", name.c_str(), t["pass"].get<bool>() ? "PASS" : "FAIL",
                t["passed"].get<int>(), t["checked"].get<int>(), t["skipped"].get<int>());
  }
  for (const auto& c : result.checks) {
    if (c.status == "fail") std::printf("  fail %s %s: %s\n", c.theorem.c_str(), c.graph_id.c_str(), c.detail.c_str());
  }
  return result.passed() ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-aware graph encoding under missing sensitive attributes"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic edge list and attribute CSV");
  std::string gen_spec, gen_prefix = "synthetic";
  gen->add_option("--spec", gen_spec, "JSON file with synthetic spec fields");
  gen->add_option("--out", gen_prefix, "output prefix (writes <out>.edges and <out>.csv)");
  FieldSet gen_fields;
  for (const auto& [name, kind] : std::vector<std::pair<std::string, Kind>>{
           {"kind", Kind::text},        {"n", Kind::number},          {"p", Kind::number},
           {"blocks", Kind::number},    {"p_in", Kind::number},       {"p_out", Kind::number},
           {"clique_sizes", Kind::list}, {"rho_s", Kind::number},     {"label_rule", Kind::text},
           {"label_flip", Kind::number}, {"merit_dim", Kind::number}, {"label_bias", Kind::number},
           {"label_noise", Kind::number}, {"noise_dim", Kind::number}, {"one_hot_blocks", Kind::boolean},
           {"seed", Kind::number}}) {
    gen_fields.add(gen, name, kind, "synthetic spec field");
  }

  // mask
  auto* mask = app.add_subcommand("mask", "hide a uniform fraction of sensitive values");
  std::string mask_attrs, mask_out = "mask.txt";
  double mask_rate = 0.0;
  std::uint64_t mask_seed = 0;
  mask->add_option("--attrs", mask_attrs, "attribute CSV")->required();
  mask->add_option("--rate", mask_rate, "fraction to hide, in [0, 1)")->required();
  mask->add_option("--seed", mask_seed, "seed");
  mask->add_option("--out", mask_out, "mask file");

  // train
  auto* train = app.add_subcommand("train", "train, evaluate on the test split, write report and checkpoint");
  std::string train_config, train_report, train_ckpt;
  train->add_option("--config", train_config, "flat JSON config; flags override it");
  train->add_option("--report", train_report, "report path (default <out_dir>/report.json)");
  train->add_option("--checkpoint", train_ckpt, "checkpoint path (default <out_dir>/checkpoint.json)");
  FieldSet train_fields;
  add_train_fields(train, train_fields);
  add_run_fields(train, train_fields);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "one report per (missing rate, seed) plus aggregate.csv");
  std::string sweep_config;
  sweep->add_option("--config", sweep_config, "flat JSON config; flags override it");
  FieldSet sweep_fields;
  add_train_fields(sweep, sweep_fields);
  add_run_fields(sweep, sweep_fields);
  sweep_fields.add(sweep, "rates", Kind::list, "missing rates, e.g. 0.1,0.2");
  sweep_fields.add(sweep, "seeds", Kind::list, "seeds, e.g. 0,1,2,3,4");

  // verify
  auto* verify = app.add_subcommand("verify", "numerical checks of the propagation limit theorems");
  VerifyArgs va;
  verify->add_option("--suite", va.suite, "standard | sparse | cliques | all");
  verify->add_option("--edges", va.edges, "edge list to check");
  verify->add_option("--attrs", va.attrs, "attribute CSV supplying the sensitive column");
  verify->add_option("--sensitive", va.sensitive, "inline sensitive vector, e.g. 1,0,1");
  verify->add_option("--masked_nodes", va.masked_nodes, "inline hidden node ids, e.g. 2");
  verify->add_option("--mask", va.mask, "mask file of hidden node ids");
  verify->add_option("--variants", va.variants, "comma list of lemma1, thm1, thm2, thm3");
  verify->add_option("--k_max", va.k_max, "largest hop count");
  verify->add_option("--tol", va.tol, "residual tolerance at k_max");
  verify->add_option("--seed", va.seed, "standard suite seed");
  verify->add_option("--csv", va.csv_out, "per-hop CSV output");
  verify->add_option("--summary", va.summary_out, "JSON summary output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      json spec = gen_spec.empty() ? json::object() : read_json_file(gen_spec);
      return cmd_gen(gen_fields.overlay(spec), gen_prefix);
    }
    if (*mask) return cmd_mask(mask_attrs, mask_rate, mask_seed, mask_out);
    if (*train) {
      json base = train_config.empty() ? json::object() : read_json_file(train_config);
      return cmd_train(run_config_from_json(train_fields.overlay(base)), train_report, train_ckpt);
    }
    if (*sweep) {
      json base = sweep_config.empty() ? json::object() : read_json_file(sweep_config);
      return cmd_sweep(run_config_from_json(sweep_fields.overlay(base)));
    }
    if (*verify) return cmd_verify(va);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
