#include "ssmlab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssmlab/checks.hpp"
#include "ssmlab/extraction.hpp"
#include "ssmlab/geometry.hpp"
#include "ssmlab/harness.hpp"
#include "ssmlab/metrics.hpp"
#include "ssmlab/probe.hpp"
#include "ssmlab/report.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab::cli {
namespace {

struct TaskSpec {
  enum class Kind { collapse, separable, sts_synth, dump } kind = Kind::collapse;
  std::string path;  // dump only
};

TaskSpec parse_task(const std::string& text) {
  if (text == "collapse") return {TaskSpec::Kind::collapse, {}};
  if (text == "separable") return {TaskSpec::Kind::separable, {}};
  if (text == "sts-synth") return {TaskSpec::Kind::sts_synth, {}};
  if (text.rfind("dump:", 0) == 0 && text.size() > 5) return {TaskSpec::Kind::dump, text.substr(5)};
  throw UsageError("unknown task '" + text +
                   "' (expected collapse, separable, sts-synth or dump:<path>)");
}

Strategy require_strategy(const std::string& name) {
  if (auto s = parse_strategy(name)) return *s;
  throw UsageError("unknown strategy '" + name + "'; valid strategies: " +
                   std::string(kStrategyNames));
}

BoundaryPool require_pool(const std::string& name) {
  if (name == "mean") return BoundaryPool::mean_of_boundaries;
  if (name == "last") return BoundaryPool::last_boundary;
  throw UsageError("unknown pool '" + name + "' (expected mean or last)");
}

void require_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw UsageError("eta must lie in [0, 1], got " + std::to_string(eta));
  }
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Flags shared by every command that runs the synthetic backbone.
struct BackboneOptions {
  std::size_t d_model = 16;
  std::size_t d_inner = 32;
  std::size_t n_state = 4;
  std::uint64_t seed = 0;
  std::string params_path;

  void add_to(CLI::App& app) {
    app.add_option("--d-model", d_model, "Synthetic backbone width")->capture_default_str();
    app.add_option("--d-inner", d_inner, "Synthetic backbone inner channels D")->capture_default_str();
    app.add_option("--n-state", n_state, "Synthetic backbone state width N")->capture_default_str();
    app.add_option("--backbone-seed", seed, "Seed of the synthetic backbone")->capture_default_str();
    app.add_option("--params", params_path, "Load layer parameters from a JSON document");
  }

  LayerParams build() const {
    if (!params_path.empty()) return load_layer_params(params_path);
    return init_layer_params(d_model, d_inner, n_state, seed);
  }

  nlohmann::json echo() const {
    return {{"d_model", d_model}, {"d_inner", d_inner}, {"n_state", n_state},
            {"backbone_seed", seed}, {"params", params_path}};
  }
};

struct ExtractionOptions {
  std::string strategy = "mean_pool";
  std::size_t patch_len = kDefaultPatchLen;
  double eta = 0.5;
  std::string pool = "mean";

  void add_to(CLI::App& app, bool with_eta = true) {
    app.add_option("--strategy", strategy, "patched | mean_pool | final_state | ortho_patched")
        ->capture_default_str();
    app.add_option("--patch-len", patch_len, "Patch length for patched strategies")
        ->capture_default_str();
    if (with_eta) app.add_option("--eta", eta, "Orthogonalization strength")->capture_default_str();
    app.add_option("--pool", pool, "Boundary pooling: mean | last")->capture_default_str();
  }

  ExtractionConfig build() const {
    ExtractionConfig cfg;
    cfg.strategy = require_strategy(strategy);
    if (patch_len == 0) throw UsageError("--patch-len must be >= 1");
    cfg.patch_len = patch_len;
    cfg.pool = require_pool(pool);
    require_eta(eta);
    cfg.ortho.eta = eta;
    return cfg;
  }

  nlohmann::json echo() const {
    return {{"strategy", strategy}, {"patch_len", patch_len}, {"eta", eta}, {"pool", pool}};
  }
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw IoError("cannot open " + path + " for writing");
  file << text;
  if (!file) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------- probe

struct ProbeOptions {
  std::string task;
  ExtractionOptions extraction;
  BackboneOptions backbone;
  std::string seeds = "42,43,44";
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 2e-3;
  double weight_decay = 0.01;
  double dropout = 0.1;
  std::string metric = "auto";
  std::string out;
  std::size_t dim = 64;
  double noise = -1.0;  // task default when negative
  double margin = 10.0;
  std::size_t n_per_class = 200;
  std::uint64_t data_seed = 0;
  std::size_t sample_pairs = 1000;
  std::int64_t sample_seed = 0;
};

int cmd_probe(const ProbeOptions& o, std::ostream& out, std::ostream& err) {
  const TaskSpec task = parse_task(o.task);
  const ExtractionConfig ec = o.extraction.build();
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.lr = o.lr;
  cfg.weight_decay = o.weight_decay;
  cfg.dropout_p = o.dropout;
  cfg.seeds = parse_seeds(o.seeds);
  cfg.threads = thread_budget();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  LabeledVectorSet train;
  LabeledVectorSet val;
  TaskMetric metric = TaskMetric::accuracy;
  double noise = o.noise;
  switch (task.kind) {
    case TaskSpec::Kind::collapse:
      if (noise < 0.0) noise = 0.0;
      train = gen_collapse_set(o.dim, kCollapseClass0 * kCollapseTrainMultiplier,
                               kCollapseClass1 * kCollapseTrainMultiplier, noise, o.data_seed,
                               Split::train);
      val = gen_collapse_set(o.dim, kCollapseClass0, kCollapseClass1, noise, o.data_seed,
                             Split::validation);
      metric = TaskMetric::mcc;
      break;
    case TaskSpec::Kind::separable:
      if (noise < 0.0) noise = 1.0;
      train = gen_separable_set(o.dim, o.n_per_class, o.margin, o.data_seed, noise, Split::train);
      val = gen_separable_set(o.dim, o.n_per_class, o.margin, o.data_seed, noise,
                              Split::validation);
      break;
    case TaskSpec::Kind::sts_synth:
      throw UsageError("sts-synth is evaluated without training; use ortho-sweep or anisotropy");
    case TaskSpec::Kind::dump: {
      const Dump dump = load_dump(task.path);
      const std::string name(strategy_name(ec.strategy));
      train = dump.labeled(name, "train");
      val = dump.labeled(name, "validation");
      if (train.size() == 0 || val.size() == 0) {
        throw InputError(task.path + ": need labeled '" + name +
                         "' records in both train and validation splits");
      }
      break;
    }
  }
  if (o.metric == "mcc") metric = TaskMetric::mcc;
  else if (o.metric == "accuracy") metric = TaskMetric::accuracy;
  else if (o.metric != "auto") throw UsageError("--metric must be auto, accuracy or mcc");

  const auto checkpoints = train_probe(train, val, cfg, metric);

  EvalReport report;
  report.task = o.task;
  report.strategy = std::string(strategy_name(ec.strategy));
  for (const auto& ckpt : checkpoints) {
    const auto eval = evaluate_probe(ckpt, val.vectors);
    const auto cm = confusion(val.labels, eval.predictions, ckpt.params.num_classes);
    SeedResult s;
    s.seed = ckpt.seed;
    s.best_epoch = ckpt.epoch;
    s.metrics["accuracy"] = accuracy(cm);
    if (cm.num_classes() == 2) {
      s.metrics["mcc"] = mcc(cm);
      s.metrics["f1"] = f1_binary(cm, 1);
    }
    s.confusion = cm;
    report.per_seed.push_back(std::move(s));
  }
  report.finalize();
  report.anisotropy = anisotropy_from_vectors(val.vectors, o.sample_pairs, o.sample_seed);
  report.config = {
      {"task", o.task},
      {"extraction", o.extraction.echo()},
      {"backbone", o.backbone.echo()},
      {"seeds", cfg.seeds},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"lr", cfg.lr},
      {"weight_decay", cfg.weight_decay},
      {"betas", {cfg.beta1, cfg.beta2}},
      {"eps", cfg.eps},
      {"dropout", cfg.dropout_p},
      {"hidden", cfg.hidden},
      {"max_seq_len", cfg.max_seq_len},
      {"schedule", "cosine, per epoch, floor 0"},
      {"metric", metric == TaskMetric::mcc ? "mcc" : "accuracy"},
      {"dim", val.dim()},
      {"noise", noise},
      {"margin", o.margin},
      {"n_per_class", o.n_per_class},
      {"data_seed", o.data_seed},
      {"sample_pairs", o.sample_pairs},
      {"sample_seed", o.sample_seed},
      {"threads", cfg.threads},
  };

  emit(to_json(report).dump(2) + "\n", o.out, out);
  if (!o.out.empty()) {
    for (const auto& [name, ms] : report.aggregate) {
      out << name << ": " << ms.mean << " +- " << ms.std << '\n';
    }
  }
  (void)err;
  return kExitOk;
}

// ----------------------------------------------------------- anisotropy

struct AnisotropyOptions {
  std::string task = "collapse";
  ExtractionOptions extraction;
  BackboneOptions backbone;
  std::size_t k = 100;
  std::size_t dim = 64;
  double noise = 0.0;
  std::uint64_t data_seed = 0;
  std::size_t sample_pairs = 1000;
  std::int64_t seed = 0;
  std::string out;
  std::string heatmap;
};

int cmd_anisotropy(const AnisotropyOptions& o, std::ostream& out) {
  const TaskSpec task = parse_task(o.task);
  const ExtractionConfig ec = o.extraction.build();
  std::vector<Vector> vectors;
  std::vector<std::string> labels;
  std::string source;
  switch (task.kind) {
    case TaskSpec::Kind::collapse:
      vectors = gen_collapse_set(o.dim, o.k, 0, o.noise, o.data_seed).vectors;
      source = "synthetic collapse set";
      break;
    case TaskSpec::Kind::separable:
      vectors = gen_separable_set(o.dim, (o.k + 1) / 2, 10.0, o.data_seed, 1.0).vectors;
      vectors.resize(o.k);
      source = "synthetic separable set";
      break;
    case TaskSpec::Kind::sts_synth: {
      const LayerParams params = o.backbone.build();
      const auto batch = gen_token_sequences(64, o.k, {8, 48}, params.d_model, o.data_seed);
      for (const auto& sv : extract_batch(params, batch.sequences, ec, thread_budget())) {
        vectors.push_back(sv.values);
      }
      source = "synthetic sequences through the backbone";
      break;
    }
    case TaskSpec::Kind::dump: {
      const Dump dump = load_dump(task.path);
      const std::string name(strategy_name(ec.strategy));
      vectors = dump.vectors(name);
      labels = dump.ids(name);
      source = task.path;
      if (vectors.size() < 2) {
        throw InputError(task.path + ": fewer than two '" + name + "' records");
      }
      break;
    }
  }
  if (labels.empty()) {
    for (std::size_t i = 0; i < vectors.size(); ++i) labels.push_back("v" + std::to_string(i));
  }

  const auto report = anisotropy_from_vectors(vectors, o.sample_pairs, o.seed);
  if (!o.heatmap.empty()) export_heatmap(cosine_matrix(vectors), labels, o.heatmap);

  nlohmann::json doc = {
      {"format", "ssm-anisotropy-report"},
      {"version", 1},
      {"task", o.task},
      {"source", source},
      {"strategy", std::string(strategy_name(ec.strategy))},
      {"k", vectors.size()},
      {"dim", vectors.front().size()},
      {"anisotropy", to_json(report)},
      {"config",
       {{"extraction", o.extraction.echo()},
        {"backbone", o.backbone.echo()},
        {"noise", o.noise},
        {"data_seed", o.data_seed},
        {"sample_pairs", o.sample_pairs},
        {"seed", o.seed},
        {"heatmap", o.heatmap}}},
  };
  emit(doc.dump(2) + "\n", o.out, out);
  if (!o.out.empty()) {
    out << "mean " << g17(report.mean) << " std " << g17(report.std) << " over "
        << report.pair_count << " pairs\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------- ortho-sweep

struct SweepOptions {
  std::string task = "sts-synth";
  std::vector<double> etas{0.0, 0.5, 1.0};
  ExtractionOptions extraction;
  BackboneOptions backbone;
  std::size_t n_pairs = 48;
  std::size_t seq_len = 40;
  std::size_t vocab = 64;
  std::uint64_t data_seed = 0;
  std::string out;
};

int cmd_ortho_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  const TaskSpec task = parse_task(o.task);
  if (task.kind != TaskSpec::Kind::sts_synth) {
    throw UsageError("ortho-sweep re-runs the recurrence and needs --task sts-synth");
  }
  if (o.etas.empty()) throw UsageError("--eta needs at least one value");
  for (double eta : o.etas) require_eta(eta);
  const BoundaryPool pool = require_pool(o.extraction.pool);
  if (o.extraction.patch_len == 0) throw UsageError("--patch-len must be >= 1");

  const LayerParams params = o.backbone.build();
  const auto data = gen_token_pairs(o.vocab, o.n_pairs, o.seq_len, params.d_model, o.data_seed);

  auto run = [&](std::optional<double> eta, OrthoAudit* audit) {
    std::vector<std::pair<Vector, Vector>> pairs;
    for (const auto& [a, b] : data.pairs) {
      if (!eta) {
        pairs.emplace_back(extract_patched(params, a, o.extraction.patch_len, pool).values,
                           extract_patched(params, b, o.extraction.patch_len, pool).values);
      } else {
        const OrthoConfig cfg{*eta, 1e-12};
        pairs.emplace_back(
            extract_ortho_patched(params, a, o.extraction.patch_len, cfg, pool, audit).values,
            extract_ortho_patched(params, b, o.extraction.patch_len, cfg, pool, audit).values);
      }
    }
    return unsupervised_similarity(pairs, data.gold);
  };

  const auto vanilla = run(std::nullopt, nullptr);
  std::ostringstream csv;
  csv << "eta,pearson,spearman,mean_cos,max_relative_inner,orthogonality_audit,matches_vanilla\n";
  csv << "vanilla," << g17(vanilla.pearson) << ',' << g17(vanilla.spearman) << ','
      << g17(vanilla.mean_cos) << ",,n/a,n/a\n";
  bool ok = true;
  for (double eta : o.etas) {
    OrthoAudit audit;
    const auto r = run(eta, &audit);
    std::string audit_flag = "n/a";
    if (eta == 1.0) {
      const bool pass = audit.rows_checked > 0 && audit.max_relative_inner <= 1e-10;
      audit_flag = pass ? "pass" : "fail";
      ok = ok && pass;
    }
    std::string matches = "n/a";
    if (eta == 0.0) {
      const bool same = r.predicted == vanilla.predicted;
      matches = same ? "yes" : "no";
      ok = ok && same;
    }
    csv << g17(eta) << ',' << g17(r.pearson) << ',' << g17(r.spearman) << ',' << g17(r.mean_cos)
        << ',' << (audit.rows_checked > 0 ? g17(audit.max_relative_inner) : "") << ','
        << audit_flag << ',' << matches << '\n';
  }
  emit(csv.str(), o.out, out);
  if (!ok) {
    err << "ortho-sweep: invariant violated (eta=0 row differs from vanilla or eta=1 audit failed)\n";
    return kExitFailure;
  }
  return kExitOk;
}

// ----------------------------------------------------------- scan-check

int cmd_scan_check(const BatteryConfig& cfg, std::ostream& out) {
  bool all = true;
  for (const auto& r : run_invariant_battery(cfg)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  out << (all ? "all invariants hold\n" : "invariant battery FAILED\n");
  return all ? kExitOk : kExitFailure;
}

// ------------------------------------------------------------- gen-dump

struct GenDumpOptions {
  std::string kind = "sequences";
  ExtractionOptions extraction;
  BackboneOptions backbone;
  std::size_t n = 10;
  std::size_t vocab = 64;
  std::size_t len_min = 8;
  std::size_t len_max = 24;
  std::string split = "validation";
  double train_fraction = 0.0;
  std::uint64_t data_seed = 0;
  std::string out;
};

int cmd_gen_dump(const GenDumpOptions& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("gen-dump requires --out");
  if (!(o.train_fraction >= 0.0 && o.train_fraction <= 1.0)) {
    throw UsageError("--train-fraction must lie in [0, 1]");
  }
  const ExtractionConfig ec = o.extraction.build();
  const LayerParams params = o.backbone.build();
  const std::string name(strategy_name(ec.strategy));
  std::vector<DumpRecord> records;

  if (o.kind == "sequences") {
    const auto batch = gen_token_sequences(o.vocab, o.n, {o.len_min, o.len_max}, params.d_model,
                                           o.data_seed);
    const auto vectors = extract_batch(params, batch.sequences, ec, thread_budget());
    const auto n_train = static_cast<std::size_t>(o.train_fraction * static_cast<double>(o.n));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      DumpRecord r;
      r.id = "seq" + std::to_string(i);
      r.split = o.train_fraction > 0.0 ? (i < n_train ? "train" : "validation") : o.split;
      // Label: whether the first token falls in the lower half of the vocabulary.
      r.label = batch.token_ids[i].front() < static_cast<int>(o.vocab / 2) ? 1 : 0;
      r.strategy = name;
      r.vector = vectors[i].values;
      records.push_back(std::move(r));
    }
  } else if (o.kind == "pairs") {
    const auto data = gen_token_pairs(o.vocab, o.n, o.len_max, params.d_model, o.data_seed);
    for (std::size_t i = 0; i < data.pairs.size(); ++i) {
      for (const auto& [suffix, seq] : {std::pair{"/a", &data.pairs[i].first},
                                        std::pair{"/b", &data.pairs[i].second}}) {
        DumpRecord r;
        r.id = "pair" + std::to_string(i) + suffix;
        r.split = o.split;
        r.gold_score = data.gold[i];
        r.strategy = name;
        r.vector = extract(params, *seq, ec).values;
        records.push_back(std::move(r));
      }
    }
  } else {
    throw UsageError("--kind must be sequences or pairs");
  }
  write_dump(records, o.out);
  out << "wrote " << records.size() << " records to " << o.out << '\n';
  return kExitOk;
}

}  // namespace

std::vector<std::int64_t> parse_seeds(const std::string& text) {
  std::vector<std::int64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    item = first == std::string::npos ? std::string{} : item.substr(first, last - first + 1);
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid seed '" + item + "' in --seeds " + text);
    }
  }
  if (seeds.empty()) throw UsageError("--seeds needs at least one seed");
  return seeds;
}

std::size_t thread_budget() {
  if (const char* env = std::getenv("SSMLAB_THREADS")) {
    try {
      const long long n = std::stoll(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ssmlab: selective state-space representation lab"};
  app.name(args.empty() ? "ssmlab" : args.front());
  app.require_subcommand(1);

  ProbeOptions probe;
  auto* probe_cmd = app.add_subcommand("probe", "Train the frozen-feature probe and write a report");
  probe_cmd->add_option("--task", probe.task, "collapse | separable | dump:<path>")->required();
  probe.extraction.add_to(*probe_cmd);
  probe.backbone.add_to(*probe_cmd);
  probe_cmd->add_option("--seeds", probe.seeds, "Comma-separated seeds")->capture_default_str();
  probe_cmd->add_option("--epochs", probe.epochs)->capture_default_str();
  probe_cmd->add_option("--batch-size", probe.batch_size)->capture_default_str();
  probe_cmd->add_option("--lr", probe.lr)->capture_default_str();
  probe_cmd->add_option("--weight-decay", probe.weight_decay)->capture_default_str();
  probe_cmd->add_option("--dropout", probe.dropout)->capture_default_str();
  probe_cmd->add_option("--metric", probe.metric, "auto | accuracy | mcc")->capture_default_str();
  probe_cmd->add_option("--out", probe.out, "Report path (stdout when omitted)");
  probe_cmd->add_option("--dim", probe.dim, "Feature dimension of synthetic tasks")->capture_default_str();
  probe_cmd->add_option("--noise", probe.noise, "Noise scale (collapse 0, separable 1)");
  probe_cmd->add_option("--margin", probe.margin)->capture_default_str();
  probe_cmd->add_option("--n-per-class", probe.n_per_class)->capture_default_str();
  probe_cmd->add_option("--data-seed", probe.data_seed)->capture_default_str();
  probe_cmd->add_option("--sample-pairs", probe.sample_pairs)->capture_default_str();
  probe_cmd->add_option("--sample-seed", probe.sample_seed)->capture_default_str();

  AnisotropyOptions aniso;
  auto* aniso_cmd = app.add_subcommand("anisotropy", "Pairwise cosine statistics and heatmap");
  aniso_cmd->add_option("--task", aniso.task, "collapse | separable | sts-synth | dump:<path>")
      ->capture_default_str();
  aniso.extraction.strategy = "final_state";
  aniso.extraction.add_to(*aniso_cmd);
  aniso.backbone.add_to(*aniso_cmd);
  aniso_cmd->add_option("--k", aniso.k, "Number of synthetic vectors")->capture_default_str();
  aniso_cmd->add_option("--dim", aniso.dim)->capture_default_str();
  aniso_cmd->add_option("--noise", aniso.noise)->capture_default_str();
  aniso_cmd->add_option("--data-seed", aniso.data_seed)->capture_default_str();
  aniso_cmd->add_option("--sample-pairs", aniso.sample_pairs)->capture_default_str();
  aniso_cmd->add_option("--seed", aniso.seed, "Pair sampling seed")->capture_default_str();
  aniso_cmd->add_option("--out", aniso.out, "Report path (stdout when omitted)");
  aniso_cmd->add_option("--heatmap", aniso.heatmap, "CSV heatmap path");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("ortho-sweep", "Similarity under orthogonal injection");
  sweep_cmd->add_option("--task", sweep.task, "sts-synth")->capture_default_str();
  sweep_cmd->add_option("--eta", sweep.etas, "Comma-separated eta values in [0, 1]")
      ->delimiter(',')
      ->capture_default_str();
  sweep.extraction.add_to(*sweep_cmd, false);
  sweep.backbone.add_to(*sweep_cmd);
  sweep_cmd->add_option("--n-pairs", sweep.n_pairs)->capture_default_str();
  sweep_cmd->add_option("--seq-len", sweep.seq_len)->capture_default_str();
  sweep_cmd->add_option("--vocab", sweep.vocab)->capture_default_str();
  sweep_cmd->add_option("--data-seed", sweep.data_seed)->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "CSV path (stdout when omitted)");

  BatteryConfig battery;
  auto* check_cmd = app.add_subcommand("scan-check", "Run the invariant battery");
  check_cmd->add_option("--seed", battery.seed)->capture_default_str();
  check_cmd->add_option("--max-patch-len", battery.max_patch_len)->capture_default_str();

  GenDumpOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-dump", "Write synthetic-backbone vectors as a dump file");
  gen_cmd->add_option("--kind", gen.kind, "sequences | pairs")->capture_default_str();
  gen.extraction.add_to(*gen_cmd);
  gen.backbone.add_to(*gen_cmd);
  gen_cmd->add_option("--n", gen.n, "Number of sequences or pairs")->capture_default_str();
  gen_cmd->add_option("--vocab", gen.vocab)->capture_default_str();
  gen_cmd->add_option("--len-min", gen.len_min)->capture_default_str();
  gen_cmd->add_option("--len-max", gen.len_max)->capture_default_str();
  gen_cmd->add_option("--split", gen.split)->capture_default_str();
  gen_cmd->add_option("--train-fraction", gen.train_fraction)->capture_default_str();
  gen_cmd->add_option("--data-seed", gen.data_seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dump path")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*probe_cmd) return cmd_probe(probe, out, err);
    if (*aniso_cmd) return cmd_anisotropy(aniso, out);
    if (*sweep_cmd) return cmd_ortho_sweep(sweep, out, err);
    if (*check_cmd) return cmd_scan_check(battery, out);
    if (*gen_cmd) return cmd_gen_dump(gen, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ssmlab::cli
