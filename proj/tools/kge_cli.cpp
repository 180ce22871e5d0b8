// kge: command-line front end for extraction, dataset variations, training,
// evaluation, cross validation, link prediction and graph statistics.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kConfigEnv = "KGE_CONFIG";

// Flags that map one-to-one onto RunConfig keys.
class KeyedFlags {
 public:
  explicit KeyedFlags(CLI::App* app) : app_(app) {}

  KeyedFlags& add(const std::string& flag, const std::string& key, const std::string& help) {
    auto* opt = app_->add_option(flag, values_[key], help);
    options_.emplace_back(key, opt);
    return *this;
  }

  void apply(kge::RunConfig& cfg) const {
    for (const auto& [key, opt] : options_)
      if (opt->count() > 0) cfg.set(key, values_.at(key));
  }

 private:
  CLI::App* app_;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, CLI::Option*>> options_;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::vector<std::string> sets;
  std::unique_ptr<KeyedFlags> flags;

  Command(CLI::App& root, const std::string& name, const std::string& description) {
    app = root.add_subcommand(name, description);
    flags = std::make_unique<KeyedFlags>(app);
    app->add_option("--config", config_path,
                    std::string("Flat key = value config file (default: $") + kConfigEnv + ")");
    app->add_option("--set", sets, "Override any config key, as key=value")->take_all();
    flags->add("--threads", "threads", "Worker threads for evaluation and CV folds");
  }

  KeyedFlags& add(const std::string& flag, const std::string& key, const std::string& help) {
    return flags->add(flag, key, help);
  }

  void model_flags() {
    add("--family", "family", "transe or complex");
    add("-k,--k", "k", "Embedding dimensionality");
    add("--eta", "eta", "Negatives per positive");
    add("--epochs", "epochs", "Training epochs");
    add("--batches-count", "batches_count", "Batches per epoch");
    add("--seed", "seed", "Seed for every random stream");
    add("--loss", "loss", "pairwise or multiclass-nll");
    add("--margin", "margin", "Pairwise margin");
    add("--lr,--learning-rate", "learning_rate", "Adam learning rate");
    add("--norm", "norm", "TransE distance norm: l1 or l2");
  }

  void variation_flags() {
    add("--triples", "triples", "Triple TSV file");
    add("--variation", "variation", "Dataset variation 1, 2 or 3");
    add("--lexicon", "lexicon", "Lexicon TSV (variations 2 and 3)");
    add("--sentences", "sentences", "Sentence TSV (variations 2 and 3)");
    add("--vectors", "vectors", "Token vector file (variation 3; default seeded random)");
    add("--pool", "pool", "Sentence pooling: mean or max");
    add("--freeze-hints", "freeze_hints", "Keep pooled sentence rows fixed during training");
  }

  kge::RunConfig resolve() const {
    kge::RunConfig cfg;
    std::string path = config_path;
    if (path.empty())
      if (const char* env = std::getenv(kConfigEnv)) path = env;
    if (!path.empty()) cfg = kge::load_run_config(path);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw kge::ConfigError(kv, "--set expects key=value");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    flags->apply(cfg);
    cfg.validate();
    return cfg;
  }
};

void write_json(const std::string& path, const json& j) {
  kge::write_file_atomic(path, j.dump(2) + "\n");
}

std::string family_name(kge::Family f) { return f == kge::Family::TransE ? "TransE" : "ComplEx"; }

// --------------------------------------------------------------------------

int cmd_extract(const kge::RunConfig& cfg) {
  const auto onto_path = cfg.require_path("ontology");
  const auto lexicon = kge::load_lexicon(cfg.require_path("lexicon"));
  const auto out = cfg.require_path("out");
  kge::OntologySource source{kge::load_triples(onto_path).graph, cfg.hierarchy_relation};
  source.validate();
  const auto r = kge::extract_first_order(source, lexicon);
  if (r.empty_warning())
    std::cerr << "warning: no lexicon concept found in " << onto_path << "; writing an empty file\n";
  kge::write_triples(r.graph, out);
  std::cout << "triples " << r.graph.size() << "\nentities " << r.graph.entities().size() << "\nrelations "
            << r.graph.relations().size() << "\ninverse_edges " << r.inverse_edges << "\nseeds_found "
            << r.seeds_found.size() << "\nseeds_missing " << r.seeds_missing.size() << '\n';
  return 0;
}

int cmd_variation(const kge::RunConfig& cfg) {
  const auto d = kge::prepare_dataset(cfg, cfg.variation);
  kge::write_triples(d.graph, cfg.require_path("out"));
  std::cout << "variation " << cfg.variation << "\ntriples " << d.graph.size() << "\nentities "
            << d.graph.entities().size() << "\nrelations " << d.graph.relations().size()
            << "\nconcepts_added " << d.variation.concepts_added << "\nsame_as_edges "
            << d.variation.same_as_edges << "\nunlinked_concepts " << d.variation.unlinked_concepts
            << "\nsentence_entities " << d.variation.sentence_entities << "\nmentions_edges "
            << d.variation.mentions_edges << '\n';
  return 0;
}

int cmd_split(const kge::RunConfig& cfg, bool kfold) {
  const auto graph = kge::load_triples(cfg.require_path("triples")).graph;
  const fs::path out = cfg.require_path("out");
  fs::create_directories(out);
  auto report = [](const std::string& name, const kge::SplitResult& s) {
    std::cout << name << " train " << s.train.size() << " test " << s.test.size() << " (before repair: "
              << s.train_before_repair << "/" << s.test_before_repair << ", moved " << s.moved.size()
              << ", dropped " << s.dropped.size() << ")\n";
  };
  if (!kfold) {
    const auto s = kge::split_holdout(graph, cfg.train_fraction, cfg.model.seed, cfg.repair);
    kge::write_triples(s.train, out / "train.tsv");
    kge::write_triples(s.test, out / "test.tsv");
    report("holdout", s);
    return 0;
  }
  const auto folds = kge::split_kfold(graph, static_cast<std::size_t>(cfg.cv_k), cfg.model.seed, cfg.repair);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    kge::write_triples(folds[i].train, out / ("fold" + std::to_string(i) + "_train.tsv"));
    kge::write_triples(folds[i].test, out / ("fold" + std::to_string(i) + "_test.tsv"));
    report("fold " + std::to_string(i), folds[i]);
  }
  return 0;
}

int cmd_train(const kge::RunConfig& cfg) {
  const auto checkpoint = cfg.require_path("checkpoint");
  auto trace_path = cfg.path("trace");
  if (trace_path.empty()) trace_path = checkpoint + ".trace.json";

  const auto d = kge::prepare_dataset(cfg, cfg.variation);
  std::cout << "config " << kge::to_json(cfg).dump() << '\n';
  auto result = kge::train_dataset(d.graph, d.hints, cfg);
  kge::save_checkpoint(result.model, checkpoint);

  json trace = kge::to_json(result.trace);
  trace["config"] = kge::to_json(cfg);
  trace["inputs"] = d.inputs;
  trace["triples"] = d.graph.size();
  write_json(trace_path, trace);

  std::cout << "triples " << d.graph.size() << "\nentities " << d.graph.entities().size() << '\n';
  for (std::size_t e = 0; e < result.trace.epoch_loss.size(); ++e)
    std::cout << "epoch " << (e + 1) << " loss " << std::setprecision(6) << result.trace.epoch_loss[e] << '\n';
  std::cout << "checksum " << result.trace.model_checksum << "\ncheckpoint " << checkpoint << '\n';
  return 0;
}

void print_report_row(const std::string& label, const kge::EvalReport& r, const std::string& model) {
  const kge::ComparisonRow row{label, model, r.metrics};
  std::cout << kge::render_comparison_table(std::span<const kge::ComparisonRow>(&row, 1));
}

int cmd_evaluate(const kge::RunConfig& cfg, const std::vector<std::string>& extra_known) {
  const auto ckpt_path = cfg.require_path("checkpoint");
  const auto model = kge::load_checkpoint(ckpt_path);
  const auto test_path = cfg.require_path("test");
  const auto test = kge::load_triples(test_path).graph;

  json inputs = {{"checkpoint", kge::input_hash(ckpt_path)}, {"test", kge::input_hash(test_path)}};
  std::vector<kge::KnowledgeGraph> known_graphs{test};
  std::vector<std::string> known_paths = extra_known;
  if (!cfg.path("known").empty()) known_paths.push_back(cfg.path("known"));
  for (std::size_t i = 0; i < known_paths.size(); ++i) {
    known_graphs.push_back(kge::load_triples(known_paths[i]).graph);
    inputs["known" + std::to_string(i)] = kge::input_hash(known_paths[i]);
  }
  kge::KnownTriples known;
  for (const auto& g : known_graphs) known.add(model, g);

  auto report = kge::evaluate(model, test, known, cfg.protocol, cfg.threads);
  json config = kge::to_json(cfg);
  config["model"] = kge::to_json(model.config());
  report.config = config;

  json j = kge::to_json(report);
  j["inputs"] = inputs;
  if (!cfg.path("report").empty()) write_json(cfg.path("report"), j);
  if (cfg.format == "json") {
    std::cout << j.dump(2) << '\n';
  } else {
    print_report_row("Evaluation (" + kge::to_string(cfg.protocol) + ")", report, family_name(model.family()));
    std::cout << kge::format_metrics(report.metrics) << '\n';
  }
  return 0;
}

int cmd_cv(const kge::RunConfig& cfg) {
  const auto d = kge::prepare_dataset(cfg, cfg.variation);
  const auto r = kge::run_cv(d.graph, d.hints, cfg);

  std::vector<kge::ComparisonRow> rows;
  const auto model = family_name(cfg.model.family);
  for (std::size_t i = 0; i < r.folds.size(); ++i)
    rows.push_back({"Fold " + std::to_string(i + 1), model, r.folds[i].metrics});
  rows.push_back({"Mean", model, r.summary.mean});
  rows.push_back({"Std", model, r.summary.stddev});

  json j;
  j["config"] = kge::to_json(cfg);
  j["inputs"] = d.inputs;
  j["fold_test_sizes"] = r.fold_test_sizes;
  j["folds"] = json::array();
  for (const auto& f : r.folds) j["folds"].push_back(kge::to_json(f, false));
  j["mean"] = {{"mrr", r.summary.mean.mrr}, {"hits1", r.summary.mean.hits1}, {"hits10", r.summary.mean.hits10}};
  j["std"] = {{"mrr", r.summary.stddev.mrr}, {"hits1", r.summary.stddev.hits1}, {"hits10", r.summary.stddev.hits10}};
  if (!cfg.path("report").empty()) write_json(cfg.path("report"), j);
  if (cfg.format == "json")
    std::cout << j.dump(2) << '\n';
  else
    std::cout << kge::render_comparison_table(rows);
  return 0;
}

int cmd_predict(const kge::RunConfig& cfg, const std::string& subject, const std::string& predicate,
                const std::string& object) {
  if (predicate.empty()) throw kge::ConfigError("predicate", "is required");
  if (subject.empty() == object.empty())
    throw kge::ConfigError("subject", "give exactly one of --subject and --object");
  const auto model = kge::load_checkpoint(cfg.require_path("checkpoint"));
  const auto preds = subject.empty() ? kge::predict_subjects(model, predicate, object, cfg.top_k)
                                     : kge::predict_links(model, subject, predicate, cfg.top_k);
  if (cfg.format == "json") {
    json arr = json::array();
    for (const auto& p : preds) arr.push_back({{"entity", p.entity}, {"score", p.score}});
    std::cout << arr.dump(2) << '\n';
    return 0;
  }
  for (std::size_t i = 0; i < preds.size(); ++i)
    std::cout << std::setw(4) << (i + 1) << "  " << std::fixed << std::setprecision(4) << std::setw(10)
              << preds[i].score << "  " << preds[i].entity << '\n';
  return 0;
}

int cmd_stats(const kge::RunConfig& cfg, std::size_t top_k) {
  const auto path = cfg.require_path("triples");
  const auto report = kge::graph_stats(kge::load_triples(path).graph, top_k);
  json j = kge::to_json(report);
  j["config"] = kge::to_json(cfg);
  j["inputs"] = {{"triples", kge::input_hash(path)}};
  if (!cfg.path("report").empty()) write_json(cfg.path("report"), j);
  if (cfg.format == "json")
    std::cout << j.dump(2) << '\n';
  else
    std::cout << kge::render_stats_table(report);
  return 0;
}

int cmd_compare(kge::RunConfig cfg, const std::vector<int>& variations, const std::vector<std::string>& families) {
  std::vector<kge::ComparisonRow> rows;
  if (!cfg.path("baselines").empty())
    rows = kge::parse_baselines(json::parse(kge::read_file(cfg.path("baselines"))));

  json j;
  j["config"] = kge::to_json(cfg);
  j["runs"] = json::array();
  for (int v : variations) {
    cfg.variation = v;
    const auto d = kge::prepare_dataset(cfg, v);
    for (const auto& fam : families) {
      auto run_cfg = cfg;
      run_cfg.model.family = kge::parse_family(fam);
      const auto out = kge::run_holdout(d.graph, d.hints, run_cfg);
      rows.push_back({"Variation " + std::to_string(v), family_name(run_cfg.model.family), out.report.metrics});
      json run = kge::to_json(out.report, false);
      run["variation"] = v;
      run["inputs"] = d.inputs;
      run["triples"] = d.graph.size();
      j["runs"].push_back(std::move(run));
      std::cerr << "variation " << v << " " << family_name(run_cfg.model.family) << ": "
                << kge::format_metrics(out.report.metrics) << '\n';
    }
  }
  j["table"] = kge::to_json(rows);
  if (!cfg.path("report").empty()) write_json(cfg.path("report"), j);
  if (cfg.format == "json")
    std::cout << j.dump(2) << '\n';
  else
    std::cout << kge::render_comparison_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge graph embedding toolkit: TransE and ComplEx with text fusion"};
  app.require_subcommand(1);

  Command extract(app, "extract", "Extract first-order ontology triples for a lexicon");
  extract.add("--ontology", "ontology", "Ontology triple TSV").add("--lexicon", "lexicon", "Lexicon TSV")
      .add("--out,-o", "out", "Output triple TSV")
      .add("--hierarchy-relation", "hierarchy_relation", "Child -> parent relation label (default 'is a')");

  Command variation(app, "variation", "Build dataset variation 1, 2 or 3 and write it as TSV");
  variation.variation_flags();
  variation.add("--out,-o", "out", "Output triple TSV");
  variation.add("-k,--k", "k", "Dimension used for sentence vectors");

  Command split(app, "split", "Holdout or k-fold split of a triple file");
  split.add("--triples", "triples", "Triple TSV")
      .add("--train-fraction", "train_fraction", "Holdout train share (default 0.8)")
      .add("--seed", "seed", "Shuffle seed")
      .add("--cv-k", "cv_k", "Write k folds instead of a holdout split")
      .add("--repair", "repair", "Unseen test entities: move (to train) or drop")
      .add("--out,-o", "out", "Output directory");

  Command train(app, "train", "Train a TransE or ComplEx model");
  train.variation_flags();
  train.model_flags();
  train.add("--checkpoint", "checkpoint", "Checkpoint output path").add("--trace", "trace", "Trace JSON path");

  Command evaluate(app, "evaluate", "Link-prediction evaluation of a checkpoint");
  std::vector<std::string> extra_known;
  evaluate.add("--checkpoint", "checkpoint", "Checkpoint file")
      .add("--test", "test", "Test triple TSV")
      .add("--protocol", "protocol", "raw or filtered (default filtered)")
      .add("--report", "report", "Write the JSON report here")
      .add("--format", "format", "Standard output format: text or json");
  evaluate.app->add_option("--known", extra_known, "Additional known-triple TSV files (e.g. train)")->take_all();

  Command cv(app, "cv", "k-fold cross validation");
  cv.variation_flags();
  cv.model_flags();
  cv.add("--cv-k", "cv_k", "Number of folds (default 10)")
      .add("--protocol", "protocol", "raw or filtered")
      .add("--repair", "repair", "move or drop")
      .add("--report", "report", "Write the JSON report here")
      .add("--format", "format", "text or json");

  Command predict(app, "predict", "Rank candidate objects (or subjects) for a query");
  std::string subject, predicate, object;
  predict.add("--checkpoint", "checkpoint", "Checkpoint file")
      .add("--top-k", "top_k", "Number of results")
      .add("--format", "format", "text or json");
  predict.app->add_option("--subject", subject, "Query subject (predicts objects)");
  predict.app->add_option("--predicate", predicate, "Query relation");
  predict.app->add_option("--object", object, "Query object (predicts subjects)");

  Command stats(app, "stats", "Top subjects, predicates and objects");
  std::size_t stats_top = 5;
  stats.add("--triples", "triples", "Triple TSV")
      .add("--format", "format", "text or json")
      .add("--report", "report", "Write the JSON report here");
  stats.app->add_option("--top-k", stats_top, "Entries per role (default 5)");

  Command compare(app, "compare", "Holdout comparison of variations x models as one table");
  std::string variation_list = "1,2,3", family_list = "complex,transe";
  compare.variation_flags();
  compare.model_flags();
  compare.add("--train-fraction", "train_fraction", "Holdout train share")
      .add("--protocol", "protocol", "raw or filtered")
      .add("--baselines", "baselines", "JSON list of {name, mrr, hits10, hits1}")
      .add("--report", "report", "Write the JSON report here")
      .add("--format", "format", "text or json");
  compare.app->add_option("--variations", variation_list, "Comma-separated variations (default 1,2,3)");
  compare.app->add_option("--families", family_list, "Comma-separated families (default complex,transe)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (extract.app->parsed()) return cmd_extract(extract.resolve());
    if (variation.app->parsed()) return cmd_variation(variation.resolve());
    if (split.app->parsed()) {
      const bool kfold = split.app->get_option("--cv-k")->count() > 0;
      return cmd_split(split.resolve(), kfold);
    }
    if (train.app->parsed()) return cmd_train(train.resolve());
    if (evaluate.app->parsed()) return cmd_evaluate(evaluate.resolve(), extra_known);
    if (cv.app->parsed()) return cmd_cv(cv.resolve());
    if (predict.app->parsed()) return cmd_predict(predict.resolve(), subject, predicate, object);
    if (stats.app->parsed()) return cmd_stats(stats.resolve(), stats_top);
    if (compare.app->parsed()) {
      std::vector<int> vs;
      for (const auto& s : kge::split_fields(variation_list, ','))
        vs.push_back(kge::detail::parse_int<int>("variations", kge::detail::trim(s)));
      std::vector<std::string> fams;
      for (const auto& s : kge::split_fields(family_list, ',')) fams.emplace_back(kge::detail::trim(s));
      return cmd_compare(compare.resolve(), vs, fams);
    }
  } catch (const kge::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
