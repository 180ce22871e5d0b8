// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kge.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace kge;
namespace fs = std::filesystem;

const std::string kFixture = KGE_FIXTURE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> body;
};

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(KGE_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

// ---------------------------------------------------------------------------

Outcome metric_definitions() {
  const std::vector<std::uint32_t> one{1}, two{2}, hits{1, 11, 3};
  const double a = mean_reciprocal_rank(one), b = mean_reciprocal_rank(two), h = hits_at(hits, 10);
  const bool ok = a == 1.0 && b == 0.5 && h == 2.0 / 3.0;
  return {ok, "MRR[1]=" + fmt(a) + " MRR[2]=" + fmt(b) + " Hits@10[1,11,3]=" + fmt(h, 6)};
}

Outcome ranking_oracle() {
  std::size_t mismatches = 0, checked = 0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    auto rng = RandomStream::derive(trial, "acceptance.ranking");
    const auto n_ent = 3 + rng.uniform_index(8);  // 3..10
    const auto n_rel = 1 + rng.uniform_index(3);
    const auto n_triples = 1 + rng.uniform_index(40);
    GraphBuilder b;
    for (std::size_t i = 0; i < n_triples; ++i)
      b.add(Triple{"e" + std::to_string(rng.uniform_index(n_ent)), "r" + std::to_string(rng.uniform_index(n_rel)),
                   "e" + std::to_string(rng.uniform_index(n_ent))});
    const auto g = std::move(b).build();

    const auto family = trial % 2 == 0 ? Family::ComplEx : Family::TransE;
    // model over the graph's own vocabulary, with ties in half of the trials
    auto donor = oracle::random_model(family, 3, g.entities().size(), g.relations().size(), trial, trial % 4 < 2);
    ModelConfig c = donor.config();
    EmbeddingModel m(c, g.entities(), g.relations());
    m.entity_table() = donor.entity_table();
    m.relation_table() = donor.relation_table();

    TriadSet known(g.triads().begin(), g.triads().end());
    const KnowledgeGraph* known_graphs[] = {&g};
    for (auto protocol : {Protocol::Raw, Protocol::Filtered}) {
      const auto report = evaluate(m, g, known_graphs, protocol);
      for (const auto& r : report.records) {
        ++checked;
        if (r.rank != oracle::brute_force_rank(m, r.triad, r.side, protocol, known)) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(checked) + " ranks, " + std::to_string(mismatches) + " mismatches"};
}

Outcome gradient_correctness() {
  double worst = 0.0;
  std::size_t params = 0;
  for (auto family : {Family::TransE, Family::ComplEx})
    for (auto loss : {LossKind::Pairwise, LossKind::MulticlassNll})
      for (std::uint64_t i = 0; i < 20; ++i) {
        auto m = oracle::random_model(family, 5, 15, 4, 1000 + i);
        auto rng = RandomStream::derive(i, "acceptance.gradient");
        const Triad pos{static_cast<std::uint32_t>(rng.uniform_index(15)),
                        static_cast<std::uint32_t>(rng.uniform_index(4)),
                        static_cast<std::uint32_t>(rng.uniform_index(15))};
        const auto r = gradient_check(m, pos, loss, 1e-4, i);
        worst = std::max(worst, r.max_relative_error);
        params += r.parameters_checked;
      }
  std::ostringstream os;
  os << "max relative error " << std::scientific << std::setprecision(2) << worst << " over " << params
     << " parameters (80 instances)";
  return {worst < 1e-3, os.str()};
}

Outcome determinism(const testing::TempDir& dir) {
  const std::string base = "train --triples " + kFixture + "/triples.tsv --checkpoint ";
  const auto a = dir.path() / "det_a.kge", b = dir.path() / "det_b.kge", c = dir.path() / "det_c.kge";
  const int ra = cli(base + a.string(), dir.path() / "det_a.log");
  const int rb = cli(base + b.string(), dir.path() / "det_b.log");
  const int rc = cli(base + c.string() + " --seed 556", dir.path() / "det_c.log");
  if (ra != 0 || rb != 0 || rc != 0)
    return {false, "train exited with " + std::to_string(ra) + "/" + std::to_string(rb) + "/" + std::to_string(rc)};

  const auto echoed = read_file(dir.path() / "det_a.log");
  const auto config = nlohmann::json::parse(echoed.substr(7, echoed.find('\n') - 7));
  const bool defaults = config["k"] == 150 && config["eta"] == 10 && config["epochs"] == 10 &&
                        config["batches_count"] == 100 && config["seed"] == 555;
  const bool same = read_file(a) == read_file(b);
  const bool differs = read_file(a) != read_file(c);
  return {defaults && same && differs, std::string("defaults echoed: ") + (defaults ? "yes" : "no") +
                                           ", identical reruns: " + (same ? "yes" : "no") +
                                           ", seed 556 differs: " + (differs ? "yes" : "no") + " (checksum " +
                                           model_checksum(load_checkpoint(a)) + ")"};
}

Outcome learnability() {
  const auto g = load_triples(kFixture + "/triples.tsv").graph;
  const auto split = split_holdout(g, 0.8, 555);
  const KnowledgeGraph* known[] = {&g};
  const double n = static_cast<double>(g.entities().size());
  double harmonic = 0.0;
  for (int i = 1; i <= static_cast<int>(n); ++i) harmonic += 1.0 / i;
  const double random_mrr = harmonic / n;

  std::ostringstream detail;
  detail << g.size() << " triples, " << g.entities().size() << " entities, random MRR " << fmt(random_mrr);
  bool ok = true;
  for (auto family : {Family::ComplEx, Family::TransE}) {
    ModelConfig c;
    c.family = family;
    c.epochs = 200;
    const auto trained = train(split.train, c);
    const auto report = evaluate(trained.model, split.test, known, Protocol::Filtered);
    const double mrr = report.metrics.mrr;
    const bool beats = mrr >= 5.0 * random_mrr;
    ok = ok && beats && (family != Family::ComplEx || mrr >= 0.6);
    detail << "; " << to_string(family) << " filtered MRR " << fmt(mrr) << " (" << fmt(mrr / random_mrr, 1)
           << "x random)";
  }
  return {ok, detail.str()};
}

Outcome variation_harness(const testing::TempDir& dir) {
  const auto report = dir.path() / "compare.json";
  const auto log = dir.path() / "compare.log";
  const int rc = cli("compare --triples " + kFixture + "/triples.tsv --lexicon " + kFixture +
                         "/lexicon.tsv --sentences " + kFixture + "/sentences.tsv --epochs 20 --report " +
                         report.string(),
                     log);
  if (rc != 0) return {false, "compare exited with " + std::to_string(rc) + ": " + read_file(log)};
  const auto j = nlohmann::json::parse(read_file(report));
  int rows = 0;
  bool populated = true;
  std::ostringstream detail;
  for (const auto& row : j["table"]) {
    for (const char* key : {"mrr", "hits10", "hits1"}) {
      const auto& v = row[key];
      populated = populated && v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0;
    }
    const auto g = row["group"].get<std::string>();
    rows += g == "Variation 1" || g == "Variation 2" || g == "Variation 3";
    detail << (rows > 1 ? "; " : "") << g << " " << row["model"].get<std::string>() << " MRR "
           << fmt(row["mrr"].get<double>(), 2);
  }
  const auto table = read_file(log);
  const bool rendered = table.find("Variation 3") != std::string::npos && table.find("Hits@10") != std::string::npos;
  return {rows == 6 && populated && rendered, detail.str()};
}

Outcome split_arithmetic(const testing::TempDir& dir) {
  std::string tsv;
  for (int i = 0; i < 15336; ++i)
    tsv += "concept " + std::to_string(i % 1500) + "\trelation " + std::to_string(i % 9) + "\tconcept " +
           std::to_string((i * 31 + 7) % 1500) + " " + std::to_string(i / 1500) + "\n";
  const auto path = dir.write("synthetic.tsv", tsv);
  const auto g = load_triples(path).graph;
  const auto holdout = split_holdout(g, 0.8, 555);
  const auto folds = split_kfold(g, 10, 555);
  std::size_t total = 0;
  bool sizes_ok = folds.size() == 10;
  std::ostringstream fold_list;
  for (const auto& f : folds) {
    sizes_ok = sizes_ok && (f.test_before_repair == 1533 || f.test_before_repair == 1534);
    total += f.test_before_repair;
    fold_list << (total == f.test_before_repair ? "" : ",") << f.test_before_repair;
  }
  const bool ok = g.size() == 15336 && holdout.train_before_repair == 12269 && holdout.test_before_repair == 3067 &&
                  sizes_ok && total == 15336;
  return {ok, std::to_string(g.size()) + " triples -> " + std::to_string(holdout.train_before_repair) + "/" +
                  std::to_string(holdout.test_before_repair) + "; folds {" + fold_list.str() + "} sum " +
                  std::to_string(total)};
}

Outcome symmetry_properties() {
  double worst_sym = 0.0, worst_anti = 0.0, max_transe = -INFINITY, worst_exact = 0.0;
  for (std::uint64_t draw = 0; draw < 1000; ++draw) {
    auto m = oracle::random_model(Family::ComplEx, 8, 2, 2, draw);
    const int k = 8;
    auto real_rel = m.relation_table().row(0);
    auto imag_rel = m.relation_table().row(1);
    for (int j = 0; j < k; ++j) {
      real_rel[k + j] = 0.0f;
      imag_rel[j] = 0.0f;
    }
    const double a = score_complex(m, 0, 0, 1), b = score_complex(m, 1, 0, 0);
    const double c = score_complex(m, 0, 1, 1), d = score_complex(m, 1, 1, 0);
    worst_sym = std::max(worst_sym, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}));
    worst_anti = std::max(worst_anti, std::abs(c + d) / std::max({std::abs(c), std::abs(d), 1e-12}));

    auto t = oracle::random_model(Family::TransE, 8, 3, 1, draw);
    for (std::uint32_t s = 0; s < 3; ++s)
      for (std::uint32_t o = 0; o < 3; ++o) max_transe = std::max(max_transe, score_transe(t, s, 0, o));
    // exact translation: entity 2 := entity 0 + relation, on values exactly representable
    auto rng = RandomStream::derive(draw, "acceptance.translation");
    for (int j = 0; j < 8; ++j) {
      const float s = static_cast<float>(rng.uniform_index(64)) / 8.0f - 4.0f;
      const float r = static_cast<float>(rng.uniform_index(64)) / 8.0f - 4.0f;
      t.entity_table().row(0)[j] = s;
      t.relation_table().row(0)[j] = r;
      t.entity_table().row(2)[j] = s + r;
    }
    worst_exact = std::max(worst_exact, std::abs(score_transe(t, 0, 0, 2)));
  }
  const bool ok = worst_sym <= 1e-6 && worst_anti <= 1e-6 && max_transe <= 0.0 && worst_exact == 0.0;
  std::ostringstream os;
  os << "symmetry rel err " << worst_sym << ", antisymmetry rel err " << worst_anti << ", max TransE score "
     << max_transe << ", exact-translation |score| " << worst_exact;
  return {ok, os.str()};
}

Outcome checkpoint_round_trip(const testing::TempDir& dir) {
  const auto g = load_triples(kFixture + "/triples.tsv").graph;
  std::size_t scores = 0;
  bool ok = true;
  for (auto family : {Family::ComplEx, Family::TransE}) {
    ModelConfig c;
    c.family = family;
    c.epochs = 2;
    const auto model = train(g, c).model;
    const auto path = dir.path() / ("rt_" + to_string(family) + ".kge");
    save_checkpoint(model, path);
    const auto back = load_checkpoint(path);
    const auto before = score_batch(model, g.triads());
    const auto after = score_batch(back, g.triads());
    for (std::size_t i = 0; i < before.size(); ++i)
      ok = ok && std::memcmp(&before[i], &after[i], sizeof(double)) == 0;
    scores += before.size();
  }
  return {ok, std::to_string(scores) + " scores compared bit for bit"};
}

}  // namespace

int main() {
  testing::TempDir dir;
  const std::vector<Criterion> criteria = {
      {1, "metric definitions", 1.0, metric_definitions},
      {2, "ranking equals brute-force oracle", 10.0, ranking_oracle},
      {3, "gradient check", 0.0, gradient_correctness},
      {4, "training determinism", 0.0, [&] { return determinism(dir); }},
      {5, "learnability on the fixture", 120.0, learnability},
      {6, "variation comparison harness", 0.0, [&] { return variation_harness(dir); }},
      {7, "split and CV arithmetic", 0.0, [&] { return split_arithmetic(dir); }},
      {8, "ComplEx symmetry and TransE sign", 0.0, symmetry_properties},
      {9, "checkpoint round trip", 0.0, [&] { return checkpoint_round_trip(dir); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      o.pass = false;
      o.detail += "; exceeded " + fmt(c.time_limit, 0) + " s";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "C" << c.id << " " << c.title << " (" << fmt(secs, 2)
              << " s): " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
