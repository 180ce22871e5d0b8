#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "kge/checkpoint.hpp"
#include "kge/evaluator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace kge {
namespace {

namespace fs = std::filesystem;

const std::string kFixture = KGE_FIXTURE_DIR;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  CliResult run(const std::string& args, const std::string& env = "") const {
    const auto out = dir_.path() / "stdout.txt", err = dir_.path() / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(KGE_CLI) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
  }

  std::string tmp(const std::string& name) const { return (dir_.path() / name).string(); }

  // A trained checkpoint of the separable fixture.
  std::string train_separable(const std::string& name, const std::string& extra = "") const {
    const auto ckpt = tmp(name);
    const auto r = run("train --triples " + kFixture + "/separable.tsv --checkpoint " + ckpt +
                       " --k 16 --epochs 300 --batches-count 2 --lr 0.05 " + extra);
    EXPECT_EQ(r.code, 0) << r.err;
    return ckpt;
  }

  testing::TempDir dir_;
};

TEST_F(CliTest, ExtractParentChildFixture) {
  dir_.write("onto.tsv",
             "abdominal pain\tis a\tpain\n"
             "colic\tis a\tabdominal pain\n"
             "infantile colic\tis a\tcolic\n"
             "abdominal pain\tmay be finding of disease\tpelvic lipomatosis\n");
  dir_.write("lex.tsv", "abdominal pain\tabdominal pain\n");
  const auto r = run("extract --ontology " + tmp("onto.tsv") + " --lexicon " + tmp("lex.tsv") + " --out " +
                     tmp("out.tsv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("triples 4"), std::string::npos) << r.out;
  const auto g = load_triples(tmp("out.tsv")).graph;
  EXPECT_EQ(g.size(), 4u);
  EXPECT_TRUE(g.contains(Triple{"abdominal pain", "inverse is a", "colic"}));
  EXPECT_FALSE(g.contains(Triple{"infantile colic", "is a", "colic"}));
}

TEST_F(CliTest, ExtractReproducesBundledTriples) {
  const auto r = run("extract --ontology " + kFixture + "/ontology.tsv --lexicon " + kFixture +
                     "/lexicon.tsv -o " + tmp("t.tsv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(tmp("t.tsv")), read_file(kFixture + "/triples.tsv"));
}

TEST_F(CliTest, EmptyLexiconIsUsageError) {
  dir_.write("empty.tsv", "");
  const auto r = run("extract --ontology " + kFixture + "/ontology.tsv --lexicon " + tmp("empty.tsv") +
                     " -o " + tmp("x.tsv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lexicon"), std::string::npos);
}

TEST_F(CliTest, UnmatchedLexiconWarnsButSucceeds) {
  dir_.write("lex.tsv", "nothing like this\tnothing like this\n");
  const auto r = run("extract --ontology " + kFixture + "/ontology.tsv --lexicon " + tmp("lex.tsv") +
                     " -o " + tmp("x.tsv"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(CliTest, EchoedLossFollowsFamily) {
  const std::string base = "train --triples " + kFixture + "/separable.tsv --epochs 1 --batches-count 2 --k 4 ";
  const auto c = run(base + "--family complex --checkpoint " + tmp("c.kge"));
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(c.out.find("\"loss\":\"multiclass-nll\""), std::string::npos) << c.out;
  const auto t = run(base + "--family transe --checkpoint " + tmp("t.kge"));
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("\"loss\":\"pairwise\""), std::string::npos) << t.out;
}

TEST_F(CliTest, DefaultsAreEchoed) {
  const auto r = run("train --triples " + kFixture + "/triples.tsv --epochs 1 --checkpoint " + tmp("d.kge"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto line = r.out.substr(7, r.out.find('\n') - 7);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["k"], 150);
  EXPECT_EQ(j["eta"], 10);
  EXPECT_EQ(j["batches_count"], 100);
  EXPECT_EQ(j["seed"], 555);
  EXPECT_EQ(j["family"], "complex");
}

TEST_F(CliTest, RerunGivesSameChecksum) {
  const auto a = train_separable("a.kge");
  const auto b = train_separable("b.kge");
  EXPECT_EQ(read_file(a), read_file(b));
  const auto trace = nlohmann::json::parse(read_file(a + ".trace.json"));
  EXPECT_EQ(trace["model_checksum"], model_checksum(load_checkpoint(a)));
  EXPECT_EQ(trace["epoch_loss"].size(), 300u);
  EXPECT_TRUE(trace["inputs"].contains("triples"));
}

TEST_F(CliTest, EvaluateSeparableFixtureIsPerfect) {
  const auto ckpt = train_separable("s.kge");
  const auto r = run("evaluate --checkpoint " + ckpt + " --test " + kFixture +
                     "/separable.tsv --format json --report " + tmp("rep.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_file(tmp("rep.json")));
  EXPECT_EQ(j["mrr"], 1.0);
  EXPECT_EQ(j["hits1"], 1.0);
  EXPECT_EQ(j["protocol"], "filtered");
  EXPECT_TRUE(j["config"].contains("k"));
  EXPECT_TRUE(j["inputs"].contains("checkpoint"));

  // every rank confirmed by brute force
  const auto model = load_checkpoint(ckpt);
  const auto test = load_triples(kFixture + "/separable.tsv").graph;
  TriadSet known;
  for (const auto& t : test.triples()) known.insert(model.triad_of(t));
  for (const auto& t : test.triples())
    for (auto side : {Side::Subject, Side::Object})
      EXPECT_EQ(oracle::brute_force_rank(model, model.triad_of(t), side, Protocol::Filtered, known), 1u);
}

TEST_F(CliTest, VocabularyMismatchIsExplicit) {
  const auto ckpt = train_separable("v.kge");
  dir_.write("other.tsv", "headache\tmay be treated by\ttriptan\n");
  const auto r = run("evaluate --checkpoint " + ckpt + " --test " + tmp("other.tsv"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("not covered by the model vocabulary"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("triptan"), std::string::npos);
}

TEST_F(CliTest, CvWithTooManyFoldsIsUsageError) {
  const auto r = run("cv --triples " + kFixture + "/separable.tsv --cv-k 13 --batches-count 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cv_k"), std::string::npos) << r.err;
}

TEST_F(CliTest, CvRunsAndReports) {
  const auto r = run("cv --triples " + kFixture + "/triples.tsv --cv-k 3 --k 8 --epochs 2 "
                     "--report " + tmp("cv.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Fold 3"), std::string::npos);
  EXPECT_NE(r.out.find("Mean"), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(tmp("cv.json")));
  EXPECT_EQ(j["folds"].size(), 3u);
}

TEST_F(CliTest, StatsTable) {
  const auto r = run("stats --triples " + kFixture + "/triples.tsv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("Top 5", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("Subject"), std::string::npos);
  EXPECT_NE(r.out.find("Predicate"), std::string::npos);
  EXPECT_NE(r.out.find("inverse is a"), std::string::npos);
  EXPECT_NE(r.out.find('%'), std::string::npos);

  const auto j = run("stats --triples " + kFixture + "/triples.tsv --format json");
  EXPECT_EQ(nlohmann::json::parse(j.out)["subjects"].size(), 5u);
}

TEST_F(CliTest, SplitWritesFiles) {
  const auto r = run("split --triples " + kFixture + "/triples.tsv -o " + tmp("split"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto train = load_triples(tmp("split/train.tsv")).graph;
  const auto test = load_triples(tmp("split/test.tsv")).graph;
  EXPECT_EQ(train.size() + test.size(), load_triples(kFixture + "/triples.tsv").graph.size());
  const auto k = run("split --triples " + kFixture + "/separable.tsv --cv-k 4 -o " + tmp("folds"));
  ASSERT_EQ(k.code, 0) << k.err;
  EXPECT_TRUE(fs::exists(tmp("folds/fold3_test.tsv")));
}

TEST_F(CliTest, PredictRanksTreatment) {
  const auto ckpt = train_separable("p.kge");
  const auto r = run("predict --checkpoint " + ckpt +
                     " --subject headache --predicate 'may be treated by' --top-k 3 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 3u);
  const auto s = run("predict --checkpoint " + ckpt + " --object pain --predicate 'is a' --top-k 2");
  EXPECT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(run("predict --checkpoint " + ckpt + " --predicate 'is a'").code, 2);
}

TEST_F(CliTest, ConfigFileEnvAndOverrides) {
  dir_.write("run.conf", "epochs = 2\nbatches_count = 3\nk = 4\n");
  const std::string args = "train --triples " + kFixture + "/separable.tsv --checkpoint " + tmp("c.kge");
  const auto r = run(args + " --epochs 3", "KGE_CONFIG=" + tmp("run.conf"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"epochs\":3"), std::string::npos);
  EXPECT_NE(r.out.find("\"batches_count\":3"), std::string::npos);

  const auto bad = run(args + " --set colour=blue");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("colour"), std::string::npos);
  const auto badk = run(args + " --k -5");
  EXPECT_EQ(badk.code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
}

TEST_F(CliTest, BatchesBeyondTriplesIsUsageError) {
  const auto r = run("train --triples " + kFixture + "/separable.tsv --checkpoint " + tmp("c.kge"));
  EXPECT_EQ(r.code, 2);  // default batches_count 100 > 12 triples
  EXPECT_NE(r.err.find("batches_count"), std::string::npos);
  EXPECT_FALSE(fs::exists(tmp("c.kge")));
}

TEST_F(CliTest, CheckpointWriteIsAtomic) {
  // failure leaves no file at the target
  const auto bad = tmp("missing/dir/m.kge");
  const auto r = run("train --triples " + kFixture + "/separable.tsv --batches-count 2 --epochs 1 --k 4 "
                     "--checkpoint " + bad);
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(fs::exists(bad));

  // a successful overwrite replaces the old file whole and leaves no temp file
  const auto ckpt = tmp("m.kge");
  dir_.write("m.kge", "old contents");
  const auto ok = run("train --triples " + kFixture + "/separable.tsv --batches-count 2 --epochs 1 --k 4 "
                      "--checkpoint " + ckpt);
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_NO_THROW(load_checkpoint(ckpt));
  for (const auto& e : fs::directory_iterator(dir_.path()))
    EXPECT_EQ(e.path().extension() == ".tmp", false) << e.path();
}

TEST_F(CliTest, VariationThreeCounts) {
  const auto r = run("variation --triples " + kFixture + "/triples.tsv --variation 3 --lexicon " + kFixture +
                     "/lexicon.tsv --sentences " + kFixture + "/sentences.tsv -k 8 -o " + tmp("v3.tsv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sentence_entities 300"), std::string::npos) << r.out;
  const auto v3 = load_triples(tmp("v3.tsv")).graph;
  const auto v1 = load_triples(kFixture + "/triples.tsv").graph;
  for (const auto& t : v1.triples()) ASSERT_TRUE(v3.contains(t));
  EXPECT_EQ(run("variation --triples " + kFixture + "/triples.tsv --variation 2 -o " + tmp("v2.tsv")).code, 2);
}

}  // namespace
}  // namespace kge
