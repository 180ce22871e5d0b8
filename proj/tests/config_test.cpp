#include <gtest/gtest.h>

#include "kge/config.hpp"
#include "test_util.hpp"

namespace kge {
namespace {

std::string key_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

TEST(RunConfig, DefaultsAreValid) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.model.k, 150);
  EXPECT_EQ(c.cv_k, 10);
  EXPECT_EQ(c.train_fraction, 0.8);
  EXPECT_EQ(c.protocol, Protocol::Filtered);
}

TEST(RunConfig, SetAcceptsDashesAndUnderscores) {
  RunConfig c;
  c.set("batches-count", "7");
  c.set("train_fraction", " 0.75 ");
  c.set("family", "TransE");
  c.set("freeze-hints", "yes");
  c.set("lexicon", "/tmp/Lex.tsv");
  EXPECT_EQ(c.model.batches_count, 7);
  EXPECT_EQ(c.train_fraction, 0.75);
  EXPECT_EQ(c.model.family, Family::TransE);
  EXPECT_TRUE(c.freeze_hints);
  EXPECT_EQ(c.path("lexicon"), "/tmp/Lex.tsv");
}

TEST(RunConfig, ErrorsNameTheKey) {
  RunConfig c;
  EXPECT_EQ(key_of([&] { c.set("k", "ten"); }), "k");
  EXPECT_EQ(key_of([&] { c.set("epochs", "3.5"); }), "epochs");
  EXPECT_EQ(key_of([&] { c.set("learning-rate", "fast"); }), "learning_rate");
  EXPECT_EQ(key_of([&] { c.set("protocol", "lenient"); }), "protocol");
  EXPECT_EQ(key_of([&] { c.set("colour", "blue"); }), "colour");
  EXPECT_EQ(key_of([&] { c.set("threads", "0"); }), "threads");
  EXPECT_EQ(key_of([&] { c.require_path("checkpoint"); }), "checkpoint");

  RunConfig bad;
  bad.cv_k = 1;
  EXPECT_EQ(key_of([&] { bad.validate(); }), "cv_k");
  bad = RunConfig{};
  bad.model.k = -3;
  EXPECT_EQ(key_of([&] { bad.validate(); }), "k");
  bad = RunConfig{};
  bad.train_fraction = 1.0;
  EXPECT_EQ(key_of([&] { bad.validate(); }), "train_fraction");
}

TEST(KeyValues, ParsesCommentsAndBothSeparators) {
  const auto kv = parse_key_values("# run\nk = 20\nseed: 7  # trailing\n\nfamily=complex\n");
  EXPECT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv.at("k"), "20");
  EXPECT_EQ(kv.at("seed"), "7");
  EXPECT_THROW(parse_key_values("just words\n"), ParseError);
}

TEST(KeyValues, LoadFromFile) {
  testing::TempDir dir;
  const auto p = dir.write("run.conf", "epochs = 3\neta = 4\nvariation = 2\n");
  const auto c = load_run_config(p);
  EXPECT_EQ(c.model.epochs, 3);
  EXPECT_EQ(c.model.eta, 4);
  EXPECT_EQ(c.variation, 2);
  const auto j = to_json(c);
  EXPECT_EQ(j["epochs"], 3);
}

}  // namespace
}  // namespace kge
