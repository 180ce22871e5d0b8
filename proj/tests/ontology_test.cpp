#include <gtest/gtest.h>

#include <set>

#include "kge/ontology.hpp"

namespace kge {
namespace {

Lexicon lexicon_of(std::initializer_list<std::pair<const char*, const char*>> pairs) {
  Lexicon lex;
  for (const auto& [t, c] : pairs) lex.add(t, c);
  return lex;
}

OntologySource source_of(std::string_view tsv) { return {parse_triples(tsv).graph, "is a"}; }

TEST(ExtractFirstOrder, ParentAndChildWithInverse) {
  const auto src = source_of("abdominal pain\tis a\tpain\ncolic\tis a\tabdominal pain\n");
  const auto r = extract_first_order(src, lexicon_of({{"abdominal pain", "abdominal pain"}}));
  EXPECT_EQ(r.graph.size(), 3u);
  EXPECT_TRUE(r.graph.contains(Triple{"abdominal pain", "is a", "pain"}));
  EXPECT_TRUE(r.graph.contains(Triple{"colic", "is a", "abdominal pain"}));
  EXPECT_TRUE(r.graph.contains(Triple{"abdominal pain", "inverse is a", "colic"}));
  EXPECT_EQ(r.inverse_edges, 1u);
  EXPECT_FALSE(r.empty_warning());
}

TEST(ExtractFirstOrder, AbsentSeedGivesEmptyGraph) {
  const auto r = extract_first_order(source_of("colic\tis a\tabdominal pain\n"),
                                     lexicon_of({{"ear pain", "ear pain"}}));
  EXPECT_TRUE(r.graph.empty());
  EXPECT_TRUE(r.empty_warning());
  EXPECT_EQ(r.seeds_missing, std::vector<std::string>{"ear pain"});
}

TEST(ExtractFirstOrder, DomainRelationKeptAsIs) {
  const auto src = source_of("pain\tmay be treated by\taspirin\n");
  const auto r = extract_first_order(src, lexicon_of({{"pain", "pain"}}));
  EXPECT_EQ(format_triples(r.graph), "pain\tmay be treated by\taspirin\n");
  EXPECT_EQ(r.inverse_edges, 0u);
}

TEST(ExtractFirstOrder, OnlyOneHop) {
  const auto src = source_of("a\tis a\tb\nb\tis a\tc\nc\tis a\td\n");
  const auto r = extract_first_order(src, lexicon_of({{"b", "b"}}));
  EXPECT_FALSE(r.graph.contains(Triple{"c", "is a", "d"}));
  EXPECT_EQ(r.graph.size(), 3u);  // a->b, b->c, inverse b->a
}

TEST(ExtractFirstOrder, Preconditions) {
  EXPECT_THROW(extract_first_order(source_of("a\tis a\tb\n"), Lexicon{}), UsageError);
  EXPECT_THROW(extract_first_order(OntologySource{}, lexicon_of({{"a", "a"}})), EmptyGraphError);
}

TEST(ExtractFirstOrder, SubgraphAndInverseInvariantsOnFixture) {
  const OntologySource src{load_triples(KGE_FIXTURE_DIR "/ontology.tsv").graph, "is a"};
  const auto lex = load_lexicon(KGE_FIXTURE_DIR "/lexicon.tsv");
  const auto r = extract_first_order(src, lex);
  ASSERT_FALSE(r.graph.empty());
  std::size_t inverse = 0;
  for (const auto& t : r.graph.triples()) {
    if (t.predicate == "inverse is a") {
      ++inverse;
      EXPECT_TRUE(src.triples.contains(Triple{t.object, "is a", t.subject}));
      EXPECT_TRUE(lex.is_concept(t.subject));
    } else {
      EXPECT_TRUE(src.triples.contains(t));
      EXPECT_TRUE(lex.is_concept(t.subject) || lex.is_concept(t.object));
    }
  }
  EXPECT_EQ(inverse, r.inverse_edges);
  // every seed-incident source triple is present
  for (const auto& t : src.triples.triples())
    if (lex.is_concept(t.subject) || lex.is_concept(t.object)) EXPECT_TRUE(r.graph.contains(t));
}

TEST(Lexicon, ConflictingTermIsRejected) {
  Lexicon lex;
  lex.add("sore", "pain");
  EXPECT_THROW(lex.add("sore", "ear pain"), ConsistencyError);
  EXPECT_NO_THROW(lex.add("Sore", "pain"));
  EXPECT_THROW(lex.add("pain", "ear pain"), ConsistencyError);
}

TEST(Lexicon, ParseReportsLine) {
  try {
    parse_lexicon("a\ta\nb\n", "lex.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  const auto lex = parse_lexicon("Pain\tpain\tL1\nresponse to pain\tpain\n");
  EXPECT_EQ(lex.concepts(), std::vector<std::string>{"pain"});
  EXPECT_EQ(lex.entries()[0].concept_id, "L1");
}

TEST(CanonicalizeMention, Examples) {
  const auto lex = lexicon_of({{"pain", "pain"},
                               {"ear pain", "ear pain"},
                               {"response to pain", "pain"},
                               {"painful ear", "ear pain"}});
  EXPECT_EQ(canonicalize_mention("response to pain", lex).canonical, "pain");
  EXPECT_EQ(canonicalize_mention("on examination - painful ear", lex).canonical, "ear pain");
  EXPECT_EQ(canonicalize_mention("Ear Pain", lex).canonical, "ear pain");
  EXPECT_EQ(canonicalize_mention("pain", lex).canonical, "pain");

  const auto miss = canonicalize_mention("discomfort", lex);
  EXPECT_FALSE(miss.mapped());
  EXPECT_EQ(miss.mention, "discomfort");
  // whole words only
  EXPECT_FALSE(canonicalize_mention("painless", lex).mapped());
}

TEST(CanonicalizeMention, Idempotent) {
  const auto lex = load_lexicon(KGE_FIXTURE_DIR "/lexicon.tsv");
  const std::vector<std::string> mentions{"response to pain", "on examination - painful ear",
                                          "severe chest pain at night", "discomfort", "HEADACHE"};
  for (const auto& m : canonicalize_mentions(mentions, lex)) {
    if (!m.mapped()) continue;
    EXPECT_EQ(canonicalize_mention(*m.canonical, lex).canonical, m.canonical) << m.mention;
  }
}

}  // namespace
}  // namespace kge
