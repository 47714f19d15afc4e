#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "esgread/conllu.hpp"
#include "fixtures.hpp"

using namespace esgread;
using namespace esgread::conllu;
using Kind = ValidationError::Kind;

namespace {

ParsedSentence with_heads(std::vector<int> heads) {
  ParsedSentence s;
  s.sent_id = "h";
  for (size_t i = 0; i < heads.size(); ++i) {
    Token t;
    t.index = static_cast<int>(i + 1);
    t.form = "w" + std::to_string(i + 1);
    t.upos = "X";
    t.head = heads[i];
    t.deprel = heads[i] == 0 ? "root" : "dep";
    s.tokens.push_back(t);
  }
  return s;
}

// Random valid tree: token i (in a random order) attaches to an earlier one.
ParsedSentence random_tree(std::mt19937_64& rng, int n) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(n);
  heads[order[0] - 1] = 0;
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    heads[order[k] - 1] = order[pick(rng)];
  }
  return with_heads(heads);
}

}  // namespace

TEST(ParseConllu, TwoSentences) {
  const auto s = parse_conllu(
      "# sent_id = a\n1\tEr\ter\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
      "2\tgeht\tgehen\tVERB\t_\t_\t0\troot\t_\t_\n\n"
      "# sent_id = b\n# text = Ja\n1\tJa\tja\tINTJ\t_\t_\t0\troot\t_\t_\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].sent_id, "a");
  EXPECT_EQ(s[1].sent_id, "b");
  EXPECT_EQ(s[1].text, "Ja");
  EXPECT_EQ(s[0].at(2).lemma, "gehen");
}

TEST(ParseConllu, NineColumnsReportsLine) {
  try {
    parse_conllu("# sent_id = a\n1\tEr\ter\tPRON\t_\t_\t0\troot\t_\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseConllu, MultiwordRangeAndEmptyNodesSkipped) {
  const auto s = parse_conllu(
      "# sent_id = m\n"
      "1\tWir\twir\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
      "2\tgehen\tgehen\tVERB\t_\t_\t0\troot\t_\t_\n"
      "3-4\tzum\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "3\tzu\tzu\tADP\t_\t_\t5\tcase\t_\t_\n"
      "4\tdem\tder\tDET\t_\t_\t5\tdet\t_\t_\n"
      "4.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n"
      "5\tWerk\tWerk\tNOUN\t_\t_\t2\tobl\t_\t_\n");
  ASSERT_EQ(s.at(0).size(), 5u);
  EXPECT_EQ(s[0].at(3).form, "zu");
  EXPECT_EQ(s[0].at(4).form, "dem");
  EXPECT_FALSE(validate(s[0]).has_value());
}

TEST(ParseConllu, FormatErrors) {
  const std::string tok = "1\tEr\ter\tPRON\t_\t_\t0\troot\t_\t_\n";
  EXPECT_THROW(parse_conllu(tok), DataError);  // no sent_id
  EXPECT_THROW(parse_conllu("# sent_id = a\n" + tok + "\n# sent_id = a\n" + tok),
               DataError);
  EXPECT_THROW(parse_conllu("# sent_id = a\nx\tEr\ter\tPRON\t_\t_\t0\troot\t_\t_\n"),
               DataError);
  EXPECT_THROW(parse_conllu("# sent_id = a\n1\tEr\ter\tPRON\t_\t_\t-\troot\t_\t_\n"),
               DataError);
  EXPECT_THROW(parse_conllu("# sent_id = a\n1\tEr\ter\tPRON\t_\tBad\t0\troot\t_\t_\n"),
               DataError);
}

TEST(Validate, Examples) {
  EXPECT_FALSE(validate(fixture::er_schlaeft()).has_value());
  const auto multi = validate(with_heads({2, 0, 0}));
  ASSERT_TRUE(multi);
  EXPECT_EQ(multi->kind, Kind::kMultipleRoots);
  const auto cyc = validate(with_heads({2, 1, 2}));
  ASSERT_TRUE(cyc);
  EXPECT_EQ(cyc->kind, Kind::kCycle);
  EXPECT_EQ(cyc->tokens, (std::vector<int>{1, 2}));
}

TEST(Validate, OtherViolations) {
  EXPECT_EQ(validate(with_heads({1, 0}))->kind, Kind::kSelfHead);
  EXPECT_EQ(validate(with_heads({5, 0}))->kind, Kind::kHeadOutOfRange);
  EXPECT_EQ(validate(with_heads({2, 1}))->kind, Kind::kCycle);
  EXPECT_EQ(validate(ParsedSentence{"e", "", {}})->kind, Kind::kEmpty);
  auto gap = with_heads({2, 0});
  gap.tokens[1].index = 3;
  EXPECT_EQ(validate(gap)->kind, Kind::kBadIndex);
  EXPECT_THROW(validate_or_throw(with_heads({2, 1, 2})), DataError);
}

TEST(Conllu, RoundTripPreservesDownstreamFields) {
  std::mt19937_64 rng(4);
  std::vector<ParsedSentence> sents;
  for (int i = 0; i < 50; ++i) {
    auto s = random_tree(rng, 1 + i % 12);
    s.sent_id = "r" + std::to_string(i);
    s.tokens[0].feats = {{"Case", "Nom"}, {"VerbForm", "Part"}};
    s.tokens[0].lemma = "lemma";
    sents.push_back(s);
  }
  const auto back = parse_conllu(serialize_conllu(sents));
  ASSERT_EQ(back.size(), sents.size());
  for (size_t i = 0; i < sents.size(); ++i) {
    EXPECT_EQ(back[i].sent_id, sents[i].sent_id);
    ASSERT_EQ(back[i].tokens.size(), sents[i].tokens.size());
    for (size_t k = 0; k < sents[i].tokens.size(); ++k) {
      const auto &a = sents[i].tokens[k], &b = back[i].tokens[k];
      EXPECT_EQ(a.index, b.index);
      EXPECT_EQ(a.form, b.form);
      EXPECT_EQ(a.lemma, b.lemma);
      EXPECT_EQ(a.upos, b.upos);
      EXPECT_EQ(a.feats, b.feats);
      EXPECT_EQ(a.head, b.head);
      EXPECT_EQ(a.deprel, b.deprel);
    }
  }
}

TEST(Conllu, TraversalFromRootVisitsEveryTokenOnce) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 300; ++t) {
    const auto s = random_tree(rng, 1 + t % 25);
    ASSERT_FALSE(validate(s).has_value());
    std::multiset<int> seen;
    std::vector<int> stack = {root_index(s)};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      seen.insert(cur);
      for (const auto& tok : s.tokens) {
        if (tok.head == cur) stack.push_back(tok.index);
      }
    }
    EXPECT_EQ(seen.size(), s.size());
    for (int i = 1; i <= static_cast<int>(s.size()); ++i) {
      EXPECT_EQ(seen.count(i), 1u);
    }
  }
}

TEST(Conllu, SampleFileValidates) {
  const auto sents = load_conllu(std::string(ESGREAD_SOURCE_DIR) +
                                 "/data/sample/corpus.conllu");
  EXPECT_EQ(sents.size(), 30u);
  for (const auto& s : sents) EXPECT_FALSE(validate(s).has_value()) << s.sent_id;
}
