#include "greater/text.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "test_util.hpp"

namespace {

using namespace greater;

TEST(PosTagTest, NamesRoundTrip) {
  for (PosTag t : {PosTag::Noun, PosTag::Verb, PosTag::Adj, PosTag::Adv, PosTag::Func,
                   PosTag::Num, PosTag::Punct, PosTag::Other}) {
    EXPECT_EQ(pos_tag_from_name(pos_tag_name(t)), t);
  }
  EXPECT_EQ(pos_tag_from_name("NOT_A_TAG"), PosTag::Other);
}

TEST(VocabularyTest, ReservedTokensComeFirst) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.unknown_id(), 0u);
  EXPECT_EQ(v.mask_id(), 1u);
  EXPECT_EQ(v.token(v.unknown_id()), "<unk>");
  EXPECT_EQ(v.token(v.mask_id()), "<mask>");
  EXPECT_EQ(v.tag(v.mask_id()), PosTag::Other);
}

TEST(VocabularyTest, AddIsIdempotentAndLookupMatches) {
  Vocabulary v;
  const TokenId a = v.add("cat", PosTag::Noun);
  const TokenId b = v.add("cat", PosTag::Verb);  // second tag is ignored
  EXPECT_EQ(a, b);
  EXPECT_EQ(v.tag(a), PosTag::Noun);
  EXPECT_EQ(v.lookup("cat"), std::optional<TokenId>(a));
  EXPECT_FALSE(v.lookup("dog").has_value());
  EXPECT_EQ(v.size(), 3u);
}

TEST(VocabularyTest, OutOfRangeIdThrows) {
  Vocabulary v;
  EXPECT_GREATER_ERROR(v.token(99), Errc::IdOutOfRange);
  EXPECT_GREATER_ERROR(v.tag(99), Errc::IdOutOfRange);
}

TEST(VocabularyTest, SaveIsSortedAndLoadPreservesTags) {
  Vocabulary v;
  v.add("zebra", PosTag::Noun);
  v.add("amble", PosTag::Verb);
  v.add("mild", PosTag::Adj);
  const std::string path = testing::TempDir() + "vocab_roundtrip.tsv";
  v.save(path);

  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  std::vector<std::string> sorted = lines;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(lines, sorted);
  EXPECT_EQ(lines[2], "amble\tVERB");

  const Vocabulary loaded = Vocabulary::load(path);
  EXPECT_EQ(loaded.size(), v.size());
  EXPECT_EQ(loaded.tag(*loaded.lookup("zebra")), PosTag::Noun);
  EXPECT_EQ(loaded.tag(*loaded.lookup("amble")), PosTag::Verb);
  EXPECT_EQ(loaded.tag(*loaded.lookup("mild")), PosTag::Adj);
  // the reserved ids stay pinned no matter what the file holds
  EXPECT_EQ(loaded.unknown_id(), 0u);
  EXPECT_EQ(loaded.mask_id(), 1u);
}

TEST(VocabularyTest, LoadRejectsMissingFile) {
  EXPECT_GREATER_ERROR(Vocabulary::load("/nonexistent/vocab.tsv"), Errc::IoError);
}

TEST(SplitTokensTest, LowercasesAndIsolatesPunctuation) {
  const std::vector<std::string> got = split_tokens("Hello, World!");
  const std::vector<std::string> want{"hello", ",", "world", "!"};
  EXPECT_EQ(got, want);
}

TEST(SplitTokensTest, PunctuationInsideWordsSplits) {
  const std::vector<std::string> got = split_tokens("a.b");
  const std::vector<std::string> want{"a", ".", "b"};
  EXPECT_EQ(got, want);
}

TEST(SplitTokensTest, ReservedMarkersSurviveIntact) {
  const std::vector<std::string> got = split_tokens("keep <MASK> and <unk> here");
  const std::vector<std::string> want{"keep", "<mask>", "and", "<unk>", "here"};
  EXPECT_EQ(got, want);
}

TEST(SplitTokensTest, HighBitBytesStayInsideWords) {
  const std::vector<std::string> got = split_tokens("caf\xc3\xa9 au lait");
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0], "caf\xc3\xa9");
}

TEST(SplitTokensTest, EmptyInputThrows) {
  EXPECT_GREATER_ERROR(split_tokens(""), Errc::EmptyText);
  EXPECT_GREATER_ERROR(split_tokens("   \t\n "), Errc::EmptyText);
}

TEST(TokenizeTest, UnknownWordsMapToUnk) {
  const Vocabulary v = testutil::small_vocab();
  const std::vector<TokenId> ids = tokenize("cat wizard ran", v);
  const std::vector<TokenId> want{*v.lookup("cat"), v.unknown_id(), *v.lookup("ran")};
  EXPECT_EQ(ids, want);
}

TEST(TokenizeTest, DetokenizeRoundTripsInVocabIds) {
  const Vocabulary v = testutil::small_vocab();
  const std::vector<TokenId> ids{*v.lookup("dog"), v.mask_id(), *v.lookup("feline")};
  EXPECT_EQ(tokenize(detokenize(ids, v), v), ids);
  EXPECT_EQ(detokenize(ids, v), "dog <mask> feline");
}

TEST(TokenizeTest, PosTagsFollowVocabulary) {
  const Vocabulary v = testutil::small_vocab();
  const std::vector<TokenId> ids = tokenize("cat ran", v);
  const std::vector<PosTag> tags = pos_tags(ids, v);
  const std::vector<PosTag> want{PosTag::Noun, PosTag::Verb};
  EXPECT_EQ(tags, want);
}

TEST(DocumentTest, MakeDocumentFillsEveryField) {
  const Vocabulary v = testutil::small_vocab();
  const Document d = make_document("doc-1", "Cat ran!", Label::Hwt, v);
  EXPECT_EQ(d.id, "doc-1");
  EXPECT_EQ(d.raw_text, "Cat ran!");
  EXPECT_EQ(d.label, Label::Hwt);
  ASSERT_EQ(d.tokens.size(), 3u);
  EXPECT_EQ(v.token(d.tokens[0]), "cat");
  EXPECT_GREATER_ERROR(make_document("x", "", Label::Mgt, v), Errc::EmptyText);
}

// ---- Flesch reading ease ----------------------------------------------------

TEST(FleschTest, ThreeWordSentenceFixture) {
  // 3 words, 1 sentence, 3 syllables ("the" loses its trailing e before the
  // vowel-group count and still scores one syllable).
  const double got = flesch_reading_ease("The cat sat.");
  EXPECT_DOUBLE_EQ(got, 206.835 - 1.015 * 3.0 - 84.6 * 1.0);
  EXPECT_NEAR(got, 119.19, 1e-9);
}

TEST(FleschTest, FiftyWordTwoSentenceFixture) {
  // Hand count: 25 words / 26 syllables in the first sentence ("above" is the
  // only two-syllable word), 25 words / 32 syllables in the second.
  const std::string text =
      "The cat sat on the mat and the dog ran to the park while the sun was "
      "high in the sky above the green hill. A small bird flew over the quiet "
      "lake and many people walked along the shore under a pale morning light "
      "with gentle music playing nearby.";
  const double got = flesch_reading_ease(text);
  EXPECT_DOUBLE_EQ(got, 206.835 - 1.015 * (50.0 / 2.0) - 84.6 * (58.0 / 50.0));
  EXPECT_NEAR(got, 83.324, 1e-6);
}

TEST(FleschTest, TerminatorRunsCountOnce) {
  // "Stop!!! Really?!" = 2 words, 2 sentence runs, 2 syllables.
  EXPECT_NEAR(flesch_reading_ease("Stop!!! Really?!"), 206.835 - 1.015 - 84.6, 1e-9);
}

TEST(FleschTest, MissingTerminatorCountsOneSentence) {
  EXPECT_DOUBLE_EQ(flesch_reading_ease("one two three"),
                   flesch_reading_ease("one two three."));
}

TEST(FleschTest, NoWordsThrows) {
  EXPECT_GREATER_ERROR(flesch_reading_ease("!!! ... ???"), Errc::EmptyText);
}

}  // namespace
