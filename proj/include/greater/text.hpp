#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "greater/error.hpp"

namespace greater {

using TokenId = std::uint32_t;

// Class labels. MGT (machine-generated) is the positive class for the
// detector; scores are P(MGT).
enum class Label : int { Mgt = 0, Hwt = 1 };

enum class PosTag : int { Noun, Verb, Adj, Adv, Func, Num, Punct, Other };

inline std::string_view pos_tag_name(PosTag t) {
  switch (t) {
    case PosTag::Noun: return "NOUN";
    case PosTag::Verb: return "VERB";
    case PosTag::Adj: return "ADJ";
    case PosTag::Adv: return "ADV";
    case PosTag::Func: return "FUNC";
    case PosTag::Num: return "NUM";
    case PosTag::Punct: return "PUNCT";
    case PosTag::Other: return "OTHER";
  }
  return "OTHER";
}

inline PosTag pos_tag_from_name(std::string_view s) {
  if (s == "NOUN") return PosTag::Noun;
  if (s == "VERB") return PosTag::Verb;
  if (s == "ADJ") return PosTag::Adj;
  if (s == "ADV") return PosTag::Adv;
  if (s == "FUNC") return PosTag::Func;
  if (s == "NUM") return PosTag::Num;
  if (s == "PUNCT") return PosTag::Punct;
  return PosTag::Other;
}

// Fixed-size vocabulary with a reserved unknown token and mask token. Each
// entry carries a POS tag used by the substitution filter.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";
  static constexpr std::string_view kMask = "<mask>";

  Vocabulary() {
    add(std::string(kUnknown), PosTag::Other);
    add(std::string(kMask), PosTag::Other);
  }

  TokenId add(const std::string& token, PosTag tag = PosTag::Other) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const TokenId id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(token);
    tags_.push_back(tag);
    index_.emplace(tokens_.back(), id);
    return id;
  }

  std::optional<TokenId> lookup(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& token(TokenId id) const {
    if (id >= tokens_.size()) throw Error(Errc::IdOutOfRange, "token id " + std::to_string(id));
    return tokens_[id];
  }

  PosTag tag(TokenId id) const {
    if (id >= tags_.size()) throw Error(Errc::IdOutOfRange, "token id " + std::to_string(id));
    return tags_[id];
  }

  TokenId unknown_id() const { return *lookup(kUnknown); }
  TokenId mask_id() const { return *lookup(kMask); }
  std::size_t size() const { return tokens_.size(); }

  // One token per line, sorted bytewise, POS tag tab-separated. Sorting makes
  // the file (and therefore every downstream id assignment) reproducible no
  // matter the construction order.
  void save(const std::string& path) const {
    std::vector<std::pair<std::string, PosTag>> rows;
    rows.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) rows.emplace_back(tokens_[i], tags_[i]);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot open vocabulary file for write: " + path);
    for (const auto& [tok, tag] : rows) out << tok << '\t' << pos_tag_name(tag) << '\n';
  }

  // Ids are assigned in file order; the reserved tokens are added first if the
  // file does not carry them.
  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open vocabulary file: " + path);
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      std::string tok = line.substr(0, tab);
      PosTag tag = PosTag::Other;
      if (tab != std::string::npos) tag = pos_tag_from_name(line.substr(tab + 1));
      if (tok.empty())
        throw Error(Errc::MalformedRow, "empty token at " + path + ":" + std::to_string(lineno));
      v.add(tok, tag);
    }
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<PosTag> tags_;
  std::unordered_map<std::string, TokenId> index_;
};

namespace detail {

inline bool is_word_byte(unsigned char c) {
  // high-bit bytes (UTF-8 continuation/lead) are treated as word characters
  return std::isalnum(c) != 0 || c >= 0x80;
}

inline char lower_ascii(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

// Case-insensitive literal match for the reserved markers so that detokenized
// adversarial text survives re-tokenization intact.
inline bool match_marker(std::string_view text, std::size_t i, std::string_view marker) {
  if (i + marker.size() > text.size()) return false;
  for (std::size_t k = 0; k < marker.size(); ++k) {
    if (lower_ascii(static_cast<unsigned char>(text[i + k])) != marker[k]) return false;
  }
  return true;
}

}  // namespace detail

// Lowercases and splits on whitespace; punctuation characters become single
// tokens of their own. The reserved markers "<unk>" and "<mask>" are kept as
// single tokens. Throws EmptyText when nothing survives.
inline std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < text.size();) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (detail::match_marker(text, i, Vocabulary::kUnknown)) {
      flush();
      out.emplace_back(Vocabulary::kUnknown);
      i += Vocabulary::kUnknown.size();
    } else if (detail::match_marker(text, i, Vocabulary::kMask)) {
      flush();
      out.emplace_back(Vocabulary::kMask);
      i += Vocabulary::kMask.size();
    } else if (detail::is_word_byte(c)) {
      cur.push_back(detail::lower_ascii(c));
      ++i;
    } else if (std::isspace(c)) {
      flush();
      ++i;
    } else {
      flush();
      out.push_back(std::string(1, static_cast<char>(c)));  // punctuation, one per token
      ++i;
    }
  }
  flush();
  if (out.empty()) throw Error(Errc::EmptyText, "no tokens in input text");
  return out;
}

// Out-of-vocabulary words map to the unknown token.
inline std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const std::string& tok : split_tokens(text)) {
    if (auto id = vocab.lookup(tok)) {
      ids.push_back(*id);
    } else {
      ids.push_back(vocab.unknown_id());
    }
  }
  return ids;
}

inline std::string detokenize(const std::vector<TokenId>& tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token(tokens[i]);
  }
  return out;
}

inline std::vector<PosTag> pos_tags(const std::vector<TokenId>& tokens, const Vocabulary& vocab) {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (TokenId id : tokens) tags.push_back(vocab.tag(id));
  return tags;
}

struct Document {
  std::string id;
  std::string raw_text;
  std::vector<TokenId> tokens;
  Label label = Label::Mgt;
};

inline Document make_document(std::string id, std::string text, Label label,
                              const Vocabulary& vocab) {
  Document d;
  d.id = std::move(id);
  d.tokens = tokenize(text, vocab);  // throws EmptyText on empty input
  d.raw_text = std::move(text);
  d.label = label;
  return d;
}

namespace detail {

// Syllable heuristic: count groups of consecutive vowels (aeiou) over the
// word's alphabetic characters, dropping one trailing 'e' first; at least one
// syllable per word.
inline std::size_t count_syllables(std::string_view word) {
  std::string alpha;
  for (char ch : word) {
    const char lc = lower_ascii(static_cast<unsigned char>(ch));
    if (lc >= 'a' && lc <= 'z') alpha.push_back(lc);
  }
  if (alpha.empty()) return 1;
  if (alpha.size() > 1 && alpha.back() == 'e') alpha.pop_back();
  auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  };
  std::size_t groups = 0;
  bool in_group = false;
  for (char c : alpha) {
    if (is_vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  return groups == 0 ? 1 : groups;
}

}  // namespace detail

// Flesch reading ease: 206.835 - 1.015*(words/sentences) - 84.6*(syllables/words).
// Words are whitespace-separated items containing at least one alphanumeric
// character; sentences are maximal runs of [.!?] (minimum one).
inline double flesch_reading_ease(std::string_view text) {
  std::size_t words = 0, syllables = 0, sentences = 0;
  std::string cur;
  bool in_sentence_run = false;
  auto flush_word = [&] {
    if (cur.empty()) return;
    bool has_alnum = false;
    for (char ch : cur) {
      if (std::isalnum(static_cast<unsigned char>(ch))) {
        has_alnum = true;
        break;
      }
    }
    if (has_alnum) {
      ++words;
      syllables += detail::count_syllables(cur);
    }
    cur.clear();
  };
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush_word();
    } else {
      cur.push_back(ch);
    }
    if (ch == '.' || ch == '!' || ch == '?') {
      if (!in_sentence_run) ++sentences;
      in_sentence_run = true;
    } else {
      in_sentence_run = false;
    }
  }
  flush_word();
  if (words == 0) throw Error(Errc::EmptyText, "no words for readability");
  if (sentences == 0) sentences = 1;
  const double w = static_cast<double>(words);
  const double s = static_cast<double>(sentences);
  const double sy = static_cast<double>(syllables);
  return 206.835 - 1.015 * (w / s) - 84.6 * (sy / w);
}

}  // namespace greater
