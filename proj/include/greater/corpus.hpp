#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "greater/rng.hpp"
#include "greater/text.hpp"

namespace greater {

struct SyntheticCorpusSpec {
  std::size_t n_docs = 600;
  std::size_t min_length = 30;
  std::size_t max_length = 60;
  double mgt_fraction = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_docs < 2) throw Error(Errc::InvalidParameter, "n_docs must be at least 2");
    if (min_length < 8 || max_length > 512 || min_length > max_length)
      throw Error(Errc::InvalidParameter, "length range must satisfy 8 <= min <= max <= 512");
    const std::size_t n_mgt = mgt_count();
    if (n_mgt == 0 || n_mgt == n_docs)
      throw Error(Errc::SingleClassDataset, "mgt_fraction leaves one class empty");
  }

  std::size_t mgt_count() const {
    return static_cast<std::size_t>(static_cast<double>(n_docs) * mgt_fraction + 0.5);
  }
};

struct SyntheticCorpus {
  Vocabulary vocab;
  std::vector<Document> docs;
};

namespace detail {

// Deterministic pseudoword inventory. Words are CV-CV stems from fixed
// syllable tables plus a class-specific coda, so every POS class is disjoint,
// pronounceable, and syllable-countable. The first half of each content class
// is the "machine-flavoured" sublexicon, the second half the "human" one;
// generation skews draws toward the matching half so the two label
// distributions are separable but share every POS class.
class SyntheticLexicon {
 public:
  SyntheticLexicon() {
    nouns_ = make_words(680, {"n", "k", "d", "m"});
    verbs_ = make_words(520, {"t", "r", "p"});
    adjs_ = make_words(400, {"l", "s"});
    advs_ = make_words(260, {"ly"});
    func_ = {"the", "a",  "an",   "and", "or",   "of",  "to", "in",   "on",  "at",  "with", "for",
             "from", "by", "as", "that", "this", "it",  "is", "was",  "are", "were", "be",  "not"};
    for (int i = 0; i < 10; ++i) nums_.push_back(std::to_string(i));
    for (int v : {10, 12, 15, 20, 25, 30, 40, 50, 60, 75, 80, 90, 100, 200, 250, 300, 400, 500,
                  600, 750, 800, 900, 1000, 1959, 1987, 1999, 2005, 2013, 2020, 2024})
      nums_.push_back(std::to_string(v));
    punct_ = {".", ",", ";", ":", "!", "?"};
  }

  Vocabulary build_vocabulary() const {
    Vocabulary v;
    for (const auto& w : nouns_) v.add(w, PosTag::Noun);
    for (const auto& w : verbs_) v.add(w, PosTag::Verb);
    for (const auto& w : adjs_) v.add(w, PosTag::Adj);
    for (const auto& w : advs_) v.add(w, PosTag::Adv);
    for (const auto& w : func_) v.add(w, PosTag::Func);
    for (const auto& w : nums_) v.add(w, PosTag::Num);
    for (const auto& w : punct_) v.add(w, PosTag::Punct);
    return v;
  }

  // Draws from the label-matching half of a class with probability 0.85.
  const std::string& draw(PosTag tag, Label label, Rng& rng) const {
    const std::vector<std::string>* pool = nullptr;
    switch (tag) {
      case PosTag::Noun: pool = &nouns_; break;
      case PosTag::Verb: pool = &verbs_; break;
      case PosTag::Adj: pool = &adjs_; break;
      case PosTag::Adv: pool = &advs_; break;
      case PosTag::Func: pool = &func_; break;
      case PosTag::Num: pool = &nums_; break;
      default: pool = &punct_; break;
    }
    if (tag == PosTag::Func || tag == PosTag::Num || tag == PosTag::Punct) {
      return (*pool)[rng.below(pool->size())];
    }
    const std::size_t half = pool->size() / 2;
    const bool machine_half = (label == Label::Mgt) == (rng.canonical() < 0.85);
    const std::size_t base = machine_half ? 0 : half;
    const std::size_t span = machine_half ? half : pool->size() - half;
    return (*pool)[base + rng.below(span)];
  }

 private:
  static std::vector<std::string> make_words(std::size_t count,
                                             const std::vector<std::string>& codas) {
    static const std::vector<std::string> onsets = {
        "b",  "c",  "d",  "f",  "g",  "h",  "j",  "k",  "l",  "m",  "n",  "p",  "r",
        "s",  "t",  "v",  "w",  "z",  "br", "cr", "dr", "fr", "gr", "pr", "tr", "bl",
        "cl", "fl", "gl", "pl", "sl", "sh", "ch", "th", "st", "sp", "sk", "sm", "sn"};
    static const std::vector<std::string> nuclei = {"a",  "e",  "i",  "o",  "u",
                                                    "ai", "ea", "ou", "oo", "ei"};
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::string stem = onsets[i % onsets.size()] + nuclei[(i / onsets.size()) % nuclei.size()] +
                         onsets[(i / (onsets.size() * nuclei.size())) % onsets.size()] +
                         nuclei[(i / (onsets.size() * nuclei.size() * onsets.size())) %
                                nuclei.size()];
      out.push_back(stem + codas[i % codas.size()]);
    }
    return out;
  }

  std::vector<std::string> nouns_, verbs_, adjs_, advs_, func_, nums_, punct_;
};

// Sentence templates. Uppercase letters are POS slots (N noun, V verb, J adj,
// A adv, U number); everything else is a literal token. The machine pool is
// rigid and repetitive, the human pool looser and more varied.
inline const std::vector<std::vector<std::string>>& machine_templates() {
  static const std::vector<std::vector<std::string>> t = {
      {"the", "N", "V", "the", "N", "."},
      {"the", "J", "N", "V", "the", "N", "."},
      {"the", "N", "V", "A", "."},
      {"the", "N", "of", "the", "N", "V", "."},
      {"the", "N", "V", "the", "J", "N", "."},
  };
  return t;
}

inline const std::vector<std::vector<std::string>>& human_templates() {
  static const std::vector<std::vector<std::string>> t = {
      {"a", "J", "N", "A", "V", "the", "J", "N", "."},
      {"A", ",", "the", "N", "V", "and", "the", "N", "V", "."},
      {"it", "was", "J", "and", "A", "J", "."},
      {"N", "and", "N", "V", "in", "U", "."},
      {"this", "N", "V", "not", "as", "J", "as", "the", "J", "N", "."},
      {"the", "N", ",", "A", ",", "V", "a", "N", "!"},
  };
  return t;
}

inline std::vector<std::string> render_sentence(const SyntheticLexicon& lex, Label label,
                                                Rng& rng) {
  const auto& pool = label == Label::Mgt ? machine_templates() : human_templates();
  const auto& tmpl = pool[rng.below(pool.size())];
  std::vector<std::string> words;
  words.reserve(tmpl.size());
  for (const std::string& slot : tmpl) {
    if (slot == "N") words.push_back(lex.draw(PosTag::Noun, label, rng));
    else if (slot == "V") words.push_back(lex.draw(PosTag::Verb, label, rng));
    else if (slot == "J") words.push_back(lex.draw(PosTag::Adj, label, rng));
    else if (slot == "A") words.push_back(lex.draw(PosTag::Adv, label, rng));
    else if (slot == "U") words.push_back(lex.draw(PosTag::Num, label, rng));
    else words.push_back(slot);
  }
  return words;
}

}  // namespace detail

// Deterministic two-population corpus: machine documents come from a rigid
// template grammar skewed toward one sublexicon, human documents from a looser
// grammar skewed toward the other. Both share every POS class, so same-POS
// substitution candidates always exist across the boundary.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  detail::SyntheticLexicon lex;
  SyntheticCorpus corpus;
  corpus.vocab = lex.build_vocabulary();
  Rng rng(derive_seed(spec.seed, "corpus"));
  const std::size_t n_mgt = spec.mgt_count();
  std::size_t mgt_seq = 0, hwt_seq = 0;
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    const Label label = i < n_mgt ? Label::Mgt : Label::Hwt;
    const std::size_t target =
        spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
    std::vector<std::string> words;
    while (words.size() < target) {
      std::vector<std::string> sent = detail::render_sentence(lex, label, rng);
      if (words.size() + sent.size() > spec.max_length) {
        if (words.size() >= spec.min_length) break;
        sent.resize(spec.max_length - words.size());
        sent.back() = ".";  // keep the document sentence-terminated
      }
      words.insert(words.end(), sent.begin(), sent.end());
    }
    std::string text;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) text.push_back(' ');
      text += words[w];
    }
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "%s-%05zu", label == Label::Mgt ? "mgt" : "hwt",
                  label == Label::Mgt ? mgt_seq++ : hwt_seq++);
    corpus.docs.push_back(make_document(idbuf, std::move(text), label, corpus.vocab));
  }
  // interleave the two blocks so any contiguous batch mixes labels
  Rng order_rng(derive_seed(spec.seed, "corpus-order"));
  order_rng.shuffle(corpus.docs);
  return corpus;
}

}  // namespace greater
