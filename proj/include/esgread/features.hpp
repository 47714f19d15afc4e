#pragma once

// Syntactic features of a parsed target sentence: UPOS bigram/trigram
// counts, tree depth, mean dependency distance, root UPOS, passive voice and
// subordination.

#include <array>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "esgread/conllu.hpp"
#include "esgread/digest.hpp"
#include "esgread/error.hpp"
#include "esgread/fileio.hpp"
#include "esgread/numeric_io.hpp"
#include "esgread/text.hpp"

namespace esgread::features {

using conllu::ParsedSentence;
using conllu::Token;

using Bigram = std::array<std::string, 2>;
using Trigram = std::array<std::string, 3>;

inline constexpr std::string_view kVocabMagic = "esgread-vocab";
inline constexpr int kVocabVersion = 1;

class NgramVocabulary {
 public:
  NgramVocabulary() = default;
  NgramVocabulary(std::vector<Bigram> bigrams, std::vector<Trigram> trigrams,
                  std::vector<std::string> root_tags)
      : bigrams_(std::move(bigrams)),
        trigrams_(std::move(trigrams)),
        root_tags_(std::move(root_tags)) {
    reindex();
  }

  const std::vector<Bigram>& bigrams() const { return bigrams_; }
  const std::vector<Trigram>& trigrams() const { return trigrams_; }
  const std::vector<std::string>& root_tags() const { return root_tags_; }

  size_t ngram_dims() const { return bigrams_.size() + trigrams_.size(); }
  // Root one-hot width including the trailing unknown slot.
  size_t root_dims() const { return root_tags_.size() + 1; }

  // Index into the bigram block, or -1.
  int bigram_index(std::string_view a, std::string_view b) const {
    auto it = bigram_index_.find(key({a, b}));
    return it == bigram_index_.end() ? -1 : it->second;
  }
  // Index into the trigram block (not offset by the bigram count), or -1.
  int trigram_index(std::string_view a, std::string_view b,
                    std::string_view c) const {
    auto it = trigram_index_.find(key({a, b, c}));
    return it == trigram_index_.end() ? -1 : it->second;
  }
  // Slot in the root one-hot; unseen tags map to the unknown slot.
  size_t root_slot(std::string_view upos) const {
    for (size_t i = 0; i < root_tags_.size(); ++i) {
      if (root_tags_[i] == upos) return i;
    }
    return root_tags_.size();
  }

  // Versioned text form: a header line with counts, then one n-gram per
  // line (tags joined by a tab), then one root tag per line.
  std::string serialize() const {
    std::ostringstream os;
    os << kVocabMagic << ' ' << kVocabVersion << " bigrams "
       << bigrams_.size() << " trigrams " << trigrams_.size() << " roots "
       << root_tags_.size() << '\n';
    for (const auto& b : bigrams_) os << b[0] << '\t' << b[1] << '\n';
    for (const auto& t : trigrams_) {
      os << t[0] << '\t' << t[1] << '\t' << t[2] << '\n';
    }
    for (const auto& r : root_tags_) os << r << '\n';
    return os.str();
  }

  static NgramVocabulary parse(std::string_view content) {
    auto lines = text::split(content, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw DataError("vocabulary: empty file");
    std::istringstream header(lines[0]);
    std::string magic, kb, kt, kr;
    int version = 0;
    size_t nb = 0, nt = 0, nr = 0;
    header >> magic >> version >> kb >> nb >> kt >> nt >> kr >> nr;
    if (!header || magic != kVocabMagic || kb != "bigrams" ||
        kt != "trigrams" || kr != "roots") {
      throw DataError("vocabulary: bad header '" + lines[0] + "'");
    }
    if (version != kVocabVersion) {
      throw DataError("vocabulary: unsupported version " +
                      std::to_string(version));
    }
    if (lines.size() != 1 + nb + nt + nr) {
      throw DataError("vocabulary: header announces " +
                      std::to_string(nb + nt + nr) + " entries, file has " +
                      std::to_string(lines.size() - 1));
    }
    std::vector<Bigram> bigrams;
    std::vector<Trigram> trigrams;
    std::vector<std::string> roots;
    size_t i = 1;
    for (size_t k = 0; k < nb; ++k, ++i) {
      auto f = text::split(lines[i], '\t');
      if (f.size() != 2) throw DataError("vocabulary: bad bigram line");
      bigrams.push_back({f[0], f[1]});
    }
    for (size_t k = 0; k < nt; ++k, ++i) {
      auto f = text::split(lines[i], '\t');
      if (f.size() != 3) throw DataError("vocabulary: bad trigram line");
      trigrams.push_back({f[0], f[1], f[2]});
    }
    for (size_t k = 0; k < nr; ++k, ++i) roots.push_back(lines[i]);
    return NgramVocabulary(std::move(bigrams), std::move(trigrams),
                           std::move(roots));
  }

  static NgramVocabulary load(const std::string& path) {
    return parse(read_file(path));
  }
  void save(const std::string& path) const { write_file(path, serialize()); }

  std::string fingerprint() const { return sha256_hex(serialize()); }

  bool operator==(const NgramVocabulary& o) const {
    return bigrams_ == o.bigrams_ && trigrams_ == o.trigrams_ &&
           root_tags_ == o.root_tags_;
  }

 private:
  static std::string key(std::initializer_list<std::string_view> tags) {
    std::string k;
    for (auto t : tags) {
      k.append(t);
      k.push_back('\t');
    }
    return k;
  }

  void reindex() {
    bigram_index_.clear();
    trigram_index_.clear();
    for (size_t i = 0; i < bigrams_.size(); ++i) {
      if (!bigram_index_.emplace(key({bigrams_[i][0], bigrams_[i][1]}),
                                 static_cast<int>(i))
               .second) {
        throw DataError("vocabulary: duplicate bigram");
      }
    }
    for (size_t i = 0; i < trigrams_.size(); ++i) {
      const auto& t = trigrams_[i];
      if (!trigram_index_.emplace(key({t[0], t[1], t[2]}),
                                  static_cast<int>(i))
               .second) {
        throw DataError("vocabulary: duplicate trigram");
      }
    }
  }

  std::vector<Bigram> bigrams_;
  std::vector<Trigram> trigrams_;
  std::vector<std::string> root_tags_;
  std::unordered_map<std::string, int> bigram_index_;
  std::unordered_map<std::string, int> trigram_index_;
};

// UPOS sequence with punctuation removed.
inline std::vector<std::string> content_tags(const ParsedSentence& s) {
  std::vector<std::string> tags;
  tags.reserve(s.tokens.size());
  for (const auto& t : s.tokens) {
    if (!conllu::is_punct(t)) tags.push_back(t.upos);
  }
  return tags;
}

inline NgramVocabulary build_vocab(
    const std::vector<ParsedSentence>& train) {
  if (train.empty()) throw DataError("build_vocab: no training sentences");
  std::vector<Bigram> bigrams;
  std::vector<Trigram> trigrams;
  std::vector<std::string> roots;
  std::unordered_map<std::string, int> seen;
  auto first_time = [&](const std::string& k) {
    return seen.emplace(k, 0).second;
  };
  for (const auto& s : train) {
    const auto tags = content_tags(s);
    for (size_t i = 0; i + 1 < tags.size(); ++i) {
      if (first_time("2\t" + tags[i] + "\t" + tags[i + 1])) {
        bigrams.push_back({tags[i], tags[i + 1]});
      }
    }
    for (size_t i = 0; i + 2 < tags.size(); ++i) {
      if (first_time("3\t" + tags[i] + "\t" + tags[i + 1] + "\t" +
                     tags[i + 2])) {
        trigrams.push_back({tags[i], tags[i + 1], tags[i + 2]});
      }
    }
    const int r = conllu::root_index(s);
    if (r > 0 && first_time("R\t" + s.at(r).upos)) {
      roots.push_back(s.at(r).upos);
    }
  }
  return NgramVocabulary(std::move(bigrams), std::move(trigrams),
                         std::move(roots));
}

// Sliding-window counts over the punctuation-free UPOS sequence: bigram block
// first, then trigram block. Out-of-vocabulary windows are dropped.
inline std::vector<int> extract_ngrams(const ParsedSentence& s,
                                       const NgramVocabulary& vocab) {
  std::vector<int> counts(vocab.ngram_dims(), 0);
  const auto tags = content_tags(s);
  for (size_t i = 0; i + 1 < tags.size(); ++i) {
    const int k = vocab.bigram_index(tags[i], tags[i + 1]);
    if (k >= 0) ++counts[k];
  }
  const size_t offset = vocab.bigrams().size();
  for (size_t i = 0; i + 2 < tags.size(); ++i) {
    const int k = vocab.trigram_index(tags[i], tags[i + 1], tags[i + 2]);
    if (k >= 0) ++counts[offset + k];
  }
  return counts;
}

// Longest head chain, in edges, from any non-punctuation token to the root.
inline int tree_depth(const ParsedSentence& s) {
  const int n = static_cast<int>(s.size());
  std::vector<int> depth(n + 1, -1);
  depth[0] = -1;
  int best = 0;
  for (const auto& t : s.tokens) {
    if (conllu::is_punct(t)) continue;
    // Iterative climb with memoisation; input is assumed validated.
    std::vector<int> chain;
    int cur = t.index;
    while (cur != 0 && depth[cur] < 0) {
      chain.push_back(cur);
      cur = s.at(cur).head;
      if (chain.size() > static_cast<size_t>(n)) {
        throw DataError("tree_depth: cycle in sentence '" + s.sent_id + "'");
      }
    }
    int d = cur == 0 ? -1 : depth[cur];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      depth[*it] = ++d;
    }
    best = std::max(best, depth[t.index]);
  }
  return best;
}

// Mean |position(dependent) - position(head)| over governed non-punctuation
// tokens, with positions counted in the punctuation-free sequence. 0 when no
// token qualifies.
inline double mean_dep_distance(const ParsedSentence& s) {
  std::vector<int> pos(s.size() + 1, 0);
  int k = 0;
  for (const auto& t : s.tokens) {
    if (!conllu::is_punct(t)) ++k;
    pos[t.index] = k;
  }
  long total = 0;
  int n = 0;
  for (const auto& t : s.tokens) {
    if (t.head == 0 || conllu::is_punct(t)) continue;
    total += std::abs(pos[t.index] - pos[t.head]);
    ++n;
  }
  return n == 0 ? 0.0 : static_cast<double>(total) / n;
}

inline bool is_werden_aux(const Token& t) {
  return t.lemma == "werden" && t.upos == "AUX";
}

// Passive if any relation carries the ":pass" subtype, or a participle is
// governed by "werden" or governs a "werden" auxiliary.
inline int is_passive(const ParsedSentence& s) {
  for (const auto& t : s.tokens) {
    if (t.deprel.find(":pass") != std::string::npos) return 1;
  }
  for (const auto& t : s.tokens) {
    const auto* vf = t.feat("VerbForm");
    if (!vf || *vf != "Part") continue;
    if (t.head > 0 && s.at(t.head).lemma == "werden") return 1;
    for (const auto& c : s.tokens) {
      if (c.head == t.index && is_werden_aux(c)) return 1;
    }
  }
  return 0;
}

inline int has_subordination(const ParsedSentence& s) {
  for (const auto& t : s.tokens) {
    if (t.upos == "SCONJ") return 1;
  }
  return 0;
}

struct FeatureVector {
  std::vector<int> ngram_counts;  // bigram block then trigram block
  int depth = 0;
  double mdd = 0;
  std::vector<int> root_onehot;  // root_tags + unknown slot
  int is_passive = 0;
  int has_subordination = 0;

  bool operator==(const FeatureVector&) const = default;
};

inline FeatureVector featurize(const ParsedSentence& s,
                               const NgramVocabulary& vocab) {
  FeatureVector fv;
  fv.ngram_counts = extract_ngrams(s, vocab);
  fv.depth = tree_depth(s);
  fv.mdd = mean_dep_distance(s);
  fv.root_onehot.assign(vocab.root_dims(), 0);
  const int r = conllu::root_index(s);
  fv.root_onehot[r > 0 ? vocab.root_slot(s.at(r).upos)
                       : vocab.root_tags().size()] = 1;
  fv.is_passive = is_passive(s);
  fv.has_subordination = has_subordination(s);
  return fv;
}

}  // namespace esgread::features
