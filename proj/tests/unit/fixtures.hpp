#pragma once

#include <string>
#include <vector>

#include "esgread/conllu.hpp"

namespace fixture {

struct Tok {
  std::string form, upos;
  int head;
  std::string deprel = "dep";
  std::string lemma = "";
  std::string feats = "_";
};

// Builds a sentence through the CoNLL-U reader so fixtures exercise the same
// path as real files.
inline esgread::conllu::ParsedSentence sentence(const std::string& id,
                                                const std::vector<Tok>& toks) {
  std::string s = "# sent_id = " + id + "\n";
  for (size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    s += std::to_string(i + 1) + "\t" + t.form + "\t" +
         (t.lemma.empty() ? t.form : t.lemma) + "\t" + t.upos + "\t_\t" +
         t.feats + "\t" + std::to_string(t.head) + "\t" + t.deprel +
         "\t_\t_\n";
  }
  return esgread::conllu::parse_conllu(s).at(0);
}

inline esgread::conllu::ParsedSentence er_schlaeft() {
  return sentence("s1", {{"Er", "PRON", 2, "nsubj"},
                         {"schläft", "VERB", 0, "root", "schlafen"},
                         {".", "PUNCT", 2, "punct"}});
}

inline esgread::conllu::ParsedSentence bericht_passive() {
  return sentence("s2", {{"Der", "DET", 2, "det", "der"},
                         {"Bericht", "NOUN", 4, "nsubj:pass"},
                         {"wird", "AUX", 4, "aux:pass", "werden"},
                         {"geprüft", "VERB", 0, "root", "prüfen",
                          "VerbForm=Part"},
                         {".", "PUNCT", 4, "punct"}});
}

}  // namespace fixture
