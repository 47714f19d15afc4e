#pragma once

// Classical readability formulae over a single sentence: Flesch reading ease
// (Amstad's German coefficients), polysyllabic proportion, the first Vienna
// non-fiction formula (WSTF1), LIX and a reconstructed HKPS.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "esgread/error.hpp"
#include "esgread/fileio.hpp"
#include "esgread/numeric_io.hpp"
#include "esgread/text.hpp"

namespace esgread::formulae {

namespace detail {

inline char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c == 0x00C4) return 0x00E4;  // Ä
  if (c == 0x00D6) return 0x00F6;  // Ö
  if (c == 0x00DC) return 0x00FC;  // Ü
  return c;
}

inline bool is_vowel(char32_t c) {
  switch (fold_case(c)) {
    case U'a': case U'e': case U'i': case U'o': case U'u': case U'y':
    case 0x00E4: case 0x00F6: case 0x00FC:
      return true;
    default:
      return false;
  }
}

}  // namespace detail

// Number of maximal vowel runs, at least 1.
inline int count_syllables(std::u32string_view word) {
  if (word.empty()) throw DataError("count_syllables: empty word");
  int groups = 0;
  bool in_vowel = false;
  for (char32_t c : word) {
    const bool v = detail::is_vowel(c);
    if (v && !in_vowel) ++groups;
    in_vowel = v;
  }
  return std::max(groups, 1);
}

inline int count_syllables(std::string_view utf8_word) {
  return count_syllables(text::decode_utf8(utf8_word));
}

struct ShallowCounts {
  int words = 0;
  int sentences = 1;
  int syllables = 0;
  int polysyllabic = 0;  // >= 3 syllables
  int monosyllabic = 0;
  int long_words = 0;    // > 6 characters
  int characters = 0;

  double avg_sentence_length() const {
    return static_cast<double>(words) / sentences;
  }
  double pct_polysyllabic() const { return 100.0 * polysyllabic / words; }
  double pct_monosyllabic() const { return 100.0 * monosyllabic / words; }
  double pct_long() const { return 100.0 * long_words / words; }
  double avg_word_length() const {
    return static_cast<double>(characters) / words;
  }
};

inline ShallowCounts shallow_counts(std::string_view sentence) {
  ShallowCounts c;
  for (const auto& w : text::tokenize_words(sentence)) {
    const int syl = count_syllables(std::u32string_view(w.chars));
    ++c.words;
    c.syllables += syl;
    c.characters += static_cast<int>(w.length());
    if (syl >= 3) ++c.polysyllabic;
    if (syl == 1) ++c.monosyllabic;
    if (w.length() > 6) ++c.long_words;
  }
  return c;
}

inline ShallowCounts require_words(std::string_view sentence) {
  ShallowCounts c = shallow_counts(sentence);
  if (c.words == 0) {
    throw DataError("readability formula needs at least one word: \"" +
                    std::string(sentence) + "\"");
  }
  return c;
}

inline double flesch_amstad(const ShallowCounts& c) {
  return 180.0 - c.avg_sentence_length() -
         58.5 * static_cast<double>(c.syllables) / c.words;
}

inline double polysyllabic_proportion(const ShallowCounts& c) {
  return static_cast<double>(c.polysyllabic) / c.words;
}

inline double wstf1(const ShallowCounts& c) {
  return 0.1935 * c.pct_polysyllabic() + 0.1672 * c.avg_sentence_length() +
         0.1297 * c.pct_long() - 0.0327 * c.pct_monosyllabic() - 0.875;
}

enum class LixForm { kSum, kProduct };

inline LixForm parse_lix_form(std::string_view s) {
  if (s == "sum") return LixForm::kSum;
  if (s == "product") return LixForm::kProduct;
  throw UsageError("--lix-form must be 'sum' or 'product', got '" +
                   std::string(s) + "'");
}

inline std::string_view to_string(LixForm f) {
  return f == LixForm::kSum ? "sum" : "product";
}

// kProduct reproduces the typeset product of the two terms; kSum is the
// standard additive index.
inline double lix(const ShallowCounts& c, LixForm form = LixForm::kSum) {
  const double length_term = c.avg_sentence_length();
  const double long_term = c.long_words * 100.0 / c.words;
  return form == LixForm::kSum ? length_term + long_term
                               : length_term * long_term;
}

// Linear reconstruction of the Hohenheim index:
//   clamp(intercept + asl*ASL + word_length*AWL + long_pct*IW
//         + poly_prop*P, clamp_min, clamp_max)
// with AWL in characters, IW in percent and P in [0,1].
struct HkpsCoefficients {
  std::string version = "hkps-recon-1";
  double intercept = 15.0;
  double asl = -0.3;
  double word_length = -1.0;
  double long_pct = -0.05;
  double poly_prop = -30.0;
  double clamp_min = 0.0;
  double clamp_max = 15.0;

  // `name value` lines, one per coefficient; '#' starts a comment.
  static HkpsCoefficients parse(std::string_view content) {
    HkpsCoefficients k;
    std::map<std::string, double*> slots = {
        {"intercept", &k.intercept}, {"asl", &k.asl},
        {"word_length", &k.word_length}, {"long_pct", &k.long_pct},
        {"poly_prop", &k.poly_prop}, {"clamp_min", &k.clamp_min},
        {"clamp_max", &k.clamp_max}};
    int line_no = 0;
    for (const auto& raw : text::split(content, '\n')) {
      ++line_no;
      auto line = text::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string_view::npos) {
        throw DataError("hkps coefficients line " + std::to_string(line_no) +
                        ": expected 'name value'");
      }
      const std::string name(line.substr(0, sp));
      const auto value = text::trim(line.substr(sp));
      if (name == "version") {
        k.version = std::string(value);
        continue;
      }
      auto it = slots.find(name);
      const auto v = parse_double(value);
      if (it == slots.end() || !v || !std::isfinite(*v)) {
        throw DataError("hkps coefficients line " + std::to_string(line_no) +
                        ": bad entry '" + std::string(line) + "'");
      }
      *it->second = *v;
    }
    if (k.clamp_min > k.clamp_max) {
      throw DataError("hkps coefficients: clamp_min > clamp_max");
    }
    return k;
  }

  static HkpsCoefficients load(const std::string& path) {
    return parse(read_file(path));
  }

  // Canonical serialization; stamped into model artifacts.
  std::string serialize() const {
    std::ostringstream os;
    os << "version " << version << '\n'
       << "intercept " << format_double(intercept) << '\n'
       << "asl " << format_double(asl) << '\n'
       << "word_length " << format_double(word_length) << '\n'
       << "long_pct " << format_double(long_pct) << '\n'
       << "poly_prop " << format_double(poly_prop) << '\n'
       << "clamp_min " << format_double(clamp_min) << '\n'
       << "clamp_max " << format_double(clamp_max) << '\n';
    return os.str();
  }

  bool operator==(const HkpsCoefficients&) const = default;
};

inline double hkps(const ShallowCounts& c, const HkpsCoefficients& k = {}) {
  const double raw = k.intercept + k.asl * c.avg_sentence_length() +
                     k.word_length * c.avg_word_length() +
                     k.long_pct * c.pct_long() +
                     k.poly_prop * polysyllabic_proportion(c);
  return std::clamp(raw, k.clamp_min, k.clamp_max);
}

// Text-level entry points. Each throws DataError on a sentence without words.
inline double flesch_amstad(std::string_view s) {
  return flesch_amstad(require_words(s));
}
inline double polysyllabic_proportion(std::string_view s) {
  return polysyllabic_proportion(require_words(s));
}
inline double wstf1(std::string_view s) { return wstf1(require_words(s)); }
inline double lix(std::string_view s, LixForm form = LixForm::kSum) {
  return lix(require_words(s), form);
}
inline double hkps(std::string_view s, const HkpsCoefficients& k = {}) {
  return hkps(require_words(s), k);
}

struct FormulaScores {
  double fre = 0;
  double hkps = 0;
  double poly_prop = 0;
  double wstf1 = 0;
  double lix = 0;

  static constexpr size_t kDims = 5;
  std::vector<double> as_row() const {
    return {fre, hkps, poly_prop, wstf1, lix};
  }
};

struct FormulaOptions {
  LixForm lix_form = LixForm::kSum;
  HkpsCoefficients hkps;
};

inline FormulaScores formula_scores(std::string_view sentence,
                                    const FormulaOptions& opts = {}) {
  const ShallowCounts c = require_words(sentence);
  FormulaScores s;
  s.fre = flesch_amstad(c);
  s.hkps = hkps(c, opts.hkps);
  s.poly_prop = polysyllabic_proportion(c);
  s.wstf1 = wstf1(c);
  s.lix = lix(c, opts.lix_form);
  return s;
}

}  // namespace esgread::formulae
