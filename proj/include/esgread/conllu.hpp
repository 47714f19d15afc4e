#pragma once

// CoNLL-U reader/writer and dependency-tree validation.

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esgread/error.hpp"
#include "esgread/fileio.hpp"
#include "esgread/numeric_io.hpp"
#include "esgread/text.hpp"

namespace esgread::conllu {

using Features = std::vector<std::pair<std::string, std::string>>;

struct Token {
  int index = 0;  // 1-based
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;  // kept for round trips; features never read it
  Features feats;
  int head = 0;  // 0 = root
  std::string deprel;
  std::string deps = "_";
  std::string misc = "_";

  const std::string* feat(std::string_view key) const {
    for (const auto& [k, v] : feats) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  bool operator==(const Token&) const = default;
};

struct ParsedSentence {
  std::string sent_id;
  std::string text;  // from '# text =' if present
  std::vector<Token> tokens;

  const Token& at(int index) const { return tokens.at(index - 1); }
  size_t size() const { return tokens.size(); }
};

inline bool is_punct(const Token& t) { return t.upos == "PUNCT"; }

namespace detail {

inline Features parse_feats(std::string_view s, const std::string& where) {
  Features out;
  if (s == "_") return out;
  for (const auto& kv : text::split(s, '|')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw DataError(where + "malformed feature '" + kv + "'");
    }
    out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

inline std::string format_feats(const Features& f) {
  if (f.empty()) return "_";
  std::string out;
  for (const auto& [k, v] : f) {
    if (!out.empty()) out.push_back('|');
    out += k + "=" + v;
  }
  return out;
}

}  // namespace detail

// Multiword ranges ("3-4") and empty nodes ("5.1") are skipped; comments
// other than sent_id and text are ignored.
inline std::vector<ParsedSentence> parse_conllu(std::string_view content) {
  std::vector<ParsedSentence> out;
  std::set<std::string> ids;
  ParsedSentence cur;
  bool open = false;
  size_t start_line = 0;

  auto close = [&](size_t line_no) {
    if (!open) return;
    if (cur.sent_id.empty()) {
      throw DataError("line " + std::to_string(start_line) +
                      ": sentence without '# sent_id'");
    }
    if (cur.tokens.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": sentence '" +
                      cur.sent_id + "' has no tokens");
    }
    if (!ids.insert(cur.sent_id).second) {
      throw DataError("line " + std::to_string(start_line) +
                      ": duplicate sent_id '" + cur.sent_id + "'");
    }
    out.push_back(std::move(cur));
    cur = ParsedSentence{};
    open = false;
  };

  size_t line_no = 0;
  for (auto raw : text::split(content, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (text::trim(raw).empty()) {
      close(line_no);
      continue;
    }
    if (!open) {
      open = true;
      start_line = line_no;
    }
    if (raw.front() == '#') {
      std::string_view c = text::trim(std::string_view(raw).substr(1));
      auto value_of = [&](std::string_view key) -> std::optional<std::string> {
        if (c.substr(0, key.size()) != key) return std::nullopt;
        auto rest = text::trim(c.substr(key.size()));
        if (rest.empty() || rest.front() != '=') return std::nullopt;
        return std::string(text::trim(rest.substr(1)));
      };
      if (auto id = value_of("sent_id")) {
        cur.sent_id = *id;
      } else if (auto t = value_of("text")) {
        cur.text = *t;
      }
      continue;
    }
    const auto where = "line " + std::to_string(line_no) + ": ";
    const auto cols = text::split(raw, '\t');
    if (cols.size() != 10) {
      throw DataError(where + "expected 10 tab-separated columns, got " +
                      std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string::npos ||
        cols[0].find('.') != std::string::npos) {
      continue;
    }
    const auto index = parse_int(cols[0]);
    if (!index || *index < 1) {
      throw DataError(where + "token index '" + cols[0] +
                      "' is not a positive integer");
    }
    const auto head = parse_int(cols[6]);
    if (!head || *head < 0) {
      throw DataError(where + "head '" + cols[6] +
                      "' is not a non-negative integer");
    }
    Token t;
    t.index = static_cast<int>(*index);
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = detail::parse_feats(cols[5], where);
    t.head = static_cast<int>(*head);
    t.deprel = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    cur.tokens.push_back(std::move(t));
  }
  close(line_no);
  return out;
}

inline std::vector<ParsedSentence> load_conllu(const std::string& path) {
  return parse_conllu(read_file(path));
}

inline std::string serialize_conllu(const std::vector<ParsedSentence>& sents) {
  std::ostringstream os;
  for (const auto& s : sents) {
    os << "# sent_id = " << s.sent_id << '\n';
    if (!s.text.empty()) os << "# text = " << s.text << '\n';
    for (const auto& t : s.tokens) {
      os << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos
         << '\t' << (t.xpos.empty() ? "_" : t.xpos) << '\t'
         << detail::format_feats(t.feats) << '\t' << t.head << '\t'
         << t.deprel << '\t' << t.deps << '\t' << t.misc << '\n';
    }
    os << '\n';
  }
  return os.str();
}

struct ValidationError {
  enum class Kind {
    kEmpty,
    kBadIndex,
    kSelfHead,
    kHeadOutOfRange,
    kCycle,
    kNoRoot,
    kMultipleRoots,
  };
  Kind kind;
  std::vector<int> tokens;  // offending token indices
  std::string message;
};

// Checks sequential indices, heads in range, acyclicity and a single root.
inline std::optional<ValidationError> validate(const ParsedSentence& s) {
  using Kind = ValidationError::Kind;
  const int n = static_cast<int>(s.tokens.size());
  auto fail = [&](Kind k, std::vector<int> toks, const std::string& what) {
    std::string msg = "sentence '" + s.sent_id + "': " + what;
    if (!toks.empty()) {
      msg += " (tokens";
      for (int t : toks) msg += " " + std::to_string(t);
      msg += ")";
    }
    return ValidationError{k, std::move(toks), msg};
  };
  if (n == 0) return fail(Kind::kEmpty, {}, "no tokens");
  for (int i = 0; i < n; ++i) {
    if (s.tokens[i].index != i + 1) {
      return fail(Kind::kBadIndex, {s.tokens[i].index},
                  "token indices are not 1..n in order");
    }
  }
  for (const auto& t : s.tokens) {
    if (t.head == t.index) return fail(Kind::kSelfHead, {t.index}, "self head");
    if (t.head < 0 || t.head > n) {
      return fail(Kind::kHeadOutOfRange, {t.index},
                  "head " + std::to_string(t.head) + " out of range");
    }
  }
  // Walk up from every token; revisiting a token on the current path means
  // a cycle.
  std::vector<int> state(n + 1, 0);  // 0 new, 1 on path, 2 reaches root
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int cur = start;
    while (cur != 0 && state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = s.at(cur).head;
    }
    if (cur != 0 && state[cur] == 1) {
      std::vector<int> cycle(std::find(path.begin(), path.end(), cur),
                             path.end());
      std::sort(cycle.begin(), cycle.end());
      return fail(Kind::kCycle, cycle, "cycle in head relation");
    }
    for (int p : path) state[p] = 2;
  }
  std::vector<int> roots;
  for (const auto& t : s.tokens) {
    if (t.head == 0) roots.push_back(t.index);
  }
  if (roots.empty()) return fail(Kind::kNoRoot, {}, "no root");
  if (roots.size() > 1) {
    return fail(Kind::kMultipleRoots, roots, "multiple roots");
  }
  return std::nullopt;
}

inline void validate_or_throw(const ParsedSentence& s) {
  if (auto err = validate(s)) throw DataError(err->message);
}

inline int root_index(const ParsedSentence& s) {
  for (const auto& t : s.tokens) {
    if (t.head == 0) return t.index;
  }
  return 0;
}

}  // namespace esgread::conllu
