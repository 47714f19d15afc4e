#pragma once

// Corpus records, crowd-rating aggregation and split statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "esgread/error.hpp"
#include "esgread/fileio.hpp"
#include "esgread/formulae.hpp"
#include "esgread/numeric_io.hpp"
#include "esgread/text.hpp"

namespace esgread::corpus {

enum class Split { kTrain, kDev, kEval };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kEval: return "eval";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "eval") return Split::kEval;
  return std::nullopt;
}

struct Record {
  std::string id;
  std::vector<std::string> context;  // at most 3, in reading order
  std::string target;
  std::vector<int> ratings;          // 4..6 values in 1..4
  Split split = Split::kTrain;

  bool operator==(const Record&) const = default;
};

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 4;
inline constexpr size_t kMinRaters = 4;
inline constexpr size_t kMaxRaters = 6;

namespace detail {

inline void require_ratings(std::span<const int> ratings, const char* op) {
  if (ratings.empty()) {
    throw DataError(std::string(op) + ": empty rating list");
  }
  for (int r : ratings) {
    if (r < kMinRating || r > kMaxRating) {
      throw DataError(std::string(op) + ": rating " + std::to_string(r) +
                      " outside 1..4");
    }
  }
}

// Frequency of each rating value 1..4 (index 0 unused).
inline std::array<int, 5> histogram(std::span<const int> ratings) {
  std::array<int, 5> h{};
  for (int r : ratings) ++h[r];
  return h;
}

inline int mode_frequency(std::span<const int> ratings) {
  const auto h = histogram(ratings);
  return *std::max_element(h.begin() + 1, h.end());
}

}  // namespace detail

// Mode frequency over annotation count when the mode occurs at least twice,
// otherwise 0.
inline double mode_agreement(std::span<const int> ratings) {
  detail::require_ratings(ratings, "mode_agreement");
  const int freq = detail::mode_frequency(ratings);
  if (freq < 2) return 0.0;
  return static_cast<double>(freq) / static_cast<double>(ratings.size());
}

// Unique mode, or the mean of all values tied for the highest frequency.
inline double majority_vote(std::span<const int> ratings) {
  detail::require_ratings(ratings, "majority_vote");
  const auto h = detail::histogram(ratings);
  const int freq = *std::max_element(h.begin() + 1, h.end());
  int sum = 0, n = 0;
  for (int v = kMinRating; v <= kMaxRating; ++v) {
    if (h[v] == freq) {
      sum += v;
      ++n;
    }
  }
  return static_cast<double>(sum) / n;
}

inline double normalize(double vote) {
  if (!(vote >= 1.0 && vote <= 4.0)) {
    throw DataError("normalize: vote " + format_double(vote) +
                    " outside [1,4]");
  }
  return (vote - 1.0) / 3.0;
}

inline double denormalize(double score) { return 3.0 * score + 1.0; }

struct AggregatedLabel {
  double majority_vote = 0;
  double normalized = 0;
  double mode_agreement = 0;
  double mean = 0;
  double std = 0;  // population standard deviation
  int mode_frequency = 0;
};

inline AggregatedLabel aggregate(std::span<const int> ratings) {
  detail::require_ratings(ratings, "aggregate");
  AggregatedLabel l;
  l.majority_vote = majority_vote(ratings);
  l.normalized = normalize(l.majority_vote);
  l.mode_agreement = mode_agreement(ratings);
  l.mode_frequency = detail::mode_frequency(ratings);
  double sum = 0;
  for (int r : ratings) sum += r;
  const double n = static_cast<double>(ratings.size());
  l.mean = sum / n;
  double ss = 0;
  for (int r : ratings) ss += (r - l.mean) * (r - l.mean);
  l.std = std::sqrt(ss / n);
  return l;
}

struct LabeledRecord {
  Record record;
  AggregatedLabel label;
};

inline std::vector<LabeledRecord> label_all(const std::vector<Record>& recs) {
  std::vector<LabeledRecord> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back({r, aggregate(r.ratings)});
  return out;
}

// Majority votes live on a half-step grid; key classes by twice the vote.
inline int vote_class(double vote) {
  return static_cast<int>(std::lround(vote * 2.0));
}

// ---------------------------------------------------------------------------
// Loading

inline Record parse_record(std::string_view line, size_t line_no) {
  const auto where = "line " + std::to_string(line_no) + ": ";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + "malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(where + "record is not an object");
  for (const char* key : {"id", "context", "target", "ratings", "split"}) {
    if (!j.contains(key)) {
      throw DataError(where + "missing key '" + key + "'");
    }
  }
  Record r;
  try {
    r.id = j.at("id").get<std::string>();
    r.context = j.at("context").get<std::vector<std::string>>();
    r.target = j.at("target").get<std::string>();
    const auto& ratings = j.at("ratings");
    if (!ratings.is_array()) throw DataError(where + "'ratings' not an array");
    for (const auto& v : ratings) {
      if (!v.is_number_integer()) {
        throw DataError(where + "rating " + v.dump() + " is not an integer");
      }
      r.ratings.push_back(v.get<int>());
    }
    const auto split = j.at("split").get<std::string>();
    const auto s = parse_split(split);
    if (!s) throw DataError(where + "unknown split '" + split + "'");
    r.split = *s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + "wrong field type (" + e.what() + ")");
  }
  if (r.id.empty()) throw DataError(where + "empty id");
  if (r.context.size() > 3) {
    throw DataError(where + "more than 3 context sentences");
  }
  if (text::trim(r.target).empty()) throw DataError(where + "empty target");
  for (int v : r.ratings) {
    if (v < kMinRating || v > kMaxRating) {
      throw DataError(where + "rating " + std::to_string(v) +
                      " outside 1..4 (id " + r.id + ")");
    }
  }
  if (r.ratings.size() < kMinRaters || r.ratings.size() > kMaxRaters) {
    throw DataError(where + "expected 4-6 ratings, got " +
                    std::to_string(r.ratings.size()) + " (id " + r.id + ")");
  }
  return r;
}

inline std::vector<Record> parse_corpus(std::string_view content) {
  std::vector<Record> out;
  std::set<std::string> seen;
  size_t line_no = 0;
  for (const auto& raw : text::split(content, '\n')) {
    ++line_no;
    if (text::trim(raw).empty()) continue;
    Record r = parse_record(raw, line_no);
    if (!seen.insert(r.id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate id '" +
                      r.id + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<Record> load_corpus(const std::string& path) {
  return parse_corpus(read_file(path));
}

inline std::string serialize_record(const Record& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["context"] = r.context;
  j["target"] = r.target;
  j["ratings"] = r.ratings;
  j["split"] = std::string(to_string(r.split));
  return j.dump();
}

inline std::vector<Record> filter_split(const std::vector<Record>& records,
                                        Split split) {
  std::vector<Record> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oversampling

// Every majority-vote class is topped up to the size of the largest class
// with uniform draws (with replacement) from its own members. Originals keep
// their order; draws are appended class by class in ascending vote order.
inline std::vector<LabeledRecord> oversample(
    const std::vector<LabeledRecord>& items, uint64_t seed) {
  if (items.empty()) throw DataError("oversample: empty input");
  std::map<int, std::vector<size_t>> classes;
  for (size_t i = 0; i < items.size(); ++i) {
    classes[vote_class(items[i].label.majority_vote)].push_back(i);
  }
  size_t target = 0;
  for (const auto& [_, members] : classes) {
    target = std::max(target, members.size());
  }
  std::mt19937_64 rng(seed);
  std::vector<LabeledRecord> out = items;
  for (const auto& [_, members] : classes) {
    std::uniform_int_distribution<size_t> pick(0, members.size() - 1);
    for (size_t k = members.size(); k < target; ++k) {
      out.push_back(items[members[pick(rng)]]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct SplitStats {
  size_t n_sentences = 0;
  double avg_words_per_sentence = 0;
  double avg_syllables_per_word = 0;  // pooled over all words in the split
  double pct_geq3_agree = 0;
  double pct_mode_agreement = 0;
  double avg_mean = 0;  // unweighted mean of per-sentence means
  double avg_std = 0;
  double avg_majority = 0;
  std::map<double, size_t> vote_histogram;
};

inline SplitStats split_stats(const std::vector<Record>& records) {
  if (records.empty()) throw DataError("split_stats: no records");
  for (const auto& r : records) {
    if (r.split != records.front().split) {
      throw DataError("split_stats: records from mixed splits");
    }
  }
  SplitStats s;
  s.n_sentences = records.size();
  // Fixed classes so the histogram always lists the full half-step grid.
  for (int c = 2; c <= 8; ++c) s.vote_histogram[c / 2.0] = 0;
  size_t words = 0, syllables = 0, geq3 = 0;
  double mode_sum = 0, mean_sum = 0, std_sum = 0, majority_sum = 0;
  for (const auto& r : records) {
    const auto l = aggregate(r.ratings);
    for (const auto& w : text::tokenize_words(r.target)) {
      ++words;
      syllables += formulae::count_syllables(std::u32string_view(w.chars));
    }
    if (l.mode_frequency >= 3) ++geq3;
    mode_sum += l.mode_agreement;
    mean_sum += l.mean;
    std_sum += l.std;
    majority_sum += l.majority_vote;
    ++s.vote_histogram[l.majority_vote];
  }
  const double n = static_cast<double>(records.size());
  s.avg_words_per_sentence = static_cast<double>(words) / n;
  s.avg_syllables_per_word =
      words ? static_cast<double>(syllables) / static_cast<double>(words) : 0;
  s.pct_geq3_agree = 100.0 * static_cast<double>(geq3) / n;
  s.pct_mode_agreement = 100.0 * mode_sum / n;
  s.avg_mean = mean_sum / n;
  s.avg_std = std_sum / n;
  s.avg_majority = majority_sum / n;
  return s;
}

// Aligned text table, one column per split.
inline std::string format_stats_table(
    const std::vector<std::pair<std::string, SplitStats>>& columns) {
  std::ostringstream os;
  auto row = [&](const std::string& label, auto value_of) {
    os << label;
    for (size_t i = label.size(); i < 28; ++i) os << ' ';
    for (const auto& [_, s] : columns) {
      std::string v = value_of(s);
      for (size_t i = v.size(); i < 12; ++i) os << ' ';
      os << v;
    }
    os << '\n';
  };
  os << std::string(28, ' ');
  for (const auto& [name, _] : columns) {
    for (size_t i = name.size(); i < 12; ++i) os << ' ';
    os << name;
  }
  os << '\n';
  row("# Sentences", [](const SplitStats& s) {
    return std::to_string(s.n_sentences);
  });
  row("Avg words / sentence", [](const SplitStats& s) {
    return format_fixed(s.avg_words_per_sentence, 2);
  });
  row("Avg syllables / word", [](const SplitStats& s) {
    return format_fixed(s.avg_syllables_per_word, 2);
  });
  row(">= 3 agree (%)", [](const SplitStats& s) {
    return format_fixed(s.pct_geq3_agree, 1);
  });
  row("Mode agreement (%)", [](const SplitStats& s) {
    return format_fixed(s.pct_mode_agreement, 1);
  });
  row("Avg. mean (unweighted)", [](const SplitStats& s) {
    return format_fixed(s.avg_mean, 3);
  });
  row("Avg. std (population)", [](const SplitStats& s) {
    return format_fixed(s.avg_std, 3);
  });
  row("Avg. majority vote", [](const SplitStats& s) {
    return format_fixed(s.avg_majority, 3);
  });
  os << "Majority votes\n";
  for (int c = 2; c <= 8; ++c) {
    const double cls = c / 2.0;
    row("  " + format_fixed(cls, 1), [cls](const SplitStats& s) {
      auto it = s.vote_histogram.find(cls);
      return std::to_string(it == s.vote_histogram.end() ? 0 : it->second);
    });
  }
  return os.str();
}

inline nlohmann::ordered_json stats_to_json(const SplitStats& s) {
  nlohmann::ordered_json j;
  j["n_sentences"] = s.n_sentences;
  j["avg_words_per_sentence"] = s.avg_words_per_sentence;
  j["avg_syllables_per_word"] = s.avg_syllables_per_word;
  j["pct_geq3_agree"] = s.pct_geq3_agree;
  j["pct_mode_agreement"] = s.pct_mode_agreement;
  j["avg_mean"] = s.avg_mean;
  j["avg_mean_weighting"] = "unweighted per-sentence";
  j["avg_std"] = s.avg_std;
  j["avg_std_convention"] = "population";
  j["avg_majority"] = s.avg_majority;
  nlohmann::ordered_json h;
  for (const auto& [cls, count] : s.vote_histogram) {
    h[format_fixed(cls, 1)] = count;
  }
  j["vote_histogram"] = h;
  return j;
}

}  // namespace esgread::corpus
