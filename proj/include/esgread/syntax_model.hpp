#pragma once

// Maps FeatureVectors onto the MLP's two input branches, optionally with
// feature groups removed for ablation.

#include <array>
#include <bitset>
#include <string>
#include <string_view>
#include <vector>

#include "esgread/error.hpp"
#include "esgread/features.hpp"
#include "esgread/mlp.hpp"

namespace esgread::syntax_model {

enum class FeatureGroup {
  kDepth,
  kMdd,
  kRoot,
  kPassive,
  kSubordination,
  kBigrams,
  kTrigrams,
};

inline constexpr std::array<FeatureGroup, 7> kAllGroups = {
    FeatureGroup::kDepth,   FeatureGroup::kMdd,
    FeatureGroup::kRoot,    FeatureGroup::kPassive,
    FeatureGroup::kSubordination, FeatureGroup::kBigrams,
    FeatureGroup::kTrigrams};

inline std::string_view to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::kDepth: return "depth";
    case FeatureGroup::kMdd: return "mdd";
    case FeatureGroup::kRoot: return "root";
    case FeatureGroup::kPassive: return "passive";
    case FeatureGroup::kSubordination: return "subordination";
    case FeatureGroup::kBigrams: return "bigrams";
    case FeatureGroup::kTrigrams: return "trigrams";
  }
  return "?";
}

inline FeatureGroup parse_feature_group(std::string_view s) {
  for (auto g : kAllGroups) {
    if (to_string(g) == s) return g;
  }
  throw UsageError("unknown feature group '" + std::string(s) +
                   "' (expected depth, mdd, root, passive, subordination, "
                   "bigrams or trigrams)");
}

class FeatureMask {
 public:
  FeatureMask() = default;
  FeatureMask(std::initializer_list<FeatureGroup> removed) {
    for (auto g : removed) remove(g);
  }

  void remove(FeatureGroup g) { removed_.set(static_cast<size_t>(g)); }
  bool removed(FeatureGroup g) const {
    return removed_.test(static_cast<size_t>(g));
  }
  bool keeps(FeatureGroup g) const { return !removed(g); }
  bool empty() const { return removed_.none(); }

  // Comma-separated removed groups, or "none".
  std::string to_string() const {
    std::string out;
    for (auto g : kAllGroups) {
      if (!removed(g)) continue;
      if (!out.empty()) out += ',';
      out += syntax_model::to_string(g);
    }
    return out.empty() ? "none" : out;
  }

  static FeatureMask parse(std::string_view s) {
    FeatureMask m;
    if (s == "none" || s.empty()) return m;
    for (const auto& part : text::split(s, ',')) {
      m.remove(parse_feature_group(part));
    }
    return m;
  }

  bool operator==(const FeatureMask&) const = default;

 private:
  std::bitset<7> removed_;
};

inline size_t ngram_dim(const features::NgramVocabulary& v,
                        const FeatureMask& m) {
  return (m.keeps(FeatureGroup::kBigrams) ? v.bigrams().size() : 0) +
         (m.keeps(FeatureGroup::kTrigrams) ? v.trigrams().size() : 0);
}

inline size_t other_dim(const features::NgramVocabulary& v,
                        const FeatureMask& m) {
  size_t d = 0;
  if (m.keeps(FeatureGroup::kDepth)) ++d;
  if (m.keeps(FeatureGroup::kMdd)) ++d;
  if (m.keeps(FeatureGroup::kRoot)) d += v.root_dims();
  if (m.keeps(FeatureGroup::kPassive)) ++d;
  if (m.keeps(FeatureGroup::kSubordination)) ++d;
  return d;
}

// Dense branch order: depth, mdd, root one-hot, passive, subordination.
inline mlp::MlpInput to_mlp_input(const features::FeatureVector& fv,
                                  const features::NgramVocabulary& v,
                                  const FeatureMask& m = {}) {
  mlp::MlpInput x;
  const size_t nb = v.bigrams().size();
  uint32_t next = 0;
  if (m.keeps(FeatureGroup::kBigrams)) {
    for (size_t i = 0; i < nb; ++i) {
      if (fv.ngram_counts[i]) x.ngrams.emplace_back(next, fv.ngram_counts[i]);
      ++next;
    }
  }
  if (m.keeps(FeatureGroup::kTrigrams)) {
    for (size_t i = nb; i < fv.ngram_counts.size(); ++i) {
      if (fv.ngram_counts[i]) x.ngrams.emplace_back(next, fv.ngram_counts[i]);
      ++next;
    }
  }
  if (m.keeps(FeatureGroup::kDepth)) x.other.push_back(fv.depth);
  if (m.keeps(FeatureGroup::kMdd)) x.other.push_back(fv.mdd);
  if (m.keeps(FeatureGroup::kRoot)) {
    for (int b : fv.root_onehot) x.other.push_back(b);
  }
  if (m.keeps(FeatureGroup::kPassive)) x.other.push_back(fv.is_passive);
  if (m.keeps(FeatureGroup::kSubordination)) {
    x.other.push_back(fv.has_subordination);
  }
  return x;
}

}  // namespace esgread::syntax_model
