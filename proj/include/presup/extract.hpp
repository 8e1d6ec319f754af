#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "presup/corpus.hpp"
#include "presup/rng.hpp"

namespace presup {

// Inserted immediately before the governor (head word) in every sample,
// in both the token and the POS list.
inline constexpr std::string_view kMarker = "@@@@";
inline constexpr std::string_view kNegativeLabel = "none";

std::vector<std::string> default_adverbs();

// Inclusive range of numeric section ids, e.g. "22-23" or "700-760".
struct SectionRange {
  long lo = 0;
  long hi = 0;

  bool contains(long section) const noexcept { return lo <= section && section <= hi; }
  static SectionRange parse(std::string_view text);
  std::string to_string() const;
};

struct ExtractionConfig {
  std::vector<std::string> adverbs = default_adverbs();
  std::size_t window_before = 50;
  std::size_t max_len = 60;
  std::vector<SectionRange> test_sections;
  double dev_fraction = 0.10;
  // Require the whole negative window, not just the pivot sentence, to be
  // free of target adverbs.
  bool strict_negatives = false;

  void validate() const;
  bool is_adverb(std::string_view token) const;
};

struct Occurrence {
  std::size_t doc_index = 0;
  std::string doc_id;
  std::size_t sentence = 0;
  std::string adverb;
  std::size_t adverb_index = 0;
  std::size_t governor_index = 0;
  std::string governor;
  std::string governor_pos;
};

struct Sample {
  std::string label;
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::string section;

  bool positive() const { return label != kNegativeLabel; }
  std::size_t marker_index() const;
  friend bool operator==(const Sample&, const Sample&) = default;
};

// Throws UsageError describing the first violated sample invariant.
void validate_sample(const Sample& sample, const ExtractionConfig& cfg);

// head[adverb] when annotated; otherwise the nearest token whose POS starts
// with "VB", looking left first at each distance.
std::optional<std::size_t> resolve_governor(const AnnotatedSentence& sentence,
                                            std::size_t adverb_index);

struct OccurrenceScan {
  std::vector<Occurrence> occurrences;
  std::size_t unresolved = 0;
};

OccurrenceScan find_occurrences(const Document& doc, const ExtractionConfig& cfg,
                                std::size_t doc_index = 0);

// False for "too" governed by JJ or RB (the excess-quantity sense).
bool filter_too(const Occurrence& occ);

Sample truncate_sample(Sample sample, std::size_t max_len = 60);

// Context window ending at the governor's sentence, with every target adverb
// in the window removed and the marker placed before the governor.
Sample extract_positive(const Document& doc, const Occurrence& occ, const ExtractionConfig& cfg);

// Window around an arbitrary pivot with no deletions.
Sample extract_window(const Document& doc, std::size_t sentence, std::size_t pivot,
                      const ExtractionConfig& cfg);

struct NegativeMining {
  std::vector<Sample> negatives;
  std::vector<Occurrence> pivots;  // adverb field empty
  std::size_t unmatched = 0;
  std::map<std::string, std::size_t> unmatched_by_governor;
};

NegativeMining extract_negatives(const std::vector<Document>& corpus,
                                 const std::vector<Occurrence>& positives,
                                 const ExtractionConfig& cfg, Rng& rng);

struct SplitCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t total() const noexcept { return positive + negative; }
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> dev;
  std::vector<Sample> test;

  SplitCounts train_counts() const;
  SplitCounts dev_counts() const;
  SplitCounts test_counts() const;
};

SplitCounts count_labels(const std::vector<Sample>& samples);

DatasetSplit split_dataset(std::vector<Sample> samples, const ExtractionConfig& cfg, Rng& rng);

struct ExtractionStats {
  std::string dataset;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t unmatched_governors = 0;
  std::size_t filtered_too = 0;
  std::size_t unresolved_governors = 0;
  SplitCounts train, dev, test;
};

struct Dataset {
  std::string name;
  std::vector<Sample> positives;
  std::vector<Sample> negatives;
  DatasetSplit split;
  ExtractionStats stats;
};

// Full pipeline for one dataset: positives for `positive_adverbs` (a subset
// of cfg.adverbs), negatives mined against them, then the split.
Dataset build_dataset(const std::vector<Document>& corpus, const std::string& name,
                      const std::vector<std::string>& positive_adverbs,
                      const ExtractionConfig& cfg, Rng& rng);

}  // namespace presup
