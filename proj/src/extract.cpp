#include "presup/extract.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "presup/error.hpp"

namespace presup {

std::vector<std::string> default_adverbs() { return {"too", "again", "also", "still", "yet"}; }

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

long parse_long(std::string_view text, std::string_view what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::optional<long> numeric_section(std::string_view id) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), v);
  if (ec != std::errc() || ptr != id.data() + id.size()) return std::nullopt;
  return v;
}

// A document as one token stream; sentences keep their boundaries through
// `offsets`.
class FlatDoc {
 public:
  explicit FlatDoc(const Document& doc) : doc_(doc) {
    offsets_.reserve(doc.sentences.size() + 1);
    std::size_t n = 0;
    for (const auto& s : doc.sentences) {
      offsets_.push_back(n);
      n += s.size();
    }
    offsets_.push_back(n);
  }

  std::size_t size() const { return offsets_.back(); }
  std::size_t offset(std::size_t sentence) const { return offsets_[sentence]; }
  std::size_t sentence_end(std::size_t sentence) const { return offsets_[sentence + 1]; }

  std::pair<std::size_t, std::size_t> locate(std::size_t global) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global);
    const std::size_t s = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return {s, global - offsets_[s]};
  }
  const std::string& token(std::size_t global) const {
    auto [s, i] = locate(global);
    return doc_.sentences[s].tokens[i];
  }
  const std::string& pos(std::size_t global) const {
    auto [s, i] = locate(global);
    return doc_.sentences[s].pos[i];
  }

 private:
  const Document& doc_;
  std::vector<std::size_t> offsets_;
};

template <typename Drop>
Sample build_window(const Document& doc, const FlatDoc& flat, std::size_t sentence,
                    std::size_t pivot, const ExtractionConfig& cfg, Drop drop) {
  const std::size_t g = flat.offset(sentence) + pivot;
  std::vector<std::size_t> before;
  for (std::size_t k = g; k-- > 0 && before.size() < cfg.window_before;) {
    if (!drop(k)) before.push_back(k);
  }
  std::reverse(before.begin(), before.end());

  Sample s;
  s.section = doc.section_id;
  for (std::size_t k : before) {
    s.tokens.push_back(flat.token(k));
    s.pos.push_back(flat.pos(k));
  }
  s.tokens.emplace_back(kMarker);
  s.pos.emplace_back(kMarker);
  for (std::size_t k = g; k < flat.sentence_end(sentence); ++k) {
    if (k != g && drop(k)) continue;
    s.tokens.push_back(flat.token(k));
    s.pos.push_back(flat.pos(k));
  }
  return s;
}

bool sentence_has_adverb(const AnnotatedSentence& s, const ExtractionConfig& cfg) {
  return std::any_of(s.tokens.begin(), s.tokens.end(),
                     [&](const std::string& t) { return cfg.is_adverb(t); });
}

}  // namespace

SectionRange SectionRange::parse(std::string_view text) {
  const auto dash = text.find('-', 1);
  SectionRange r;
  if (dash == std::string_view::npos) {
    r.lo = r.hi = parse_long(text, "section range");
  } else {
    r.lo = parse_long(text.substr(0, dash), "section range");
    r.hi = parse_long(text.substr(dash + 1), "section range");
  }
  if (r.lo > r.hi) throw UsageError("empty section range '" + std::string(text) + "'");
  return r;
}

std::string SectionRange::to_string() const {
  return lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
}

void ExtractionConfig::validate() const {
  if (adverbs.empty()) throw UsageError("extraction: no target adverbs configured");
  if (window_before < 1) throw UsageError("extraction: window_before must be >= 1");
  if (max_len < 2) throw UsageError("extraction: max_len must be >= 2");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw UsageError("extraction: dev_fraction must be in (0, 1)");
  }
  std::vector<SectionRange> sorted = test_sections;
  std::sort(sorted.begin(), sorted.end(),
            [](const SectionRange& a, const SectionRange& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].lo <= sorted[i - 1].hi) {
      throw UsageError("extraction: overlapping test section ranges " +
                       sorted[i - 1].to_string() + " and " + sorted[i].to_string());
    }
  }
}

bool ExtractionConfig::is_adverb(std::string_view token) const {
  const std::string t = lower(token);
  return std::find(adverbs.begin(), adverbs.end(), t) != adverbs.end();
}

std::size_t Sample::marker_index() const {
  const auto it = std::find(tokens.begin(), tokens.end(), kMarker);
  if (it == tokens.end()) throw UsageError("sample has no marker token");
  return static_cast<std::size_t>(it - tokens.begin());
}

void validate_sample(const Sample& s, const ExtractionConfig& cfg) {
  if (s.tokens.size() != s.pos.size()) throw UsageError("sample token/pos length mismatch");
  if (s.tokens.size() > cfg.max_len) {
    throw UsageError("sample longer than max_len (" + std::to_string(s.tokens.size()) + ")");
  }
  if (std::count(s.tokens.begin(), s.tokens.end(), kMarker) != 1 ||
      std::count(s.pos.begin(), s.pos.end(), kMarker) != 1) {
    throw UsageError("sample must contain exactly one marker in tokens and pos");
  }
  const std::size_t m = s.marker_index();
  if (s.pos[m] != kMarker) throw UsageError("marker misaligned between tokens and pos");
  if (m + 1 >= s.tokens.size()) throw UsageError("marker is not followed by a governor");
  if (s.positive()) {
    for (const auto& t : s.tokens)
      if (cfg.is_adverb(t)) throw UsageError("positive sample contains target adverb '" + t + "'");
  }
}

std::optional<std::size_t> resolve_governor(const AnnotatedSentence& sentence,
                                            std::size_t adverb_index) {
  if (adverb_index >= sentence.size()) throw UsageError("resolve_governor: index out of range");
  const int h = sentence.head[adverb_index];
  if (h >= 0 && static_cast<std::size_t>(h) != adverb_index) return static_cast<std::size_t>(h);

  auto is_verb = [&](std::size_t i) { return sentence.pos[i].starts_with("VB"); };
  const std::size_t n = sentence.size();
  for (std::size_t d = 1; d < n; ++d) {
    if (d <= adverb_index && is_verb(adverb_index - d)) return adverb_index - d;
    if (adverb_index + d < n && is_verb(adverb_index + d)) return adverb_index + d;
  }
  return std::nullopt;
}

OccurrenceScan find_occurrences(const Document& doc, const ExtractionConfig& cfg,
                                std::size_t doc_index) {
  OccurrenceScan scan;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const AnnotatedSentence& s = doc.sentences[si];
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!cfg.is_adverb(s.tokens[i])) continue;
      const auto gov = resolve_governor(s, i);
      if (!gov || cfg.is_adverb(s.tokens[*gov])) {
        ++scan.unresolved;
        continue;
      }
      Occurrence occ;
      occ.doc_index = doc_index;
      occ.doc_id = doc.doc_id;
      occ.sentence = si;
      occ.adverb = lower(s.tokens[i]);
      occ.adverb_index = i;
      occ.governor_index = *gov;
      occ.governor = s.tokens[*gov];
      occ.governor_pos = s.pos[*gov];
      scan.occurrences.push_back(std::move(occ));
    }
  }
  return scan;
}

bool filter_too(const Occurrence& occ) {
  if (occ.adverb != "too") return true;
  return occ.governor_pos != "JJ" && occ.governor_pos != "RB";
}

Sample truncate_sample(Sample s, std::size_t max_len) {
  const std::size_t n = s.tokens.size();
  if (n <= max_len) return s;
  const std::size_t m = s.marker_index();
  const std::size_t excess = n - max_len;
  std::size_t front = 0;
  if (excess <= m) {
    front = excess;
  } else if (m + 1 >= max_len) {
    // Tail-only truncation would cut the marker or its governor.
    front = m;
  }
  auto cut = [&](std::vector<std::string>& v) {
    v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(front));
    v.resize(max_len);
  };
  cut(s.tokens);
  cut(s.pos);
  return s;
}

Sample extract_positive(const Document& doc, const Occurrence& occ, const ExtractionConfig& cfg) {
  FlatDoc flat(doc);
  Sample s = build_window(doc, flat, occ.sentence, occ.governor_index, cfg,
                          [&](std::size_t k) { return cfg.is_adverb(flat.token(k)); });
  s.label = occ.adverb;
  return truncate_sample(std::move(s), cfg.max_len);
}

Sample extract_window(const Document& doc, std::size_t sentence, std::size_t pivot,
                      const ExtractionConfig& cfg) {
  FlatDoc flat(doc);
  Sample s = build_window(doc, flat, sentence, pivot, cfg, [](std::size_t) { return false; });
  s.label = std::string(kNegativeLabel);
  return truncate_sample(std::move(s), cfg.max_len);
}

NegativeMining extract_negatives(const std::vector<Document>& corpus,
                                 const std::vector<Occurrence>& positives,
                                 const ExtractionConfig& cfg, Rng& rng) {
  NegativeMining out;
  if (positives.empty()) return out;

  std::set<std::string> wanted;
  for (const auto& p : positives) wanted.insert(p.governor);

  // surface -> doc -> sorted global pivot positions in adverb-free sentences
  std::unordered_map<std::string, std::map<std::size_t, std::vector<std::size_t>>> index;
  std::vector<FlatDoc> flats;
  flats.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    flats.emplace_back(corpus[d]);
    const Document& doc = corpus[d];
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const AnnotatedSentence& s = doc.sentences[si];
      if (sentence_has_adverb(s, cfg)) continue;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (wanted.count(s.tokens[i])) index[s.tokens[i]][d].push_back(flats[d].offset(si) + i);
      }
    }
  }

  std::vector<std::size_t> doc_order(corpus.size());
  std::iota(doc_order.begin(), doc_order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(doc_order));

  std::set<std::pair<std::size_t, std::size_t>> used;
  std::map<std::pair<std::string, std::size_t>, std::size_t> remaining;

  auto eligible = [&](std::size_t d, std::size_t global) {
    if (!cfg.strict_negatives) return true;
    auto [si, i] = flats[d].locate(global);
    const Sample w = extract_window(corpus[d], si, i, cfg);
    return std::none_of(w.tokens.begin(), w.tokens.end(),
                        [&](const std::string& t) { return cfg.is_adverb(t); });
  };

  for (const Occurrence& occ : positives) {
    bool found = false;
    auto it = index.find(occ.governor);
    if (it != index.end()) {
      for (std::size_t d : doc_order) {
        auto dit = it->second.find(d);
        if (dit == it->second.end()) continue;
        auto rem = remaining.try_emplace({occ.governor, d}, dit->second.size()).first;
        if (rem->second == 0) continue;
        const std::vector<std::size_t>& cands = dit->second;
        const std::size_t start = rng.uniform_index(std::max<std::size_t>(flats[d].size(), 1));
        const auto first = std::lower_bound(cands.begin(), cands.end(), start);
        const std::size_t n = cands.size();
        const std::size_t base = static_cast<std::size_t>(first - cands.begin());
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t g = cands[(base + k) % n];
          if (used.count({d, g})) continue;
          if (!eligible(d, g)) {
            used.insert({d, g});
            --rem->second;
            continue;
          }
          used.insert({d, g});
          --rem->second;
          auto [si, i] = flats[d].locate(g);
          out.negatives.push_back(extract_window(corpus[d], si, i, cfg));
          Occurrence piv;
          piv.doc_index = d;
          piv.doc_id = corpus[d].doc_id;
          piv.sentence = si;
          piv.governor_index = i;
          piv.governor = corpus[d].sentences[si].tokens[i];
          piv.governor_pos = corpus[d].sentences[si].pos[i];
          out.pivots.push_back(std::move(piv));
          found = true;
          break;
        }
        if (found) break;
      }
    }
    if (!found) {
      ++out.unmatched;
      ++out.unmatched_by_governor[occ.governor];
    }
  }
  return out;
}

SplitCounts count_labels(const std::vector<Sample>& samples) {
  SplitCounts c;
  for (const auto& s : samples) (s.positive() ? c.positive : c.negative)++;
  return c;
}

SplitCounts DatasetSplit::train_counts() const { return count_labels(train); }
SplitCounts DatasetSplit::dev_counts() const { return count_labels(dev); }
SplitCounts DatasetSplit::test_counts() const { return count_labels(test); }

DatasetSplit split_dataset(std::vector<Sample> samples, const ExtractionConfig& cfg, Rng& rng) {
  cfg.validate();
  DatasetSplit split;
  std::vector<Sample> rest;
  for (auto& s : samples) {
    const auto sec = numeric_section(s.section);
    const bool test = sec && std::any_of(cfg.test_sections.begin(), cfg.test_sections.end(),
                                         [&](const SectionRange& r) { return r.contains(*sec); });
    (test ? split.test : rest).push_back(std::move(s));
  }
  rng.shuffle(std::span<Sample>(rest));
  const auto n_dev = static_cast<std::size_t>(
      std::llround(static_cast<double>(rest.size()) * cfg.dev_fraction));
  split.dev.assign(std::make_move_iterator(rest.begin()),
                   std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_dev)));
  split.train.assign(std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_dev)),
                     std::make_move_iterator(rest.end()));
  return split;
}

Dataset build_dataset(const std::vector<Document>& corpus, const std::string& name,
                      const std::vector<std::string>& positive_adverbs,
                      const ExtractionConfig& cfg, Rng& rng) {
  cfg.validate();
  for (const auto& a : positive_adverbs) {
    if (!cfg.is_adverb(a)) throw UsageError("adverb '" + a + "' is not a configured target");
  }
  Dataset ds;
  ds.name = name;
  ds.stats.dataset = name;

  std::vector<Occurrence> kept;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    OccurrenceScan scan = find_occurrences(corpus[d], cfg, d);
    for (auto& occ : scan.occurrences) {
      if (std::find(positive_adverbs.begin(), positive_adverbs.end(), occ.adverb) ==
          positive_adverbs.end())
        continue;
      if (!filter_too(occ)) {
        ++ds.stats.filtered_too;
        continue;
      }
      ds.positives.push_back(extract_positive(corpus[d], occ, cfg));
      kept.push_back(std::move(occ));
    }
    // Unresolved governors are attributed only to the adverbs of this dataset.
    for (std::size_t si = 0; si < corpus[d].sentences.size(); ++si) {
      const auto& s = corpus[d].sentences[si];
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (!cfg.is_adverb(s.tokens[i])) continue;
        const std::string a = lower(s.tokens[i]);
        if (std::find(positive_adverbs.begin(), positive_adverbs.end(), a) ==
            positive_adverbs.end())
          continue;
        const auto gov = resolve_governor(s, i);
        if (!gov || cfg.is_adverb(s.tokens[*gov])) ++ds.stats.unresolved_governors;
      }
    }
  }

  Rng mining = rng.derive("negatives");
  NegativeMining neg = extract_negatives(corpus, kept, cfg, mining);
  ds.negatives = std::move(neg.negatives);
  ds.stats.positives = ds.positives.size();
  ds.stats.negatives = ds.negatives.size();
  ds.stats.unmatched_governors = neg.unmatched;

  for (const auto& s : ds.positives) validate_sample(s, cfg);
  for (const auto& s : ds.negatives) validate_sample(s, cfg);

  std::vector<Sample> all = ds.positives;
  all.insert(all.end(), ds.negatives.begin(), ds.negatives.end());
  Rng splitter = rng.derive("split");
  ds.split = split_dataset(std::move(all), cfg, splitter);
  ds.stats.train = ds.split.train_counts();
  ds.stats.dev = ds.split.dev_counts();
  ds.stats.test = ds.split.test_counts();
  return ds;
}

}  // namespace presup
