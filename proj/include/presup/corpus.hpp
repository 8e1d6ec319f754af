#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace presup {

// One tagged sentence. head[i] is the 0-based index of token i's governor
// within the sentence, or -1 for root / unknown.
struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::vector<int> head;

  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

struct Document {
  std::string doc_id;
  std::string section_id;
  std::vector<AnnotatedSentence> sentences;

  std::size_t token_count() const noexcept;
};

inline constexpr std::string_view kCorpusFormat = "tsv3";

// Reads the three-column corpus format:
//   #doc <doc_id> <section_id>      starts a document
//   token<TAB>pos<TAB>head_index    one token per line
//   <blank line>                    ends a sentence
// Throws ParseError (with line number) on malformed rows, UsageError on an
// unknown format id.
std::vector<Document> parse_corpus(std::istream& in, std::string_view format = kCorpusFormat,
                                   const std::string& source = "<corpus>");
std::vector<Document> read_corpus_file(const std::string& path);

}  // namespace presup
