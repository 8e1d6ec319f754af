#include "presup/corpus.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "presup/error.hpp"

namespace presup {

std::size_t Document::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct PendingSentence {
  AnnotatedSentence sentence;
  std::vector<std::size_t> lines;
};

}  // namespace

std::vector<Document> parse_corpus(std::istream& in, std::string_view format,
                                   const std::string& source) {
  if (format != kCorpusFormat) {
    throw UsageError("unknown corpus format '" + std::string(format) + "'");
  }
  std::vector<Document> docs;
  std::set<std::string> seen_ids;
  PendingSentence pending;

  auto flush = [&]() {
    AnnotatedSentence& s = pending.sentence;
    if (s.tokens.empty()) return;
    const int n = static_cast<int>(s.size());
    for (std::size_t i = 0; i < s.head.size(); ++i) {
      if (s.head[i] < -1 || s.head[i] >= n) {
        throw ParseError(source, pending.lines[i],
                         "head index " + std::to_string(s.head[i]) +
                             " outside sentence of length " + std::to_string(n));
      }
    }
    docs.back().sentences.push_back(std::move(s));
    pending = {};
  };

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      if (!docs.empty()) flush();
      continue;
    }
    if (line.starts_with("#doc")) {
      if (!docs.empty()) flush();
      std::istringstream ss{std::string(line)};
      std::string tag, id, section, extra;
      ss >> tag >> id >> section;
      if (tag != "#doc" || id.empty() || section.empty() || (ss >> extra)) {
        throw ParseError(source, lineno, "expected '#doc <doc_id> <section_id>'");
      }
      if (!seen_ids.insert(id).second) {
        throw ParseError(source, lineno, "duplicate document id '" + id + "'");
      }
      docs.push_back(Document{id, section, {}});
      continue;
    }
    if (docs.empty()) {
      throw ParseError(source, lineno, "token row before any '#doc' line");
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(source, lineno,
                       "expected token<TAB>pos<TAB>head, got " + std::to_string(fields.size()) +
                           " field(s)");
    }
    int head = 0;
    const auto* first = fields[2].data();
    const auto* last = first + fields[2].size();
    auto [ptr, ec] = std::from_chars(first, last, head);
    if (ec != std::errc() || ptr != last) {
      throw ParseError(source, lineno, "bad head index '" + std::string(fields[2]) + "'");
    }
    pending.sentence.tokens.emplace_back(fields[0]);
    pending.sentence.pos.emplace_back(fields[1]);
    pending.sentence.head.push_back(head);
    pending.lines.push_back(lineno);
  }
  if (!docs.empty()) flush();
  return docs;
}

std::vector<Document> read_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return parse_corpus(in, kCorpusFormat, path);
}

}  // namespace presup
