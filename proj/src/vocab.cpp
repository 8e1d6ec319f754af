#include "presup/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "presup/error.hpp"

namespace presup {
namespace {

std::vector<std::string> ranked(const std::map<std::string, std::size_t>& counts,
                                std::size_t min_count) {
  std::vector<std::pair<std::string, std::size_t>> items;
  for (const auto& [tok, n] : counts) {
    if (n < min_count) continue;
    if (tok == kMarker || tok == kUnknownToken || tok == kPadToken) continue;
    items.emplace_back(tok, n);
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size() + 3);
  for (auto& [tok, n] : items) out.push_back(std::move(tok));
  out.emplace_back(kMarker);
  out.emplace_back(kUnknownToken);
  out.emplace_back(kPadToken);
  return out;
}

void fill_random_row(Tensor& table, std::size_t row, std::string_view token, const Rng& rng) {
  Rng r = rng.derive(token);
  const std::size_t d = table.cols();
  for (std::size_t j = 0; j < d; ++j) table.at(row, j) = r.uniform(-0.05, 0.05);
}

}  // namespace

Vocab Vocab::build(const std::vector<Sample>& train, std::size_t min_count) {
  if (train.empty()) throw UsageError("build_vocab: empty training set");
  std::map<std::string, std::size_t> tok_counts, pos_counts;
  for (const auto& s : train) {
    for (const auto& t : s.tokens) ++tok_counts[t];
    for (const auto& p : s.pos) ++pos_counts[p];
  }
  Vocab v;
  // std::map iterates lexicographically, so the stable sort keeps that as
  // the tie-break.
  v.tokens_ = ranked(tok_counts, min_count);
  v.pos_ = ranked(pos_counts, 1);
  v.index();
  return v;
}

Vocab Vocab::from_lists(std::vector<std::string> tokens, std::vector<std::string> pos_tags) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.pos_ = std::move(pos_tags);
  auto check = [](const std::vector<std::string>& l) {
    return l.size() >= 3 && l[l.size() - 3] == kMarker && l[l.size() - 2] == kUnknownToken &&
           l[l.size() - 1] == kPadToken;
  };
  if (!check(v.tokens_) || !check(v.pos_)) {
    throw UsageError("vocabulary lists must end with the marker, unknown and pad entries");
  }
  v.index();
  return v;
}

void Vocab::index() {
  token_ids_.clear();
  pos_ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!token_ids_.emplace(tokens_[i], i).second) {
      throw UsageError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
  for (std::size_t i = 0; i < pos_.size(); ++i) {
    if (!pos_ids_.emplace(pos_[i], i).second) {
      throw UsageError("duplicate POS tag '" + pos_[i] + "'");
    }
  }
}

std::size_t Vocab::token_id(std::string_view token) const {
  auto it = token_ids_.find(std::string(token));
  return it == token_ids_.end() ? unknown_id() : it->second;
}

std::size_t Vocab::pos_id(std::string_view tag) const {
  auto it = pos_ids_.find(std::string(tag));
  return it == pos_ids_.end() ? pos_unknown_id() : it->second;
}

Tensor random_embeddings(const Vocab& vocab, std::size_t dim, const Rng& rng) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
  Tensor table(Shape{vocab.size(), dim});
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (i == vocab.pad_id()) continue;
    fill_random_row(table, i, vocab.token(i), rng);
  }
  return table;
}

Tensor load_embeddings(const std::string& path, const Vocab& vocab, std::size_t dim,
                       const Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  Tensor table(Shape{vocab.size(), dim});
  std::vector<bool> filled(vocab.size(), false);

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(path, lineno, "bad vector component '" + field + "'");
      }
      values.push_back(v);
    }
    if (lineno == 1 && values.size() == 1) {
      // "count dim" header
      std::size_t header_dim = static_cast<std::size_t>(values[0]);
      if (header_dim != dim) {
        throw ParseError(path, lineno,
                         "file dimension " + std::to_string(header_dim) +
                             " does not match configured " + std::to_string(dim));
      }
      continue;
    }
    if (values.size() != dim) {
      throw ParseError(path, lineno,
                       "vector of length " + std::to_string(values.size()) +
                           " does not match configured dimension " + std::to_string(dim));
    }
    const std::size_t id = vocab.token_id(token);
    if (id == vocab.unknown_id() && token != kUnknownToken) continue;
    if (id == vocab.pad_id() || filled[id]) continue;
    std::copy(values.begin(), values.end(), table.data().begin() + id * dim);
    filled[id] = true;
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (!filled[i] && i != vocab.pad_id()) fill_random_row(table, i, vocab.token(i), rng);
  }
  return table;
}

}  // namespace presup
