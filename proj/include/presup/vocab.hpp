#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "presup/extract.hpp"
#include "presup/rng.hpp"
#include "presup/tensor.hpp"

namespace presup {

inline constexpr std::string_view kUnknownToken = "<unk>";
inline constexpr std::string_view kPadToken = "<pad>";

// Token and POS-tag id maps. Ordinary entries are ranked by descending
// training frequency, ties broken lexicographically; the marker, unknown and
// padding entries follow them in that order.
class Vocab {
 public:
  static Vocab build(const std::vector<Sample>& train, std::size_t min_count = 1);
  static Vocab from_lists(std::vector<std::string> tokens, std::vector<std::string> pos_tags);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t pos_size() const noexcept { return pos_.size(); }

  std::size_t token_id(std::string_view token) const;
  std::size_t pos_id(std::string_view tag) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::string& pos_tag(std::size_t id) const { return pos_.at(id); }

  std::size_t marker_id() const noexcept { return size() - 3; }
  std::size_t unknown_id() const noexcept { return size() - 2; }
  std::size_t pad_id() const noexcept { return size() - 1; }
  std::size_t pos_marker_id() const noexcept { return pos_size() - 3; }
  std::size_t pos_unknown_id() const noexcept { return pos_size() - 2; }
  std::size_t pos_pad_id() const noexcept { return pos_size() - 1; }

  // Full id lists including the trailing special entries.
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::string>& pos_tags() const noexcept { return pos_; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_ && a.pos_ == b.pos_;
  }

 private:
  void index();

  std::vector<std::string> tokens_;
  std::vector<std::string> pos_;
  std::unordered_map<std::string, std::size_t> token_ids_;
  std::unordered_map<std::string, std::size_t> pos_ids_;
};

// |V| x dim word vectors. Rows for tokens found in the text vector file are
// copied; every other row is drawn uniform(-0.05, 0.05) from a stream derived
// from (rng, token) so it is stable across reloads. The padding row is zero.
Tensor load_embeddings(const std::string& path, const Vocab& vocab, std::size_t dim,
                       const Rng& rng);
Tensor random_embeddings(const Vocab& vocab, std::size_t dim, const Rng& rng);

}  // namespace presup
