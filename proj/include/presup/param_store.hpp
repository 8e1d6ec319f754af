#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "presup/tensor.hpp"

namespace presup {

struct ParamEntry {
  Tensor value;
  bool trainable = true;
};

// Named parameters, iterated in name order.
class ParamStore {
 public:
  using Map = std::map<std::string, ParamEntry>;

  Tensor& add(const std::string& name, Tensor init, bool trainable = true);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const ParamEntry& entry(const std::string& name) const;
  const Tensor& get(const std::string& name) const { return entry(name).value; }
  Tensor& get(const std::string& name);

  // Sum of element counts over trainable entries.
  std::size_t param_count() const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::vector<std::string> names() const;
  std::vector<std::string> trainable_names() const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (auto ia = a.entries_.begin(), ib = b.entries_.begin(); ia != a.entries_.end();
         ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.trainable != ib->second.trainable ||
          !(ia->second.value == ib->second.value))
        return false;
    }
    return true;
  }

 private:
  Map entries_;
};

using Gradients = std::map<std::string, Tensor>;

}  // namespace presup
