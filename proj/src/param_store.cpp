#include "presup/param_store.hpp"

#include "presup/error.hpp"

namespace presup {

Tensor& ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  auto [it, inserted] = entries_.try_emplace(name, ParamEntry{std::move(init), trainable});
  if (!inserted) throw UsageError("duplicate parameter name: " + name);
  return it->second.value;
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UsageError("unknown parameter: " + name);
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UsageError("unknown parameter: " + name);
  return it->second.value;
}

std::size_t ParamStore::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_)
    if (e.trainable) n += e.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_)
    if (e.trainable) out.push_back(name);
  return out;
}

}  // namespace presup
