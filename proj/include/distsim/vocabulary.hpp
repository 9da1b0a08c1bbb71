// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "distsim/common.hpp"

namespace distsim {

/// Surface strings interned to dense ids in first-seen order.
class Vocabulary {
 public:
  WordId intern(std::string_view surface) {
    auto it = index_.find(std::string(surface));
    if (it != index_.end()) return it->second;
    WordId id = static_cast<WordId>(entries_.size());
    entries_.emplace_back(surface);
    index_.emplace(entries_.back(), id);
    return id;
  }

  std::optional<WordId> find(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& surface(WordId id) const {
    if (id >= entries_.size()) throw DataError("vocabulary id out of range");
    return entries_[id];
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const Vocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, WordId> index_;
};

}  // namespace distsim
