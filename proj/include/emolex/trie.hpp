#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emolex/utf8.hpp"

namespace emolex {

/// Code-point prefix tree with a value on terminal nodes. Edges live in one
/// flat hash table keyed by (node, code point).
template <class V>
class PrefixTrie {
 public:
  struct Match {
    std::size_t chars;  // match length in characters
    const V* value;
  };

  PrefixTrie() : terminal_(1, -1) {}

  /// Inserts or replaces the value for `key`. Empty keys are ignored.
  V& insert(std::string_view key, V value) {
    std::uint32_t node = 0;
    for (const utf8::Char& c : utf8::decode(key)) node = child_or_create(node, c.cp);
    if (node == 0) {
      empty_slot_ = std::move(value);
      return empty_slot_;
    }
    if (terminal_[node] < 0) {
      terminal_[node] = static_cast<std::int32_t>(values_.size());
      values_.push_back(std::move(value));
      ++size_;
    } else {
      values_[terminal_[node]] = std::move(value);
    }
    return values_[terminal_[node]];
  }

  const V* find(std::string_view key) const {
    std::uint32_t node = 0;
    for (const utf8::Char& c : utf8::decode(key)) {
      auto it = edges_.find(edge_key(node, c.cp));
      if (it == edges_.end()) return nullptr;
      node = it->second;
    }
    if (node == 0 || terminal_[node] < 0) return nullptr;
    return &values_[terminal_[node]];
  }

  V* find(std::string_view key) {
    return const_cast<V*>(std::as_const(*this).find(key));
  }

  /// Longest key that is a prefix of chars[pos..].
  std::optional<Match> longest_match(std::span<const utf8::Char> chars, std::size_t pos) const {
    std::optional<Match> best;
    std::uint32_t node = 0;
    for (std::size_t i = pos; i < chars.size(); ++i) {
      auto it = edges_.find(edge_key(node, chars[i].cp));
      if (it == edges_.end()) break;
      node = it->second;
      if (terminal_[node] >= 0) best = Match{i - pos + 1, &values_[terminal_[node]]};
    }
    return best;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

 private:
  static std::uint64_t edge_key(std::uint32_t node, char32_t cp) {
    return (static_cast<std::uint64_t>(node) << 21) | static_cast<std::uint64_t>(cp);
  }

  std::uint32_t child_or_create(std::uint32_t node, char32_t cp) {
    auto [it, inserted] =
        edges_.try_emplace(edge_key(node, cp), static_cast<std::uint32_t>(terminal_.size()));
    if (inserted) terminal_.push_back(-1);
    return it->second;
  }

  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
  std::vector<std::int32_t> terminal_;
  std::vector<V> values_;
  V empty_slot_{};
  std::size_t size_ = 0;
};

}  // namespace emolex
