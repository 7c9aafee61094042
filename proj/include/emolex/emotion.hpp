#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emolex {

// The closed label set, in canonical (alphabetical) order.
enum class Emotion : std::size_t {
  kAnger = 0,
  kAnticipation,
  kDisgust,
  kFear,
  kJoy,
  kNegative,
  kPositive,
  kSadness,
  kSurprise,
  kTrust,
};

inline constexpr std::size_t kNumEmotions = 10;

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "anticipation", "disgust", "fear",     "joy",
    "negative", "positive", "sadness", "surprise", "trust"};

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::kAnger,    Emotion::kAnticipation, Emotion::kDisgust,
    Emotion::kFear,     Emotion::kJoy,          Emotion::kNegative,
    Emotion::kPositive, Emotion::kSadness,      Emotion::kSurprise,
    Emotion::kTrust};

constexpr std::string_view to_string(Emotion e) {
  return kEmotionNames[static_cast<std::size_t>(e)];
}

std::optional<Emotion> parse_emotion(std::string_view name);

/// A set of emotion dimensions. Iteration is always in canonical order.
class EmotionSet {
 public:
  EmotionSet() = default;
  EmotionSet(std::initializer_list<Emotion> init) {
    for (Emotion e : init) insert(e);
  }

  static EmotionSet from_bits(unsigned long bits) {
    EmotionSet s;
    s.bits_ = std::bitset<kNumEmotions>(bits);
    return s;
  }

  void insert(Emotion e) { bits_.set(static_cast<std::size_t>(e)); }
  void erase(Emotion e) { bits_.reset(static_cast<std::size_t>(e)); }
  bool contains(Emotion e) const { return bits_.test(static_cast<std::size_t>(e)); }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }
  unsigned long bits() const { return bits_.to_ulong(); }

  EmotionSet& operator|=(const EmotionSet& o) {
    bits_ |= o.bits_;
    return *this;
  }
  friend EmotionSet operator|(EmotionSet a, const EmotionSet& b) { return a |= b; }
  friend bool operator==(const EmotionSet&, const EmotionSet&) = default;

  /// True if every label in this set is also in `o`.
  bool subset_of(const EmotionSet& o) const { return (bits_ & ~o.bits_).none(); }

  std::vector<Emotion> to_vector() const;
  std::vector<std::string> names() const;

 private:
  std::bitset<kNumEmotions> bits_;
};

}  // namespace emolex
