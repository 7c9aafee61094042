#include "emolex/emotion.hpp"

namespace emolex {

std::optional<Emotion> parse_emotion(std::string_view name) {
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    if (kEmotionNames[i] == name) return kAllEmotions[i];
  }
  return std::nullopt;
}

std::vector<Emotion> EmotionSet::to_vector() const {
  std::vector<Emotion> out;
  for (Emotion e : kAllEmotions) {
    if (contains(e)) out.push_back(e);
  }
  return out;
}

std::vector<std::string> EmotionSet::names() const {
  std::vector<std::string> out;
  for (Emotion e : kAllEmotions) {
    if (contains(e)) out.emplace_back(to_string(e));
  }
  return out;
}

}  // namespace emolex
