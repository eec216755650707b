#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hypereval {

/// ASCII case-insensitive multi-pattern matcher (Aho-Corasick compiled to a
/// full DFA over the byte classes that occur in the patterns).
class PatternMatcher {
 public:
  /// Patterns are lowercased; duplicates collapse to one id. Empty patterns
  /// are rejected with ValidationError.
  explicit PatternMatcher(const std::vector<std::string>& patterns);
  PatternMatcher() : PatternMatcher(std::vector<std::string>{}) {}

  std::size_t pattern_count() const noexcept { return patterns_.size(); }
  std::size_t state_count() const noexcept { return outputs_.size(); }
  const std::string& pattern(std::uint32_t id) const { return patterns_[id]; }
  /// Id for a pattern (after lowercasing), or -1.
  std::int64_t find(std::string_view pattern) const;

  /// Calls `on_match(id, end)` for every occurrence, `end` exclusive.
  /// Overlapping occurrences are all reported.
  template <typename F>
  void scan(std::string_view text, F&& on_match) const {
    std::uint32_t state = 0;
    const auto* table = transitions_.data();
    const std::size_t width = class_count_;
    for (std::size_t i = 0; i < text.size(); ++i) {
      state = table[state * width + byte_class_[static_cast<unsigned char>(text[i])]];
      for (std::int32_t out = outputs_[state]; out >= 0; out = output_links_[static_cast<std::size_t>(out)].next) {
        on_match(output_links_[static_cast<std::size_t>(out)].pattern, i + 1);
      }
    }
  }

 private:
  struct OutputLink {
    std::uint32_t pattern;
    std::int32_t next;
  };

  std::vector<std::string> patterns_;
  std::array<std::uint16_t, 256> byte_class_{};
  std::size_t class_count_ = 1;
  std::vector<std::uint32_t> transitions_;
  // Head of each state's output chain into `output_links_`, -1 for none.
  std::vector<std::int32_t> outputs_;
  std::vector<OutputLink> output_links_;
};

/// ASCII letters and digits, plus every byte >= 0x80 so that UTF-8 letters
/// never create a word boundary.
inline bool is_word_byte(unsigned char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace hypereval
