#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace hypereval {

/// WordNet noun synset identifier in ImageNet "wnid" form, e.g. n02084071.
///
/// Ordering matches the lexicographic order of the textual form because the
/// offset is always rendered as exactly eight digits.
class SynsetId {
 public:
  static constexpr std::uint32_t kMaxOffset = 99'999'999;

  constexpr SynsetId() = default;

  /// Throws ValidationError when `offset` does not fit in eight digits.
  explicit SynsetId(std::uint32_t offset);

  /// Parses "n" followed by exactly eight decimal digits.
  static SynsetId parse(std::string_view text);
  static bool valid(std::string_view text) noexcept;

  constexpr char pos() const noexcept { return 'n'; }
  constexpr std::uint32_t offset() const noexcept { return offset_; }

  std::string str() const;

  friend constexpr auto operator<=>(SynsetId, SynsetId) = default;

 private:
  std::uint32_t offset_ = 0;
};

std::ostream& operator<<(std::ostream& os, SynsetId id);

}  // namespace hypereval

template <>
struct std::hash<hypereval::SynsetId> {
  std::size_t operator()(hypereval::SynsetId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.offset());
  }
};
