#include "hypereval/synset_id.hpp"

#include <array>
#include <ostream>

#include "hypereval/error.hpp"

namespace hypereval {

SynsetId::SynsetId(std::uint32_t offset) : offset_(offset) {
  if (offset > kMaxOffset) {
    throw ValidationError("synset offset " + std::to_string(offset) + " exceeds 8 digits");
  }
}

bool SynsetId::valid(std::string_view text) noexcept {
  if (text.size() != 9 || text[0] != 'n') return false;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  return true;
}

SynsetId SynsetId::parse(std::string_view text) {
  if (!valid(text)) {
    throw ValidationError("malformed synset id '" + std::string(text) +
                          "' (expected 'n' followed by 8 digits)");
  }
  std::uint32_t offset = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    offset = offset * 10 + static_cast<std::uint32_t>(text[i] - '0');
  }
  return SynsetId(offset);
}

std::string SynsetId::str() const {
  std::array<char, 9> buf{};
  buf[0] = 'n';
  std::uint32_t v = offset_;
  for (int i = 8; i >= 1; --i) {
    buf[static_cast<std::size_t>(i)] = static_cast<char>('0' + v % 10);
    v /= 10;
  }
  return std::string(buf.data(), buf.size());
}

std::ostream& operator<<(std::ostream& os, SynsetId id) { return os << id.str(); }

}  // namespace hypereval
