#include "hypereval/pattern_matcher.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "hypereval/error.hpp"

namespace hypereval {
namespace {

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

}  // namespace

PatternMatcher::PatternMatcher(const std::vector<std::string>& patterns) {
  std::map<std::string, std::uint32_t> ids;
  for (const auto& p : patterns) {
    if (p.empty()) throw ValidationError("empty pattern");
    auto key = lowercase(p);
    if (ids.emplace(key, static_cast<std::uint32_t>(patterns_.size())).second) patterns_.push_back(std::move(key));
  }

  // Class 0 is every byte absent from all patterns.
  std::array<bool, 256> used{};
  for (const auto& p : patterns_) {
    for (const char c : p) used[static_cast<unsigned char>(c)] = true;
  }
  for (int b = 0; b < 256; ++b) {
    if (used[static_cast<std::size_t>(b)]) byte_class_[static_cast<std::size_t>(b)] = static_cast<std::uint16_t>(class_count_++);
  }
  for (int b = 'A'; b <= 'Z'; ++b) byte_class_[static_cast<std::size_t>(b)] = byte_class_[static_cast<std::size_t>(b - 'A' + 'a')];

  // Trie, with missing edges marked as UINT32_MAX.
  constexpr auto kNone = UINT32_MAX;
  const std::size_t width = class_count_;
  transitions_.assign(width, kNone);
  std::vector<std::int32_t> terminal{-1};
  for (std::uint32_t id = 0; id < patterns_.size(); ++id) {
    std::uint32_t state = 0;
    for (const char c : patterns_[id]) {
      const std::size_t cls = byte_class_[static_cast<unsigned char>(c)];
      auto& next = transitions_[state * width + cls];
      if (next == kNone) {
        next = static_cast<std::uint32_t>(terminal.size());
        terminal.push_back(-1);
        transitions_.resize(transitions_.size() + width, kNone);
      }
      state = transitions_[state * width + cls];
    }
    terminal[state] = static_cast<std::int32_t>(id);
  }

  const std::size_t n_states = terminal.size();
  std::vector<std::uint32_t> fail(n_states, 0);
  outputs_.assign(n_states, -1);
  std::vector<std::uint32_t> order;
  order.reserve(n_states);

  std::queue<std::uint32_t> queue;
  for (std::size_t cls = 0; cls < width; ++cls) {
    auto& next = transitions_[cls];
    if (next == kNone) {
      next = 0;
    } else {
      fail[next] = 0;
      queue.push(next);
    }
  }
  while (!queue.empty()) {
    const std::uint32_t state = queue.front();
    queue.pop();
    order.push_back(state);
    for (std::size_t cls = 0; cls < width; ++cls) {
      auto& next = transitions_[state * width + cls];
      const std::uint32_t via_fail = transitions_[fail[state] * width + cls];
      if (next == kNone) {
        next = via_fail;
      } else {
        fail[next] = via_fail;
        queue.push(next);
      }
    }
  }

  // BFS order guarantees the failure target's chain is already built.
  for (const auto state : order) {
    std::int32_t chain = outputs_[fail[state]];
    if (terminal[state] >= 0) {
      output_links_.push_back({static_cast<std::uint32_t>(terminal[state]), chain});
      chain = static_cast<std::int32_t>(output_links_.size() - 1);
    }
    outputs_[state] = chain;
  }
}

std::int64_t PatternMatcher::find(std::string_view pattern) const {
  const auto key = lowercase(pattern);
  for (std::size_t i = 0; i < patterns_.size(); ++i) {
    if (patterns_[i] == key) return static_cast<std::int64_t>(i);
  }
  return -1;
}

}  // namespace hypereval
