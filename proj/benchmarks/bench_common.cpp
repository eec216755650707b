#include "bench_common.hpp"

#include <sstream>

namespace hypereval::bench {

HierarchyGraph layered_hierarchy(std::size_t leaves) {
  std::ostringstream edges, leaf_map, lemmas;
  const std::uint32_t root = 1, first_group = 100, first_block = 50'000, first_leaf = 1'000'000;
  lemmas << SynsetId(root) << " entity\n";
  const std::size_t groups = (leaves + 9) / 10;
  for (std::size_t g = 0; g < groups; ++g) {
    const SynsetId group(static_cast<std::uint32_t>(first_group + g));
    const SynsetId block(static_cast<std::uint32_t>(first_block + g / 10));
    edges << group << ' ' << block << '\n';
    lemmas << group << " group_" << g << '\n';
    if (g % 10 == 0) {
      edges << block << ' ' << SynsetId(root) << '\n';
      lemmas << block << " block_" << g / 10 << '\n';
    }
  }
  for (std::size_t i = 0; i < leaves; ++i) {
    const SynsetId leaf(static_cast<std::uint32_t>(first_leaf + i));
    edges << leaf << ' ' << SynsetId(static_cast<std::uint32_t>(first_group + i / 10)) << '\n';
    leaf_map << i << ' ' << leaf << " thing_" << i << '\n';
  }
  std::istringstream e(edges.str()), l(leaf_map.str()), m(lemmas.str());
  HierarchyLoadOptions options;
  options.expected_leaf_count = leaves;
  return parse_hierarchy(e, l, &m, options);
}

}  // namespace hypereval::bench
