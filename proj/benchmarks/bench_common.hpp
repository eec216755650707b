#pragma once

#include "hypereval/hierarchy.hpp"

namespace hypereval::bench {

// Three-level tree over `leaves` classes: groups of 10, then groups of 10 groups.
HierarchyGraph layered_hierarchy(std::size_t leaves = 1000);

}  // namespace hypereval::bench
