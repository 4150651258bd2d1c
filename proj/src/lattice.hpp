#pragma once

#include <cstddef>
#include <vector>

namespace convext::detail {

/// One representative of every {v, -v} pair in {-1, 0, 1}^d \ {0}: the
/// first nonzero component is +1.
std::vector<std::vector<int>> half_directions(std::size_t d);

}  // namespace convext::detail
