#pragma once

#include <cstddef>
#include <functional>

namespace mmfg {

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `threads`
/// worker threads. Chunks write disjoint slots, so results do not depend on
/// the thread count.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace mmfg
