#pragma once

#include <cstddef>
#include <functional>

namespace gpp {

// Static block partition of [0, n) over worker threads. fn(i) must touch
// only slot i state, which makes results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

}  // namespace gpp
