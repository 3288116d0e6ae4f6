#pragma once

#include <cstddef>
#include <functional>

namespace gridtopo {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items
/// are claimed from a shared counter, so each index is visited exactly once.
/// threads == 0 selects std::thread::hardware_concurrency().
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace gridtopo
