#pragma once

#include <cstddef>
#include <functional>

namespace bnngp {

/// Worker count used when a call does not pass one explicitly. Defaults to
/// the hardware concurrency; the CLI's --threads overrides it.
int default_threads();
void set_default_threads(int n);

/// Runs body(begin, end, worker) over a static partition of [0, n) into
/// contiguous chunks, one per worker. The partition depends only on n and the
/// worker count, and callers write results into per-index slots, so output is
/// independent of scheduling. threads <= 0 means default_threads().
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body,
                  int threads = 0);

}  // namespace bnngp
