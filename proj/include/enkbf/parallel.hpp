#pragma once

// Deterministic parallel helpers.  parallel_for splits an index range into
// contiguous chunks executed on a shared pool; workers only write disjoint
// slots, so results are independent of the thread count.  All statistical
// reductions in this codebase go through pairwise_sum, a fixed-shape
// recursive tree over ascending indices, which yields bit-identical sums
// no matter how the element work was scheduled.

#include <functional>

namespace enkbf {

// Global worker count (>= 1).  Set once at startup from --threads /
// ENKBF_THREADS; defaults to the hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Run fn(i) for i in [0, n).  Bodies must not touch shared mutable state
// except their own slot i.  Nested calls degrade to serial execution.
void parallel_for(int n, const std::function<void(int)>& fn);

// Fixed-shape pairwise reduction of leaf(i) over [0, n) into `acc` via
// acc += leaf(i) semantics.  Vec must support operator+= and copy.
template <typename Vec, typename Leaf>
Vec pairwise_sum(int lo, int hi, const Leaf& leaf) {
    constexpr int kBlock = 8;
    if (hi - lo <= kBlock) {
        Vec acc = leaf(lo);
        for (int i = lo + 1; i < hi; ++i) acc += leaf(i);
        return acc;
    }
    const int mid = lo + (hi - lo) / 2;
    Vec left = pairwise_sum<Vec>(lo, mid, leaf);
    left += pairwise_sum<Vec>(mid, hi, leaf);
    return left;
}

} // namespace enkbf
