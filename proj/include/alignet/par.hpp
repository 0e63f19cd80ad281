#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <vector>

namespace alignet {

// Deterministic blocked reduction: the range is cut into fixed-size blocks,
// each block is reduced sequentially, and block results are combined in
// block order. The result is bit-identical for any thread count.
inline constexpr std::size_t kReduceBlock = 1024;

template <class PerBlock, class Combine>
void blocked_reduce(std::size_t n, int threads, PerBlock per_block, Combine combine) {
    const std::size_t n_blocks = (n + kReduceBlock - 1) / kReduceBlock;
    if (threads <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::size_t lo = b * kReduceBlock;
            const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
            combine(b, per_block(lo, hi));
        }
        return;
    }
    using Result = decltype(per_block(std::size_t{0}, std::size_t{0}));
    std::size_t b = 0;
    while (b < n_blocks) {
        const std::size_t wave =
            std::min(static_cast<std::size_t>(threads), n_blocks - b);
        std::vector<std::future<Result>> pending;
        pending.reserve(wave);
        for (std::size_t w = 0; w < wave; ++w) {
            const std::size_t lo = (b + w) * kReduceBlock;
            const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
            pending.push_back(std::async(std::launch::async, per_block, lo, hi));
        }
        for (std::size_t w = 0; w < wave; ++w) combine(b + w, pending[w].get());
        b += wave;
    }
}

// Scalar convenience: sum of f(i) over [0, n) with the fixed-tree order.
template <class Fn>
double blocked_sum(std::size_t n, int threads, Fn f) {
    double total = 0.0;
    blocked_reduce(
        n, threads,
        [&](std::size_t lo, std::size_t hi) {
            double partial = 0.0;
            for (std::size_t i = lo; i < hi; ++i) partial += f(i);
            return partial;
        },
        [&](std::size_t, double partial) { total += partial; });
    return total;
}

} // namespace alignet
