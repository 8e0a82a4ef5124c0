#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace episeq {

// Episodes are processed in fixed-size blocks and per-block results are merged
// in block order. The block layout depends only on the item count, so sums are
// bit-identical no matter how many worker threads pick the blocks up.
inline constexpr std::size_t kReductionBlock = 64;

inline std::size_t block_count(std::size_t n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

// Runs fn(block_index, begin, end) for every block, on up to n_threads workers.
inline void parallel_blocks(
    std::size_t n, int n_threads,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  std::size_t blocks = block_count(n);
  if (blocks == 0) return;
  if (n_threads < 1) n_threads = 1;
  std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(n_threads), blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) {
      std::size_t begin = b * kReductionBlock;
      std::size_t end = std::min(n, begin + kReductionBlock);
      fn(b, begin, end);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= blocks) return;
        std::size_t begin = b * kReductionBlock;
        std::size_t end = std::min(n, begin + kReductionBlock);
        fn(b, begin, end);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace episeq
