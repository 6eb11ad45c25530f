#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace brwp {

// Runtime numerical failure (overflow, indefinite covariance, degenerate
// normalizer, ...). Precondition and configuration violations throw
// std::invalid_argument instead; the CLI maps the two classes to distinct
// exit codes.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal representation that round-trips an IEEE double.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Static-partition parallel loop. fn(begin, end) must only write state owned
// by its own index range; chunk boundaries shift with the thread count, so
// per-index results (and every reduction built on top of them) have to be
// independent of the partition for runs to stay bit-reproducible.
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  const std::int64_t want = std::min<std::int64_t>(threads, n);
  if (want == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(want));
  const std::int64_t chunk = n / want, extra = n % want;
  std::int64_t begin = 0;
  for (std::int64_t t = 0; t < want; ++t) {
    const std::int64_t end = begin + chunk + (t < extra ? 1 : 0);
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    begin = end;
  }
  for (auto& th : pool) th.join();
}

}  // namespace brwp
