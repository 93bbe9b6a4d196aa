#ifndef CUBEKIT_PIPELINE_HPP
#define CUBEKIT_PIPELINE_HPP

// Seeded randomness and an order-preserving worker pool.
//
// All sampling goes through Rng with the helpers below rather than the
// <random> distributions, whose output is implementation defined. Per-item
// seeds come from derive_seed, so results never depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace cubekit {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for one item (scene, source, sample) under a global seed.
inline std::uint64_t derive_seed(std::uint64_t global, std::string_view key) noexcept {
  return splitmix64(global ^ splitmix64(fnv1a(key)));
}

/// Uniform integer in [0, n) by rejection; n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) noexcept { return uniform_unit(rng) < p; }

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Worker count from CUBEKIT_WORKERS, else hardware concurrency.
inline unsigned default_workers() {
  if (const char* env = std::getenv("CUBEKIT_WORKERS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Applies fn to every input on `workers` threads; output keeps input order.
/// The first exception thrown by fn is rethrown after all workers join.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& inputs, Fn fn, unsigned workers)
    -> std::vector<decltype(fn(inputs.front()))> {
  using Out = decltype(fn(inputs.front()));
  std::vector<Out> out(inputs.size());
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(inputs.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < inputs.size(); ++i) out[i] = fn(inputs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < inputs.size(); i = next++) {
        try {
          out[i] = fn(inputs[i]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

} // namespace cubekit

#endif // CUBEKIT_PIPELINE_HPP
