#pragma once

// Shared basics: error types, a pinned-down RNG, small vector math and a
// deterministic parallel map. Everything downstream builds on these.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace seeable {

// Bad or inconsistent input data (manifests, files, corrupted checkpoints).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, diverging optimization, numeric contract violations.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed derivation for per-item streams: mixes parts into one 64-bit key.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
  return splitmix64(splitmix64(base ^ splitmix64(a)) ^ splitmix64(~b));
}

// mt19937_64 wrapper with explicitly coded draw algorithms so that streams
// are identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    return std::min<uint64_t>(static_cast<uint64_t>(uniform() * static_cast<double>(n)), n - 1);
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<uint64_t>(n))); }

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  bool coin() { return (engine_() & 1ULL) != 0; }

  // Independent stream keyed off this generator's seed (not its state).
  Rng child(uint64_t key) const { return Rng(derive_seed(seed_, key)); }

  // Fisher-Yates permutation of [0, n).
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      int j = below_int(i + 1);
      std::swap(p[i], p[j]);
    }
    return p;
  }

 private:
  std::mt19937_64 engine_;
  uint64_t seed_;
};

// ---- small dense vector math over std::span<double> ----

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void normalize_inplace(std::span<double> a) {
  double n = norm(a);
  if (n == 0.0) throw std::domain_error("normalize: zero vector");
  for (double& v : a) v /= n;
}

inline std::vector<double> normalized(std::span<const double> a) {
  std::vector<double> out(a.begin(), a.end());
  normalize_inplace(out);
  return out;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// Runs fn(i) for i in [0, n) over `jobs` threads. Work is striped by index;
// callers that need determinism must write into per-index slots.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([t, n, jobs, &fn] {
      for (int i = t; i < n; i += jobs) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace seeable
