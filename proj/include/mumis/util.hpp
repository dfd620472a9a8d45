/*
 * Copyright 2026 The mumis authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mumis {

/// Invalid task/experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training or optimization failure, e.g. divergence (CLI exit code 3).
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A remaining-data-free method touched data it must not see (CLI exit code 4).
struct AuditError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value reached a place where it cannot be tolerated.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing. FNV-1a is used for content addressing of artifacts; it is stable
// across platforms and good enough for cache keys (not a security boundary).
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hash_hex(std::uint64_t h);

// ---------------------------------------------------------------------------
// Deterministic randomness. All randomness in the toolkit flows from a single
// top-level seed through named sub-streams, so components can be re-seeded
// independently and results are reproducible bit-for-bit across platforms.
// std::uniform_*_distribution is implementation-defined, so sampling helpers
// below are hand-rolled on top of the mt19937_64 bit stream.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the named sub-stream of a top-level seed.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, n) without modulo bias.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (deterministic given the bit stream).
  double normal();

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Small file helpers shared by checkpoint and report writers.
// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

/// Environment variable or fallback.
std::string env_or(const std::string& name, const std::string& fallback);

std::string format_double(double v, int precision = 17);

}  // namespace mumis
