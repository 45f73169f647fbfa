// lidtsm/util.hpp

// Copyright 2026  The lidtsm Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lidtsm/error.hpp"

namespace lidtsm {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

// std::uniform_*_distribution is implementation-defined, so the corpus and
// initializers draw through these to stay byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return static_cast<uint64_t>(uniform() * static_cast<double>(n)); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T> &items) {
    for (size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

  uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a master seed and a tag.
inline uint64_t derive_seed(uint64_t master, uint64_t tag) {
  uint64_t z = master + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a, used for checkpoint checksums and config fingerprints.
inline uint64_t fnv1a(std::span<const unsigned char> bytes, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a(const std::string &s) {
  return fnv1a(std::span(reinterpret_cast<const unsigned char *>(s.data()), s.size()));
}

inline std::string hex64(uint64_t v) {
  static const char *digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
  return out;
}

inline std::vector<unsigned char> read_file_bytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string &path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kUnwritablePath, "cannot write " + path);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path);
}

inline uint64_t file_checksum(const std::string &path) {
  const auto bytes = read_file_bytes(path);
  return fnv1a(bytes);
}

// Little-endian byte writer/reader for the binary container formats.
class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto *p = reinterpret_cast<const unsigned char *>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void put_string(std::string_view s) {
    put<uint32_t>(static_cast<uint32_t>(s.size()));
    put_bytes(s);
  }
  const std::vector<unsigned char> &bytes() const { return bytes_; }

  void save(const std::string &path) const { write_file_bytes(path, bytes_); }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_bytes(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char *>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string get_string() { return get_bytes(get<uint32_t>()); }
  bool done() const { return pos_ >= bytes_.size(); }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorCode::kBadContainer, "truncated binary record");
  }
  std::span<const unsigned char> bytes_;
  size_t pos_ = 0;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is split into
/// contiguous ranges, so callers that write only to slot i get results that
/// do not depend on the thread count.
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn &&fn) {
  const size_t workers = std::min<size_t>(n, static_cast<size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (size_t i = n * w / workers; i < n * (w + 1) / workers; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : threads) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace lidtsm
