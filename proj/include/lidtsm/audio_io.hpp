// lidtsm/audio_io.hpp

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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "lidtsm/error.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm {

inline constexpr int kDefaultSampleRate = 16000;

/// Mono waveform with real-valued samples, nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Maps a real sample onto a 16-bit word, clipping to [-1, 1].
inline int16_t quantize_sample(double s) {
  const double scaled = std::nearbyint(std::clamp(s, -1.0, 1.0) * 32768.0);
  return static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

inline double dequantize_sample(int16_t word) { return static_cast<double>(word) / 32768.0; }

/// Serializes to a canonical 44-byte-header RIFF/WAVE PCM image.
inline std::vector<unsigned char> encode_wav(const Waveform &w) {
  require(!w.empty(), ErrorCode::kEmptyInput, "cannot encode an empty waveform");
  require(w.sample_rate > 0, ErrorCode::kInvalidArgument, "sample rate must be positive");
  const uint32_t data_bytes = static_cast<uint32_t>(w.size() * 2);
  ByteWriter out;
  out.put_bytes("RIFF");
  out.put<uint32_t>(36 + data_bytes);
  out.put_bytes("WAVE");
  out.put_bytes("fmt ");
  out.put<uint32_t>(16);
  out.put<uint16_t>(1);  // PCM
  out.put<uint16_t>(1);  // mono
  out.put<uint32_t>(static_cast<uint32_t>(w.sample_rate));
  out.put<uint32_t>(static_cast<uint32_t>(w.sample_rate) * 2);
  out.put<uint16_t>(2);
  out.put<uint16_t>(16);
  out.put_bytes("data");
  out.put<uint32_t>(data_bytes);
  for (double s : w.samples) out.put<int16_t>(quantize_sample(s));
  return out.bytes();
}

inline Waveform decode_wav(std::span<const unsigned char> bytes) {
  ByteReader in(bytes);
  if (bytes.size() < 12 || in.get_bytes(4) != "RIFF")
    fail(ErrorCode::kBadContainer, "missing RIFF header");
  in.get<uint32_t>();
  if (in.get_bytes(4) != "WAVE") fail(ErrorCode::kBadContainer, "missing WAVE tag");

  bool have_fmt = false;
  Waveform w;
  while (!in.done()) {
    if (in.remaining() < 8) break;
    const std::string id = in.get_bytes(4);
    const uint32_t size = in.get<uint32_t>();
    if (id == "fmt ") {
      if (size < 16) fail(ErrorCode::kBadContainer, "fmt chunk too small");
      const auto format = in.get<uint16_t>();
      const auto channels = in.get<uint16_t>();
      const auto rate = in.get<uint32_t>();
      in.get<uint32_t>();  // byte rate
      in.get<uint16_t>();  // block align
      const auto bits = in.get<uint16_t>();
      in.get_bytes(size - 16 + (size & 1));
      if (format != 1)
        fail(ErrorCode::kUnsupportedEncoding,
             "unsupported encoding (format code " + std::to_string(format) + ")");
      if (channels != 1)
        fail(ErrorCode::kMultiChannel, std::to_string(channels) + " channels, expected mono");
      if (bits != 16)
        fail(ErrorCode::kUnsupportedEncoding, std::to_string(bits) + "-bit samples, expected 16");
      if (rate == 0) fail(ErrorCode::kBadContainer, "zero sample rate");
      w.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail(ErrorCode::kBadContainer, "data chunk before fmt chunk");
      if (size % 2 != 0) fail(ErrorCode::kBadContainer, "odd data chunk size");
      w.samples.resize(size / 2);
      for (auto &s : w.samples) s = dequantize_sample(in.get<int16_t>());
      return w;
    } else {
      in.get_bytes(size + (size & 1));
    }
  }
  fail(ErrorCode::kBadContainer, have_fmt ? "no data chunk" : "no fmt chunk");
}

inline Waveform read_wav(const std::string &path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kMissingFile, "no such file: " + path);
  const auto bytes = read_file_bytes(path);
  try {
    return decode_wav(bytes);
  } catch (const Error &e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

inline void write_wav(const Waveform &w, const std::string &path) {
  const auto image = encode_wav(w);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kUnwritablePath, "cannot write " + path);
  f.write(reinterpret_cast<const char *>(image.data()), static_cast<std::streamsize>(image.size()));
  if (!f) fail(ErrorCode::kIo, "short write to " + path);
}

/// Applies the 16-bit round trip in memory.
inline Waveform quantized(const Waveform &w) {
  Waveform q = w;
  for (auto &s : q.samples) s = dequantize_sample(quantize_sample(s));
  return q;
}

}  // namespace lidtsm
