// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/rng.hpp"

#include <cctype>

namespace iotchain {

Rng Rng::from_entropy() {
  std::random_device rd;
  uint64_t seed = (static_cast<uint64_t>(rd()) << 32) ^ rd();
  return Rng(seed);
}

uint64_t Rng::uniform(uint64_t bound) {
  std::uniform_int_distribution<uint64_t> dist(0, bound - 1);
  return dist(gen_);
}

double Rng::uniform_real() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(gen_);
}

Bytes Rng::bytes(size_t n) {
  Bytes out(n);
  size_t i = 0;
  while (i < n) {
    uint64_t v = gen_();
    for (size_t k = 0; k < 8 && i < n; ++k, ++i) {
      out[i] = static_cast<uint8_t>(v >> (k * 8));
    }
  }
  return out;
}

std::string Rng::uuid4() {
  Bytes raw = bytes(16);
  return uuid_from_bytes(raw.data());
}

std::string uuid_from_bytes(const uint8_t* data16) {
  uint8_t b[16];
  for (int i = 0; i < 16; ++i) b[i] = data16[i];
  b[6] = static_cast<uint8_t>((b[6] & 0x0f) | 0x40);  // version 4
  b[8] = static_cast<uint8_t>((b[8] & 0x3f) | 0x80);  // RFC 4122 variant
  static const char* hexd = "0123456789abcdef";
  std::string out;
  out.reserve(36);
  for (int i = 0; i < 16; ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
    out.push_back(hexd[b[i] >> 4]);
    out.push_back(hexd[b[i] & 0x0f]);
  }
  return out;
}

bool is_uuid(std::string_view s) {
  if (s.size() != 36) return false;
  for (size_t i = 0; i < 36; ++i) {
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (s[i] != '-') return false;
    } else if (!std::isxdigit(static_cast<unsigned char>(s[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace iotchain
