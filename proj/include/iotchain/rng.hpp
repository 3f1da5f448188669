// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "iotchain/bytes.hpp"

namespace iotchain {

// Seedable random source. Every nonce, UUID and workload decision in the
// system draws from one of these so tests can replay exact sequences.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  static Rng from_entropy();

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, bound). bound must be nonzero.
  uint64_t uniform(uint64_t bound);

  double uniform_real();  // [0, 1)

  Bytes bytes(size_t n);

  std::string uuid4();

private:
  std::mt19937_64 gen_;
};

bool is_uuid(std::string_view s);
std::string uuid_from_bytes(const uint8_t* data16);  // stamps version/variant bits

}  // namespace iotchain
