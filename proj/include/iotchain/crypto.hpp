// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <array>
#include <cstdint>

#include "iotchain/bytes.hpp"

namespace iotchain::crypto {

inline constexpr size_t kPublicKeyBytes = 32;
inline constexpr size_t kPrivateKeyBytes = 64;  // Ed25519 seed + public half
inline constexpr size_t kSignatureBytes = 64;
inline constexpr size_t kDigestBytes = 32;

using Digest = std::array<uint8_t, kDigestBytes>;

// Ed25519 key pair. Signatures are deterministic, so repeated signing of the
// same message yields identical bytes.
struct KeyPair {
  Bytes public_key;   // 32 bytes
  Bytes private_key;  // 64 bytes, never serialized into ledger structures
};

KeyPair generate_keypair();
KeyPair keypair_from_seed(const Bytes& seed32);

Bytes sign(const Bytes& private_key, const Bytes& message);
bool verify(const Bytes& public_key, const Bytes& message, const Bytes& signature);

Digest sha256(const uint8_t* data, size_t len);
Digest sha256(const Bytes& data);
Digest sha256(std::string_view data);
std::string sha256_hex(const Bytes& data);
std::string sha256_hex(std::string_view data);

std::string digest_hex(const Digest& d);
Digest digest_from_hex(std::string_view hex);
Bytes digest_bytes(const Digest& d);

}  // namespace iotchain::crypto
