// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/crypto.hpp"

#include <sodium.h>

#include <mutex>

#include "iotchain/errors.hpp"

namespace iotchain::crypto {

namespace {

void ensure_sodium() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) {
      raise(ErrorCode::internal, "libsodium initialization failed");
    }
  });
}

}  // namespace

KeyPair generate_keypair() {
  ensure_sodium();
  KeyPair kp;
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  kp.private_key.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_keypair(kp.public_key.data(), kp.private_key.data());
  return kp;
}

KeyPair keypair_from_seed(const Bytes& seed32) {
  ensure_sodium();
  if (seed32.size() != crypto_sign_SEEDBYTES) {
    raise(ErrorCode::malformed_key, "key seed must be 32 bytes");
  }
  KeyPair kp;
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  kp.private_key.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(kp.public_key.data(), kp.private_key.data(),
                           seed32.data());
  return kp;
}

Bytes sign(const Bytes& private_key, const Bytes& message) {
  ensure_sodium();
  if (private_key.size() != crypto_sign_SECRETKEYBYTES) {
    raise(ErrorCode::malformed_key, "private key must be 64 bytes");
  }
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                       private_key.data());
  return sig;
}

bool verify(const Bytes& public_key, const Bytes& message, const Bytes& signature) {
  ensure_sodium();
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES) {
    raise(ErrorCode::malformed_key, "public key must be 32 bytes");
  }
  if (signature.size() != crypto_sign_BYTES) {
    return false;
  }
  return crypto_sign_verify_detached(signature.data(), message.data(),
                                     message.size(), public_key.data()) == 0;
}

Digest sha256(const uint8_t* data, size_t len) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.data(), data, len);
  return d;
}

Digest sha256(const Bytes& data) {
  return sha256(data.data(), data.size());
}

Digest sha256(std::string_view data) {
  return sha256(reinterpret_cast<const uint8_t*>(data.data()), data.size());
}

std::string sha256_hex(const Bytes& data) {
  return digest_hex(sha256(data));
}

std::string sha256_hex(std::string_view data) {
  return digest_hex(sha256(data));
}

std::string digest_hex(const Digest& d) {
  return to_hex(d.data(), d.size());
}

Digest digest_from_hex(std::string_view hex) {
  Bytes raw = from_hex(hex);
  if (raw.size() != kDigestBytes) {
    raise(ErrorCode::parse_error, "digest must be 32 bytes of hex");
  }
  Digest d;
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

Bytes digest_bytes(const Digest& d) {
  return Bytes(d.begin(), d.end());
}

}  // namespace iotchain::crypto
