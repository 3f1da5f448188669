// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include <doctest.h>

#include "iotchain/crypto.hpp"
#include "iotchain/errors.hpp"
#include "iotchain/rng.hpp"

using namespace iotchain;

TEST_CASE("sign/verify round trip") {
  auto kp = crypto::generate_keypair();
  Bytes msg = bytes_of("hello sensors");
  Bytes sig = crypto::sign(kp.private_key, msg);
  CHECK(sig.size() == crypto::kSignatureBytes);
  CHECK(crypto::verify(kp.public_key, msg, sig));

  Bytes other = bytes_of("hello sensorz");
  CHECK_FALSE(crypto::verify(kp.public_key, other, sig));

  auto kp2 = crypto::generate_keypair();
  CHECK_FALSE(crypto::verify(kp2.public_key, msg, sig));
}

TEST_CASE("signatures are deterministic") {
  auto kp = crypto::generate_keypair();
  Bytes msg = bytes_of("same message");
  CHECK(crypto::sign(kp.private_key, msg) == crypto::sign(kp.private_key, msg));
}

TEST_CASE("random messages round-trip; single-bit mutations fail") {
  Rng rng(42);
  auto kp = crypto::generate_keypair();
  for (int trial = 0; trial < 40; ++trial) {
    Bytes msg = rng.bytes(rng.uniform(4097));
    Bytes sig = crypto::sign(kp.private_key, msg);
    CHECK(crypto::verify(kp.public_key, msg, sig));

    if (!msg.empty()) {
      Bytes tampered = msg;
      size_t byte = rng.uniform(tampered.size());
      tampered[byte] ^= static_cast<uint8_t>(1u << rng.uniform(8));
      CHECK_FALSE(crypto::verify(kp.public_key, tampered, sig));
    }
    Bytes bad_sig = sig;
    size_t byte = rng.uniform(bad_sig.size());
    bad_sig[byte] ^= static_cast<uint8_t>(1u << rng.uniform(8));
    CHECK_FALSE(crypto::verify(kp.public_key, msg, bad_sig));
  }
}

TEST_CASE("sha256 known vector") {
  // FIPS 180-2 test vector for "abc".
  CHECK(crypto::sha256_hex(std::string_view("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("malformed keys are rejected") {
  Bytes short_key(5, 0);
  CHECK_THROWS_AS((void)crypto::sign(short_key, bytes_of("x")), Error);
  CHECK_THROWS_AS((void)crypto::verify(short_key, bytes_of("x"), Bytes(64, 0)),
                  Error);
}

TEST_CASE("hex and base64 round-trip") {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    Bytes data = rng.bytes(rng.uniform(100));
    CHECK(from_hex(to_hex(data)) == data);
    CHECK(from_base64(to_base64(data)) == data);
  }
  CHECK_THROWS_AS(from_hex("zz"), Error);
  CHECK_THROWS_AS(from_base64("!!!!"), Error);
}

TEST_CASE("uuid4 shape and seeding") {
  Rng a(99), b(99);
  std::string u = a.uuid4();
  CHECK(is_uuid(u));
  CHECK(u[14] == '4');
  CHECK(u == b.uuid4());  // same seed, same sequence
  CHECK_FALSE(is_uuid("not-a-uuid"));
  CHECK_FALSE(is_uuid("123e4567e89b12d3a456426614174000"));  // no dashes
}
