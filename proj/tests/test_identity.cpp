// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include <doctest.h>

#include "iotchain/errors.hpp"
#include "iotchain/identity.hpp"
#include "iotchain/rng.hpp"

using namespace iotchain;
using namespace iotchain::identity;

namespace {

constexpr uint64_t kNow = 1'700'000'000'000;  // fixed test clock, ms
constexpr uint64_t kYear = 365ull * 24 * 3600 * 1000;
constexpr uint64_t kHour = 3600ull * 1000;

}  // namespace

TEST_CASE("ca issues certificates with increasing serials") {
  MspRegistry msp;
  Ca ca("Org1-CA", "Org1", msp);

  auto kp = crypto::generate_keypair();
  Certificate cert = ca.issue("peer@org1", Role::peer, kp.public_key, kYear, kNow);
  CHECK(cert.serial == 1);
  CHECK(cert.issuer == "Org1-CA");
  CHECK(cert.org == "Org1");
  CHECK(msp.validate(cert, kNow) == CertStatus::valid);

  auto kp2 = crypto::generate_keypair();
  Certificate cert2 = ca.issue("user@org1", Role::client, kp2.public_key, kYear, kNow);
  CHECK(cert2.serial == 2);
}

TEST_CASE("issuing the same subject twice fails while active") {
  MspRegistry msp;
  Ca ca("Org1-CA", "Org1", msp);
  auto kp = crypto::generate_keypair();
  ca.issue("peer@org1", Role::peer, kp.public_key, kYear, kNow);
  CHECK_THROWS_WITH_AS(
      ca.issue("peer@org1", Role::peer, kp.public_key, kYear, kNow),
      doctest::Contains("active certificate"), Error);
}

TEST_CASE("expired device certificate fails validation") {
  MspRegistry msp;
  Ca ca("IoT-CA", "IoT", msp);
  auto kp = crypto::generate_keypair();
  Certificate cert = ca.issue("dev-17", Role::device, kp.public_key, kHour, kNow);
  CHECK(msp.validate(cert, kNow) == CertStatus::valid);
  CHECK(msp.validate(cert, kNow + 2 * kHour) == CertStatus::expired);
  // An expired subject can be re-issued.
  Certificate again =
      ca.issue("dev-17", Role::device, kp.public_key, kHour, kNow + 2 * kHour);
  CHECK(again.serial == 2);
}

TEST_CASE("tampered signature is invalid") {
  MspRegistry msp;
  Ca ca("Org1-CA", "Org1", msp);
  auto kp = crypto::generate_keypair();
  Certificate cert = ca.issue("peer@org1", Role::peer, kp.public_key, kYear, kNow);
  cert.signature[3] ^= 0x40;
  CHECK(msp.validate(cert, kNow) == CertStatus::invalid_signature);
}

TEST_CASE("revocation is monotone") {
  MspRegistry msp;
  Ca ca("Org2-CA", "Org2", msp);
  auto kp = crypto::generate_keypair();
  Certificate cert = ca.issue("user@org2", Role::client, kp.public_key, kYear, kNow);
  CHECK(msp.validate(cert, kNow) == CertStatus::valid);

  msp.revoke(cert.issuer, cert.serial);
  CHECK(msp.validate(cert, kNow) == CertStatus::revoked);
  msp.revoke(cert.issuer, cert.serial);  // idempotent
  CHECK(msp.validate(cert, kNow) == CertStatus::revoked);
  CHECK(msp.validate(cert, kNow + 1000) == CertStatus::revoked);

  CHECK_THROWS_AS(msp.revoke("Org2-CA", 999), Error);
}

TEST_CASE("unknown issuer org") {
  MspRegistry msp;
  Ca ca("Org1-CA", "Org1", msp);
  auto kp = crypto::generate_keypair();
  Certificate cert = ca.issue("peer@org1", Role::peer, kp.public_key, kYear, kNow);
  cert.org = "Elsewhere";
  CHECK(msp.validate(cert, kNow) == CertStatus::unknown_issuer);
}

TEST_CASE("chain of trust: valid implies the CA signature verifies") {
  MspRegistry msp;
  Ca ca("Org1-CA", "Org1", msp);
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    auto kp = crypto::generate_keypair();
    Certificate cert = ca.issue("subject-" + std::to_string(i), Role::client,
                                kp.public_key, kYear, kNow + rng.uniform(kYear));
    if (msp.validate(cert, kNow) == CertStatus::valid) {
      CHECK(crypto::verify(*msp.root_key("Org1"), cert.signing_bytes(),
                           cert.signature));
    }
  }
}

TEST_CASE("certificate json round-trips and key fields are base64") {
  MspRegistry msp;
  Ca ca("IoT-CA", "IoT", msp);
  auto kp = crypto::generate_keypair();
  Certificate cert = ca.issue("dev-1", Role::device, kp.public_key, kYear, kNow);

  json j = cert.to_json();
  CHECK(j.at("role") == "device");
  CHECK(j.at("serial").is_number());
  CHECK(from_base64(j.at("public_key").get<std::string>()) == kp.public_key);
  CHECK(Certificate::from_json(j) == cert);
  CHECK(Certificate::from_canonical_json(cert.canonical_json()) == cert);
}

TEST_CASE("role parsing") {
  CHECK(role_from_string("admin") == Role::admin);
  CHECK_THROWS_AS(role_from_string("superuser"), Error);
}

TEST_CASE("registry state survives json export/import") {
  MspRegistry msp;
  Ca ca("Org1-CA", "Org1", msp);
  auto kp = crypto::generate_keypair();
  Certificate cert = ca.issue("peer@org1", Role::peer, kp.public_key, kYear, kNow);
  msp.revoke(cert.issuer, cert.serial);

  MspRegistry other;
  other.merge_json(msp.to_json());
  CHECK(other.validate(cert, kNow) == CertStatus::revoked);
  CHECK(other.member("peer@org1").has_value());
}
